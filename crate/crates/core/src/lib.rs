//! Optimization toolkit for finite metric geometry: negative-type checks,
//! exact L1 distortion with dual certificates, brute-force sparsest cut, and
//! a conic relaxation solver, all cross-checkable against one another.
//!
//! The modules are layered: [`linalg`] and [`metric`] are foundations,
//! [`lp`] is a generic simplex, [`cutcone`] turns it into distortion
//! certificates, [`sparsestcut`] enumerates cut optima, and [`sdp`] solves
//! the negative-type relaxation and assembles gap reports from the pieces.

/// Crate version, baked into run manifests by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod cutcone;
pub mod linalg;
pub mod lp;
pub mod metric;
pub mod sdp;
pub mod sparsestcut;

pub use cutcone::{c1_exact, dual_demands, CutDecomposition, DistortionCertificate};
pub use linalg::{psd_project, sym_eigen, SymMatrix};
pub use metric::{check_metric, gram_from_sqrt_metric, is_negative_type, FiniteMetric};
pub use sdp::{gap_lower_bound_from_metric, integrality_gap, solve_gl_sdp, GapReport, SdpOptions};
pub use sparsestcut::{phi, phi_star, phi_star_l1_check, DemandInstance};

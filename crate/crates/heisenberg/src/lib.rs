//! Heisenberg-group geometry and geometric-measure experiments.
//!
//! The crate builds up from the explicit negative-type metric `rho` on
//! `R^3` ([`point`]) to metric balls ([`ball`]), horizontal line sampling
//! ([`lines`]), voxelized subsets ([`voxel`], [`sets`]) and their 1-D
//! traces along lines ([`trace`]). On top of those sit the measurements:
//! non-monotonicity ([`nm`]), kinematic perimeter and length-class
//! censuses ([`perimeter`]), cut measures of sampled maps
//! ([`cutmeasure`]), scale selection ([`scale`]), half-space fitting
//! ([`halfspace`]), central-collapse searches ([`collapse`]), finite
//! grid metrics for the embedding workbench ([`grid`]), and the shared
//! experiment configuration ([`config`]).

/// Crate version, baked into run manifests by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod ball;
pub mod collapse;
pub mod config;
pub mod cutmeasure;
pub mod grid;
pub mod halfspace;
pub mod lines;
pub mod nm;
pub mod perimeter;
pub mod point;
pub mod scale;
pub mod sets;
pub mod trace;
pub mod voxel;

pub use ball::{HBall, UNIT_BALL_VOLUME};
pub use collapse::{collapse_search, CollapseReport, CollapseStrategy};
pub use config::ExperimentConfig;
pub use cutmeasure::{cut_measure_of_map, CutMeasure, SampledMap};
pub use grid::{grid_metric, grid_metric_subset, grid_points};
pub use halfspace::{fit_halfspace, HalfspaceFit};
pub use lines::{sample_lines, HorizontalLine, LineSample};
pub use nm::{nm_ball, NmEstimate};
pub use perimeter::{isoperimetric_ratio, perimeter_kinematic, Census, PerimeterReport};
pub use point::{h_dilate, h_inv, h_mul, rho, word_metric, HPoint, ORIGIN};
pub use scale::{select_scale, ScaleConsts, ScaleDecomposition};
pub use sets::SetMembership;
pub use trace::{LineTrace, TraceParams};
pub use voxel::{VoxelGrid, VoxelSet};

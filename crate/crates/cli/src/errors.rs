//! Error taxonomy of the binary: every failure is classified as a
//! precondition violation (exit 2), a convergence/search failure (exit 3),
//! or an I/O problem (exit 4), and is emitted to stderr as one line of JSON.

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The request itself is invalid: bad arguments, malformed inputs that
    /// parsed but violate a documented precondition, size caps.
    #[error("{0}")]
    Precondition(String),
    /// A solver or search ran but failed to produce a result: iteration
    /// limits, infeasibility, empty search outcomes, calibration drift.
    #[error("{0}")]
    Convergence(String),
    /// Files that cannot be read, written, or parsed at all.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Precondition(_) => "precondition",
            CliError::Convergence(_) => "convergence",
            CliError::Io(_) => "io",
        }
    }

    /// One compact JSON document, suitable for a single stderr line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&json!({
            "error": {
                "code": self.exit_code(),
                "kind": self.kind(),
                "message": self.to_string(),
            }
        }))
        .expect("serializable")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<gapwb_core::metric::MetricError> for CliError {
    fn from(e: gapwb_core::metric::MetricError) -> Self {
        use gapwb_core::metric::MetricError::*;
        match e {
            Parse(m) => CliError::Io(format!("metric parse: {m}")),
            Linalg(l) => CliError::Convergence(format!("linear algebra: {l}")),
            other => CliError::Precondition(format!("metric: {other}")),
        }
    }
}

impl From<gapwb_core::cutcone::CutConeError> for CliError {
    fn from(e: gapwb_core::cutcone::CutConeError) -> Self {
        use gapwb_core::cutcone::CutConeError::*;
        use gapwb_core::lp::LpError;
        match e {
            Parse(m) => CliError::Io(format!("certificate parse: {m}")),
            Lp(LpError::BadShape(m)) => CliError::Precondition(format!("LP shape: {m}")),
            Lp(l) => CliError::Convergence(format!("distortion LP: {l}")),
            CertificateInvalid { .. } => CliError::Convergence(format!("cut cone: {e}")),
            other => CliError::Precondition(format!("cut cone: {other}")),
        }
    }
}

impl From<gapwb_core::sparsestcut::SparsestCutError> for CliError {
    fn from(e: gapwb_core::sparsestcut::SparsestCutError) -> Self {
        use gapwb_core::sparsestcut::SparsestCutError::*;
        match e {
            Parse(m) => CliError::Io(format!("instance parse: {m}")),
            other => CliError::Precondition(format!("sparsest cut: {other}")),
        }
    }
}

impl From<gapwb_core::sdp::SdpError> for CliError {
    fn from(e: gapwb_core::sdp::SdpError) -> Self {
        use gapwb_core::sdp::SdpError::*;
        match e {
            Convergence { .. } => CliError::Convergence(format!("relaxation solver: {e}")),
            Linalg(l) => CliError::Convergence(format!("linear algebra: {l}")),
            Chain(m) => CliError::Convergence(format!("certificate chain: {m}")),
            SparsestCut(s) => CliError::from(s),
            other => CliError::Precondition(format!("relaxation: {other}")),
        }
    }
}

impl From<gapwb_heisenberg::grid::GridError> for CliError {
    fn from(e: gapwb_heisenberg::grid::GridError) -> Self {
        CliError::Precondition(format!("grid: {e}"))
    }
}

impl From<gapwb_heisenberg::ball::BallError> for CliError {
    fn from(e: gapwb_heisenberg::ball::BallError) -> Self {
        CliError::Precondition(format!("ball: {e}"))
    }
}

impl From<gapwb_heisenberg::lines::SamplingError> for CliError {
    fn from(e: gapwb_heisenberg::lines::SamplingError) -> Self {
        use gapwb_heisenberg::lines::SamplingError::*;
        match e {
            EmptyRequest => CliError::Precondition(format!("line sampling: {e}")),
            RejectionRate { .. } => CliError::Convergence(format!("line sampling: {e}")),
        }
    }
}

impl From<gapwb_heisenberg::voxel::VoxelError> for CliError {
    fn from(e: gapwb_heisenberg::voxel::VoxelError) -> Self {
        use gapwb_heisenberg::voxel::VoxelError::*;
        match e {
            Format(m) => CliError::Io(format!("voxel file: {m}")),
            Io(m) => CliError::Io(format!("voxel file: {m}")),
            other => CliError::Precondition(format!("voxel grid: {other}")),
        }
    }
}

impl From<gapwb_heisenberg::cutmeasure::CutMeasureError> for CliError {
    fn from(e: gapwb_heisenberg::cutmeasure::CutMeasureError) -> Self {
        use gapwb_heisenberg::cutmeasure::CutMeasureError::*;
        match e {
            Io(m) => CliError::Io(format!("cut measure: {m}")),
            Json(m) => CliError::Io(format!("cut measure: {m}")),
            Voxel(v) => CliError::from(v),
            Manifest(m) => CliError::Io(format!("cut measure manifest: {m}")),
            other => CliError::Precondition(format!("cut measure: {other}")),
        }
    }
}

impl From<gapwb_heisenberg::nm::NmError> for CliError {
    fn from(e: gapwb_heisenberg::nm::NmError) -> Self {
        CliError::Precondition(format!("non-monotonicity: {e}"))
    }
}

impl From<gapwb_heisenberg::scale::ScaleError> for CliError {
    fn from(e: gapwb_heisenberg::scale::ScaleError) -> Self {
        CliError::Convergence(format!("scale selection: {e}"))
    }
}

impl From<gapwb_heisenberg::collapse::CollapseError> for CliError {
    fn from(e: gapwb_heisenberg::collapse::CollapseError) -> Self {
        use gapwb_heisenberg::collapse::CollapseError::*;
        match e {
            NoPairs { .. } => CliError::Convergence(format!("collapse search: {e}")),
            other => CliError::Precondition(format!("collapse search: {other}")),
        }
    }
}

impl From<gapwb_heisenberg::config::ConfigError> for CliError {
    fn from(e: gapwb_heisenberg::config::ConfigError) -> Self {
        use gapwb_heisenberg::config::ConfigError::*;
        match e {
            OutOfRange { .. } => CliError::Precondition(format!("config: {e}")),
            Io(m) => CliError::Io(format!("config: {m}")),
            Json(m) => CliError::Io(format!("config: {m}")),
        }
    }
}

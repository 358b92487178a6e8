//! Error type shared by all pipeline stages.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation received an empty cloud or mesh where data is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A numeric parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Fewer points than the operation's minimum neighborhood size.
    #[error("insufficient points: need {needed}, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    /// A perturbation or filter removed too many points to continue.
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    /// Viewpoint sampling could not place the requested points.
    #[error("placement failure: {0}")]
    PlacementFailure(String),

    /// Ray casting produced no hits inside the depth-of-field band.
    #[error("empty scan: no rays hit the mesh inside the depth of field")]
    EmptyScan,

    /// No correspondences inside the distance cutoff at the initial pose.
    #[error("no overlap between clouds within max correspondence distance {0}")]
    NoOverlap(f64),

    /// Point-to-plane registration requires target normals.
    #[error("missing normals on {0} cloud")]
    MissingNormals(&'static str),

    /// A cloud shares no overlap with any other cloud in the set.
    #[error("disconnected set: cloud {0} overlaps no other cloud")]
    DisconnectedSet(usize),

    /// The odometry chain of a pose graph could not be built.
    #[error("graph construction failure: {0}")]
    GraphConstructionFailure(String),

    /// Iterative optimization hit its iteration cap without converging.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// Two inputs that must have equal sizes do not.
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    /// Input exceeds a hard size cap.
    #[error("input too large: {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    /// A local neighborhood is collinear and cannot be triangulated.
    #[error("collinear neighborhood at query point {0}")]
    CollinearNeighborhood(usize),

    /// Too few finite samples for a statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    /// A configuration file failed validation.
    #[error("config error at `{field}`: {message}")]
    ConfigError { field: String, message: String },

    /// Underlying file-system failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A geometry file could not be parsed.
    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse {
        path: String,
        offset: u64,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }

    /// Exit-code class: user/config errors map to 1, runtime failures to 2.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::ConfigError { .. }
                | Error::Io { .. }
                | Error::Parse { .. }
                | Error::SizeMismatch { .. }
                | Error::TooLarge { .. }
        )
    }
}

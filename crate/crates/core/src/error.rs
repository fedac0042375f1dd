use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({re}, {im}) is not strictly inside the unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("finite-difference stencil of step {h} at ({re}, {im}) leaves the disk")]
    StencilOutsideDisk { re: f64, im: f64, h: f64 },

    #[error("separation is undefined for fewer than two distinct points")]
    SeparationUndefined,

    #[error("cluster {index} has pseudohyperbolic diameter {diameter} above the ceiling {ceiling}")]
    ClusterTooLarge { index: usize, diameter: f64, ceiling: f64 },

    #[error("kept sub-multiset for cluster {0} is empty; drop the pair instead")]
    EmptyCluster(usize),

    #[error("sub-multiset for cluster {0} is not contained in the original cluster")]
    NotASubset(usize),

    #[error("interpolation constraints are infeasible (rank {rank} < {constraints})")]
    Infeasible { rank: usize, constraints: usize },

    #[error("iteration did not converge after {iterations} steps (best value {best})")]
    NotConverged { iterations: usize, best: f64 },

    #[error("the origin (or a point within {min_distance} of it) belongs to the sequence")]
    OriginInSequence { min_distance: f64 },

    #[error("function does not vanish at ({re}, {im}) to order {order}: residual {residual}")]
    NotVanishing {
        re: f64,
        im: f64,
        order: u32,
        residual: f64,
    },

    #[error("point ({re}, {im}) is repeated; distinct points are required")]
    RepeatedPoint { re: f64, im: f64 },

    #[error("grid does not cover D({re}, {im}; 1/2)")]
    InsufficientCoverage { re: f64, im: f64 },

    #[error("partition of unity has a covering gap at ({re}, {im})")]
    CoveringGap { re: f64, im: f64 },

    #[error("analytic factor vanishes on the support of bump {0}")]
    VanishingFactor(usize),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

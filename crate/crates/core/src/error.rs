use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("disk index {disk_id} out of range for n = {n}")]
    DiskOutOfRange { disk_id: u32, n: u32 },

    #[error("ray origin lies inside a scatterer (distance {distance} < r = {radius})")]
    OriginInsideDisk { distance: f64, radius: f64 },

    #[error("grazing collision: |cos phi| = {cos_phi:e} below tolerance")]
    Grazing { cos_phi: f64 },

    #[error("no collision within horizon {horizon}")]
    NoCollisionWithinHorizon { horizon: f64 },

    #[error("chord endpoint lies on a wall line within tolerance; perturb and retry")]
    EndpointOnWall,

    #[error("minimization did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("minimizer left the admissible class: {0}")]
    LeftAdmissibleClass(String),

    #[error("no admissible closing extension of length <= {max_extension}")]
    NoExtension { max_extension: usize },

    #[error("no admissible realization found for word of length {len}: {reason}")]
    Unrealizable { len: usize, reason: String },

    #[error("target speed {target} exceeds the guaranteed admissible radius {bound} (1/sqrt(5) - O(1/n))")]
    SpeedAboveBound { target: f64, bound: f64 },

    #[error("insufficient collisions: {got} < required {required}")]
    InsufficientCollisions { got: u64, required: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

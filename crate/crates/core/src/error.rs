use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid {nelx}x{nely}x{nelz} has an empty axis")]
    EmptyGrid { nelx: usize, nely: usize, nelz: usize },

    #[error("mesh needs {count} indices, beyond the 32-bit index range")]
    IndexOverflow { count: u64 },

    #[error("element {element} is out of range for a mesh of {count} elements")]
    ElementOutOfRange { element: usize, count: usize },

    #[error("element {0} is listed as both passive solid and passive void")]
    OverlappingPassive(usize),

    #[error("filter radius {0} is smaller than one element")]
    FilterRadius(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("stiffness matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("physical volume increased from {previous} to {current} while raising the multiplier")]
    NonMonotoneVolume { previous: f64, current: f64 },

    #[error("iteration {iteration}: {source}")]
    Iteration { iteration: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

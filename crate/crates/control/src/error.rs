use thiserror::Error;

/// Failures raised by the LTI kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("DegenerateSystem: denominator is identically zero")]
    DegenerateSystem,
    #[error("ImproperSystem: numerator degree {num_degree} exceeds denominator degree {den_degree}")]
    ImproperSystem { num_degree: usize, den_degree: usize },
    #[error("ShapeError: {0}")]
    Shape(String),
    #[error("UnsupportedShape: {0}")]
    UnsupportedShape(String),
    #[error("OrderTooLarge: state order {order} exceeds the supported maximum of {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("NonFinite: {0} contains a non-finite entry")]
    NonFinite(&'static str),
    #[error("BadGrid: {0}")]
    BadGrid(String),
    #[error("Uncontrollable: controllability matrix has rank {rank} < {order}")]
    Uncontrollable { rank: usize, order: usize },
    #[error("BadPoleSet: {0}")]
    BadPoleSet(String),
    #[error("Unstabilizable: an unstable mode is not reachable from the input")]
    Unstabilizable,
    #[error("SingularWeight: R is singular or not positive definite")]
    SingularWeight,
    #[error("InvalidWeight: {0}")]
    InvalidWeight(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("SingularMatrix: {0}")]
    SingularMatrix(&'static str),
}

impl ControlError {
    /// Short class name, the token the debugger rule table keys on.
    pub fn class(&self) -> &'static str {
        match self {
            ControlError::DegenerateSystem => "DegenerateSystem",
            ControlError::ImproperSystem { .. } => "ImproperSystem",
            ControlError::Shape(_) => "ShapeError",
            ControlError::UnsupportedShape(_) => "UnsupportedShape",
            ControlError::OrderTooLarge { .. } => "OrderTooLarge",
            ControlError::NonFinite(_) => "NonFinite",
            ControlError::BadGrid(_) => "BadGrid",
            ControlError::Uncontrollable { .. } => "Uncontrollable",
            ControlError::BadPoleSet(_) => "BadPoleSet",
            ControlError::Unstabilizable => "Unstabilizable",
            ControlError::SingularWeight => "SingularWeight",
            ControlError::InvalidWeight(_) => "InvalidWeight",
            ControlError::NoConvergence(_) => "NoConvergence",
            ControlError::SingularMatrix(_) => "SingularMatrix",
        }
    }
}

pub type Result<T> = std::result::Result<T, ControlError>;

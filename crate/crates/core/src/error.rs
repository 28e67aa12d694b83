use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown model family `{0}`")]
    UnknownFamily(String),

    #[error("characteristic exponent is bounded (compound Poisson); an unbounded exponent is required")]
    BoundedExponent,

    #[error("Lévy density violates {0}")]
    InvalidDensity(&'static str),

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("Laplace inversion unstable at x = {x:e}")]
    InversionUnstable { x: f64 },

    #[error("renewal table is not increasing near x = {x:e} (V' = {vprime:e})")]
    NonIncreasingRenewal { x: f64, vprime: f64 },

    #[error("argument outside the table range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate estimate: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

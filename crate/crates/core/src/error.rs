use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lattice needs at least {min} sites, got {got}")]
    LatticeTooSmall { got: usize, min: usize },

    #[error(
        "no oscillatory regime for lambda={lambda}, beta={beta}: lambda^2 <= 4 beta^2 \
         gives hyperbolic dynamics"
    )]
    NoOscillatoryRegime { lambda: f64, beta: f64 },

    #[error(
        "degenerate parameters: |4 beta^2 - lambda^2| = {gamma_sq_abs:e} is below {eps:e}; \
         the exact solver does not cover |lambda| = 2 beta"
    )]
    DegenerateGamma { gamma_sq_abs: f64, eps: f64 },

    #[error("step size underflow at Z={z}: h={h:e} cannot satisfy the error tolerance")]
    StepUnderflow { z: f64, h: f64 },

    #[error("non-finite amplitude encountered at Z={z}")]
    NonFinite { z: f64 },

    #[error("factored form does not exist at this point: e^(-g/2) = {value} vanishes")]
    NoFactoredForm { value: num_complex::Complex64 },

    #[error("matrix exponential series did not converge: {0}")]
    SeriesDiverged(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument overflow: |Im z| = {im_abs:.3e} exceeds the guard bound {bound}")]
    Overflow { im_abs: f64, bound: f64 },

    #[error("singular denominator in {context} (|D| = {magnitude:.3e})")]
    SingularDenominator {
        context: &'static str,
        magnitude: f64,
    },

    #[error(
        "ill-conditioned boundary system: relative residual {residual:.3e} exceeds {limit:.1e}"
    )]
    IllConditioned { residual: f64, limit: f64 },

    #[error("quadrature failed to reach rel_tol {rel_tol:.1e} on [{lower}, {upper}] within depth {max_depth}")]
    QuadratureFailure {
        lower: f64,
        upper: f64,
        rel_tol: f64,
        max_depth: usize,
    },

    #[error("invalid layer stack: {0}")]
    InvalidStack(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {field}: {reason}")]
    InvalidModel { field: String, reason: String },

    #[error("model config parse error at line {line}, column {column}: {reason}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{identity}: precondition of branch `{branch}` violated: {reason}")]
    Precondition {
        identity: &'static str,
        branch: &'static str,
        reason: String,
    },

    #[error("root finding did not converge: {what} (residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("quadrature failed on [{lo}, {hi}]: estimated error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        lo: f64,
        hi: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("Laplace inversion at x = {x} reached error bound {achieved:e} (target {target:e})")]
    Inversion { x: f64, achieved: f64, target: f64 },

    #[error("representations of {kernel} at x = {x} disagree by {gap:e}")]
    RepresentationGap { kernel: &'static str, x: f64, gap: f64 },

    #[error("numerical fault in {identity}: {detail}")]
    NumericalFault {
        identity: &'static str,
        detail: String,
    },

    #[error("simulation config: {0}")]
    SimConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("eigensolver failed: {message} (residual {residual:e})")]
    Solver { message: String, residual: f64 },
    #[error("degenerate ground state: gap to next eigenvalue {gap:e} <= {tol:e}")]
    DegenerateGroundState { gap: f64, tol: f64 },
    #[error("no critical temperature below T_max = {t_max}")]
    NoCriticalTemperature { t_max: f64 },
    #[error("quadrature accuracy error: estimate {estimate:e} above tolerance {tol:e}")]
    Accuracy { estimate: f64, tol: f64 },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("aliasing error: {0}")]
    Aliasing(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("optimization did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    Optimization { iterations: usize, grad_norm: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

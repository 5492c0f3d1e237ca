use thiserror::Error;

/// Errors raised by the solvers and the scenario harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{solver}: no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("CFL number {cfl:.3} exceeds 1")]
    CflViolation { cfl: f64 },
    #[error("element {element} has a degenerate reference map (det = {det:.3e})")]
    DegenerateElement { element: usize, det: f64 },
    #[error("element {element} is inverted (J = {jacobian:.3e})")]
    InvertedElement { element: usize, jacobian: f64 },
    #[error("kernel support around ({x:.6}, {y:.6}) leaves the grid")]
    PointOutOfDomain { x: f64, y: f64 },
    #[error("error values must be positive for a rate fit (got {value})")]
    NonPositiveError { value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Failures raised by the solver library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("solver failure in {what}: last bracket [{lo}, {hi}]")]
    SolverFailure { what: &'static str, lo: f64, hi: f64 },

    #[error("sonic band entered at x = {x} (rho = {rho})")]
    Singularity { x: f64, rho: f64 },

    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate jump: equal densities {rho} on both sides")]
    DegenerateJump { rho: f64 },

    #[error("no solution: exit density {target} outside attainable range [{min}, {max}]")]
    NoSolution { target: f64, min: f64, max: f64 },

    #[error("hypothesis violation at shock position {a}: {detail}")]
    HypothesisViolation { a: f64, detail: String },

    #[error("infeasible shock position {a}: subsonic branch went sonic at x = {x}")]
    InfeasibleShockPosition { a: f64, x: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid state: {0}")]
    StateInvalid(String),

    #[error("boundary solver did not converge: residual {residual}")]
    BoundarySolver { residual: f64 },

    #[error("X-norm is not positive definite: boundary weight {boundary_weight} below trace bound {trace_bound}")]
    NormDegenerate { boundary_weight: f64, trace_bound: f64 },

    #[error("no unstable mode: terminal slope keeps one sign on [{lo}, {hi}]")]
    NoModeFound { lo: f64, hi: f64 },

    #[error("no unstable length found in [{lo}, {hi}] ({scanned} lengths scanned)")]
    NoUnstableLength { lo: f64, hi: f64, scanned: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

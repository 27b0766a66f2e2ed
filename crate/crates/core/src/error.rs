use thiserror::Error;

/// Errors reported by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("evaluation error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("time step {dt:e} exceeds the positivity bound {bound:e}; use dt <= {suggested:e}")]
    Unstable { dt: f64, bound: f64, suggested: f64 },

    #[error("implicit system is not diagonally dominant at node {node}; use dt <= {suggested:e} or refine the grid")]
    SolverBreakdown { node: usize, suggested: f64 },

    #[error("cell Peclet number {peclet:.3} exceeds 1; use at least {suggested_nx} points per period")]
    UnresolvedDrift { peclet: f64, suggested_nx: usize },

    #[error("state is not strictly positive at node {node} (value {value:e})")]
    NonPositiveState { node: usize, value: f64 },

    #[error("Harnack ratio {ratio:e} below 1e-8 at t = {time}; the cell is under-resolved")]
    HarnackCollapse { ratio: f64, time: f64 },

    #[error("growth envelope violated by {excess:e} (log scale) at n = {n}, T = {span}")]
    EnvelopeViolation { n: usize, span: usize, excess: f64 },

    #[error("normalised profiles from different initial data still differ by {distance:e} after a burn-in of {burn_in}")]
    NotUnique { distance: f64, burn_in: usize },

    #[error("overflow despite renormalisation at t = {time}; the time step is unstable")]
    Overflow { time: f64 },

    #[error("clipping of {magnitude:e} in one step exceeds 1e-6; reduce dt")]
    ExcessiveClipping { magnitude: f64 },

    #[error("no sign change of the decay-rate indicator on [{lo}, {hi}]; widen the lambda grid")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("period map did not converge after {periods} periods (last change {change:e})")]
    NoConvergence { periods: usize, change: f64 },

    #[error("front reached the right boundary region at t = {time}; enlarge the domain")]
    Contaminated { time: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("atom number {n} exceeds the exact-engine cap of {cap}; use the closed-form evaluators")]
    Capacity { n: usize, cap: usize },

    #[error("signal slope is zero, phase sensitivity diverges")]
    DivergentSensitivity,

    #[error("closed-form echo branch does not apply: {0}")]
    BranchMismatch(String),

    #[error("cloud over-focused along axis {axis} at t = {time:.6e} s")]
    FocusSingularity { time: f64, axis: usize },

    #[error("integrator step size underflow at t = {time:.6e} s")]
    StepSizeUnderflow { time: f64 },

    #[error("no root in [{lo:.6e}, {hi:.6e}]: {detail}")]
    NoRoot { lo: f64, hi: f64, detail: String },

    #[error("optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

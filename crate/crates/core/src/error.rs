use thiserror::Error;

/// Errors shared across the simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A finite bit source ran out while an orbit step needed another digit.
    #[error("orbit truncated: bit source exhausted at position {position}")]
    OrbitTruncated { position: usize },

    /// A continued-fraction digit could not be certified within the source
    /// bit budget.
    #[error("precision exhausted: consumed {consumed} of {budget} source bits")]
    PrecisionExhausted { consumed: usize, budget: usize },

    /// The continued-fraction expansion of an exact rational terminated.
    #[error("digit stream terminated after {digits} digits (rational point)")]
    DigitsExhausted { digits: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A resource guard refused the requested computation.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    /// Single-return iteration exceeded the step guard.
    #[error("return-time guard exceeded after {steps} steps")]
    ReturnGuard { steps: u64 },

    /// The orbit landed exactly on the neutral fixed point 0.
    #[error("exceptional point: orbit reached 0 exactly")]
    ExceptionalPoint,

    /// The available horizon cannot resolve the requested time grid.
    #[error("horizon insufficient: t_max={t_max} requires {required} steps")]
    Horizon { required: u64, t_max: f64 },

    #[error("schedule rejected: {0}")]
    ScheduleRejected(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

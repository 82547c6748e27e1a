use thiserror::Error;

/// Errors produced by the library. Rearrangement violations found by
/// [`crate::rearrange::validate_schedule`] are data, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("capacity exceeded: {occupied} occupied sites but at most {capacity} atoms fit the blinking period")]
    Capacity { occupied: usize, capacity: u32 },

    #[error("speed limit exceeded for atom {atom}: {speed:.4} m/s > {v_max:.4} m/s; needs at least {min_n_blink} cycles")]
    Speed {
        atom: usize,
        speed: f64,
        v_max: f64,
        min_n_blink: u64,
    },

    #[error("schedule violates constraints: {0}")]
    Constraint(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Fails unless `value` is finite.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be non-negative and finite, got {value}")))
    }
}

pub(crate) fn ensure_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {value}")))
    }
}

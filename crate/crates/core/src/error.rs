use thiserror::Error;

/// Errors raised by the models, the controller and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DobacError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64 },

    #[error("state norm {norm:.3e} exceeded divergence guard {guard:.3e} at t = {t}")]
    Diverged { t: f64, norm: f64, guard: f64 },

    #[error("parameter vector outside its projection set: f(theta) = {value}")]
    OutsideSet { value: f64 },

    #[error("matching conditions cannot be met: residual {residual:.3e}")]
    Unmatchable { residual: f64 },

    #[error("A_r^T P + P A_r is not negative definite: lambda_min(Q) = {min_eigenvalue}")]
    NotLyapunov { min_eigenvalue: f64 },

    #[error("window [{t0}, {t1}] is outside the logged range [{start}, {end}]")]
    WindowOutOfRange {
        t0: f64,
        t1: f64,
        start: f64,
        end: f64,
    },

    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error("log schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl DobacError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        DobacError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(DobacError::DimensionMismatch {
                context,
                expected,
                actual,
            })
        }
    }
}

pub type Result<T> = std::result::Result<T, DobacError>;

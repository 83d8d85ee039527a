//! Scenario files, runs, sweeps, reports and plots around `dobac-core`.

pub mod config;
pub mod plot;
pub mod report;
pub mod run;

use dobac_core::DobacError;

/// Process exit code for an error: 2 configuration, 3 divergence, 4 I/O.
pub fn exit_code(err: &DobacError) -> i32 {
    match err {
        DobacError::Diverged { .. } | DobacError::NonFiniteDerivative { .. } => 3,
        DobacError::Io(_) => 4,
        _ => 2,
    }
}

//! Closed-loop simulation of model reference adaptive control augmented with
//! a disturbance observer and a magnitude- and rate-limited integral
//! disturbance-rejection term.
//!
//! ```
//! use dobac_core::{simulate, Scenario};
//!
//! let mut scenario = Scenario::msd_cubic_paper();
//! scenario.horizon = 1.0;
//! let log = simulate(&scenario).unwrap();
//! assert_eq!(log.len(), 1001);
//! ```

pub mod adaptive;
pub mod analysis;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod log;
pub mod observer;
pub mod plant;
pub mod reference;
pub mod rejection;
pub mod scenario;
pub mod signal;
pub mod sim;

pub use adaptive::{AdaptationGains, AdaptiveParams, MatchedGains, ProjectionSet, ProjectionSets};
pub use basis::{Basis, Monomial};
pub use error::{DobacError, Result};
pub use linalg::{Matrix, Vector};
pub use log::{RunLog, Sample};
pub use observer::ObserverConfig;
pub use plant::PlantParams;
pub use reference::{ReferenceInput, ReferenceModel};
pub use rejection::{RejectionCase, RejectionConfig, RejectionMode};
pub use scenario::{InitialConditions, Scenario};
pub use signal::{Signal, Sinusoid};
pub use sim::{advance, simulate, ClosedLoopState, Simulator, StepResult};

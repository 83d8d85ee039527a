//! A complete closed-loop scenario: plant, controller, observer, rejection
//! law, disturbance, initial conditions and integration settings.

use crate::adaptive::{
    lyapunov_q, solve_matching, AdaptationGains, AdaptiveParams, MatchedGains, ProjectionSet, ProjectionSets,
};
use crate::basis::Basis;
use crate::error::{DobacError, Result};
use crate::linalg::{self, matrix_from_rows, Matrix, Vector};
use crate::observer::ObserverConfig;
use crate::plant::PlantParams;
use crate::reference::{ReferenceInput, ReferenceModel};
use crate::rejection::{RejectionConfig, RejectionMode};
use crate::signal::Signal;

pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_GUARD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    pub x: Vector,
    pub x_r: Vector,
    /// `None` starts every block at its projection-set center.
    pub params: Option<AdaptiveParams>,
    pub u_drj: f64,
    pub d_u_hat: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantParams,
    pub reference: ReferenceModel,
    pub gains: AdaptationGains,
    pub sets: ProjectionSets,
    /// Sign of `Lambda` declared to the controller.
    pub sign_lambda: f64,
    pub observer: ObserverConfig,
    pub rejection: RejectionConfig,
    pub disturbance: Signal,
    pub initial: InitialConditions,
    pub horizon: f64,
    pub step: f64,
    /// Log every `decimation`-th step.
    pub decimation: usize,
    /// Divergence guard on the closed-loop state norm.
    pub guard: f64,
}

impl Scenario {
    /// The mass-spring-damper study with a cubic spring and
    /// `d(t) = 5 sin(0.5 t)`, integrating rejection with `k_eta = 1`.
    pub fn msd_cubic_paper() -> Self {
        let plant = PlantParams::msd_cubic(0.5, 0.5, 0.5, 1.2);
        let reference = ReferenceModel {
            a_r: matrix_from_rows(&[&[0.0, 1.0], &[-1.0, -1.0]]),
            b: Vector::from_vec(vec![0.0, 1.0]),
            lambda_r: 1.0,
            v_r: Vector::from_vec(vec![1.0]),
            input: ReferenceInput::Feedback {
                c_r: Vector::from_vec(vec![1.0, 1.0]),
                excitation: Signal::sinusoid(-1.0, 1.0),
            },
        };
        let kx_lo = -1.5 / 1.4;
        let sets = ProjectionSets {
            k_x: ProjectionSet::from_intervals(&[kx_lo, kx_lo], &[0.5, 0.5], 0.1).expect("static set"),
            k_r: ProjectionSet::from_intervals(&[1.0 / 1.4], &[1.0], 0.1).expect("static set"),
            v: ProjectionSet::from_intervals(&[-0.5 / 1.4], &[1.5], 0.1).expect("static set"),
            w: ProjectionSet::from_intervals(&[], &[], 0.1).expect("static set"),
        };
        let gains = AdaptationGains {
            gamma_x: Matrix::identity(2, 2),
            gamma_r: 1.0,
            gamma_v: Matrix::identity(1, 1),
            gamma_w: Matrix::zeros(0, 0),
            p: matrix_from_rows(&[&[1.5, 0.5], &[0.5, 1.0]]),
        };
        Scenario {
            name: "msd-cubic-paper".into(),
            plant,
            reference,
            gains,
            sets,
            sign_lambda: 1.0,
            observer: ObserverConfig::default(),
            rejection: RejectionConfig {
                mode: RejectionMode::Integrating,
                u_bar: 10.0,
                f_bar: 5.0,
                k_eta: 1.0,
            },
            disturbance: Signal::sinusoid(5.0, 0.5),
            initial: InitialConditions {
                x: Vector::zeros(2),
                x_r: Vector::from_vec(vec![0.0, 1.0]),
                params: None,
                u_drj: 0.0,
                d_u_hat: Vector::zeros(2),
            },
            horizon: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            decimation: 1,
            guard: DEFAULT_GUARD,
        }
    }

    pub fn dim(&self) -> usize {
        self.plant.dim()
    }

    pub fn basis_v(&self) -> &Basis {
        &self.plant.basis_v
    }

    pub fn basis_w(&self) -> &Basis {
        &self.plant.basis_w
    }

    pub fn initial_params(&self) -> AdaptiveParams {
        self.initial.params.clone().unwrap_or_else(|| self.sets.centers())
    }

    pub fn matched(&self) -> Result<MatchedGains> {
        solve_matching(
            &self.plant.a,
            &self.reference.a_r,
            &self.plant.b,
            self.plant.lambda,
            self.reference.lambda_r,
        )
    }

    pub fn lyapunov_q(&self) -> Result<Matrix> {
        lyapunov_q(&self.reference.a_r, &self.gains.p)
    }

    /// Number of integration steps, `horizon / step`, which must be a whole number.
    pub fn steps(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(DobacError::config("sim.step", "must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(DobacError::config("sim.horizon", "must be positive"));
        }
        let ratio = self.horizon / self.step;
        let count = ratio.round();
        if (ratio - count).abs() > 1e-6 * ratio.max(1.0) || count < 1.0 {
            return Err(DobacError::config("sim.horizon", "must be an integer multiple of sim.step"));
        }
        if count > 1e9 {
            return Err(DobacError::config("sim.horizon", "too many steps"));
        }
        Ok(count as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.reference.validate()?;
        let n = self.dim();
        let (m_v, m_w) = (self.plant.basis_v.len(), self.plant.basis_w.len());
        if self.reference.dim() != n || (&self.reference.b - &self.plant.b).amax() != 0.0 {
            return Err(DobacError::config("reference.b", "must equal the plant input vector"));
        }
        if self.reference.v_r.len() != m_v {
            return Err(DobacError::config("reference.v_r", format!("expected {m_v} entries")));
        }
        if self.sign_lambda.abs() != 1.0 || self.sign_lambda != self.plant.lambda.signum() {
            return Err(DobacError::config("controller.sign_lambda", "must equal the sign of plant.lambda"));
        }
        self.gains.validate(n, m_v, m_w)?;
        self.sets.validate(n, m_v, m_w)?;
        self.lyapunov_q()?;
        self.matched()?;
        self.observer.validate()?;
        self.rejection.validate()?;
        if !self.disturbance.is_finite() {
            return Err(DobacError::config("disturbance", "non-finite parameters"));
        }
        let ic = &self.initial;
        for (field, v) in [("initial.x", &ic.x), ("initial.x_r", &ic.x_r), ("initial.d_u_hat", &ic.d_u_hat)] {
            if v.len() != n {
                return Err(DobacError::config(field, format!("expected {n} entries, got {}", v.len())));
            }
            if !linalg::all_finite(v) {
                return Err(DobacError::config(field, "non-finite entries"));
            }
        }
        if !ic.u_drj.is_finite() {
            return Err(DobacError::config("initial.u_drj", "must be finite"));
        }
        let p = self.initial_params();
        if p.k_x.len() != n || p.v.len() != m_v || p.w.len() != m_w {
            return Err(DobacError::config("initial.params", "block dimensions differ from the plant"));
        }
        let f = self.sets.f_values(&p);
        if f.iter().any(|v| *v > 1.0) {
            return Err(DobacError::config("initial.params", "must lie inside the projection sets"));
        }
        self.steps()?;
        if self.decimation == 0 {
            return Err(DobacError::config("sim.decimation", "must be at least 1"));
        }
        if self.guard.is_nan() || self.guard <= 0.0 {
            return Err(DobacError::config("sim.guard", "must be positive"));
        }
        Ok(())
    }
}

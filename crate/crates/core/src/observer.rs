//! Lumped disturbance observer and the disturbance-estimate chain built on it.
//!
//! The observer is a reduced-order extended-state observer with full-state
//! measurement:
//!
//! ```text
//! d_u_hat = z + l x
//! z'      = -l (A_r x + b Lambda_r (V_r.phi_V(x) + u) + d_u_hat)
//! ```
//!
//! so the estimate error `e_du = d_u_hat - d_u` obeys `e_du' = -l e_du - d_u'`.
//! The scalar disturbance estimate is the least-squares resolution, along `b`,
//! of `b Lambda_r d_hat = d_u_hat + b Lambda_r (k_x.x + (k_r - 1) r
//! - (V - V_r).phi_V - W.phi_W)`.

use crate::adaptive::AdaptiveParams;
use crate::basis::Basis;
use crate::error::{DobacError, Result};
use crate::linalg::Vector;
use crate::plant::nominal_deriv;
use crate::reference::ReferenceModel;

pub const DEFAULT_OBSERVER_GAIN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverConfig {
    /// Bandwidth `l` in 1/s.
    pub gain: f64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig { gain: DEFAULT_OBSERVER_GAIN }
    }
}

impl ObserverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gain > 0.0 && self.gain.is_finite() {
            Ok(())
        } else {
            Err(DobacError::config("observer.gain", "must be positive"))
        }
    }

    pub fn d_u_hat(&self, z: &Vector, x: &Vector) -> Vector {
        z + x * self.gain
    }

    /// Internal state giving `d_u_hat(0) = d_u_hat0` at plant state `x0`.
    pub fn initial_state(&self, x0: &Vector, d_u_hat0: &Vector) -> Vector {
        d_u_hat0 - x0 * self.gain
    }

    /// Rate of the lumped estimate, `d/dt d_u_hat = z' + l x'`.
    pub fn estimate_rate(&self, z_dot: &Vector, x_dot: &Vector) -> Vector {
        z_dot + x_dot * self.gain
    }
}

/// Everything the rejection law needs from the observer at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateBundle {
    pub d_u_hat: Vector,
    pub d_hat: f64,
    pub x_dot_star: Vector,
    pub d_hat_dot_star: f64,
    /// `u_drj + d_hat`.
    pub eta: f64,
}

/// Returns `(z', d_u_hat)`.
pub fn observer_deriv(
    z: &Vector,
    x: &Vector,
    u: f64,
    cfg: &ObserverConfig,
    reference: &ReferenceModel,
    basis_v: &Basis,
) -> Result<(Vector, Vector)> {
    DobacError::check_len("observer state", reference.dim(), z.len())?;
    DobacError::check_len("plant state", reference.dim(), x.len())?;
    let d_u_hat = cfg.d_u_hat(z, x);
    let z_dot = -(nominal_deriv(reference, basis_v, x, u) + &d_u_hat) * cfg.gain;
    Ok((z_dot, d_u_hat))
}

/// `x_dot* = A_r x + b Lambda_r (V_r.phi_V(x) + u) + d_u_hat`.
pub fn x_dot_star(
    x: &Vector,
    u: f64,
    d_u_hat: &Vector,
    reference: &ReferenceModel,
    basis_v: &Basis,
) -> Result<Vector> {
    DobacError::check_len("plant state", reference.dim(), x.len())?;
    DobacError::check_len("lumped estimate", reference.dim(), d_u_hat.len())?;
    Ok(nominal_deriv(reference, basis_v, x, u) + d_u_hat)
}

/// The adaptive-parameter part of the estimate:
/// `k_x.x + (k_r - 1) r - (V - V_r).phi_V - W.phi_W`.
fn adaptive_offset(params: &AdaptiveParams, x: &Vector, r: f64, reference: &ReferenceModel, phi_v: &Vector, phi_w: &Vector) -> f64 {
    params.k_x.dot(x) + (params.k_r - 1.0) * r - (&params.v - &reference.v_r).dot(phi_v) - params.w.dot(phi_w)
}

/// Scalar disturbance estimate `d_hat`.
pub fn recover_d_hat(
    d_u_hat: &Vector,
    params: &AdaptiveParams,
    x: &Vector,
    r: f64,
    reference: &ReferenceModel,
    basis_v: &Basis,
    basis_w: &Basis,
) -> f64 {
    let b = &reference.b;
    let resolved = b.dot(d_u_hat) / (reference.lambda_r * b.norm_squared());
    resolved + adaptive_offset(params, x, r, reference, &basis_v.eval(x), &basis_w.eval(x))
}

/// Row `k_x^T - (V - V_r)^T dphi_V/dx - W^T dphi_W/dx` mapping a state-rate
/// error into a `d_hat` rate error: `e_dhatdot = row . e_du`.
pub fn estimate_error_gain(
    params: &AdaptiveParams,
    x: &Vector,
    reference: &ReferenceModel,
    basis_v: &Basis,
    basis_w: &Basis,
) -> Vector {
    let jv = basis_v.jacobian(x);
    let jw = basis_w.jacobian(x);
    &params.k_x - jv.transpose() * (&params.v - &reference.v_r) - jw.transpose() * &params.w
}

/// Inputs to [`d_hat_dot_star`].
pub struct RateInputs<'a> {
    pub x: &'a Vector,
    pub r: f64,
    pub r_dot: f64,
    /// Observer output rate `d/dt d_u_hat`.
    pub d_u_hat_rate: &'a Vector,
    pub x_dot_star: &'a Vector,
    pub params: &'a AdaptiveParams,
    pub params_dot: &'a AdaptiveParams,
}

/// Estimate of `d/dt d_hat` with the plant rate replaced by `x_dot*`.
pub fn d_hat_dot_star(
    inputs: &RateInputs<'_>,
    reference: &ReferenceModel,
    basis_v: &Basis,
    basis_w: &Basis,
) -> Result<f64> {
    let n = reference.dim();
    DobacError::check_len("plant state", n, inputs.x.len())?;
    DobacError::check_len("observer rate", n, inputs.d_u_hat_rate.len())?;
    DobacError::check_len("x_dot*", n, inputs.x_dot_star.len())?;
    let b = &reference.b;
    let x = inputs.x;
    let phi_v = basis_v.eval(x);
    let phi_w = basis_w.eval(x);
    let observer_term = b.dot(inputs.d_u_hat_rate) / (reference.lambda_r * b.norm_squared());
    let pd = inputs.params_dot;
    let adaptation_term = pd.k_x.dot(x) + pd.k_r * inputs.r - pd.v.dot(&phi_v) - pd.w.dot(&phi_w);
    let gain = estimate_error_gain(inputs.params, x, reference, basis_v, basis_w);
    let state_term = gain.dot(inputs.x_dot_star) + (inputs.params.k_r - 1.0) * inputs.r_dot;
    Ok(observer_term + adaptation_term + state_term)
}

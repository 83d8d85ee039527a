//! Theoretical bounds and run statistics.
//!
//! All norms are Euclidean; matrix norms are spectral.

use crate::adaptive::{AdaptationGains, AdaptiveParams, ProjectionSets};
use crate::basis::Basis;
use crate::error::{DobacError, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::log::{RunLog, Sample};
use crate::scenario::Scenario;

/// Worst-case parameter errors `b_kx, b_kr, b_V, b_W` implied by the
/// projection sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBounds {
    pub b_kx: f64,
    pub b_kr: f64,
    pub b_v: f64,
    pub b_w: f64,
}

impl ParameterBounds {
    pub fn from_sets(sets: &ProjectionSets) -> Self {
        ParameterBounds {
            b_kx: sets.k_x.parameter_error_bound(),
            b_kr: sets.k_r.parameter_error_bound(),
            b_v: sets.v.parameter_error_bound(),
            b_w: sets.w.parameter_error_bound(),
        }
    }

    pub fn unit() -> Self {
        ParameterBounds { b_kx: 1.0, b_kr: 1.0, b_v: 1.0, b_w: 1.0 }
    }
}

/// Plant and design constants entering the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub lambda: f64,
    pub lambda_r: f64,
    pub b: Vector,
    pub p: Matrix,
    pub lambda_min_q: f64,
    pub k_x_star_norm: f64,
    /// `||V - V_r||`.
    pub v_offset_norm: f64,
    pub w_norm: f64,
}

impl BoundConstants {
    pub fn from_scenario(sc: &Scenario) -> Result<Self> {
        let q = sc.lyapunov_q()?;
        let matched = sc.matched()?;
        Ok(BoundConstants {
            lambda: sc.plant.lambda,
            lambda_r: sc.reference.lambda_r,
            b: sc.plant.b.clone(),
            p: sc.gains.p.clone(),
            lambda_min_q: linalg::min_symmetric_eigenvalue(&q),
            k_x_star_norm: matched.k_x_star.norm(),
            v_offset_norm: (&sc.plant.v - &sc.reference.v_r).norm(),
            w_norm: sc.plant.w.norm(),
        })
    }
}

fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `b_kx ||x|| + b_kr |r| + b_V ||phi_V(x)|| + b_W ||phi_W(x)||`.
pub fn beta_adp(x: &Vector, r: f64, bounds: &ParameterBounds, basis_v: &Basis, basis_w: &Basis) -> f64 {
    bounds.b_kx * x.norm() + bounds.b_kr * r.abs() + bounds.b_v * basis_v.eval(x).norm() + bounds.b_w * basis_w.eval(x).norm()
}

/// Bound on `|d_hat - d|`.
pub fn b_ed(beta_adp: f64, eps_du: f64, eps_eta: f64, c: &BoundConstants) -> f64 {
    let btb = c.b.norm_squared();
    beta_adp + (c.b.norm() * eps_du + (c.lambda - c.lambda_r).abs() * eps_eta) / (c.lambda.abs() * btb)
}

/// Bound on the error of `d_hat_dot*` at state `x`.
pub fn b_e_dhat_dot(
    bounds: &ParameterBounds,
    eps_du: f64,
    c: &BoundConstants,
    x: &Vector,
    basis_v: &Basis,
    basis_w: &Basis,
) -> f64 {
    let jv = spectral_norm(&basis_v.jacobian(x));
    let jw = spectral_norm(&basis_w.jacobian(x));
    let inner = (c.k_x_star_norm + bounds.b_kx) + (bounds.b_v + c.v_offset_norm) * jv + (c.w_norm + bounds.b_w) * jw;
    c.b.norm() / c.b.norm_squared() * inner * eps_du
}

/// Ultimate tracking-error radius
/// `(2 / lambda_min(Q)) (b_edd / k_eta + b_ed) ||Lambda P b||`.
pub fn epsilon_r(b_e_dhat_dot: f64, k_eta: f64, b_ed: f64, c: &BoundConstants) -> f64 {
    let pb = (&c.p * &c.b * c.lambda).norm();
    2.0 / c.lambda_min_q * (b_e_dhat_dot / k_eta + b_ed) * pb
}

fn weighted_inverse(m: &Matrix, v: &Vector) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let solved = m.clone().cholesky().map(|c| c.solve(v)).unwrap_or_else(|| {
        m.clone().try_inverse().map(|inv| inv * v).unwrap_or_else(|| Vector::from_element(v.len(), f64::NAN))
    });
    v.dot(&solved)
}

/// `e^T P e + |Lambda| (k~^T Gx^-1 k~ + k~_r^2 / g_r + V~^T Gv^-1 V~ + W~^T Gw^-1 W~)`.
pub fn lyapunov_v(e: &Vector, err: &AdaptiveParams, gains: &AdaptationGains, lambda: f64) -> f64 {
    let tracking = e.dot(&(&gains.p * e));
    let params = weighted_inverse(&gains.gamma_x, &err.k_x)
        + err.k_r * err.k_r / gains.gamma_r
        + weighted_inverse(&gains.gamma_v, &err.v)
        + weighted_inverse(&gains.gamma_w, &err.w);
    tracking + lambda.abs() * params
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

fn sup(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// First time after which `values` stays within `band`.
pub fn settling_time(times: &[f64], values: &[f64], band: f64) -> f64 {
    match values.iter().rposition(|v| v.abs() > band) {
        None => times.first().copied().unwrap_or(0.0),
        Some(i) if i + 1 < times.len() => times[i + 1],
        Some(i) => times[i],
    }
}

/// Settling time with band `1.05 x` the sup over `[t0, t1]`.
fn plateau_settling(log: &RunLog, t0: f64, t1: f64, value: impl Fn(&Sample) -> f64) -> Result<f64> {
    let band = 1.05 * sup(log.window(t0, t1)?.iter().map(&value));
    let times = log.times();
    let values: Vec<f64> = log.samples().iter().map(value).collect();
    Ok(settling_time(&times, &values, band))
}

/// Largest `|u_drj(k+1) - u_drj(k)| / dt` over consecutive rows, skipping
/// intervals that end in a reset.
pub fn sup_rate(samples: &[Sample]) -> f64 {
    samples
        .windows(2)
        .filter(|w| !w[1].mode.is_reset())
        .map(|w| ((w[1].u_drj - w[0].u_drj) / (w[1].t - w[0].t)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub t0: f64,
    pub t1: f64,
    pub rms_e: f64,
    pub sup_e: f64,
    pub sup_u_drj: f64,
    pub sup_u_drj_rate: f64,
    pub sup_eta: f64,
    pub sup_e_du: f64,
    pub sup_e_d: f64,
    pub sup_d_hat: f64,
    pub sup_e_dhatdot: f64,
    pub sup_beta_adp: f64,
    pub sup_u_adp_err: f64,
    pub resets: usize,
    pub settle_e: f64,
    pub settle_e_du: f64,
    pub settle_eta: f64,
}

impl RunMetrics {
    /// `(key, value)` pairs in report order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("window_start", self.t0),
            ("window_end", self.t1),
            ("rms_e", self.rms_e),
            ("sup_e", self.sup_e),
            ("sup_u_drj", self.sup_u_drj),
            ("sup_u_drj_rate", self.sup_u_drj_rate),
            ("sup_eta", self.sup_eta),
            ("sup_e_du", self.sup_e_du),
            ("sup_e_d", self.sup_e_d),
            ("sup_d_hat", self.sup_d_hat),
            ("sup_e_dhatdot", self.sup_e_dhatdot),
            ("sup_beta_adp", self.sup_beta_adp),
            ("sup_u_adp_err", self.sup_u_adp_err),
            ("resets", self.resets as f64),
            ("settle_e", self.settle_e),
            ("settle_e_du", self.settle_e_du),
            ("settle_eta", self.settle_eta),
        ]
    }
}

/// Statistics of `log` over `[t0, t1]`.
pub fn run_metrics(log: &RunLog, t0: f64, t1: f64) -> Result<RunMetrics> {
    let w = log.window(t0, t1)?;
    Ok(RunMetrics {
        t0,
        t1,
        rms_e: rms(w.iter().map(|s| s.e.norm())),
        sup_e: sup(w.iter().map(|s| s.e.norm())),
        sup_u_drj: sup(w.iter().map(|s| s.u_drj)),
        sup_u_drj_rate: sup_rate(w),
        sup_eta: sup(w.iter().map(|s| s.eta)),
        sup_e_du: sup(w.iter().map(|s| s.e_du.norm())),
        sup_e_d: sup(w.iter().map(|s| s.e_d)),
        sup_d_hat: sup(w.iter().map(|s| s.d_hat)),
        sup_e_dhatdot: sup(w.iter().map(|s| s.e_dhatdot_model)),
        sup_beta_adp: sup(w.iter().map(|s| s.beta_adp)),
        sup_u_adp_err: sup(w.iter().map(|s| s.u_adp_err)),
        resets: w.iter().filter(|s| s.mode.is_reset()).count(),
        settle_e: plateau_settling(log, t0, t1, |s| s.e.norm())?,
        settle_e_du: plateau_settling(log, t0, t1, |s| s.e_du.norm())?,
        settle_eta: plateau_settling(log, t0, t1, |s| s.eta)?,
    })
}

/// Ultimate-bound check on a logged run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub bounds: ParameterBounds,
    /// Start of the checked interval: the latest of the settling times and
    /// the last reset.
    pub t_settle: f64,
    pub eps_du: f64,
    /// `max(sup |eta|, b_edd / k_eta)` after `t_settle`.
    pub eps_eta: f64,
    pub sup_beta_adp: f64,
    pub b_e_dhat_dot: f64,
    pub b_ed: f64,
    pub epsilon_r: f64,
    pub sup_e_after: f64,
    pub looseness: f64,
    /// Rows after `t_settle` with `|e_d| > b_ed(t)`.
    pub e_d_violations: usize,
    /// Rows after `t_settle` with `|u_adp_err| > beta_adp(t)`.
    pub beta_violations: usize,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.sup_e_after <= self.epsilon_r
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("b_kx", self.bounds.b_kx),
            ("b_kr", self.bounds.b_kr),
            ("b_v", self.bounds.b_v),
            ("b_w", self.bounds.b_w),
            ("t_settle", self.t_settle),
            ("eps_du", self.eps_du),
            ("eps_eta", self.eps_eta),
            ("sup_beta_adp_after", self.sup_beta_adp),
            ("b_e_dhat_dot", self.b_e_dhat_dot),
            ("b_ed", self.b_ed),
            ("epsilon_r", self.epsilon_r),
            ("sup_e_after", self.sup_e_after),
            ("looseness", self.looseness),
            ("e_d_violations", self.e_d_violations as f64),
            ("beta_violations", self.beta_violations as f64),
        ]
    }
}

/// Evaluates the ultimate bound with plateaus measured over `[t0, t1]` and
/// state-dependent terms taken as their sup after the settling time.
pub fn bound_check(log: &RunLog, sc: &Scenario, t0: f64, t1: f64) -> Result<BoundCheck> {
    let c = BoundConstants::from_scenario(sc)?;
    if c.lambda_min_q.is_nan() || c.lambda_min_q <= 0.0 {
        return Err(DobacError::NotLyapunov { min_eigenvalue: c.lambda_min_q });
    }
    let bounds = ParameterBounds::from_sets(&sc.sets);
    let k_eta = sc.rejection.k_eta;
    let metrics = run_metrics(log, t0, t1)?;
    let last_reset = log
        .samples()
        .iter()
        .filter(|s| s.mode.is_reset())
        .map(|s| s.t)
        .fold(0.0, f64::max);
    let t_settle = metrics.settle_e.max(metrics.settle_e_du).max(metrics.settle_eta).max(last_reset).min(t1);
    let end = log.samples().last().map(|s| s.t).unwrap_or(t1);
    let after = log.window(t_settle, end)?;
    let eps_du = sup(after.iter().map(|s| s.e_du.norm()));
    let b_edd = after
        .iter()
        .map(|s| b_e_dhat_dot(&bounds, eps_du, &c, &s.x, sc.basis_v(), sc.basis_w()))
        .fold(0.0, f64::max);
    let eps_eta = sup(after.iter().map(|s| s.eta)).max(b_edd / k_eta);
    let sup_beta = sup(after.iter().map(|s| s.beta_adp));
    let b_ed_sup = b_ed(sup_beta, eps_du, eps_eta, &c);
    let eps_r = epsilon_r(b_edd, k_eta, b_ed_sup, &c);
    let sup_e_after = sup(after.iter().map(|s| s.e.norm()));
    Ok(BoundCheck {
        bounds,
        t_settle,
        eps_du,
        eps_eta,
        sup_beta_adp: sup_beta,
        b_e_dhat_dot: b_edd,
        b_ed: b_ed_sup,
        epsilon_r: eps_r,
        sup_e_after,
        looseness: eps_r / sup_e_after,
        e_d_violations: after.iter().filter(|s| s.e_d.abs() > b_ed(s.beta_adp, eps_du, eps_eta, &c)).count(),
        beta_violations: after.iter().filter(|s| s.u_adp_err.abs() > s.beta_adp).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix_from_rows;
    use crate::rejection::RejectionCase;

    fn study_constants() -> BoundConstants {
        BoundConstants {
            lambda: 1.2,
            lambda_r: 1.0,
            b: Vector::from_vec(vec![0.0, 1.0]),
            p: matrix_from_rows(&[&[1.5, 0.5], &[0.5, 1.0]]),
            lambda_min_q: 1.0,
            k_x_star_norm: (2.0f64).sqrt() * 0.5 / 1.2,
            v_offset_norm: (0.5 / 1.2 - 1.0f64).abs(),
            w_norm: 0.0,
        }
    }

    #[test]
    fn beta_examples() {
        let plain = Basis::parse(2, &["x1^3"]).unwrap();
        let zero = Basis::zero(2);
        let unit = ParameterBounds::unit();
        assert_eq!(beta_adp(&Vector::zeros(2), 0.0, &unit, &plain, &zero), 0.0);
        let x = Vector::from_vec(vec![3.0, 4.0]);
        assert!((beta_adp(&x, 2.0, &unit, &plain, &zero) - 34.0).abs() < 1e-12);
    }

    #[test]
    fn b_ed_examples() {
        let c = study_constants();
        assert_eq!(b_ed(1.0, 0.0, 0.0, &c), 1.0);
        assert!((b_ed(1.0, 0.6, 0.6, &c) - 1.6).abs() < 1e-12);
        let same = BoundConstants { lambda: 1.0, ..c };
        assert_eq!(b_ed(1.0, 0.0, 123.0, &same), 1.0);
    }

    #[test]
    fn b_e_dhat_dot_hand_check() {
        let c = study_constants();
        let basis = Basis::parse(2, &["-x1^3"]).unwrap();
        let zero = Basis::zero(2);
        let unit = ParameterBounds::unit();
        let x = Vector::from_vec(vec![1.0, 0.0]);
        assert_eq!(b_e_dhat_dot(&unit, 0.0, &c, &x, &basis, &zero), 0.0);
        // ||dphi/dx|| = 3 at x1 = 1; ||b|| / b^T b = 1.
        let expected = ((2.0f64).sqrt() * 0.5 / 1.2 + 1.0) + (1.0 + (1.0 - 0.5 / 1.2)) * 3.0;
        assert!((b_e_dhat_dot(&unit, 1.0, &c, &x, &basis, &zero) - expected).abs() < 1e-12);
        assert!((b_e_dhat_dot(&unit, 0.5, &c, &x, &basis, &zero) - 0.5 * expected).abs() < 1e-12);
    }

    #[test]
    fn epsilon_r_examples() {
        let c = study_constants();
        assert_eq!(epsilon_r(0.0, 1.0, 0.0, &c), 0.0);
        let want = 4.0 * (0.36f64 + 1.44).sqrt();
        assert!((epsilon_r(1.0, 1.0, 1.0, &c) - want).abs() < 1e-12);
        assert!((want - 5.3666).abs() < 1e-4);
        assert!(epsilon_r(1.0, 2.0, 1.0, &c) < epsilon_r(1.0, 1.0, 1.0, &c));
    }

    #[test]
    fn lyapunov_examples() {
        let gains = AdaptationGains {
            gamma_x: Matrix::identity(2, 2),
            gamma_r: 1.0,
            gamma_v: Matrix::identity(1, 1),
            gamma_w: Matrix::zeros(0, 0),
            p: matrix_from_rows(&[&[1.5, 0.5], &[0.5, 1.0]]),
        };
        let none = AdaptiveParams::zeros(2, 1, 0);
        assert_eq!(lyapunov_v(&Vector::zeros(2), &none, &gains, 1.2), 0.0);
        assert_eq!(lyapunov_v(&Vector::from_vec(vec![1.0, 0.0]), &none, &gains, 1.2), 1.5);
        let err = AdaptiveParams { k_r: 2.0, ..none.clone() };
        assert!((lyapunov_v(&Vector::zeros(2), &err, &gains, 1.2) - 4.8).abs() < 1e-12);
        let gains2 = AdaptationGains { gamma_x: Matrix::identity(2, 2) * 4.0, ..gains };
        let err = AdaptiveParams { k_x: Vector::from_vec(vec![2.0, 0.0]), ..none };
        assert!((lyapunov_v(&Vector::zeros(2), &err, &gains2, -1.0) - 1.0).abs() < 1e-12);
    }

    fn log_of(values: impl Fn(f64) -> (f64, f64), t_end: f64, steps: usize) -> RunLog {
        let samples = (0..=steps)
            .map(|k| {
                let t = t_end * k as f64 / steps as f64;
                let (e1, u_drj) = values(t);
                let mut s = crate::log::tests_support::blank(t);
                s.e[0] = e1;
                s.u_drj = u_drj;
                s
            })
            .collect();
        RunLog::from_samples(2, 1, 0, samples)
    }

    #[test]
    fn zero_log_metrics() {
        let log = log_of(|_| (0.0, 0.0), 1.0, 100);
        let m = run_metrics(&log, 0.0, 1.0).unwrap();
        assert!(m.entries().iter().filter(|(k, _)| k.starts_with("sup") || k.starts_with("rms")).all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn sine_rms() {
        let tau = 2.0 * std::f64::consts::PI;
        let log = log_of(|t| (t.sin(), 0.0), tau, 10_000);
        let m = run_metrics(&log, 0.0, tau).unwrap();
        assert!((m.rms_e - 0.5f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn ramp_rate() {
        let log = log_of(|t| (0.0, 5.0 * t), 1.0, 1000);
        let m = run_metrics(&log, 0.0, 1.0).unwrap();
        assert!((m.sup_u_drj_rate - 5.0).abs() < 1e-9);
    }

    #[test]
    fn reset_rows_are_skipped_in_rates() {
        let mut log = log_of(|t| (0.0, if t < 0.5 { 5.0 * t } else { -1.0 }), 1.0, 1000);
        let mut samples = log.samples().to_vec();
        let jump = samples.iter().position(|s| s.t >= 0.5).unwrap();
        samples[jump].mode = RejectionCase::ResetToNegDhat;
        log = RunLog::from_samples(2, 1, 0, samples);
        let m = run_metrics(&log, 0.0, 1.0).unwrap();
        assert!((m.sup_u_drj_rate - 5.0).abs() < 1e-9);
        assert_eq!(m.resets, 1);
    }

    #[test]
    fn window_errors() {
        let log = log_of(|_| (0.0, 0.0), 1.0, 10);
        assert!(matches!(run_metrics(&log, 0.5, 2.0), Err(DobacError::WindowOutOfRange { .. })));
    }

    #[test]
    fn settling_definition() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(settling_time(&t, &[5.0, 3.0, 0.5, 0.4, 0.5], 1.0), 2.0);
        assert_eq!(settling_time(&t, &[0.1; 5], 1.0), 0.0);
    }
}

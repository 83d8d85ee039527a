//! Fixed-step RK4 integration of the closed loop with per-step evaluation of
//! the rejection mode.
//!
//! Each step: evaluate the rejection law at the step start, apply any reset
//! to `u_drj`, then take one RK4 step with the mode frozen.

use std::ops::Range;

use crate::adaptive::{adaptation_deriv, control_law, AdaptationSignals, AdaptiveParams, MatchedGains};
use crate::error::{DobacError, Result};
use crate::linalg::{self, Vector};
use crate::log::{RunLog, Sample};
use crate::observer::{d_hat_dot_star, estimate_error_gain, observer_deriv, recover_d_hat, x_dot_star, RateInputs};
use crate::rejection::{decide, phi_drj, rate_limit, RejectionCase, RejectionDecision};
use crate::scenario::Scenario;

/// One classical RK4 step of `y' = f(t, y)`.
pub fn rk4_step<F>(t: f64, y: &Vector, h: f64, f: &mut F) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Vector,
{
    let stage = |k: Vector, t: f64| -> Result<Vector> {
        if linalg::all_finite(&k) {
            Ok(k)
        } else {
            Err(DobacError::NonFiniteDerivative { t })
        }
    };
    let half = 0.5 * h;
    let k1 = stage(f(t, y), t)?;
    let k2 = stage(f(t + half, &(y + &k1 * half)), t + half)?;
    let k3 = stage(f(t + half, &(y + &k2 * half)), t + half)?;
    let k4 = stage(f(t + h, &(y + &k3 * h)), t + h)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// `steps` RK4 steps from `(t0, y0)`; returns the final state.
pub fn rk4_integrate<F>(t0: f64, y0: &Vector, h: f64, steps: usize, mut f: F) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Vector,
{
    let mut y = y0.clone();
    for k in 0..steps {
        y = rk4_step(t0 + k as f64 * h, &y, h, &mut f)?;
    }
    Ok(y)
}

/// Offsets of each block inside the flat closed-loop state
/// `[x, x_r, k_x, k_r, V, W, z, u_drj]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n: usize,
    pub m_v: usize,
    pub m_w: usize,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        4 * self.n + 2 + self.m_v + self.m_w
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self) -> Range<usize> {
        0..self.n
    }

    pub fn x_r(&self) -> Range<usize> {
        self.n..2 * self.n
    }

    pub fn k_x(&self) -> Range<usize> {
        2 * self.n..3 * self.n
    }

    pub fn k_r(&self) -> usize {
        3 * self.n
    }

    pub fn v(&self) -> Range<usize> {
        let s = 3 * self.n + 1;
        s..s + self.m_v
    }

    pub fn w(&self) -> Range<usize> {
        let s = 3 * self.n + 1 + self.m_v;
        s..s + self.m_w
    }

    pub fn z(&self) -> Range<usize> {
        let s = 3 * self.n + 1 + self.m_v + self.m_w;
        s..s + self.n
    }

    pub fn u_drj(&self) -> usize {
        self.len() - 1
    }
}

fn block(y: &Vector, r: Range<usize>) -> Vector {
    Vector::from_column_slice(&y.as_slice()[r])
}

fn put(y: &mut Vector, r: Range<usize>, v: &Vector) {
    y.as_mut_slice()[r].copy_from_slice(v.as_slice());
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopState {
    pub t: f64,
    pub layout: StateLayout,
    /// Flat state, see [`StateLayout`].
    pub y: Vector,
}

impl ClosedLoopState {
    pub fn x(&self) -> Vector {
        block(&self.y, self.layout.x())
    }

    pub fn x_r(&self) -> Vector {
        block(&self.y, self.layout.x_r())
    }

    pub fn params(&self) -> AdaptiveParams {
        params_of(&self.y, &self.layout)
    }

    pub fn z(&self) -> Vector {
        block(&self.y, self.layout.z())
    }

    pub fn u_drj(&self) -> f64 {
        self.y[self.layout.u_drj()]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && linalg::all_finite(&self.y)
    }
}

fn params_of(y: &Vector, l: &StateLayout) -> AdaptiveParams {
    AdaptiveParams {
        k_x: block(y, l.k_x()),
        k_r: y[l.k_r()],
        v: block(y, l.v()),
        w: block(y, l.w()),
    }
}

/// How `u_drj` behaves within the RK stages of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StageRule {
    /// State `u_drj` integrates `clamp(phi_drj)`.
    Integrate,
    /// State `u_drj` is held.
    Hold,
    /// `u_drj = -d_hat` algebraically.
    Cancel,
    /// `u_drj = 0`.
    Zero,
}

impl StageRule {
    fn for_case(case: RejectionCase) -> Self {
        match case {
            RejectionCase::Integrate => StageRule::Integrate,
            RejectionCase::ResetToNegDhat | RejectionCase::ResetToZero => StageRule::Hold,
            RejectionCase::Direct => StageRule::Cancel,
            RejectionCase::DirectSaturated | RejectionCase::Off => StageRule::Zero,
        }
    }
}

/// Every closed-loop signal at one `(t, y)`.
#[derive(Debug, Clone)]
pub struct Signals {
    pub x: Vector,
    pub x_r: Vector,
    pub e: Vector,
    pub params: AdaptiveParams,
    pub r: f64,
    pub r_dot: f64,
    pub d: f64,
    pub phi_v: Vector,
    pub phi_w: Vector,
    pub d_u_hat: Vector,
    pub d_hat: f64,
    /// `u_drj` in force (algebraic in direct mode).
    pub u_drj: f64,
    pub u: f64,
    pub x_dot: Vector,
    pub x_r_dot: Vector,
    pub params_dot: AdaptiveParams,
    pub z_dot: Vector,
    pub d_u_hat_rate: Vector,
    pub x_dot_star: Vector,
    pub d_hat_dot_star: f64,
    pub eta: f64,
    pub phi_drj: f64,
    /// `u_drj'` applied by the current rule.
    pub u_drj_rate: f64,
}

/// A validated scenario ready to integrate.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    matched: MatchedGains,
    layout: StateLayout,
}

/// Outcome of one [`Simulator::advance`].
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: ClosedLoopState,
    pub mode: RejectionCase,
    /// Signals at the step start, after any reset.
    pub diagnostics: Sample,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let layout = StateLayout {
            n: scenario.dim(),
            m_v: scenario.plant.basis_v.len(),
            m_w: scenario.plant.basis_w.len(),
        };
        Ok(Simulator { scenario, matched: scenario.matched()?, layout })
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn matched(&self) -> &MatchedGains {
        &self.matched
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn initial_state(&self) -> ClosedLoopState {
        let sc = self.scenario;
        let l = &self.layout;
        let mut y = Vector::zeros(l.len());
        put(&mut y, l.x(), &sc.initial.x);
        put(&mut y, l.x_r(), &sc.initial.x_r);
        let p = sc.initial_params();
        put(&mut y, l.k_x(), &p.k_x);
        y[l.k_r()] = p.k_r;
        put(&mut y, l.v(), &p.v);
        put(&mut y, l.w(), &p.w);
        put(&mut y, l.z(), &sc.observer.initial_state(&sc.initial.x, &sc.initial.d_u_hat));
        y[l.u_drj()] = sc.initial.u_drj;
        ClosedLoopState { t: 0.0, layout: self.layout, y }
    }

    fn signals(&self, t: f64, y: &Vector, rule: StageRule) -> Result<Signals> {
        let sc = self.scenario;
        let l = &self.layout;
        let reference = &sc.reference;
        let (basis_v, basis_w) = (sc.basis_v(), sc.basis_w());

        let x = block(y, l.x());
        let x_r = block(y, l.x_r());
        let params = params_of(y, l);
        let z = block(y, l.z());
        let e = &x - &x_r;
        let r = reference.r_eval(&x_r, t);
        let d = sc.disturbance.eval(t);
        let phi_v = basis_v.eval(&x);
        let phi_w = basis_w.eval(&x);

        let d_u_hat = sc.observer.d_u_hat(&z, &x);
        let d_hat = recover_d_hat(&d_u_hat, &params, &x, r, reference, basis_v, basis_w);
        let u_drj = match rule {
            StageRule::Integrate | StageRule::Hold => y[l.u_drj()],
            StageRule::Cancel => -d_hat,
            StageRule::Zero => 0.0,
        };
        let u = control_law(&params, &x, r, u_drj, basis_v, basis_w);
        let x_dot = sc.plant.plant_deriv(&x, u, d)?;
        let x_r_dot = reference.reference_deriv(&x_r, t)?;
        let signals = AdaptationSignals { x: &x, e: &e, r, phi_v: &phi_v, phi_w: &phi_w };
        let params_dot = adaptation_deriv(&params, &signals, &reference.b, &sc.gains, &sc.sets, sc.sign_lambda)?;
        let (z_dot, _) = observer_deriv(&z, &x, u, &sc.observer, reference, basis_v)?;
        let d_u_hat_rate = sc.observer.estimate_rate(&z_dot, &x_dot);
        let x_dot_star = x_dot_star(&x, u, &d_u_hat, reference, basis_v)?;
        let r_dot = reference.r_dot_eval(&x_r, t)?;
        let d_hat_dot_star = d_hat_dot_star(
            &RateInputs {
                x: &x,
                r,
                r_dot,
                d_u_hat_rate: &d_u_hat_rate,
                x_dot_star: &x_dot_star,
                params: &params,
                params_dot: &params_dot,
            },
            reference,
            basis_v,
            basis_w,
        )?;
        let eta = u_drj + d_hat;
        let phi = phi_drj(eta, d_hat_dot_star, sc.rejection.k_eta);
        let u_drj_rate = match rule {
            StageRule::Integrate => rate_limit(phi, sc.rejection.f_bar),
            _ => 0.0,
        };
        Ok(Signals {
            x,
            x_r,
            e,
            params,
            r,
            r_dot,
            d,
            phi_v,
            phi_w,
            d_u_hat,
            d_hat,
            u_drj,
            u,
            x_dot,
            x_r_dot,
            params_dot,
            z_dot,
            d_u_hat_rate,
            x_dot_star,
            d_hat_dot_star,
            eta,
            phi_drj: phi,
            u_drj_rate,
        })
    }

    fn pack(&self, s: &Signals) -> Vector {
        let l = &self.layout;
        let mut dy = Vector::zeros(l.len());
        put(&mut dy, l.x(), &s.x_dot);
        put(&mut dy, l.x_r(), &s.x_r_dot);
        put(&mut dy, l.k_x(), &s.params_dot.k_x);
        dy[l.k_r()] = s.params_dot.k_r;
        put(&mut dy, l.v(), &s.params_dot.v);
        put(&mut dy, l.w(), &s.params_dot.w);
        put(&mut dy, l.z(), &s.z_dot);
        dy[l.u_drj()] = s.u_drj_rate;
        dy
    }

    /// Evaluates the rejection law at the start of a step and applies any
    /// jump to `u_drj`. Returns the post-jump state, the decision and the
    /// post-jump signals.
    pub fn prepare(&self, state: &ClosedLoopState) -> Result<(ClosedLoopState, RejectionDecision, Signals)> {
        let pre = self.signals(state.t, &state.y, StageRule::Hold)?;
        let u_prev = state.u_drj();
        let decision = decide(u_prev, pre.d_hat, pre.d_hat_dot_star, &self.scenario.rejection);
        let rule = StageRule::for_case(decision.case);
        let mut jumped = state.clone();
        jumped.y[self.layout.u_drj()] = decision.u_drj_after(u_prev);
        let post = if rule == StageRule::Integrate {
            Signals { u_drj_rate: decision.f_drj, ..pre }
        } else {
            self.signals(state.t, &jumped.y, rule)?
        };
        Ok((jumped, decision, post))
    }

    /// One step of length `h`.
    pub fn advance_with_step(&self, state: &ClosedLoopState, h: f64) -> Result<StepResult> {
        let (jumped, decision, post) = self.prepare(state)?;
        let rule = StageRule::for_case(decision.case);
        let diagnostics = self.sample(&post, state.t, state.u_drj(), &decision);
        let mut failure = None;
        let mut field = |t: f64, y: &Vector| match self.signals(t, y, rule) {
            Ok(s) => self.pack(&s),
            Err(e) => {
                failure.get_or_insert(e);
                Vector::from_element(y.len(), f64::NAN)
            }
        };
        let stepped = rk4_step(state.t, &jumped.y, h, &mut field);
        if let Some(e) = failure {
            return Err(e);
        }
        let mut y = stepped?;
        if rule == StageRule::Cancel || rule == StageRule::Zero {
            // keep the slot equal to the value used over the step
            y[self.layout.u_drj()] = jumped.y[self.layout.u_drj()];
        }
        let next = ClosedLoopState { t: state.t + h, layout: self.layout, y };
        let norm = next.y.norm();
        if !norm.is_finite() {
            return Err(DobacError::NonFiniteDerivative { t: next.t });
        }
        if norm > self.scenario.guard {
            return Err(DobacError::Diverged { t: next.t, norm, guard: self.scenario.guard });
        }
        Ok(StepResult { state: next, mode: decision.case, diagnostics })
    }

    pub fn advance(&self, state: &ClosedLoopState) -> Result<StepResult> {
        self.advance_with_step(state, self.scenario.step)
    }

    /// Diagnostics row for the post-jump signals at time `t`.
    pub fn sample(&self, s: &Signals, t: f64, u_drj_prev: f64, decision: &RejectionDecision) -> Sample {
        let sc = self.scenario;
        let reference = &sc.reference;
        let plant = &sc.plant;
        let m = &self.matched;
        let d_u = plant
            .lumped_disturbance_truth(&s.x, s.u, s.d, reference)
            .expect("dimensions checked by validation");
        let e_du = &s.d_u_hat - &d_u;
        let k_x_err = &s.params.k_x - &m.k_x_star;
        let k_r_err = s.params.k_r - m.k_r_star;
        let v_err = &s.params.v - &plant.v;
        let w_err = &s.params.w - &plant.w;
        let u_adp_err = k_x_err.dot(&s.x) + k_r_err * s.r - v_err.dot(&s.phi_v) - w_err.dot(&s.phi_w);
        let lyapunov = crate::analysis::lyapunov_v(
            &s.e,
            &AdaptiveParams { k_x: k_x_err, k_r: k_r_err, v: v_err, w: w_err },
            &sc.gains,
            plant.lambda,
        );
        let bounds = crate::analysis::ParameterBounds::from_sets(&sc.sets);
        let beta = crate::analysis::beta_adp(&s.x, s.r, &bounds, sc.basis_v(), sc.basis_w());
        let row = estimate_error_gain(&s.params, &s.x, reference, sc.basis_v(), sc.basis_w());
        let f = sc.sets.f_values(&s.params);
        let (phi, f_drj) = match decision.case {
            RejectionCase::Integrate => (decision.phi_drj, decision.f_drj),
            _ => (s.phi_drj, 0.0),
        };
        Sample {
            t,
            x: s.x.clone(),
            x_r: s.x_r.clone(),
            e: s.e.clone(),
            k_x: s.params.k_x.clone(),
            k_r: s.params.k_r,
            v: s.params.v.clone(),
            w: s.params.w.clone(),
            r: s.r,
            u: s.u,
            u_drj_prev,
            u_drj: s.u_drj,
            mode: decision.case,
            d: s.d,
            d_u,
            d_u_hat: s.d_u_hat.clone(),
            e_du: e_du.clone(),
            d_hat: s.d_hat,
            e_d: s.d_hat - s.d,
            eta: s.eta,
            phi_drj: phi,
            f_drj,
            d_hat_dot_star: s.d_hat_dot_star,
            e_dhatdot_model: row.dot(&e_du),
            u_adp_err,
            lyapunov,
            beta_adp: beta,
            f_kx: f[0],
            f_kr: f[1],
            f_v: f[2],
            f_w: f[3],
        }
    }

    /// Runs the full horizon.
    pub fn run(&self) -> Result<RunLog> {
        let sc = self.scenario;
        let steps = sc.steps()?;
        let mut log = RunLog::new(self.layout.n, self.layout.m_v, self.layout.m_w);
        let mut state = self.initial_state();
        for k in 0..steps {
            let step = self.advance(&state)?;
            if k % sc.decimation == 0 {
                log.push(step.diagnostics);
            }
            state = step.state;
            // re-anchor time to avoid accumulated rounding
            state.t = (k + 1) as f64 * sc.step;
        }
        // the final time is always logged
        let (_, decision, post) = self.prepare(&state)?;
        log.push(self.sample(&post, state.t, state.u_drj(), &decision));
        Ok(log)
    }
}

/// One step of `scenario` from `state` with step size `h`.
pub fn advance(state: &ClosedLoopState, scenario: &Scenario, h: f64) -> Result<StepResult> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(DobacError::config("sim.step", "must be positive"));
    }
    Simulator::new(scenario)?.advance_with_step(state, h)
}

/// Simulates `scenario` from `t = 0` to its horizon.
pub fn simulate(scenario: &Scenario) -> Result<RunLog> {
    Simulator::new(scenario)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_from_rows, Matrix};
    use crate::rejection::RejectionMode;
    use crate::signal::Signal;

    /// `exp(M) v` by Taylor series, summed until terms vanish.
    fn expm_times(m: &Matrix, v: &Vector) -> Vector {
        let mut term = v.clone();
        let mut sum = v.clone();
        for k in 1..60 {
            term = m * term / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn single_step_matches_matrix_exponential() {
        let a_r = matrix_from_rows(&[&[0.0, 1.0], &[-1.0, -1.0]]);
        let x0 = Vector::from_vec(vec![1.0, 0.0]);
        let got = rk4_integrate(0.0, &x0, 0.01, 1, |_, y| &a_r * y).unwrap();
        let want = expm_times(&(&a_r * 0.01), &x0);
        assert!((got - want).amax() < 1e-9);
    }

    #[test]
    fn zero_field_is_identity() {
        let x0 = Vector::from_vec(vec![3.0, -1.5, 0.25]);
        let got = rk4_integrate(0.0, &x0, 0.7, 5, |_, y| Vector::zeros(y.len())).unwrap();
        assert_eq!(got, x0);
    }

    #[test]
    fn scalar_decay() {
        let got = rk4_integrate(0.0, &Vector::from_element(1, 1.0), 1e-3, 1000, |_, y| -y).unwrap();
        assert!((got[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn non_finite_stage_is_reported() {
        let err = rk4_integrate(0.0, &Vector::from_element(1, 1.0), 0.1, 1, |_, _| Vector::from_element(1, f64::NAN));
        assert!(matches!(err, Err(DobacError::NonFiniteDerivative { .. })));
    }

    fn short(mode: RejectionMode, horizon: f64) -> Scenario {
        let mut s = Scenario::msd_cubic_paper();
        s.rejection.mode = mode;
        s.horizon = horizon;
        s
    }

    #[test]
    fn layout_is_contiguous() {
        let l = StateLayout { n: 2, m_v: 1, m_w: 0 };
        assert_eq!(l.len(), 11);
        assert_eq!((l.x(), l.x_r(), l.k_x(), l.k_r()), (0..2, 2..4, 4..6, 6));
        assert_eq!((l.v(), l.w(), l.z(), l.u_drj()), (7..8, 8..8, 8..10, 10));
    }

    #[test]
    fn initial_estimate_is_zero() {
        let s = Scenario::msd_cubic_paper();
        let sim = Simulator::new(&s).unwrap();
        let st = sim.initial_state();
        assert_eq!(s.observer.d_u_hat(&st.z(), &st.x()), Vector::zeros(2));
        assert_eq!(st.params(), s.sets.centers());
    }

    #[test]
    fn log_length_and_time_grid() {
        let s = short(RejectionMode::Integrating, 0.5);
        let log = simulate(&s).unwrap();
        assert_eq!(log.len(), 501);
        assert_eq!(log.samples()[0].t, 0.0);
        assert_eq!(log.samples()[500].t, 0.5);
        let mut dec = s.clone();
        dec.decimation = 10;
        let dlog = simulate(&dec).unwrap();
        assert_eq!(dlog.len(), 51);
        assert_eq!(dlog.samples()[7], log.samples()[70]);
        dec.decimation = 7;
        let dlog = simulate(&dec).unwrap();
        assert_eq!(dlog.len(), 73);
        assert_eq!(dlog.samples()[72], log.samples()[500]);
    }

    #[test]
    fn deterministic() {
        let s = short(RejectionMode::Integrating, 1.0);
        assert_eq!(simulate(&s).unwrap(), simulate(&s).unwrap());
    }

    #[test]
    fn integrate_case_follows_rate() {
        let s = short(RejectionMode::Integrating, 0.2);
        let sim = Simulator::new(&s).unwrap();
        let st = sim.initial_state();
        let res = sim.advance(&st).unwrap();
        assert_eq!(res.mode, RejectionCase::Integrate);
        let du = res.state.u_drj() - st.u_drj();
        assert!(du.abs() <= s.rejection.f_bar * s.step + 1e-12);
    }

    #[test]
    fn reset_cases_jump_before_the_step() {
        let s = short(RejectionMode::Integrating, 0.2);
        let sim = Simulator::new(&s).unwrap();
        let mut st = sim.initial_state();
        st.y[sim.layout().u_drj()] = 11.0;
        let res = sim.advance(&st).unwrap();
        assert_eq!(res.mode, RejectionCase::ResetToNegDhat);
        assert_eq!(res.diagnostics.u_drj, -res.diagnostics.d_hat);
        assert_eq!(res.state.u_drj(), res.diagnostics.u_drj);

        let mut big = s.clone();
        big.initial.d_u_hat = Vector::from_vec(vec![0.0, 20.0]);
        let sim = Simulator::new(&big).unwrap();
        let mut st = sim.initial_state();
        st.y[sim.layout().u_drj()] = -10.0;
        let res = sim.advance(&st).unwrap();
        assert_eq!(res.mode, RejectionCase::ResetToZero);
        assert_eq!(res.state.u_drj(), 0.0);
        // next step integrates again
        assert_eq!(sim.advance(&res.state).unwrap().mode, RejectionCase::Integrate);
    }

    #[test]
    fn matched_undisturbed_error_decays() {
        let mut s = short(RejectionMode::Off, 20.0);
        let m = s.matched().unwrap();
        s.disturbance = Signal::Zero;
        s.initial.params = Some(AdaptiveParams {
            k_x: m.k_x_star,
            k_r: m.k_r_star,
            v: s.plant.v.clone(),
            w: Vector::zeros(0),
        });
        s.initial.x = Vector::from_vec(vec![0.5, 0.0]);
        let log = simulate(&s).unwrap();
        let e0 = log.samples()[0].e.norm();
        let last = log.samples().last().unwrap().e.norm();
        assert!(log.samples().iter().all(|r| r.e.norm() <= 3.0 * e0));
        let late = log.window(15.0, 20.0).unwrap().iter().map(|r| r.e.norm()).fold(0.0, f64::max);
        assert!(late < 2e-2 * e0 && last < 1e-2 * e0, "{late} {last}");
    }

    #[test]
    fn divergence_guard_trips() {
        let mut s = short(RejectionMode::Off, 5.0);
        s.guard = 1.5;
        assert!(matches!(simulate(&s), Err(DobacError::Diverged { .. })));
    }
}

//! Disturbance-rejection input `u_drj`.
//!
//! Three modes: off (plain MRAC), direct cancellation `u_drj = -d_hat`, and
//! integrating rejection where `u_drj` is a magnitude- and rate-limited
//! integral of
//!
//! ```text
//! f_drj = clamp(phi_drj, -f_bar, f_bar),   phi_drj = -k_eta eta - d_hat_dot*
//! ```
//!
//! with `eta = u_drj + d_hat`. Once `|u_drj|` reaches `u_bar` the state is
//! reset to `-d_hat` (if that is feasible) or to zero.

use std::fmt;
use std::str::FromStr;

use crate::error::{DobacError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectionMode {
    Off,
    Direct,
    Integrating,
}

impl RejectionMode {
    pub fn name(self) -> &'static str {
        match self {
            RejectionMode::Off => "off",
            RejectionMode::Direct => "direct",
            RejectionMode::Integrating => "integrating",
        }
    }
}

impl fmt::Display for RejectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RejectionMode {
    type Err = DobacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" | "mrac" => Ok(RejectionMode::Off),
            "direct" | "d-dobac" => Ok(RejectionMode::Direct),
            "integrating" | "i-dobac" => Ok(RejectionMode::Integrating),
            other => Err(DobacError::config(
                "rejection.mode",
                format!("unknown mode `{other}` (expected off, direct or integrating)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionConfig {
    pub mode: RejectionMode,
    /// Magnitude limit on `u_drj`.
    pub u_bar: f64,
    /// Rate limit on `u_drj`.
    pub f_bar: f64,
    pub k_eta: f64,
}

impl RejectionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match self.mode {
            RejectionMode::Off => Ok(()),
            RejectionMode::Direct => {
                if positive(self.u_bar) {
                    Ok(())
                } else {
                    Err(DobacError::config("rejection.u_bar", "must be positive"))
                }
            }
            RejectionMode::Integrating => {
                for (name, v) in [
                    ("rejection.u_bar", self.u_bar),
                    ("rejection.f_bar", self.f_bar),
                    ("rejection.k_eta", self.k_eta),
                ] {
                    if !positive(v) {
                        return Err(DobacError::config(name, "must be positive in integrating mode"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Which branch of the rejection law is active over a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectionCase {
    /// `|u_drj| < u_bar`: integrate `f_drj`.
    Integrate,
    /// `|u_drj| >= u_bar`, `|d_hat| < u_bar`: jump to `-d_hat`.
    ResetToNegDhat,
    /// `|u_drj| >= u_bar`, `|d_hat| >= u_bar`: jump to zero.
    ResetToZero,
    /// Direct cancellation, `|d_hat| < u_bar`.
    Direct,
    /// Direct cancellation suspended because `|d_hat| >= u_bar`.
    DirectSaturated,
    Off,
}

impl RejectionCase {
    pub const ALL: [RejectionCase; 6] = [
        RejectionCase::Integrate,
        RejectionCase::ResetToNegDhat,
        RejectionCase::ResetToZero,
        RejectionCase::Direct,
        RejectionCase::DirectSaturated,
        RejectionCase::Off,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RejectionCase::Integrate => "integrate",
            RejectionCase::ResetToNegDhat => "reset_to_neg_dhat",
            RejectionCase::ResetToZero => "reset_to_zero",
            RejectionCase::Direct => "direct",
            RejectionCase::DirectSaturated => "direct_saturated",
            RejectionCase::Off => "off",
        }
    }

    pub fn is_reset(self) -> bool {
        matches!(self, RejectionCase::ResetToNegDhat | RejectionCase::ResetToZero)
    }
}

impl fmt::Display for RejectionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RejectionCase {
    type Err = DobacError;

    fn from_str(s: &str) -> Result<Self> {
        RejectionCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| DobacError::SchemaMismatch(format!("unknown rejection case `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionDecision {
    pub case: RejectionCase,
    /// Rate `f_drj` for [`RejectionCase::Integrate`], otherwise the value
    /// assigned to `u_drj`.
    pub value_or_rate: f64,
    pub phi_drj: f64,
    pub f_drj: f64,
    /// `u_drj + d_hat` after the decision is applied.
    pub eta: f64,
}

impl RejectionDecision {
    /// `u_drj` in force right after the decision.
    pub fn u_drj_after(&self, u_drj_prev: f64) -> f64 {
        match self.case {
            RejectionCase::Integrate => u_drj_prev,
            _ => self.value_or_rate,
        }
    }
}

pub fn eta_eval(u_drj: f64, d_hat: f64) -> f64 {
    u_drj + d_hat
}

/// `phi_drj = -k_eta eta - d_hat_dot*`.
pub fn phi_drj(eta: f64, d_hat_dot_star: f64, k_eta: f64) -> f64 {
    -k_eta * eta - d_hat_dot_star
}

/// `phi` if `|phi| < f_bar`, else `sgn(phi) f_bar`.
pub fn rate_limit(phi: f64, f_bar: f64) -> f64 {
    if phi.abs() < f_bar {
        phi
    } else {
        f_bar.copysign(phi)
    }
}

/// Evaluates the rejection law at the start of a step.
pub fn decide(u_drj_prev: f64, d_hat: f64, d_hat_dot_star: f64, cfg: &RejectionConfig) -> RejectionDecision {
    let assign = |case, value: f64| RejectionDecision {
        case,
        value_or_rate: value,
        phi_drj: 0.0,
        f_drj: 0.0,
        eta: eta_eval(value, d_hat),
    };
    match cfg.mode {
        RejectionMode::Off => assign(RejectionCase::Off, 0.0),
        RejectionMode::Direct => {
            if d_hat.abs() < cfg.u_bar {
                assign(RejectionCase::Direct, -d_hat)
            } else {
                assign(RejectionCase::DirectSaturated, 0.0)
            }
        }
        RejectionMode::Integrating => {
            if u_drj_prev.abs() < cfg.u_bar {
                let eta = eta_eval(u_drj_prev, d_hat);
                let phi = phi_drj(eta, d_hat_dot_star, cfg.k_eta);
                let f = rate_limit(phi, cfg.f_bar);
                RejectionDecision {
                    case: RejectionCase::Integrate,
                    value_or_rate: f,
                    phi_drj: phi,
                    f_drj: f,
                    eta,
                }
            } else if d_hat.abs() < cfg.u_bar {
                assign(RejectionCase::ResetToNegDhat, -d_hat)
            } else {
                assign(RejectionCase::ResetToZero, 0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn integrating(k_eta: f64) -> RejectionConfig {
        RejectionConfig { mode: RejectionMode::Integrating, u_bar: 10.0, f_bar: 5.0, k_eta }
    }

    #[test]
    fn unsaturated_integrate() {
        let d = decide(0.0, 2.0, 0.0, &integrating(1.0));
        assert_eq!(d.case, RejectionCase::Integrate);
        assert_eq!(d.eta, 2.0);
        assert_eq!(d.phi_drj, -2.0);
        assert_eq!(d.f_drj, -2.0);
    }

    #[test]
    fn rate_saturates_with_sign_of_phi() {
        let d = decide(0.0, 0.0, -8.0, &integrating(1.0));
        assert_eq!(d.case, RejectionCase::Integrate);
        assert_eq!(d.phi_drj, 8.0);
        assert_eq!(d.f_drj, 5.0);
        let d = decide(0.0, 0.0, 8.0, &integrating(1.0));
        assert_eq!(d.f_drj, -5.0);
    }

    #[test]
    fn reset_to_negative_estimate() {
        let d = decide(11.0, 3.0, 0.0, &integrating(1.0));
        assert_eq!(d.case, RejectionCase::ResetToNegDhat);
        assert_eq!(d.u_drj_after(11.0), -3.0);
        assert_eq!(d.eta, 0.0);
    }

    #[test]
    fn reset_to_zero_when_estimate_infeasible() {
        let d = decide(11.0, 12.0, 0.0, &integrating(1.0));
        assert_eq!(d.case, RejectionCase::ResetToZero);
        assert_eq!(d.u_drj_after(11.0), 0.0);
        let d = decide(-10.5, -10.0, 0.0, &integrating(1.0));
        assert_eq!(d.case, RejectionCase::ResetToZero);
    }

    #[test]
    fn boundary_tie_counts_as_saturated() {
        assert_eq!(decide(10.0, 1.0, 0.0, &integrating(1.0)).case, RejectionCase::ResetToNegDhat);
        assert_eq!(decide(-10.0, 10.0, 0.0, &integrating(1.0)).case, RejectionCase::ResetToZero);
        assert_eq!(rate_limit(5.0, 5.0), 5.0);
        assert_eq!(rate_limit(-5.0, 5.0), -5.0);
    }

    #[test]
    fn direct_and_off() {
        let cfg = RejectionConfig { mode: RejectionMode::Direct, ..integrating(1.0) };
        let d = decide(0.0, 4.0, 100.0, &cfg);
        assert_eq!((d.case, d.value_or_rate, d.eta), (RejectionCase::Direct, -4.0, 0.0));
        assert_eq!(decide(0.0, 11.0, 0.0, &cfg).case, RejectionCase::DirectSaturated);
        let off = RejectionConfig { mode: RejectionMode::Off, ..integrating(1.0) };
        let d = decide(3.0, 5.0, 1.0, &off);
        assert_eq!((d.case, d.value_or_rate, d.eta), (RejectionCase::Off, 0.0, 5.0));
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta_eval(-2.5, 2.5), 0.0);
        assert_eq!(eta_eval(0.0, 5.0), 5.0);
    }

    #[test]
    fn mode_and_case_names_round_trip() {
        for c in RejectionCase::ALL {
            assert_eq!(c.name().parse::<RejectionCase>().unwrap(), c);
        }
        for m in [RejectionMode::Off, RejectionMode::Direct, RejectionMode::Integrating] {
            assert_eq!(m.name().parse::<RejectionMode>().unwrap(), m);
        }
        assert!("sideways".parse::<RejectionMode>().is_err());
    }

    #[test]
    fn validation() {
        assert!(integrating(1.0).validate().is_ok());
        assert!(integrating(0.0).validate().is_err());
        assert!(RejectionConfig { f_bar: -1.0, ..integrating(1.0) }.validate().is_err());
        let off = RejectionConfig { mode: RejectionMode::Off, u_bar: 0.0, f_bar: 0.0, k_eta: 0.0 };
        assert!(off.validate().is_ok());
    }

    proptest! {
        #[test]
        fn decision_invariants(
            u_prev in -15.0f64..15.0, d_hat in -15.0f64..15.0, rate in -50.0f64..50.0,
            k_eta in 0.001f64..1000.0,
        ) {
            let cfg = integrating(k_eta);
            let d = decide(u_prev, d_hat, rate, &cfg);
            match d.case {
                RejectionCase::Integrate => {
                    prop_assert!(u_prev.abs() < cfg.u_bar);
                    prop_assert!(d.f_drj.abs() <= cfg.f_bar);
                }
                RejectionCase::ResetToNegDhat | RejectionCase::ResetToZero => {
                    prop_assert!(u_prev.abs() >= cfg.u_bar);
                    prop_assert!(d.u_drj_after(u_prev).abs() <= cfg.u_bar);
                }
                _ => prop_assert!(false, "unexpected case {:?}", d.case),
            }
        }
    }
}

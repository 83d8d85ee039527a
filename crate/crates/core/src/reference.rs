//! Reference model `x_r' = A_r x_r + b Lambda_r r` and its input `r(t)`.

use crate::error::{DobacError, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::signal::Signal;

/// How the reference input `r` is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceInput {
    /// `r = c_r . x_r + excitation(t)`.
    Feedback { c_r: Vector, excitation: Signal },
    /// `r = signal(t)`.
    External(Signal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub a_r: Matrix,
    pub b: Vector,
    pub lambda_r: f64,
    /// Nominal nonlinearity weights used in the rewritten plant dynamics.
    pub v_r: Vector,
    pub input: ReferenceInput,
}

impl ReferenceModel {
    /// Validating constructor.
    pub fn new(a_r: Matrix, b: Vector, lambda_r: f64, v_r: Vector, input: ReferenceInput) -> Result<Self> {
        let model = ReferenceModel { a_r, b, lambda_r, v_r, input };
        model.validate()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(DobacError::config("reference.b", "empty input vector"));
        }
        if self.a_r.shape() != (n, n) {
            return Err(DobacError::config(
                "reference.a_r",
                format!("expected {n}x{n}, got {}x{}", self.a_r.nrows(), self.a_r.ncols()),
            ));
        }
        if !self.a_r.iter().all(|v| v.is_finite()) || !linalg::all_finite(&self.b) {
            return Err(DobacError::config("reference", "non-finite entries"));
        }
        if !linalg::is_hurwitz(&self.a_r) {
            return Err(DobacError::config(
                "reference.a_r",
                format!("not Hurwitz (spectral abscissa {:.6})", linalg::spectral_abscissa(&self.a_r)),
            ));
        }
        if self.lambda_r == 0.0 || !self.lambda_r.is_finite() {
            return Err(DobacError::config("reference.lambda_r", "must be finite and nonzero"));
        }
        match &self.input {
            ReferenceInput::Feedback { c_r, excitation } => {
                if c_r.len() != n {
                    return Err(DobacError::config(
                        "reference.c_r",
                        format!("expected length {n}, got {}", c_r.len()),
                    ));
                }
                if !excitation.is_finite() {
                    return Err(DobacError::config("reference.excitation", "non-finite parameters"));
                }
                // The loop closed through c_r may be marginally stable (the
                // standard sinusoid-tracking setup is a double integrator);
                // only strictly unstable loops are rejected.
                let closed = self.closed_loop_matrix().expect("feedback input");
                let abscissa = linalg::spectral_abscissa(&closed);
                if abscissa > 1e-9 {
                    return Err(DobacError::config(
                        "reference.c_r",
                        format!("A_r + b Lambda_r c_r is unstable (spectral abscissa {abscissa:.6})"),
                    ));
                }
            }
            ReferenceInput::External(s) => {
                if !s.is_finite() {
                    return Err(DobacError::config("reference.signal", "non-finite parameters"));
                }
            }
        }
        Ok(())
    }

    /// `A_r + b Lambda_r c_r` for feedback inputs.
    pub fn closed_loop_matrix(&self) -> Option<Matrix> {
        match &self.input {
            ReferenceInput::Feedback { c_r, .. } => {
                Some(&self.a_r + &self.b * c_r.transpose() * self.lambda_r)
            }
            ReferenceInput::External(_) => None,
        }
    }

    pub fn r_eval(&self, x_r: &Vector, t: f64) -> f64 {
        match &self.input {
            ReferenceInput::Feedback { c_r, excitation } => c_r.dot(x_r) + excitation.eval(t),
            ReferenceInput::External(s) => s.eval(t),
        }
    }

    pub fn reference_deriv(&self, x_r: &Vector, t: f64) -> Result<Vector> {
        DobacError::check_len("reference state", self.dim(), x_r.len())?;
        let r = self.r_eval(x_r, t);
        Ok(&self.a_r * x_r + &self.b * (self.lambda_r * r))
    }

    /// Exact time derivative of `r` along the reference trajectory.
    pub fn r_dot_eval(&self, x_r: &Vector, t: f64) -> Result<f64> {
        match &self.input {
            ReferenceInput::Feedback { c_r, excitation } => {
                let xr_dot = self.reference_deriv(x_r, t)?;
                Ok(c_r.dot(&xr_dot) + excitation.derivative(t))
            }
            ReferenceInput::External(s) => Ok(s.derivative(t)),
        }
    }
}

/// `e = x - x_r`.
pub fn tracking_error(x: &Vector, x_r: &Vector) -> Result<Vector> {
    DobacError::check_len("tracking error", x.len(), x_r.len())?;
    Ok(x - x_r)
}

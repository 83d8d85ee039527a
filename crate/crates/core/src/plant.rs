//! The uncertain plant `x' = A x + b Lambda (V.phi_V(x) + W.phi_W(x) + u + d)`
//! and its lumped-disturbance decomposition around the reference model.

use crate::basis::Basis;
use crate::error::{DobacError, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::reference::ReferenceModel;

/// True plant constants. `a`, `lambda`, `v` and `w` are unknown to the
/// controller; `b`, the sign of `lambda` and both bases are known.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub a: Matrix,
    pub b: Vector,
    pub lambda: f64,
    pub v: Vector,
    pub w: Vector,
    pub basis_v: Basis,
    pub basis_w: Basis,
}

impl PlantParams {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Mass-spring-damper with a cubic spring:
    /// `x1' = x2`, `x2' = -a1 x1 - a2 x1^3 - damping x2 + Lambda (u + d)`.
    pub fn msd_cubic(a1: f64, a2: f64, damping: f64, lambda: f64) -> Self {
        PlantParams {
            a: linalg::matrix_from_rows(&[&[0.0, 1.0], &[-a1, -damping]]),
            b: Vector::from_vec(vec![0.0, 1.0]),
            lambda,
            // -a2 x1^3 = Lambda V phi_V with V = a2 / Lambda and phi_V = -x1^3.
            v: Vector::from_vec(vec![a2 / lambda]),
            w: Vector::zeros(0),
            basis_v: Basis::parse(2, &["-x1^3"]).expect("static basis"),
            basis_w: Basis::zero(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 || self.b.iter().all(|v| *v == 0.0) {
            return Err(DobacError::config("plant.b", "must be a nonzero vector"));
        }
        if self.a.shape() != (n, n) {
            return Err(DobacError::config(
                "plant.a",
                format!("expected {n}x{n}, got {}x{}", self.a.nrows(), self.a.ncols()),
            ));
        }
        if self.lambda == 0.0 || !self.lambda.is_finite() {
            return Err(DobacError::config("plant.lambda", "must be finite and nonzero"));
        }
        if self.basis_v.state_dim() != n || self.basis_w.state_dim() != n {
            return Err(DobacError::config("plant.basis", "basis state dimension differs from plant"));
        }
        if self.v.len() != self.basis_v.len() {
            return Err(DobacError::config(
                "plant.v",
                format!("expected {} weights, got {}", self.basis_v.len(), self.v.len()),
            ));
        }
        if self.w.len() != self.basis_w.len() {
            return Err(DobacError::config(
                "plant.w",
                format!("expected {} weights, got {}", self.basis_w.len(), self.w.len()),
            ));
        }
        let finite = self.a.iter().chain(self.b.iter()).chain(self.v.iter()).chain(self.w.iter());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(DobacError::config("plant", "non-finite entries"));
        }
        Ok(())
    }

    pub fn plant_deriv(&self, x: &Vector, u: f64, d: f64) -> Result<Vector> {
        DobacError::check_len("plant state", self.dim(), x.len())?;
        let phi_v = self.basis_v.eval(x);
        let phi_w = self.basis_w.eval(x);
        let input = self.v.dot(&phi_v) + self.w.dot(&phi_w) + u + d;
        Ok(&self.a * x + &self.b * (self.lambda * input))
    }

    /// Lumped disturbance `d_u` of the plant rewritten around the reference model:
    /// `x' = A_r x + b Lambda_r (V_r.phi_V(x) + u) + d_u`.
    pub fn lumped_disturbance_truth(
        &self,
        x: &Vector,
        u: f64,
        d: f64,
        reference: &ReferenceModel,
    ) -> Result<Vector> {
        DobacError::check_len("plant state", self.dim(), x.len())?;
        DobacError::check_len("reference dimension", self.dim(), reference.dim())?;
        DobacError::check_len("V_r", self.v.len(), reference.v_r.len())?;
        let phi_v = self.basis_v.eval(x);
        let phi_w = self.basis_w.eval(x);
        let lam = self.lambda;
        let lam_r = reference.lambda_r;
        let scalar = (&self.v * lam - &reference.v_r * lam_r).dot(&phi_v)
            + (lam - lam_r) * u
            + lam * self.w.dot(&phi_w)
            + lam * d;
        Ok((&self.a - &reference.a_r) * x + &self.b * scalar)
    }
}

/// `A_r x + b Lambda_r (V_r.phi_V(x) + u)`: the reference-model part of the
/// rewritten plant, shared by the truth decomposition and the observer.
pub fn nominal_deriv(reference: &ReferenceModel, basis_v: &Basis, x: &Vector, u: f64) -> Vector {
    let phi_v = basis_v.eval(x);
    &reference.a_r * x + &reference.b * (reference.lambda_r * (reference.v_r.dot(&phi_v) + u))
}

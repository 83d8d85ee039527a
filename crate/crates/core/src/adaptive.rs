//! MRAC control law, projection-based adaptation, matching conditions and the
//! Lyapunov equation used by the stability analysis.

use crate::basis::Basis;
use crate::error::{DobacError, Result};
use crate::linalg::{self, Matrix, Vector};

/// Slack on `f(theta) <= 1` before the projection reports [`DobacError::OutsideSet`].
/// Fixed-step integration can overshoot the boundary by `O(h)`.
pub const PROJECTION_TOLERANCE: f64 = 1e-2;

/// Convex admissible set `{theta : f(theta) <= 1}` with
/// `f(theta) = (theta - center)^T diag(weights) (theta - center) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub center: Vector,
    pub weights: Vector,
    pub offset: f64,
    pub margin: f64,
    /// Box known to contain the true parameter, one `(lower, upper)` per component.
    pub admissible: Vec<(f64, f64)>,
}

impl ProjectionSet {
    /// Set built around the interval box `[lower, upper]`.
    ///
    /// The center is the box midpoint, the offset is `-1`, and the weights put
    /// the box inflated by `margin` on each side inside `{f <= 1}`:
    /// `weights_i = 2 / (m (s_i + margin)^2)`, `s_i` the half-width. For a
    /// scalar block this places `f = 1` exactly at `center +/- (s + margin)`;
    /// for `m > 1` the ellipse passes through the corners of the inflated box.
    pub fn from_intervals(lower: &[f64], upper: &[f64], margin: f64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(DobacError::config("projection", "lower/upper length mismatch"));
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(DobacError::config("projection.margin", "must be finite and >= 0"));
        }
        let m = lower.len();
        let mut center = Vector::zeros(m);
        let mut weights = Vector::zeros(m);
        for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(DobacError::config(
                    "projection",
                    format!("invalid interval [{lo}, {hi}] for component {i}"),
                ));
            }
            let half = 0.5 * (hi - lo);
            if half + margin <= 0.0 {
                return Err(DobacError::config("projection", "degenerate interval with zero margin"));
            }
            center[i] = 0.5 * (hi + lo);
            weights[i] = 2.0 / (m as f64 * (half + margin).powi(2));
        }
        Ok(ProjectionSet {
            center,
            weights,
            offset: -1.0,
            margin,
            admissible: lower.iter().copied().zip(upper.iter().copied()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let m = self.dim();
        if self.weights.len() != m || self.admissible.len() != m {
            return Err(DobacError::config(name, "inconsistent projection set dimensions"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(DobacError::config(name, "weights must be positive"));
        }
        if self.offset >= 1.0 {
            return Err(DobacError::config(name, "offset must be < 1 for a nonempty set"));
        }
        if !self.contains_admissible() {
            return Err(DobacError::config(name, "{f <= 1} does not contain the admissible box"));
        }
        Ok(())
    }

    pub fn f(&self, theta: &Vector) -> f64 {
        let diff = theta - &self.center;
        diff.component_mul(&self.weights).dot(&diff) + self.offset
    }

    pub fn gradient(&self, theta: &Vector) -> Vector {
        (theta - &self.center).component_mul(&self.weights) * 2.0
    }

    /// Projection of the update direction `y` at `theta`.
    pub fn project(&self, theta: &Vector, y: &Vector) -> Result<Vector> {
        let f = self.f(theta);
        if f > 1.0 + PROJECTION_TOLERANCE || !f.is_finite() {
            return Err(DobacError::OutsideSet { value: f });
        }
        let grad = self.gradient(theta);
        let along = grad.dot(y);
        if f <= 0.0 || along <= 0.0 {
            return Ok(y.clone());
        }
        let g2 = grad.norm_squared();
        Ok(y - grad * (along * f / g2))
    }

    /// Semi-axis of `{f <= 1}` along component `i`.
    pub fn semi_axis(&self, i: usize) -> f64 {
        ((1.0 - self.offset) / self.weights[i]).sqrt()
    }

    /// Upper bound on `|theta_hat - theta|` for any `theta_hat` in `{f <= 1}` and
    /// any `theta` in the admissible box.
    pub fn parameter_error_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let a = self.semi_axis(i);
                let (lo, hi) = self.admissible[i];
                let c = self.center[i];
                ((c + a - lo).abs()).max((hi - (c - a)).abs()).powi(2)
            })
            .fold(0.0, |acc, v| acc + v)
            .sqrt()
    }

    /// True when every corner of the admissible box satisfies `f <= 1`
    /// (sufficient for containment since `f` is convex).
    pub fn contains_admissible(&self) -> bool {
        let m = self.dim();
        if m > 20 {
            // 2^m corners; use the per-axis bound instead.
            return (0..m).all(|i| {
                let (lo, hi) = self.admissible[i];
                let reach = (lo - self.center[i]).abs().max((hi - self.center[i]).abs());
                reach <= self.semi_axis(i) / (m as f64).sqrt()
            });
        }
        (0u64..(1 << m)).all(|mask| {
            let corner = Vector::from_fn(m, |i, _| {
                let (lo, hi) = self.admissible[i];
                if mask & (1 << i) == 0 {
                    lo
                } else {
                    hi
                }
            });
            self.f(&corner) <= 1.0 + 1e-12
        })
    }
}

/// One projection set per adaptive parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSets {
    pub k_x: ProjectionSet,
    pub k_r: ProjectionSet,
    pub v: ProjectionSet,
    pub w: ProjectionSet,
}

impl ProjectionSets {
    pub fn validate(&self, n: usize, m_v: usize, m_w: usize) -> Result<()> {
        for (name, set, dim) in [
            ("projection.k_x", &self.k_x, n),
            ("projection.k_r", &self.k_r, 1),
            ("projection.v", &self.v, m_v),
            ("projection.w", &self.w, m_w),
        ] {
            if set.dim() != dim {
                return Err(DobacError::config(name, format!("expected dimension {dim}, got {}", set.dim())));
            }
            set.validate(name)?;
        }
        Ok(())
    }

    pub fn centers(&self) -> AdaptiveParams {
        AdaptiveParams {
            k_x: self.k_x.center.clone(),
            k_r: self.k_r.center[0],
            v: self.v.center.clone(),
            w: self.w.center.clone(),
        }
    }

    /// `f` evaluated on each block, in the order `k_x, k_r, V, W`.
    pub fn f_values(&self, p: &AdaptiveParams) -> [f64; 4] {
        [
            self.k_x.f(&p.k_x),
            self.k_r.f(&Vector::from_element(1, p.k_r)),
            self.v.f(&p.v),
            self.w.f(&p.w),
        ]
    }
}

/// Adaptation-law design matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationGains {
    pub gamma_x: Matrix,
    pub gamma_r: f64,
    pub gamma_v: Matrix,
    pub gamma_w: Matrix,
    pub p: Matrix,
}

impl AdaptationGains {
    pub fn validate(&self, n: usize, m_v: usize, m_w: usize) -> Result<()> {
        for (name, mat, dim) in [
            ("adaptation.gamma_x", &self.gamma_x, n),
            ("adaptation.gamma_v", &self.gamma_v, m_v),
            ("adaptation.gamma_w", &self.gamma_w, m_w),
            ("adaptation.p", &self.p, n),
        ] {
            if mat.shape() != (dim, dim) {
                return Err(DobacError::config(
                    name,
                    format!("expected {dim}x{dim}, got {}x{}", mat.nrows(), mat.ncols()),
                ));
            }
            if !linalg::is_spd(mat) {
                return Err(DobacError::config(name, "must be symmetric positive definite"));
            }
        }
        if !(self.gamma_r > 0.0 && self.gamma_r.is_finite()) {
            return Err(DobacError::config("adaptation.gamma_r", "must be positive"));
        }
        Ok(())
    }
}

/// Ideal gains from the matching conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedGains {
    pub k_x_star: Vector,
    pub k_r_star: f64,
}

/// Current adaptive estimates `(k_x, k_r, V, W)`, or their time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveParams {
    pub k_x: Vector,
    pub k_r: f64,
    pub v: Vector,
    pub w: Vector,
}

impl AdaptiveParams {
    pub fn zeros(n: usize, m_v: usize, m_w: usize) -> Self {
        AdaptiveParams {
            k_x: Vector::zeros(n),
            k_r: 0.0,
            v: Vector::zeros(m_v),
            w: Vector::zeros(m_w),
        }
    }
}

/// `u = k_x.x + k_r r - V.phi_V(x) - W.phi_W(x) + u_drj`.
pub fn control_law(
    params: &AdaptiveParams,
    x: &Vector,
    r: f64,
    u_drj: f64,
    basis_v: &Basis,
    basis_w: &Basis,
) -> f64 {
    params.k_x.dot(x) + params.k_r * r - params.v.dot(&basis_v.eval(x)) - params.w.dot(&basis_w.eval(x))
        + u_drj
}

/// Inputs of the adaptation laws that change along the trajectory.
pub struct AdaptationSignals<'a> {
    pub x: &'a Vector,
    pub e: &'a Vector,
    pub r: f64,
    pub phi_v: &'a Vector,
    pub phi_w: &'a Vector,
}

/// Projected adaptation laws `theta_dot = Gamma proj(theta, v_theta)` with
/// `v_x = -x e^T P b sgn(Lambda)`, `v_r = -r e^T P b sgn(Lambda)`,
/// `v_V = phi_V e^T P b sgn(Lambda)`, `v_W = phi_W e^T P b sgn(Lambda)`.
pub fn adaptation_deriv(
    params: &AdaptiveParams,
    signals: &AdaptationSignals<'_>,
    b: &Vector,
    gains: &AdaptationGains,
    sets: &ProjectionSets,
    sign_lambda: f64,
) -> Result<AdaptiveParams> {
    DobacError::check_len("tracking error", b.len(), signals.e.len())?;
    DobacError::check_len("k_x", b.len(), params.k_x.len())?;
    let s = signals.e.dot(&(&gains.p * b)) * sign_lambda;
    let v_x = signals.x * (-s);
    let v_r = Vector::from_element(1, -signals.r * s);
    let v_v = signals.phi_v * s;
    let v_w = signals.phi_w * s;

    let k_x = &gains.gamma_x * sets.k_x.project(&params.k_x, &v_x)?;
    let k_r = gains.gamma_r * sets.k_r.project(&Vector::from_element(1, params.k_r), &v_r)?[0];
    let v = &gains.gamma_v * sets.v.project(&params.v, &v_v)?;
    let w = &gains.gamma_w * sets.w.project(&params.w, &v_w)?;
    Ok(AdaptiveParams { k_x, k_r, v, w })
}

/// Least-squares solution of `b Lambda k_x*^T = A_r - A`, `k_r* = Lambda_r / Lambda`.
pub fn solve_matching(a: &Matrix, a_r: &Matrix, b: &Vector, lambda: f64, lambda_r: f64) -> Result<MatchedGains> {
    let n = b.len();
    if a.shape() != (n, n) || a_r.shape() != (n, n) {
        return Err(DobacError::DimensionMismatch {
            context: "matching conditions",
            expected: n,
            actual: a.nrows(),
        });
    }
    let diff = a_r - a;
    let btb = b.norm_squared();
    let k_x_star = (diff.transpose() * b) / (lambda * btb);
    let residual = (&diff - b * k_x_star.transpose() * lambda).amax();
    if residual > 1e-8 {
        return Err(DobacError::Unmatchable { residual });
    }
    Ok(MatchedGains {
        k_x_star,
        k_r_star: lambda_r / lambda,
    })
}

/// `Q = -(A_r^T P + P A_r)`, required to be positive definite.
pub fn lyapunov_q(a_r: &Matrix, p: &Matrix) -> Result<Matrix> {
    if !linalg::is_spd(p) {
        return Err(DobacError::config("adaptation.p", "must be symmetric positive definite"));
    }
    if a_r.shape() != p.shape() {
        return Err(DobacError::DimensionMismatch {
            context: "lyapunov equation",
            expected: p.nrows(),
            actual: a_r.nrows(),
        });
    }
    let q = -(a_r.transpose() * p + p * a_r);
    let min_eigenvalue = linalg::min_symmetric_eigenvalue(&q);
    if min_eigenvalue <= 0.0 {
        return Err(DobacError::NotLyapunov { min_eigenvalue });
    }
    Ok(q)
}

//! Known nonlinearity bases `phi(x)` built from monomial terms.
//!
//! Every basis entry is a signed product of non-negative integer powers of the
//! state components, written `x1^3`, `-x1^3`, `x1*x2`, `x2^2*x1`. The empty
//! basis is the zero nonlinearity (`m = 0`).

use std::fmt;
use std::str::FromStr;

use crate::error::{DobacError, Result};
use crate::linalg::{Matrix, Vector};

/// One basis entry: `(+/-) prod_i x_i^powers[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    negated: bool,
    powers: Vec<u32>,
}

impl Monomial {
    pub fn new(powers: Vec<u32>) -> Self {
        Monomial { negated: false, powers }
    }

    /// `x_{var}^power` in an `n`-dimensional state (0-based `var`).
    pub fn single(n: usize, var: usize, power: u32) -> Self {
        let mut powers = vec![0; n];
        powers[var] = power;
        Monomial { negated: false, powers }
    }

    pub fn negated(mut self) -> Self {
        self.negated = !self.negated;
        self
    }

    fn sign(&self) -> f64 {
        if self.negated {
            -1.0
        } else {
            1.0
        }
    }

    pub fn dim(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.sign()
            * self
                .powers
                .iter()
                .zip(x)
                .filter(|(p, _)| **p > 0)
                .map(|(p, xi)| xi.powi(*p as i32))
                .product::<f64>()
    }

    /// Partial derivative with respect to `x_j`.
    pub fn partial(&self, x: &[f64], j: usize) -> f64 {
        let pj = self.powers[j];
        if pj == 0 {
            return 0.0;
        }
        let mut out = self.sign() * pj as f64 * x[j].powi(pj as i32 - 1);
        for (i, (p, xi)) in self.powers.iter().zip(x).enumerate() {
            if i != j && *p > 0 {
                out *= xi.powi(*p as i32);
            }
        }
        out
    }

    /// Parses `x1^3*x2` or `-x1^3` for an `n`-dimensional state (variables are 1-based).
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let bad = |msg: String| DobacError::config("basis", format!("`{text}`: {msg}"));
        let trimmed = text.trim();
        let (negated, body) = match trimmed.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, trimmed),
        };
        let mut powers = vec![0u32; n];
        for factor in body.split('*').map(str::trim) {
            let (var, pow) = match factor.split_once('^') {
                Some((v, p)) => (
                    v.trim(),
                    p.trim()
                        .parse::<u32>()
                        .map_err(|_| bad(format!("bad exponent in `{factor}`")))?,
                ),
                None => (factor, 1),
            };
            let idx = var
                .strip_prefix('x')
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| bad(format!("expected x<i>, found `{var}`")))?;
            if idx == 0 || idx > n {
                return Err(bad(format!("variable x{idx} out of range 1..={n}")));
            }
            powers[idx - 1] += pow;
        }
        if powers.iter().all(|p| *p == 0) {
            return Err(bad("constant terms are not supported".into()));
        }
        Ok(Monomial { negated, powers })
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("-")?;
        }
        let mut first = true;
        for (i, p) in self.powers.iter().enumerate().filter(|(_, p)| **p > 0) {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if *p == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, p)?;
            }
        }
        Ok(())
    }
}

/// A vector-valued basis `phi: R^n -> R^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    n: usize,
    terms: Vec<Monomial>,
}

impl Basis {
    pub fn zero(n: usize) -> Self {
        Basis { n, terms: Vec::new() }
    }

    pub fn new(n: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            DobacError::check_len("basis term", n, t.dim())?;
        }
        Ok(Basis { n, terms })
    }

    pub fn parse<S: AsRef<str>>(n: usize, terms: &[S]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|t| Monomial::parse(t.as_ref(), n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Basis { n, terms })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        let xs = x.as_slice();
        Vector::from_iterator(self.terms.len(), self.terms.iter().map(|t| t.eval(xs)))
    }

    /// `m x n` Jacobian `d phi / d x`.
    pub fn jacobian(&self, x: &Vector) -> Matrix {
        let xs = x.as_slice();
        Matrix::from_fn(self.terms.len(), self.n, |i, j| self.terms[i].partial(xs, j))
    }
}

impl FromStr for Monomial {
    type Err = DobacError;

    /// Parses with the state dimension inferred from the highest variable index.
    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .trim()
            .trim_start_matches('-')
            .split('*')
            .filter_map(|f| {
                f.trim()
                    .split('^')
                    .next()
                    .and_then(|v| v.trim().strip_prefix('x'))
                    .and_then(|i| i.parse::<usize>().ok())
            })
            .max()
            .unwrap_or(0);
        Monomial::parse(s, n)
    }
}

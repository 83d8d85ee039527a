//! Small dense linear-algebra helpers shared by the model and analysis code.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Symmetric positive definite check via eigenvalues.
pub fn is_spd(m: &Matrix) -> bool {
    m.is_square() && is_symmetric(m, 1e-12) && (m.nrows() == 0 || min_symmetric_eigenvalue(m) > 0.0)
}

/// Largest real part over the eigenvalues of a general square matrix.
pub fn spectral_abscissa(m: &Matrix) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(m: &Matrix) -> bool {
    m.is_square() && spectral_abscissa(m) < 0.0
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Builds a matrix from row slices. Panics on ragged input.
pub fn matrix_from_rows(rows: &[&[f64]]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hurwitz_classification() {
        assert!(is_hurwitz(&matrix_from_rows(&[&[0.0, 1.0], &[-1.0, -1.0]])));
        assert!(!is_hurwitz(&matrix_from_rows(&[&[0.0, 1.0], &[0.0, 0.0]])));
        assert!(!is_hurwitz(&matrix_from_rows(&[&[1.0, 0.0], &[0.0, -1.0]])));
    }

    #[test]
    fn spd_classification() {
        assert!(is_spd(&matrix_from_rows(&[&[1.5, 0.5], &[0.5, 1.0]])));
        assert!(!is_spd(&matrix_from_rows(&[&[1.0, 2.0], &[2.0, 1.0]])));
        assert!(!is_spd(&matrix_from_rows(&[&[1.0, 0.5], &[0.0, 1.0]])));
    }
}

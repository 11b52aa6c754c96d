//! Small dense helpers over nalgebra shared by the analysis modules.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const SVD_MAX_ITER: usize = 10_000;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Internal("singular value decomposition did not converge".into()))?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// 2-norm condition number `s_max / s_min` over the `min(rows, cols)` singular
/// values; infinite when `s_min <= rank_tol * s_max`.
pub fn condition_number(m: &CMatrix, rank_tol: f64) -> Result<f64> {
    let sv = singular_values(m)?;
    Ok(condition_from_singular_values(&sv, rank_tol))
}

pub fn condition_from_singular_values(sv: &[f64], rank_tol: f64) -> f64 {
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 && min > rank_tol * max => max / min,
        _ => f64::INFINITY,
    }
}

/// Whether the rows of `m` are numerically independent, i.e. the smallest of
/// its `rows` singular values exceeds `tol` times the largest.
pub fn has_full_row_rank(m: &CMatrix, tol: f64) -> Result<bool> {
    if m.ncols() < m.nrows() {
        return Ok(false);
    }
    let sv = singular_values(m)?;
    Ok(match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) => max > 0.0 && min >= tol * max,
        _ => true,
    })
}

/// Unit right null vector of a square matrix (the right singular vector of its
/// smallest singular value), phase-normalized so the largest-magnitude entry is
/// real and positive. Returns the vector and the smallest singular value.
pub fn null_vector(m: &CMatrix) -> Result<(CVector, f64)> {
    let svd = SVD::try_new(m.clone(), false, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Internal("singular value decomposition did not converge".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Internal("missing right singular vectors".into()))?;
    let (k, smin) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Internal("empty matrix has no null vector".into()))?;
    let v = CVector::from_iterator(v_t.ncols(), v_t.row(k).iter().map(|z| z.conj()));
    Ok((normalize_phase(v), smin))
}

/// Scales `v` to unit 2-norm with its largest-magnitude entry real positive.
pub fn normalize_phase(v: CVector) -> CVector {
    let norm = v.norm();
    if norm == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot / pivot.norm();
    v.map(|z| z / (phase * norm))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// `m - s I`
pub fn shifted(m: &CMatrix, s: Complex64) -> CMatrix {
    let mut out = m.clone();
    for k in 0..out.nrows().min(out.ncols()) {
        out[(k, k)] -= s;
    }
    out
}

pub fn hstack(left: &CMatrix, right: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn condition_number_of_diagonal() {
        let m = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 2.0, 0.5])));
        assert_relative_eq!(condition_number(&m, 1e-12).unwrap(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_is_infinite() {
        let m = to_complex(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert!(condition_number(&m, 1e-12).unwrap().is_infinite());
    }

    #[test]
    fn rectangular_uses_min_dimension() {
        // 2x3 with orthogonal rows of norms 3 and 1
        let m = to_complex(&DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
        assert_relative_eq!(condition_number(&m, 1e-12).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn null_vector_of_shifted_diagonal() {
        let m = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 2.0])));
        let (v, smin) = null_vector(&m).unwrap();
        assert!(smin < 1e-15);
        assert_relative_eq!(v[1].re, 1.0, epsilon = 1e-15);
        assert!(v[0].norm() < 1e-15 && v[2].norm() < 1e-15);
    }
}

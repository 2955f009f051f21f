//! Small dense linear algebra on k×k confusion matrices.
//!
//! Matrices are passed row-major; everything here is a thin layer over
//! `nalgebra`'s LU and SVD.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest are treated as zero
/// by the pseudo-inverse.
pub const PINV_RCOND: f64 = 1e-12;

fn to_matrix(k: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(k, k, row_major)
}

/// All singular values of a square row-major matrix, in descending order.
pub fn singular_values(k: usize, row_major: &[f64]) -> Vec<f64> {
    let mut sv: Vec<f64> = to_matrix(k, row_major)
        .singular_values()
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn smallest_singular_value(k: usize, row_major: &[f64]) -> f64 {
    singular_values(k, row_major)
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
}

/// LU with partial pivoting. `None` when the matrix is exactly singular.
pub fn lu_solve(k: usize, row_major: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    to_matrix(k, row_major)
        .lu()
        .solve(&b)
        .map(|x| x.iter().copied().collect())
}

/// Minimum-norm least-squares solution through the SVD.
pub fn pinv_solve(k: usize, row_major: &[f64], rhs: &[f64]) -> Vec<f64> {
    let svd = to_matrix(k, row_major).svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("svd computed with u and v_t"),
    };
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_RCOND * sigma_max;
    let b = DVector::from_column_slice(rhs);
    let mut coeff = u.transpose() * b;
    for (c, &s) in coeff.iter_mut().zip(svd.singular_values.iter()) {
        *c = if s > cutoff { *c / s } else { 0.0 };
    }
    (v_t.transpose() * coeff).iter().copied().collect()
}

//! Small complex linear-algebra helpers.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64 as C64;

use crate::error::{numerical, Result};

pub type Mat3 = Matrix3<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Mat3 {
    Mat3::identity()
}

/// Real 0/1 permutation matrix from a row-wise pattern.
pub fn perm(rows: [[u8; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| C64::new(rows[i][j] as f64, 0.0))
}

/// Entrywise complex conjugate.
pub fn conj(m: &Mat3) -> Mat3 {
    m.map(|z| z.conj())
}

/// Largest entry modulus.
pub fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn inverse(m: &Mat3) -> Result<Mat3> {
    match m.try_inverse() {
        Some(inv) => Ok(inv),
        None => numerical("singular 3x3 matrix"),
    }
}

/// Solves `a x = b` by partial-pivot LU and returns `x` with the residual
/// `max |a x - b|`.
pub fn solve(a: DMatrix<C64>, b: DVector<C64>) -> Result<(DVector<C64>, f64)> {
    let a0 = a.clone();
    let lu = a.lu();
    let x = match lu.solve(&b) {
        Some(x) => x,
        None => return numerical("singular linear system"),
    };
    let res = (&a0 * &x - &b).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if !res.is_finite() {
        return numerical("non-finite solution of linear system");
    }
    Ok((x, res))
}

/// Sum of the entries of column `k`.
pub fn col_sum(m: &Mat3, k: usize) -> C64 {
    m[(0, k)] + m[(1, k)] + m[(2, k)]
}

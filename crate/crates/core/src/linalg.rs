//! Thin dense linear-algebra layer over `faer`.

use alloc::vec::Vec;

use faer::linalg::matmul::matmul;
use faer::{Accum, Par, Side};

use crate::{Error, Result};

pub type Matrix = faer::Mat<f64>;

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors (columns) of a
/// real symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenNoConvergence)?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues only, nondecreasing.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenNoConvergence)
}

/// `a * bᵀ`.
pub fn mul_transpose(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), b.nrows());
    matmul(&mut out, Accum::Replace, a, b.transpose(), 1.0, Par::Seq);
    out
}

pub fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), b.ncols());
    matmul(&mut out, Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// `out += a * bᵀ`.
pub fn add_mul_transpose(out: &mut Matrix, a: &Matrix, b: &Matrix) {
    matmul(out, Accum::Add, a, b.transpose(), 1.0, Par::Seq);
}

pub fn max_abs(m: &Matrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

/// `max |m_ij - m_ji|`.
pub fn max_asymmetry(m: &Matrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            best = best.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    best
}

pub fn row_sums(m: &Matrix) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).sum()).collect()
}

pub fn col_sums(m: &Matrix) -> Vec<f64> {
    (0..m.ncols()).map(|j| m.col(j).iter().sum()).collect()
}

/// Largest deviation of any row or column sum from one.
pub fn stochastic_residual(m: &Matrix) -> f64 {
    row_sums(m)
        .into_iter()
        .chain(col_sums(m))
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    best
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// Whether `m(x̄, ȳ) = m(x, y)` within `tol`, where `x̄` flips every bit of a
/// power-of-two index. Returns early at the first violation.
pub fn is_flip_symmetric(m: &Matrix, tol: f64) -> bool {
    let dim = m.nrows();
    if dim < 2 || !dim.is_power_of_two() || m.ncols() != dim {
        return false;
    }
    let mask = dim - 1;
    for y in 0..dim / 2 {
        for x in 0..dim {
            if (m[(x, y)] - m[(x ^ mask, y ^ mask)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Block of a flip-symmetric matrix on the sector with flip eigenvalue
/// `sign`, in the basis `(|r⟩ + sign |r̄⟩)/√2` over `r < dim/2`.
pub fn flip_sector(m: &Matrix, sign: f64) -> Matrix {
    let dim = m.nrows();
    let mask = dim - 1;
    Matrix::from_fn(dim / 2, dim / 2, |r, q| m[(r, q)] + sign * m[(r, q ^ mask)])
}

/// Eigen-decomposition of a flip-symmetric symmetric matrix via its two
/// sectors; vectors are mapped back to the full basis.
pub fn flip_symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let dim = m.nrows();
    let half = dim / 2;
    let mask = dim - 1;
    let mut pairs: Vec<(f64, f64, usize)> = Vec::with_capacity(dim);
    let mut sectors = Vec::with_capacity(2);
    for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
        let (values, vectors) = symmetric_eigen(&flip_sector(m, sign))?;
        pairs.extend(values.iter().enumerate().map(|(k, &v)| (v, sign, s * half + k)));
        sectors.push(vectors);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let root = core::f64::consts::FRAC_1_SQRT_2;
    let mut vectors = Matrix::zeros(dim, dim);
    for (col, &(_, sign, id)) in pairs.iter().enumerate() {
        let u = &sectors[id / half];
        let k = id % half;
        for r in 0..half {
            vectors[(r, col)] = root * u[(r, k)];
            vectors[(r ^ mask, col)] = sign * root * u[(r, k)];
        }
    }
    Ok((pairs.into_iter().map(|p| p.0).collect(), vectors))
}

/// Eigenvalues of a flip-symmetric symmetric matrix via its two sectors.
pub fn flip_symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let mut values = symmetric_eigenvalues(&flip_sector(m, 1.0))?;
    values.extend(symmetric_eigenvalues(&flip_sector(m, -1.0))?);
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `out = a * bᵀ` into an existing buffer.
pub fn mul_transpose_into(out: faer::MatMut<'_, f64>, a: faer::MatRef<'_, f64>, b: faer::MatRef<'_, f64>) {
    matmul(out, Accum::Replace, a, b.transpose(), 1.0, Par::Seq);
}

/// `acc += p ∘ p` entrywise.
pub fn add_squares(acc: &mut Matrix, p: &Matrix) {
    for j in 0..p.ncols() {
        let src = p.col(j).try_as_col_major().expect("owned matrices are column major").as_slice();
        let dst = acc.col_mut(j).try_as_col_major_mut().expect("owned matrices are column major").as_slice_mut();
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s * s;
        }
    }
}

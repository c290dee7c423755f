//! Metropolis–Hastings chains built from a proposal and a Boltzmann target.
//!
//! Transition matrices are row-stochastic with `matrix[(y, x)] = P(y, x)`, the
//! probability of moving from `y` to `x`.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix};
use crate::models::BoltzmannTable;
use crate::quench::ProposalMatrix;
use crate::{Error, Result};

/// Relative detailed-balance residual tolerated by [`spectral_gap`].
pub const DETAILED_BALANCE_TOL: f64 = 1e-9;

/// Eigenvalues within this distance of one count toward its multiplicity.
pub const REDUCIBILITY_TOL: f64 = 1e-10;

/// Rejected mass may round below zero by at most this much.
const NEGATIVE_DIAGONAL_TOL: f64 = 1e-12;

/// Stops [`exact_mixing_time`] searches.
pub const MIXING_STEP_CAP: u64 = 1_000_000;

/// State-space limit for [`exact_mixing_time`].
pub const MIXING_MAX_STATES: usize = 256;

#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    matrix: Matrix,
    pi: Vec<f64>,
}

impl TransitionMatrix {
    /// Wraps an explicit row-stochastic matrix and its stationary distribution.
    pub fn from_parts(matrix: Matrix, pi: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != pi.len() {
            return Err(Error::InvalidParameter("transition matrix and stationary vector differ in size"));
        }
        if pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidParameter("stationary distribution must be strictly positive"));
        }
        let worst_row = linalg::row_sums(&matrix).into_iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        if worst_row > 1e-10 {
            return Err(Error::InvalidParameter("transition matrix rows must sum to one"));
        }
        Ok(Self { matrix, pi })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn dimension(&self) -> usize {
        self.pi.len()
    }

    /// `max_{x≠y} |π(x)P(x,y) - π(y)P(y,x)| / max(π(x)P(x,y), π(y)P(y,x))`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let dim = self.dimension();
        let mut worst = 0.0f64;
        for x in 0..dim {
            for y in (x + 1)..dim {
                let forward = self.pi[x] * self.matrix[(x, y)];
                let backward = self.pi[y] * self.matrix[(y, x)];
                let scale = forward.max(backward);
                if scale > 0.0 {
                    worst = worst.max((forward - backward).abs() / scale);
                }
            }
        }
        worst
    }
}

/// `A(x|y) = min(1, π(x)Q(y|x) / (π(y)Q(x|y)))`, stored as `a[(y, x)]`, with
/// `A(x|y) = 0` wherever `Q(x|y) = 0`.
pub fn metropolis_acceptance(stationary: &BoltzmannTable, q: &ProposalMatrix) -> Result<Matrix> {
    check_sizes(stationary, q)?;
    let dim = q.dimension();
    let qm = q.matrix();
    Ok(Matrix::from_fn(dim, dim, |y, x| {
        let forward = qm[(y, x)];
        if forward == 0.0 {
            0.0
        } else {
            (stationary.ratio(x, y) * qm[(x, y)] / forward).min(1.0)
        }
    }))
}

/// `P(y,x) = Q(x|y)A(x|y)` off the diagonal; the diagonal keeps rejected mass.
pub fn transition_matrix(q: &ProposalMatrix, acceptance: &Matrix, stationary: &BoltzmannTable) -> Result<TransitionMatrix> {
    check_sizes(stationary, q)?;
    if acceptance.nrows() != q.dimension() || acceptance.ncols() != q.dimension() {
        return Err(Error::InvalidParameter("acceptance matrix shape does not match proposal"));
    }
    let qm = q.matrix();
    build(q.dimension(), stationary, |y, x| qm[(y, x)] * acceptance[(y, x)])
}

/// Proposal and Metropolis acceptance fused: `P(y,x) = min(Q(x|y), π(x)/π(y) Q(y|x))`.
pub fn metropolis_chain(q: &ProposalMatrix, stationary: &BoltzmannTable) -> Result<TransitionMatrix> {
    check_sizes(stationary, q)?;
    let qm = q.matrix();
    build(q.dimension(), stationary, |y, x| qm[(y, x)].min(stationary.ratio(x, y) * qm[(x, y)]))
}

fn check_sizes(stationary: &BoltzmannTable, q: &ProposalMatrix) -> Result<()> {
    if stationary.len() != q.dimension() {
        return Err(Error::InvalidParameter("proposal and Boltzmann table differ in size"));
    }
    Ok(())
}

fn build(dim: usize, stationary: &BoltzmannTable, off_diagonal: impl Fn(usize, usize) -> f64) -> Result<TransitionMatrix> {
    let mut p = Matrix::zeros(dim, dim);
    for y in 0..dim {
        let mut moved = 0.0;
        for x in 0..dim {
            if x != y {
                let value = off_diagonal(y, x);
                p[(y, x)] = value;
                moved += value;
            }
        }
        let stay = 1.0 - moved;
        if stay < -NEGATIVE_DIAGONAL_TOL {
            return Err(Error::NegativeDiagonal { state: y, value: stay });
        }
        p[(y, y)] = stay.max(0.0);
    }
    Ok(TransitionMatrix { matrix: p, pi: stationary.pi.clone() })
}

/// Entry tolerance for treating `E` as flip symmetric.
const FLIP_SYMMETRY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    /// `1 - |λ₂|`.
    pub delta: f64,
    /// Second-largest eigenvalue magnitude, negative eigenvalues included.
    pub lambda2_abs: f64,
    /// More than one eigenvalue at one.
    pub reducible: bool,
}

/// Spectral gap from the symmetrized matrix `E = D^{1/2} P D^{-1/2}`.
pub fn spectral_gap(chain: &TransitionMatrix) -> Result<GapResult> {
    let residual = chain.detailed_balance_residual();
    if residual > DETAILED_BALANCE_TOL {
        return Err(Error::DetailedBalance { residual });
    }
    let e = symmetrized(chain);
    // P and π invariant under the global flip make E block diagonal.
    let values = if linalg::is_flip_symmetric(&e, FLIP_SYMMETRY_TOL) {
        linalg::flip_symmetric_eigenvalues(&e)?
    } else {
        linalg::symmetric_eigenvalues(&e)?
    };
    Ok(gap_from_eigenvalues(&values))
}

/// Gap from the dense spectrum of `E`, without the symmetry shortcut.
pub fn spectral_gap_dense(chain: &TransitionMatrix) -> Result<GapResult> {
    let residual = chain.detailed_balance_residual();
    if residual > DETAILED_BALANCE_TOL {
        return Err(Error::DetailedBalance { residual });
    }
    Ok(gap_from_eigenvalues(&linalg::symmetric_eigenvalues(&symmetrized(chain))?))
}

/// `E(y,x) = sqrt(π(y)/π(x)) P(y,x)`, averaged with its transpose.
pub fn symmetrized(chain: &TransitionMatrix) -> Matrix {
    let dim = chain.dimension();
    let roots: Vec<f64> = chain.pi.iter().map(|&p| libm::sqrt(p)).collect();
    let p = &chain.matrix;
    Matrix::from_fn(dim, dim, |y, x| {
        let a = roots[y] * p[(y, x)] / roots[x];
        let b = roots[x] * p[(x, y)] / roots[y];
        0.5 * (a + b)
    })
}

/// Gap from a nondecreasing spectrum of a stochastic matrix.
pub fn gap_from_eigenvalues(values: &[f64]) -> GapResult {
    let dim = values.len();
    if dim < 2 {
        return GapResult { delta: 1.0, lambda2_abs: 0.0, reducible: false };
    }
    let ones = values.iter().filter(|&&v| v >= 1.0 - REDUCIBILITY_TOL).count();
    if ones > 1 {
        return GapResult { delta: 0.0, lambda2_abs: 1.0, reducible: true };
    }
    let lambda2_abs = values[dim - 2].abs().max(values[0].abs()).min(1.0);
    GapResult { delta: (1.0 - lambda2_abs).clamp(0.0, 1.0), lambda2_abs, reducible: false }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingTimeBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `(1/δ - 1) ln(1/(2ε)) ≤ t_mix ≤ (1/δ) ln(1/(ε π_min))`; both infinite when `δ = 0`.
pub fn mixing_time_bounds(delta: f64, pi_min: f64, eps: f64) -> Result<MixingTimeBounds> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter("epsilon must lie in (0, 1/2)"));
    }
    if !(pi_min > 0.0 && pi_min <= 1.0) {
        return Err(Error::InvalidParameter("pi_min must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter("gap must lie in [0, 1]"));
    }
    if delta == 0.0 {
        return Ok(MixingTimeBounds { lower: f64::INFINITY, upper: f64::INFINITY });
    }
    Ok(MixingTimeBounds {
        lower: (1.0 / delta - 1.0) * libm::log(1.0 / (2.0 * eps)),
        upper: libm::log(1.0 / (eps * pi_min)) / delta,
    })
}

/// `max_x TV(P^s(x, ·), π)`.
fn worst_tv(m: &Matrix, pi: &[f64]) -> f64 {
    (0..m.nrows())
        .map(|x| 0.5 * pi.iter().enumerate().map(|(z, &p)| (m[(x, z)] - p).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Smallest `s` with `max_x TV(P^s(x,·), π) ≤ ε`.
///
/// The worst-case distance is nonincreasing in `s`, so the search doubles the
/// power until it mixes and then bisects using the stored powers `P^{2^j}`.
pub fn exact_mixing_time(chain: &TransitionMatrix, eps: f64) -> Result<u64> {
    if chain.dimension() > MIXING_MAX_STATES {
        return Err(Error::StateSpaceTooLarge { states: chain.dimension() });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter("epsilon must lie in (0, 1/2)"));
    }
    let pi = chain.pi();
    let mut powers = alloc::vec![chain.matrix.clone()];
    if worst_tv(&powers[0], pi) <= eps {
        return Ok(1);
    }
    loop {
        let steps = 1u64 << powers.len();
        let next = linalg::mul(powers.last().unwrap(), powers.last().unwrap());
        let mixed = worst_tv(&next, pi) <= eps;
        powers.push(next);
        if mixed {
            break;
        }
        if steps >= MIXING_STEP_CAP {
            return Err(Error::MixingCap { cap: MIXING_STEP_CAP });
        }
    }
    let k = powers.len() - 2;
    let mut below = powers[k].clone();
    let mut steps = 1u64 << k;
    for j in (0..k).rev() {
        let candidate = linalg::mul(&below, &powers[j]);
        if worst_tv(&candidate, pi) > eps {
            below = candidate;
            steps += 1 << j;
        }
    }
    let answer = steps + 1;
    if answer > MIXING_STEP_CAP {
        return Err(Error::MixingCap { cap: MIXING_STEP_CAP });
    }
    Ok(answer)
}

/// Entrywise mean of chains sharing one stationary distribution.
pub fn time_averaged_transition(chains: &[TransitionMatrix]) -> Result<TransitionMatrix> {
    let first = chains.first().ok_or(Error::InvalidParameter("need at least one chain"))?;
    let dim = first.dimension();
    for c in chains {
        if c.dimension() != dim {
            return Err(Error::StationaryMismatch);
        }
        if c.pi.iter().zip(&first.pi).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300)) {
            return Err(Error::StationaryMismatch);
        }
    }
    let k = chains.len() as f64;
    let mut mean = Matrix::zeros(dim, dim);
    for c in chains {
        for x in 0..dim {
            for y in 0..dim {
                mean[(y, x)] += c.matrix[(y, x)];
            }
        }
    }
    let mean = Matrix::from_fn(dim, dim, |y, x| mean[(y, x)] / k);
    Ok(TransitionMatrix { matrix: mean, pi: first.pi.clone() })
}

//! Quench Hamiltonians, their eigenbases, and the proposal matrices they induce.
//!
//! Proposal matrices are stored with the current state on the row and the
//! proposed state on the column: `matrix[(y, x)] = Q(x|y)`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::linalg::{self, Matrix};
use crate::models::ClassicalModel;
use crate::{Error, Result};

/// Tolerance for symmetry and row/column sums of proposal matrices.
pub const PROPOSAL_TOL: f64 = 1e-10;

/// Largest degenerate group handled by the pair expansion in
/// [`proposal_long_time`]; bigger groups form their projector.
const PAIR_EXPANSION_MAX_GROUP: usize = 6;

/// Relative eigenvalue spacing below which levels are treated as degenerate.
pub const DEFAULT_DEGENERACY_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuenchKind {
    /// `H_c + h Σ σ^x`.
    Standard,
    /// `-Σ J_ij (σ^z σ^z + σ^y σ^y) + h Σ σ^x`, the large-field effective form.
    EffectiveXY,
}

#[derive(Debug, Clone)]
pub struct QuenchHamiltonian {
    pub n: usize,
    pub field: f64,
    pub kind: QuenchKind,
    pub matrix: Matrix,
}

fn check_spins(n: usize, max_spins: usize) -> Result<()> {
    if n > max_spins {
        return Err(Error::TooManySpins { n, max: max_spins });
    }
    Ok(())
}

fn add_transverse_field(matrix: &mut Matrix, n: usize, h: f64) {
    for y in 0..1usize << n {
        for i in 0..n {
            matrix[(y ^ (1 << i), y)] = h;
        }
    }
}

/// Dense `H = H_c + h Σ_i σ^x_i` in the configuration basis.
pub fn build_hamiltonian(model: &ClassicalModel, h: f64, max_spins: usize) -> Result<QuenchHamiltonian> {
    let n = model.n();
    check_spins(n, max_spins)?;
    if !h.is_finite() {
        return Err(Error::InvalidParameter("transverse field must be finite"));
    }
    let energies = model.energy_table(max_spins)?;
    let dim = energies.len();
    let mut matrix = Matrix::zeros(dim, dim);
    for (x, e) in energies.iter().enumerate() {
        matrix[(x, x)] = *e;
    }
    add_transverse_field(&mut matrix, n, h);
    Ok(QuenchHamiltonian { n, field: h, kind: QuenchKind::Standard, matrix })
}

/// The degenerate-perturbation-theory Hamiltonian governing SK eigenstates at
/// large field: `-Σ_{i<j} J_ij (σ^z_i σ^z_j + σ^y_i σ^y_j) + h Σ_i σ^x_i`.
///
/// Its two terms commute, so eigenvectors do not depend on `h > 0`. Longitudinal
/// fields drop out at this order. In the configuration basis `σ^y_i σ^y_j`
/// maps `|x⟩` to `-x_i x_j |x with i, j flipped⟩`.
pub fn effective_large_h_hamiltonian(model: &ClassicalModel, h: f64, max_spins: usize) -> Result<QuenchHamiltonian> {
    let ClassicalModel::Sk(sk) = model else {
        return Err(Error::NotPairwise);
    };
    let n = sk.n();
    check_spins(n, max_spins)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter("effective Hamiltonian needs a finite field h > 0"));
    }
    let dim = 1usize << n;
    let mut matrix = Matrix::zeros(dim, dim);
    for x in 0..dim {
        matrix[(x, x)] = sk.pair_energy(x);
        for i in 0..n {
            for j in (i + 1)..n {
                let same = ((x >> i) & 1) == ((x >> j) & 1);
                // -J * (σ^y σ^y element): -x_i x_j
                let yy = if same { -1.0 } else { 1.0 };
                matrix[(x ^ (1 << i) ^ (1 << j), x)] = -sk.coupling(i, j) * yy;
            }
        }
    }
    add_transverse_field(&mut matrix, n, h);
    Ok(QuenchHamiltonian { n, field: h, kind: QuenchKind::EffectiveXY, matrix })
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Column `n` is eigenvector `|n⟩`; row `x` is configuration `x`.
    pub vectors: Matrix,
    /// Every eigenvector is even or odd under the global spin flip.
    pub flip_symmetric: bool,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>, vectors: Matrix) -> Self {
        Self { eigenvalues, vectors, flip_symmetric: false }
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// `max |H - V E Vᵀ|`.
    pub fn reconstruction_residual(&self, h: &Matrix) -> f64 {
        let scaled = Matrix::from_fn(self.dimension(), self.dimension(), |i, j| self.vectors[(i, j)] * self.eigenvalues[j]);
        linalg::max_abs_diff(&linalg::mul_transpose(&scaled, &self.vectors), h)
    }

    /// `max |VᵀV - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let gram = linalg::mul(&self.vectors.transpose().to_owned(), &self.vectors);
        linalg::max_abs_diff(&gram, &linalg::identity(self.dimension()))
    }
}

/// Bits of `H` that must agree under a global flip for the sector solver.
const FLIP_SYMMETRY_TOL: f64 = 1e-14;

/// Full eigendecomposition. Hamiltonians that commute with the global spin
/// flip (Ising ring, field-free SK) are solved sector by sector, which costs a
/// quarter of the dense solve.
pub fn diagonalize(h: &QuenchHamiltonian) -> Result<Spectrum> {
    let flip_symmetric = linalg::is_flip_symmetric(&h.matrix, FLIP_SYMMETRY_TOL);
    let (eigenvalues, vectors) = if flip_symmetric {
        linalg::flip_symmetric_eigen(&h.matrix)?
    } else {
        linalg::symmetric_eigen(&h.matrix)?
    };
    if eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }
    Ok(Spectrum { eigenvalues, vectors, flip_symmetric })
}

#[derive(Debug, Clone)]
pub struct ProposalMatrix {
    matrix: Matrix,
    symmetric: bool,
    doubly_stochastic: bool,
}

impl ProposalMatrix {
    /// Wraps a matrix with `matrix[(y, x)] = Q(x|y)`, computing the flags.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidParameter("proposal matrix must be square"));
        }
        let symmetric = linalg::max_asymmetry(&matrix) <= PROPOSAL_TOL;
        let doubly_stochastic = linalg::stochastic_residual(&matrix) <= PROPOSAL_TOL;
        Ok(Self { matrix, symmetric, doubly_stochastic })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// `Q(to | from)`.
    #[inline]
    pub fn prob(&self, to: usize, from: usize) -> f64 {
        self.matrix[(from, to)]
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.doubly_stochastic
    }

    pub fn asymmetry(&self) -> f64 {
        linalg::max_asymmetry(&self.matrix)
    }

    pub fn stochastic_residual(&self) -> f64 {
        linalg::stochastic_residual(&self.matrix)
    }
}

/// `Q(x|y) = |⟨x|e^{-iHt}|y⟩|²` through the eigenexpansion.
pub fn proposal_at_time(spectrum: &Spectrum, t: f64) -> Result<ProposalMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter("time must be finite and nonnegative"));
    }
    let dim = spectrum.dimension();
    let v = &spectrum.vectors;
    let cos_scaled = Matrix::from_fn(dim, dim, |x, n| v[(x, n)] * libm::cos(spectrum.eigenvalues[n] * t));
    let sin_scaled = Matrix::from_fn(dim, dim, |x, n| v[(x, n)] * libm::sin(spectrum.eigenvalues[n] * t));
    let re = linalg::mul_transpose(&cos_scaled, v);
    let im = linalg::mul_transpose(&sin_scaled, v);
    let q = Matrix::from_fn(dim, dim, |y, x| re[(y, x)] * re[(y, x)] + im[(y, x)] * im[(y, x)]);
    ProposalMatrix::from_matrix(q)
}

/// Default clustering tolerance: relative spacing times the spectral range.
pub fn default_degeneracy_tol(spectrum: &Spectrum) -> f64 {
    let range = spectrum.spectral_range();
    DEFAULT_DEGENERACY_REL_TOL * if range > 0.0 { range } else { 1.0 }
}

/// Groups consecutive sorted eigenvalues whose spacing is below `tol`.
pub fn degenerate_groups(eigenvalues: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        if i == eigenvalues.len() || eigenvalues[i] - eigenvalues[i - 1] >= tol {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// Infinite-time average of the quench proposal.
///
/// Eigenvalues closer than `tol` form one group `g` with projector `P_g`, and
/// `Q(x|y) = Σ_g ⟨x|P_g|y⟩²`. For a nondegenerate spectrum this is
/// `Σ_n ⟨x|n⟩²⟨n|y⟩²`.
pub fn proposal_long_time(spectrum: &Spectrum, tol: f64) -> Result<ProposalMatrix> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter("degeneracy tolerance must be nonnegative"));
    }
    let dim = spectrum.dimension();
    let v = &spectrum.vectors;
    let groups = degenerate_groups(&spectrum.eigenvalues, tol);

    // Flip-symmetric spectra give Q(x̄|y) = Q(x|ȳ), so only the first half of
    // the rows is computed.
    let rows = if spectrum.flip_symmetric { dim / 2 } else { dim };

    // Small groups expand Σ_g P_g∘P_g as Z Zᵀ with columns v_n∘v_n and
    // √2 v_n∘v_m (n < m). Larger groups square an explicit projector.
    let mut columns: Vec<(usize, usize)> = Vec::new();
    let mut large = Vec::new();
    for g in &groups {
        if g.len() > PAIR_EXPANSION_MAX_GROUP {
            large.push(g.clone());
            continue;
        }
        for a in g.clone() {
            for b in a..g.end {
                columns.push((a, b));
            }
        }
    }
    let z = Matrix::from_fn(dim, columns.len(), |x, c| {
        let (a, b) = columns[c];
        let w = v[(x, a)] * v[(x, b)];
        if a == b {
            w
        } else {
            core::f64::consts::SQRT_2 * w
        }
    });
    let mut part = Matrix::zeros(rows, dim);
    linalg::mul_transpose_into(part.as_mut(), z.subrows(0, rows), z.as_ref());

    let mut projector = Matrix::zeros(if large.is_empty() { 0 } else { rows }, if large.is_empty() { 0 } else { dim });
    for g in large {
        let block = v.subcols(g.start, g.len());
        linalg::mul_transpose_into(projector.as_mut(), block.subrows(0, rows), block);
        linalg::add_squares(&mut part, &projector);
    }

    let q = if rows == dim {
        part
    } else {
        let mask = dim - 1;
        Matrix::from_fn(dim, dim, |y, x| if y < rows { part[(y, x)] } else { part[(y ^ mask, x ^ mask)] })
    };
    ProposalMatrix::from_matrix(q)
}

/// `IPR(x) = Σ_n ⟨n|x⟩⁴` for every configuration.
pub fn ipr(spectrum: &Spectrum) -> Vec<f64> {
    let v = &spectrum.vectors;
    (0..spectrum.dimension())
        .map(|x| {
            (0..spectrum.dimension())
                .map(|n| {
                    let a = v[(x, n)] * v[(x, n)];
                    a * a
                })
                .sum()
        })
        .collect()
}

/// Mean IPR over configurations with energy in `[lo, hi]`.
pub fn ipr_window_average(ipr: &[f64], energies: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if ipr.len() != energies.len() {
        return Err(Error::InvalidParameter("IPR and energy vectors differ in length"));
    }
    let (sum, count) = ipr
        .iter()
        .zip(energies)
        .filter(|(_, &e)| e >= lo && e <= hi)
        .fold((0.0, 0usize), |(s, c), (&v, _)| (s + v, c + 1));
    if count == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(sum / count as f64)
}

/// Lowest-order small-field proposal: `Q(x|y) = 2h²/(E_x - E_y)²` for single
/// flips, with the remaining mass on the diagonal.
pub fn perturbative_local_proposal(model: &ClassicalModel, h: f64, max_spins: usize) -> Result<ProposalMatrix> {
    let n = model.n();
    let energies = model.energy_table(max_spins)?;
    let dim = energies.len();
    let mut q = Matrix::zeros(dim, dim);
    let mut worst = 0.0f64;
    for y in 0..dim {
        let mut row = 0.0;
        for i in 0..n {
            let x = y ^ (1 << i);
            let de = energies[x] - energies[y];
            let value = 2.0 * h * h / (de * de);
            q[(y, x)] = value;
            row += value;
        }
        worst = worst.max(row);
        q[(y, y)] = 1.0 - row;
    }
    if !(worst <= 1.0) {
        // Row mass scales as h², so it reaches one at h / sqrt(worst).
        let h_threshold = if worst.is_finite() { h.abs() / libm::sqrt(worst) } else { 0.0 };
        return Err(Error::PerturbativeRegimeExceeded { row_mass: worst, h_threshold });
    }
    ProposalMatrix::from_matrix(q)
}

/// `Q(x|y) = 2^{-N}`.
pub fn uniform_proposal(n: usize, max_spins: usize) -> Result<ProposalMatrix> {
    check_spins(n, max_spins)?;
    let dim = 1usize << n;
    ProposalMatrix::from_matrix(Matrix::from_fn(dim, dim, |_, _| 1.0 / dim as f64))
}

/// `Q(x|y) = 1/N` when `x` and `y` differ by one spin.
pub fn local_proposal(n: usize, max_spins: usize) -> Result<ProposalMatrix> {
    check_spins(n, max_spins)?;
    if n == 0 {
        return Err(Error::InvalidParameter("local proposal needs at least one spin"));
    }
    let dim = 1usize << n;
    let mut q = Matrix::zeros(dim, dim);
    for y in 0..dim {
        for i in 0..n {
            q[(y, y ^ (1 << i))] = 1.0 / n as f64;
        }
    }
    ProposalMatrix::from_matrix(q)
}

/// Diagonal of a proposal, used where a full copy is not needed.
pub fn diagonal(q: &ProposalMatrix) -> Vec<f64> {
    (0..q.dimension()).map(|x| q.matrix[(x, x)]).collect()
}

/// Mean over times of finite-time proposals; the long-window oracle for
/// [`proposal_long_time`].
pub fn time_averaged_proposal(spectrum: &Spectrum, times: &[f64]) -> Result<ProposalMatrix> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("need at least one time"));
    }
    let dim = spectrum.dimension();
    let mut acc = vec![0.0; dim * dim];
    for &t in times {
        let q = proposal_at_time(spectrum, t)?;
        for x in 0..dim {
            for y in 0..dim {
                acc[y * dim + x] += q.matrix[(y, x)];
            }
        }
    }
    let k = times.len() as f64;
    ProposalMatrix::from_matrix(Matrix::from_fn(dim, dim, |y, x| acc[y * dim + x] / k))
}

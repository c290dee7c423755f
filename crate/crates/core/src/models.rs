//! Classical spin Hamiltonians and their Boltzmann thermodynamics.
//!
//! Sign conventions:
//! * Ising chain: `H = -Σ_i x_i x_{i+1}` on a periodic ring.
//! * SK: `H = -Σ_{i<j} J_ij x_i x_j + Σ_i h_i x_i`.
//! * p-spin: `H = -Σ_{i1<..<ip} J_{i1..ip} x_i1..x_ip + Σ_i h_i x_i`.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal, Uniform};

use crate::disorder::{DisorderSeed, FIELD_SLOT_OFFSET};
use crate::spin::{spin_f64, SpinConfiguration};
use crate::{Error, Result};

/// Sign `(-1)^{popcount(index & mask)}`, i.e. the product of the spins in `mask`.
#[inline]
fn parity_sign(index: usize, mask: usize) -> f64 {
    if (index & mask).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkModel {
    n: usize,
    /// Row-major `n × n`, symmetric with zero diagonal.
    couplings: Vec<f64>,
    fields: Vec<f64>,
}

impl SkModel {
    pub fn new(n: usize, couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("SK model needs at least one spin"));
        }
        if couplings.len() != n * n || fields.len() != n {
            return Err(Error::InvalidParameter("SK coupling or field dimensions do not match N"));
        }
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter("SK couplings must have zero diagonal"));
            }
            for j in 0..i {
                if couplings[i * n + j] != couplings[j * n + i] {
                    return Err(Error::InvalidParameter("SK couplings must be symmetric"));
                }
            }
        }
        Ok(Self { n, couplings, fields })
    }

    /// Builds the model from the upper triangle `J_ij, i < j`.
    pub fn from_pairs(n: usize, pairs: &[((usize, usize), f64)], fields: Vec<f64>) -> Result<Self> {
        let mut couplings = vec![0.0; n * n];
        for &((i, j), value) in pairs {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidParameter("SK pair index out of range"));
            }
            couplings[i * n + j] = value;
            couplings[j * n + i] = value;
        }
        Self::new(n, couplings, fields)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Energy of the pairwise term alone.
    pub fn pair_energy(&self, index: usize) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                e -= self.coupling(i, j) * parity_sign(index, (1 << i) | (1 << j));
            }
        }
        e
    }

    fn energy_of(&self, index: usize) -> f64 {
        let mut e = self.pair_energy(index);
        for (i, &h) in self.fields.iter().enumerate() {
            e += h * spin_f64(index, i);
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PSpinModel {
    n: usize,
    p: usize,
    /// Strictly increasing index tuples, `p` entries each, flattened.
    tuples: Vec<usize>,
    couplings: Vec<f64>,
    fields: Vec<f64>,
}

impl PSpinModel {
    pub fn new(n: usize, p: usize, tuples: Vec<Vec<usize>>, couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        if p < 1 || p > n {
            return Err(Error::InvalidParameter("p-spin order must satisfy 1 <= p <= N"));
        }
        if tuples.len() != couplings.len() || fields.len() != n {
            return Err(Error::InvalidParameter("p-spin coupling or field dimensions do not match"));
        }
        let mut flat = Vec::with_capacity(tuples.len() * p);
        for t in &tuples {
            if t.len() != p || t.windows(2).any(|w| w[0] >= w[1]) || t.iter().any(|&i| i >= n) {
                return Err(Error::InvalidParameter("p-spin tuples must be strictly increasing and in range"));
            }
            flat.extend_from_slice(t);
        }
        Ok(Self { n, p, tuples: flat, couplings, fields })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[usize]> {
        self.tuples.chunks(self.p)
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    fn energy_of(&self, index: usize) -> f64 {
        let mut e = 0.0;
        for (t, &j) in self.tuples().zip(&self.couplings) {
            let mask = t.iter().fold(0usize, |m, &i| m | (1 << i));
            e -= j * parity_sign(index, mask);
        }
        for (i, &h) in self.fields.iter().enumerate() {
            e += h * spin_f64(index, i);
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalModel {
    IsingChain { n: usize },
    Sk(SkModel),
    PSpin(PSpinModel),
}

impl ClassicalModel {
    /// Periodic ferromagnetic chain. Rings shorter than 3 would double-count a bond.
    pub fn ising_chain(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter("Ising chain needs N >= 3"));
        }
        Ok(Self::IsingChain { n })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::IsingChain { n } => *n,
            Self::Sk(m) => m.n,
            Self::PSpin(m) => m.n,
        }
    }

    pub fn dimension(&self) -> usize {
        1 << self.n()
    }

    pub fn energy(&self, x: &SpinConfiguration) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: x.len() });
        }
        if let Self::IsingChain { n } = self {
            if *n < 3 {
                return Err(Error::InvalidParameter("Ising chain needs N >= 3"));
            }
        }
        Ok(self.energy_of_index(x.index()))
    }

    /// Energy of configuration `index`, which must be below `2^N`.
    pub fn energy_of_index(&self, index: usize) -> f64 {
        match self {
            Self::IsingChain { n } => {
                let n = *n;
                (0..n).map(|i| -parity_sign(index, (1 << i) | (1 << ((i + 1) % n)))).sum()
            }
            Self::Sk(m) => m.energy_of(index),
            Self::PSpin(m) => m.energy_of(index),
        }
    }

    /// Energies of all `2^N` configurations, indexed by configuration.
    pub fn energy_table(&self, max_spins: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if n > max_spins {
            return Err(Error::TooManySpins { n, max: max_spins });
        }
        if let Self::IsingChain { n } = self {
            if *n < 3 {
                return Err(Error::InvalidParameter("Ising chain needs N >= 3"));
            }
        }
        Ok((0..1usize << n).map(|x| self.energy_of_index(x)).collect())
    }
}

/// Samples an SK instance: `J_ij ~ N(0, 1/N)`, `h_i ~ U(-w, w)`.
pub fn sample_sk(n: usize, seed: DisorderSeed, field_halfwidth: f64) -> Result<SkModel> {
    if n < 2 {
        return Err(Error::InvalidParameter("SK sampling needs N >= 2"));
    }
    let std_dev = 1.0 / libm::sqrt(n as f64);
    let normal = Normal::new(0.0, std_dev).map_err(|_| Error::InvalidParameter("coupling std"))?;
    let mut couplings = vec![0.0; n * n];
    let mut slot = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let value = normal.sample(&mut seed.slot_rng(slot));
            couplings[i * n + j] = value;
            couplings[j * n + i] = value;
            slot += 1;
        }
    }
    let fields = sample_fields(n, seed, field_halfwidth)?;
    SkModel::new(n, couplings, fields)
}

/// Samples a p-spin instance with coupling variance `p!/(2 N^{p-1})`.
pub fn sample_pspin(n: usize, p: usize, seed: DisorderSeed, field_halfwidth: f64) -> Result<PSpinModel> {
    if p < 2 {
        return Err(Error::InvalidParameter("p-spin sampling needs p >= 2"));
    }
    if p > n {
        return Err(Error::InvalidParameter("p-spin order exceeds N"));
    }
    let variance = factorial(p) / (2.0 * libm::pow(n as f64, (p - 1) as f64));
    let normal = Normal::new(0.0, libm::sqrt(variance)).map_err(|_| Error::InvalidParameter("coupling std"))?;
    let tuples = increasing_tuples(n, p);
    let couplings = (0..tuples.len() as u64).map(|slot| normal.sample(&mut seed.slot_rng(slot))).collect();
    let fields = sample_fields(n, seed, field_halfwidth)?;
    PSpinModel::new(n, p, tuples, couplings, fields)
}

fn sample_fields(n: usize, seed: DisorderSeed, halfwidth: f64) -> Result<Vec<f64>> {
    if !(halfwidth >= 0.0) {
        return Err(Error::InvalidParameter("field half-width must be nonnegative"));
    }
    if halfwidth == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let uniform = Uniform::new(-halfwidth, halfwidth).map_err(|_| Error::InvalidParameter("field range"))?;
    Ok((0..n as u64).map(|i| uniform.sample(&mut seed.slot_rng(FIELD_SLOT_OFFSET + i))).collect())
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

/// All strictly increasing `p`-tuples over `0..n`, in lexicographic order.
pub fn increasing_tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if p == 0 || p > n {
        return out;
    }
    let mut t: Vec<usize> = (0..p).collect();
    loop {
        out.push(t.clone());
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if t[i] < n - p + i {
                break;
            }
        }
        t[i] += 1;
        for k in (i + 1)..p {
            t[k] = t[k - 1] + 1;
        }
    }
}

/// Boltzmann distribution over a full energy table.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannTable {
    pub beta: f64,
    pub energies: Vec<f64>,
    pub pi: Vec<f64>,
    /// `ln Z`, kept in log form so large `β` never overflows.
    pub log_partition: f64,
    /// `-ln Z / β`; `-∞` at `β = 0`.
    pub free_energy: f64,
    pub pi_min: f64,
}

impl BoltzmannTable {
    pub fn partition_function(&self) -> f64 {
        libm::exp(self.log_partition)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `π(x)/π(y)` evaluated from the energies.
    #[inline]
    pub fn ratio(&self, x: usize, y: usize) -> f64 {
        libm::exp(-self.beta * (self.energies[x] - self.energies[y]))
    }
}

/// Builds `π(x) ∝ e^{-βH(x)}`, exponentiating relative to the lowest energy.
pub fn boltzmann(energies: Vec<f64>, beta: f64) -> Result<BoltzmannTable> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite and nonnegative"));
    }
    if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter("energies must be finite and nonempty"));
    }
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|&e| libm::exp(-beta * (e - e_min))).collect();
    let shifted_z: f64 = weights.iter().sum();
    let pi: Vec<f64> = weights.iter().map(|w| w / shifted_z).collect();
    let pi_min = pi.iter().copied().fold(f64::INFINITY, f64::min);
    if !(pi_min > 0.0) {
        return Err(Error::InvalidParameter("Boltzmann weight underflowed; beta too large for this energy range"));
    }
    let log_partition = -beta * e_min + libm::log(shifted_z);
    let free_energy = if beta > 0.0 { -log_partition / beta } else { f64::NEG_INFINITY };
    Ok(BoltzmannTable { beta, energies, pi, log_partition, free_energy, pi_min })
}

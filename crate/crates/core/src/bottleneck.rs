//! Bottleneck (conductance) upper bounds on the spectral gap.
//!
//! For a cut `S` with `π(S) ≤ 1/2` the normalized equilibrium flow
//! `Λ(S) = E(S, S^c) / (π(S) π(S^c))` bounds the gap from above. When `S = B`
//! sits strictly above `B^c` in energy every `B → B^c` move is downhill, so with
//! the long-time proposal `Λ(B)` factors through the eigenbasis as
//! `Σ_n f(n) g(n) / π̄(B^c)`. Cauchy–Schwarz, IPR and Jensen then give the
//! weaker but more physical bounds collected in [`BoundReport`].

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{TransitionMatrix, DETAILED_BALANCE_TOL};
use crate::models::BoltzmannTable;
use crate::quench::Spectrum;
use crate::{Error, Result};

/// Largest state space searched by [`brute_force_min_cut`].
pub const BRUTE_FORCE_MAX_STATES: usize = 16;

/// Relative tolerance for treating two energies as one level.
const LEVEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    members: Vec<bool>,
    size: usize,
    pi_inside: f64,
    pi_outside: f64,
    /// Energy threshold when the cut is `{x : H(x) ≥ threshold}`.
    threshold: Option<f64>,
}

impl Cut {
    pub fn new(members: Vec<bool>, pi: &[f64]) -> Result<Self> {
        if members.len() != pi.len() {
            return Err(Error::InvalidParameter("cut and distribution differ in size"));
        }
        let size = members.iter().filter(|&&m| m).count();
        if size == 0 || size == members.len() {
            return Err(Error::DegenerateCut);
        }
        let (mut pi_inside, mut pi_outside) = (0.0, 0.0);
        for (&m, &p) in members.iter().zip(pi) {
            if m {
                pi_inside += p;
            } else {
                pi_outside += p;
            }
        }
        Ok(Self { members, size, pi_inside, pi_outside, threshold: None })
    }

    pub fn from_predicate(dim: usize, pi: &[f64], inside: impl Fn(usize) -> bool) -> Result<Self> {
        Self::new((0..dim).map(inside).collect(), pi)
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        self.members[x]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn complement_size(&self) -> usize {
        self.members.len() - self.size
    }

    pub fn pi_inside(&self) -> f64 {
        self.pi_inside
    }

    pub fn pi_outside(&self) -> f64 {
        self.pi_outside
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn complement(&self, pi: &[f64]) -> Result<Self> {
        Self::new(self.members.iter().map(|m| !m).collect(), pi)
    }
}

/// `E(S, S^c) = Σ_{x∈S, y∉S} π(x) P(x, y)`.
pub fn equilibrium_flow(chain: &TransitionMatrix, cut: &Cut) -> f64 {
    let p = chain.matrix();
    let pi = chain.pi();
    let mut flow = 0.0;
    for x in (0..pi.len()).filter(|&x| cut.contains(x)) {
        for y in (0..pi.len()).filter(|&y| !cut.contains(y)) {
            flow += pi[x] * p[(x, y)];
        }
    }
    flow
}

fn certify(chain: &TransitionMatrix) -> Result<()> {
    let residual = chain.detailed_balance_residual();
    if residual > DETAILED_BALANCE_TOL {
        return Err(Error::DetailedBalance { residual });
    }
    Ok(())
}

/// `Λ(S) = E(S, S^c) / (π(S) π(S^c))`. Refuses chains that are not reversible.
pub fn conductance(chain: &TransitionMatrix, cut: &Cut) -> Result<f64> {
    certify(chain)?;
    Ok(conductance_unchecked(chain, cut))
}

fn conductance_unchecked(chain: &TransitionMatrix, cut: &Cut) -> f64 {
    equilibrium_flow(chain, cut) / (cut.pi_inside * cut.pi_outside)
}

/// Superlevel cuts `B = {x : H(x) ≥ E*}` over the distinct energies `E*`, from
/// the top level down, while `π(B) ≤ 1/2`. Equal energies never straddle a cut.
pub fn energy_threshold_cuts(energies: &[f64], pi: &[f64]) -> Vec<Cut> {
    let dim = energies.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| energies[b].total_cmp(&energies[a]));
    let mut cuts = Vec::new();
    let mut members = vec![false; dim];
    let mut pi_inside = 0.0;
    let mut i = 0;
    while i < dim {
        let level = energies[order[i]];
        let tol = LEVEL_TOL * level.abs().max(1.0);
        while i < dim && (energies[order[i]] - level).abs() <= tol {
            members[order[i]] = true;
            pi_inside += pi[order[i]];
            i += 1;
        }
        if i == dim || pi_inside > 0.5 {
            break;
        }
        if let Ok(mut cut) = Cut::new(members.clone(), pi) {
            cut.threshold = Some(level);
            cuts.push(cut);
        }
    }
    cuts
}

/// Smallest conductance among [`energy_threshold_cuts`].
pub fn min_conductance_over_thresholds(chain: &TransitionMatrix, energies: &[f64]) -> Result<(Cut, f64)> {
    certify(chain)?;
    energy_threshold_cuts(energies, chain.pi())
        .into_iter()
        .map(|cut| {
            let value = conductance_unchecked(chain, &cut);
            (cut, value)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NoAdmissibleCut)
}

/// Exact `Λ_min` over every subset with `π(S) ≤ 1/2`.
pub fn brute_force_min_cut(chain: &TransitionMatrix) -> Result<f64> {
    certify(chain)?;
    let dim = chain.dimension();
    if dim > BRUTE_FORCE_MAX_STATES {
        return Err(Error::StateSpaceTooLarge { states: dim });
    }
    let p = chain.matrix();
    let pi = chain.pi();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << dim) - 1 {
        let inside = |x: usize| (mask >> x) & 1 == 1;
        let pi_s: f64 = (0..dim).filter(|&x| inside(x)).map(|x| pi[x]).sum();
        if pi_s > 0.5 {
            continue;
        }
        let pi_c: f64 = (0..dim).filter(|&x| !inside(x)).map(|x| pi[x]).sum();
        let mut flow = 0.0;
        for x in (0..dim).filter(|&x| inside(x)) {
            for y in (0..dim).filter(|&y| !inside(y)) {
                flow += pi[x] * p[(x, y)];
            }
        }
        best = best.min(flow / (pi_s * pi_c));
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoAdmissibleCut)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgDistributions {
    /// `f(n) = Σ_{x∈B} π_B(x) ⟨x|n⟩²`.
    pub f: Vec<f64>,
    /// `g(n) = |B^c|^{-1} Σ_{y∈B^c} ⟨n|y⟩²`.
    pub g: Vec<f64>,
    /// `π̄(B^c) = π(B^c) / |B^c|`.
    pub pi_bar_complement: f64,
}

fn check_energy_ordered(cut: &Cut, energies: &[f64]) -> Result<()> {
    let lowest_inside = (0..energies.len()).filter(|&x| cut.contains(x)).map(|x| energies[x]).fold(f64::INFINITY, f64::min);
    let highest_outside = (0..energies.len()).filter(|&x| !cut.contains(x)).map(|x| energies[x]).fold(f64::NEG_INFINITY, f64::max);
    if lowest_inside > highest_outside {
        Ok(())
    } else {
        Err(Error::CutNotEnergyOrdered)
    }
}

pub fn fg_distributions(spectrum: &Spectrum, stationary: &BoltzmannTable, cut: &Cut) -> Result<FgDistributions> {
    let dim = spectrum.dimension();
    if stationary.len() != dim || cut.members.len() != dim {
        return Err(Error::InvalidParameter("spectrum, distribution and cut differ in size"));
    }
    check_energy_ordered(cut, &stationary.energies)?;
    let v = &spectrum.vectors;
    let outside = cut.complement_size() as f64;
    let mut f = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for x in 0..dim {
        if cut.contains(x) {
            let weight = stationary.pi[x] / cut.pi_inside;
            for n in 0..dim {
                f[n] += weight * v[(x, n)] * v[(x, n)];
            }
        } else {
            for n in 0..dim {
                g[n] += v[(x, n)] * v[(x, n)] / outside;
            }
        }
    }
    Ok(FgDistributions { f, g, pi_bar_complement: cut.pi_outside / outside })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub cut_threshold: Option<f64>,
    /// Exact `Λ(B)` of the chain.
    pub lambda_b: f64,
    /// `Σ_n f(n) g(n) / π̄(B^c)`.
    pub fg_value: f64,
    /// `sqrt(Σ f² Σ g²) / π̄(B^c)`.
    pub cs_bound: f64,
    pub ipr_bound: f64,
    /// `e^{-β(F_β - F_c)}` with `F_c = E_c - T(S_f + S_g)/2`.
    pub free_energy_bound: f64,
    pub fg: FgDistributions,
    /// Rényi-2 entropies in nats.
    pub entropy_f: f64,
    pub entropy_g: f64,
    /// Mean classical energy over `B^c`.
    pub energy_complement: f64,
    /// `F_c`; `-∞` at `β = 0`.
    pub transition_free_energy: f64,
    /// `|Λ(B) - fg_value| / Λ(B)`; zero only when the proposal is the
    /// nondegenerate long-time form.
    pub fg_discrepancy: f64,
}

fn renyi2(p: &[f64]) -> f64 {
    -libm::log(p.iter().map(|x| x * x).sum::<f64>())
}

/// Evaluates every bound in the ladder for one energy-ordered cut.
pub fn bound_ladder(
    spectrum: &Spectrum,
    stationary: &BoltzmannTable,
    cut: &Cut,
    ipr: &[f64],
    chain: &TransitionMatrix,
) -> Result<BoundReport> {
    if ipr.len() != spectrum.dimension() {
        return Err(Error::InvalidParameter("IPR vector size does not match spectrum"));
    }
    let fg = fg_distributions(spectrum, stationary, cut)?;
    let lambda_b = conductance(chain, cut)?;
    let pi_bar = fg.pi_bar_complement;

    let overlap: f64 = fg.f.iter().zip(&fg.g).map(|(a, b)| a * b).sum();
    let fg_value = overlap / pi_bar;
    let entropy_f = renyi2(&fg.f);
    let entropy_g = renyi2(&fg.g);
    let cs_bound = libm::exp(-0.5 * (entropy_f + entropy_g)) / pi_bar;

    let outside = cut.complement_size() as f64;
    let (mut ipr_inside, mut ipr_outside, mut energy_complement) = (0.0, 0.0, 0.0);
    for (x, &value) in ipr.iter().enumerate() {
        if cut.contains(x) {
            ipr_inside += stationary.pi[x] / cut.pi_inside * value;
        } else {
            ipr_outside += value / outside;
            energy_complement += stationary.energies[x] / outside;
        }
    }
    let ipr_bound = libm::sqrt(ipr_inside * ipr_outside) / pi_bar;

    // -βF_β = ln Z, so the exponent stays finite at β = 0.
    let beta = stationary.beta;
    let free_energy_bound =
        libm::exp(stationary.log_partition + beta * energy_complement - 0.5 * (entropy_f + entropy_g));
    let transition_free_energy =
        if beta > 0.0 { energy_complement - 0.5 * (entropy_f + entropy_g) / beta } else { f64::NEG_INFINITY };

    let fg_discrepancy = if lambda_b > 0.0 { (lambda_b - fg_value).abs() / lambda_b } else { fg_value.abs() };
    Ok(BoundReport {
        cut_threshold: cut.threshold,
        lambda_b,
        fg_value,
        cs_bound,
        ipr_bound,
        free_energy_bound,
        fg,
        entropy_f,
        entropy_g,
        energy_complement,
        transition_free_energy,
        fg_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{metropolis_chain, spectral_gap};
    use crate::disorder::DisorderSeed;
    use crate::linalg::{self, Matrix};
    use crate::models::{boltzmann, sample_sk, ClassicalModel};
    use crate::quench::{self, build_hamiltonian, diagonalize, proposal_long_time, uniform_proposal, ProposalMatrix};
    use approx::assert_relative_eq;

    const MAX: usize = crate::DEFAULT_MAX_SPINS;

    fn sk_chain(n: usize, seed: u64, h: f64, beta: f64) -> (Spectrum, BoltzmannTable, TransitionMatrix) {
        let m = ClassicalModel::Sk(sample_sk(n, DisorderSeed::new(seed, 0), 0.25).unwrap());
        let table = boltzmann(m.energy_table(MAX).unwrap(), beta).unwrap();
        let s = diagonalize(&build_hamiltonian(&m, h, MAX).unwrap()).unwrap();
        let q = proposal_long_time(&s, quench::default_degeneracy_tol(&s)).unwrap();
        let p = metropolis_chain(&q, &table).unwrap();
        (s, table, p)
    }

    #[test]
    fn block_diagonal_chain_has_no_flow() {
        let pi = vec![0.25; 4];
        let p = TransitionMatrix::from_parts(
            faer::mat![[0.5, 0.5, 0.0, 0.0], [0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5], [0.0, 0.0, 0.5, 0.5]],
            pi.clone(),
        )
        .unwrap();
        let cut = Cut::new(vec![true, true, false, false], &pi).unwrap();
        assert_eq!(equilibrium_flow(&p, &cut), 0.0);
        assert_eq!(conductance(&p, &cut).unwrap(), 0.0);
        assert_eq!(spectral_gap(&p).unwrap().delta, 0.0);
        assert_eq!(brute_force_min_cut(&p).unwrap(), 0.0);
    }

    #[test]
    fn uniform_rank_one_flow() {
        let table = boltzmann(vec![0.0; 8], 0.0).unwrap();
        let p = metropolis_chain(&uniform_proposal(3, MAX).unwrap(), &table).unwrap();
        for m in 1..8usize {
            let cut = Cut::from_predicate(8, &table.pi, |x| x < m).unwrap();
            let frac = m as f64 / 8.0;
            assert_relative_eq!(equilibrium_flow(&p, &cut), frac * (1.0 - frac), epsilon = 1e-15);
            assert_relative_eq!(conductance(&p, &cut).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert_relative_eq!(brute_force_min_cut(&p).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn flow_matches_double_sum_and_is_symmetric() {
        let (_, table, p) = sk_chain(4, 3, 0.7, 2.0);
        let cut = Cut::from_predicate(16, &table.pi, |x| x % 3 == 0).unwrap();
        let mut direct = 0.0;
        for x in 0..16 {
            for y in 0..16 {
                if x % 3 == 0 && y % 3 != 0 {
                    direct += table.pi[x] * p.matrix()[(x, y)];
                }
            }
        }
        assert_relative_eq!(equilibrium_flow(&p, &cut), direct, max_relative = 1e-14);
        let back = equilibrium_flow(&p, &cut.complement(&table.pi).unwrap());
        assert!((back - direct).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_cuts_rejected() {
        assert_eq!(Cut::new(vec![false; 4], &[0.25; 4]), Err(Error::DegenerateCut));
        assert_eq!(Cut::new(vec![true; 4], &[0.25; 4]), Err(Error::DegenerateCut));
    }

    #[test]
    fn ising_threshold_cuts() {
        let energies = ClassicalModel::ising_chain(4).unwrap().energy_table(MAX).unwrap();
        let table = boltzmann(energies.clone(), 1.0).unwrap();
        let cuts = energy_threshold_cuts(&energies, &table.pi);
        assert_eq!(cuts.len(), 2);
        assert_eq!(cuts[0].threshold(), Some(4.0));
        assert_eq!(cuts[0].size(), 2);
        assert_eq!(cuts[1].threshold(), Some(0.0));
        assert_eq!(cuts[1].size(), 14);

        let hot = boltzmann(energies.clone(), 0.0).unwrap();
        assert_eq!(energy_threshold_cuts(&energies, &hot.pi).len(), 1);
    }

    #[test]
    fn threshold_cut_edge_cases() {
        let two = boltzmann(vec![0.0, 1.0], 1.0).unwrap();
        assert_eq!(energy_threshold_cuts(&two.energies, &two.pi).len(), 1);
        let flat = boltzmann(vec![0.5; 8], 1.0).unwrap();
        assert!(energy_threshold_cuts(&flat.energies, &flat.pi).is_empty());
    }

    #[test]
    fn two_state_brute_force() {
        let pi = vec![0.4, 0.6];
        let p = TransitionMatrix::from_parts(faer::mat![[0.7, 0.3], [0.2, 0.8]], pi).unwrap();
        // Only S = {0} has π(S) ≤ 1/2.
        assert_relative_eq!(brute_force_min_cut(&p).unwrap(), 0.4 * 0.3 / (0.4 * 0.6), epsilon = 1e-14);
    }

    #[test]
    fn brute_force_bounds_gap_and_threshold_minimum() {
        for seed in 0..5 {
            let (_, table, p) = sk_chain(3, seed, 0.5, 3.0);
            let delta = spectral_gap(&p).unwrap().delta;
            let exact = brute_force_min_cut(&p).unwrap();
            assert!(exact >= delta - 1e-10);
            if let Ok((_, threshold_min)) = min_conductance_over_thresholds(&p, &table.energies) {
                assert!(threshold_min >= exact - 1e-12);
            }
        }
    }

    #[test]
    fn classical_eigenbasis_gives_disjoint_fg() {
        let (s, table, p) = sk_chain(4, 5, 0.0, 2.0);
        let cut = energy_threshold_cuts(&table.energies, &table.pi).pop().unwrap();
        let ipr = quench::ipr(&s);
        let report = bound_ladder(&s, &table, &cut, &ipr, &p).unwrap();
        assert_eq!(report.fg_value, 0.0);
        assert!(report.cs_bound >= 0.0);
        assert_relative_eq!(report.ipr_bound, 1.0 / report.fg.pi_bar_complement, max_relative = 1e-12);
    }

    #[test]
    fn delocalized_eigenbasis_gives_flat_fg() {
        let dim = 8;
        let v = Matrix::from_fn(dim, dim, |x, n| {
            let sign = if (x & n).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sign / libm::sqrt(dim as f64)
        });
        let spectrum = Spectrum::new((0..dim).map(|k| k as f64).collect(), v);
        let table = boltzmann((0..dim).map(|k| k as f64).collect(), 1.0).unwrap();
        let cut = energy_threshold_cuts(&table.energies, &table.pi).pop().unwrap();
        let fg = fg_distributions(&spectrum, &table, &cut).unwrap();
        for n in 0..dim {
            assert_relative_eq!(fg.f[n], 1.0 / 8.0, epsilon = 1e-14);
            assert_relative_eq!(fg.g[n], 1.0 / 8.0, epsilon = 1e-14);
        }
        let ipr = quench::ipr(&spectrum);
        let q = ProposalMatrix::from_matrix(Matrix::from_fn(dim, dim, |_, _| 1.0 / dim as f64)).unwrap();
        let p = metropolis_chain(&q, &table).unwrap();
        let report = bound_ladder(&spectrum, &table, &cut, &ipr, &p).unwrap();
        assert_relative_eq!(report.ipr_bound * fg.pi_bar_complement, 1.0 / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn unordered_cut_rejected() {
        let (s, table, _) = sk_chain(3, 1, 0.5, 1.0);
        let lowest = (0..8).min_by(|&a, &b| table.energies[a].total_cmp(&table.energies[b])).unwrap();
        let cut = Cut::from_predicate(8, &table.pi, |x| x == lowest).unwrap();
        assert_eq!(fg_distributions(&s, &table, &cut), Err(Error::CutNotEnergyOrdered));
    }

    #[test]
    fn ladder_ordering_and_fg_equality() {
        for seed in 0..4 {
            let (s, table, p) = sk_chain(6, seed, 0.4, 5.0);
            let delta = spectral_gap(&p).unwrap().delta;
            let ipr = quench::ipr(&s);
            for cut in energy_threshold_cuts(&table.energies, &table.pi) {
                let r = bound_ladder(&s, &table, &cut, &ipr, &p).unwrap();
                assert!(delta <= r.lambda_b + 1e-10);
                assert!(r.fg_value <= r.cs_bound + 1e-10);
                assert!(r.cs_bound <= r.ipr_bound + 1e-10);
                assert!(r.cs_bound <= r.free_energy_bound * (1.0 + 1e-10));
                assert!(r.fg_discrepancy <= 1e-6, "discrepancy {}", r.fg_discrepancy);
                assert_relative_eq!(r.fg.f.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                assert_relative_eq!(r.fg.g.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn conductance_refuses_irreversible_chain() {
        let pi = vec![1.0 / 3.0; 3];
        let p = TransitionMatrix::from_parts(
            faer::mat![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            pi.clone(),
        )
        .unwrap();
        let cut = Cut::new(vec![true, false, false], &pi).unwrap();
        assert!(matches!(conductance(&p, &cut), Err(Error::DetailedBalance { .. })));
        let _ = linalg::identity(1);
    }
}

//! Cross-checks of the Bogoliubov overlap formula against direct evolution of
//! the full spin chain.

use qmcmc_core::ising_analytic::{bound_finite_n, overlap_sum, TimeMode};
use qmcmc_core::models::{boltzmann, ClassicalModel};
use qmcmc_core::quench::{build_hamiltonian, diagonalize, proposal_at_time};
use qmcmc_core::chain::{metropolis_chain, spectral_gap};

fn domain_walls(x: usize, n: usize) -> u32 {
    let rotated = ((x >> 1) | ((x & 1) << (n - 1))) & ((1 << n) - 1);
    (x ^ rotated).count_ones()
}

fn apply_h(n: usize, h: f64, energies: &[f64], re: &[f64], im: &[f64], out_re: &mut [f64], out_im: &mut [f64]) {
    for x in 0..re.len() {
        let (mut a, mut b) = (energies[x] * re[x], energies[x] * im[x]);
        for i in 0..n {
            a += h * re[x ^ (1 << i)];
            b += h * im[x ^ (1 << i)];
        }
        out_re[x] = a;
        out_im[x] = b;
    }
}

/// `e^{-iHt}|start⟩` by Taylor steps with `‖H‖ dt ≤ 1/2`.
fn evolve(n: usize, h: f64, t: f64, start: usize) -> (Vec<f64>, Vec<f64>) {
    let energies: Vec<f64> = (0..1usize << n)
        .map(|x| -((n as f64) - 2.0 * domain_walls(x, n) as f64))
        .collect();
    let dim = energies.len();
    let norm = n as f64 * (1.0 + h.abs());
    let steps = ((2.0 * norm * t).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let (mut re, mut im) = (vec![0.0; dim], vec![0.0; dim]);
    re[start] = 1.0;
    let (mut tr, mut ti) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut hr, mut hi) = (vec![0.0; dim], vec![0.0; dim]);
    for _ in 0..steps {
        tr.copy_from_slice(&re);
        ti.copy_from_slice(&im);
        for m in 1..=30 {
            apply_h(n, h, &energies, &tr, &ti, &mut hr, &mut hi);
            // term ← (-i dt / m) H term
            let c = dt / m as f64;
            for x in 0..dim {
                tr[x] = c * hi[x];
                ti[x] = -c * hr[x];
                re[x] += tr[x];
                im[x] += ti[x];
            }
        }
    }
    (re, im)
}

fn exact_overlap(n: usize, h: f64, t: f64) -> f64 {
    let ground = [0usize, (1 << n) - 1];
    ground
        .iter()
        .map(|&y| {
            let (re, im) = evolve(n, h, t, y);
            (0..1usize << n)
                .filter(|&x| domain_walls(x, n) == 2)
                .map(|x| re[x] * re[x] + im[x] * im[x])
                .sum::<f64>()
        })
        .sum()
}

#[test]
fn overlap_matches_state_evolution() {
    for n in [4usize, 6, 8, 10, 12] {
        for &(h, t) in &[(0.5, 1.0), (0.3, 2.7), (1.0, 0.8), (1.7, 1.9)] {
            let exact = exact_overlap(n, h, t);
            let formula = overlap_sum(n, h, TimeMode::Finite(t)).unwrap();
            let rel = (formula - exact).abs() / exact;
            assert!(rel <= 1e-8, "N={n} h={h} t={t}: {formula} vs {exact}");
        }
    }
}

#[test]
fn overlap_matches_dense_proposal() {
    let model = ClassicalModel::ising_chain(8).unwrap();
    let s = diagonalize(&build_hamiltonian(&model, 0.5, 14).unwrap()).unwrap();
    let q = proposal_at_time(&s, 1.0).unwrap();
    let mut exact = 0.0;
    for x in (0..256).filter(|&x| domain_walls(x, 8) == 2) {
        for y in [0usize, 255] {
            exact += q.prob(y, x);
        }
    }
    let formula = overlap_sum(8, 0.5, TimeMode::Finite(1.0)).unwrap();
    assert!((formula - exact).abs() / exact <= 1e-8, "{formula} vs {exact}");
}

#[test]
fn finite_n_bound_dominates_exact_gap() {
    let n = 8;
    let model = ClassicalModel::ising_chain(n).unwrap();
    let table = boltzmann(model.energy_table(14).unwrap(), 5.0).unwrap();
    for h in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let s = diagonalize(&build_hamiltonian(&model, h, 14).unwrap()).unwrap();
        for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let p = metropolis_chain(&proposal_at_time(&s, t).unwrap(), &table).unwrap();
            let delta = spectral_gap(&p).unwrap().delta;
            let bound = bound_finite_n(n, h, TimeMode::Finite(t), 5.0).unwrap().total;
            assert!(bound - delta >= -1e-10, "h={h} t={t}: bound {bound} < gap {delta}");
        }
    }
}

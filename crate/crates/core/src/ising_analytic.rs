//! Closed-form bottleneck bound for the periodic transverse-field Ising chain.
//!
//! A quench from a classical ground state only couples the Bogoliubov vacuum of
//! each `(k, -k)` pair to the doubly occupied pair state, so the transition mass
//! into the first excited manifold factorizes over positive momenta. Both the
//! product and the sum run over `K_p^+`; with that reading `(1/N) Σ_{K^+}`
//! becomes `∫_0^π dk/2π` in the continuum, matching the `2γ/(N-1)` prefactor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

/// Default number of midpoint panels on `[0, π]` for [`gamma_lambda`].
pub const DEFAULT_PANELS: usize = 1 << 14;

/// Minimum panel count accepted by [`gamma_lambda_with`].
pub const MIN_PANELS: usize = 1000;

/// Quadrature error estimate above which results are flagged.
pub const QUADRATURE_FLAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    Finite(f64),
    /// Every `sin²(2tε_k)` replaced by its time average `1/2`.
    LongTime,
}

impl TimeMode {
    pub fn time(&self) -> Option<f64> {
        match *self {
            TimeMode::Finite(t) => Some(t),
            TimeMode::LongTime => None,
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            TimeMode::Finite(t) if !(t.is_finite() && t >= 0.0) => {
                Err(Error::InvalidParameter("evolution time must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }

    fn weight(&self, eps: f64) -> f64 {
        match *self {
            TimeMode::Finite(t) => {
                let s = libm::sin(2.0 * t * eps);
                s * s
            }
            TimeMode::LongTime => 0.5,
        }
    }
}

/// `ε_k = sqrt((h - cos k)² + sin² k)`.
pub fn dispersion(h: f64, k: f64) -> f64 {
    libm::hypot(h - libm::cos(k), libm::sin(k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityGrid {
    pub n: usize,
    /// Antiperiodic momenta `±(2π/N)(l - 1/2)`, `l = 1..N/2`.
    pub k0: Vec<f64>,
    /// Periodic momenta `±(2π/N) l`, `l = 1..N/2-1`; `0` and `π` are kept apart.
    pub k1: Vec<f64>,
}

impl ParityGrid {
    pub const SPECIAL_MODES: [f64; 2] = [0.0, PI];

    /// Positive half of the sector `p` grid.
    pub fn positive(&self, p: usize) -> impl Iterator<Item = f64> + '_ {
        let ks = if p == 0 { &self.k0 } else { &self.k1 };
        ks.iter().copied().filter(|&k| k > 0.0)
    }
}

pub fn momentum_grids(n: usize) -> Result<ParityGrid> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::InvalidParameter("Ising chain momentum grids need even N >= 4"));
    }
    let step = 2.0 * PI / n as f64;
    let mut k0 = Vec::with_capacity(n);
    for l in 1..=n / 2 {
        let k = step * (l as f64 - 0.5);
        k0.extend([k, -k]);
    }
    let mut k1 = Vec::with_capacity(n - 2);
    for l in 1..n / 2 {
        let k = step * l as f64;
        k1.extend([k, -k]);
    }
    Ok(ParityGrid { n, k0, k1 })
}

/// Probability that the `(k, -k)` pair leaves its classical vacuum.
fn pair_excitation(h: f64, k: f64, mode: TimeMode) -> f64 {
    let eps = dispersion(h, k);
    if eps == 0.0 {
        return 0.0;
    }
    let s = libm::sin(k);
    // ε² ≥ h² sin² k, so this never exceeds the weight.
    (h * h * s * s / (eps * eps)).min(1.0) * mode.weight(eps)
}

/// `ln Σ_k a_k Π_{j≠k} (1 - a_j)` with the leave-one-out product formed
/// directly, so `a_k = 1` needs no special denominator.
fn sector_log_overlap(excitations: &[f64]) -> f64 {
    let logs: Vec<f64> = excitations.iter().map(|&a| libm::log1p(-a)).collect();
    let finite: f64 = logs.iter().filter(|l| l.is_finite()).sum();
    let saturated = logs.iter().filter(|l| !l.is_finite()).count();
    let terms = excitations.iter().zip(&logs).filter_map(|(&a, &l)| {
        if a == 0.0 {
            return None;
        }
        match (saturated, l.is_finite()) {
            (0, _) => Some(libm::log(a) + finite - l),
            (1, false) => Some(libm::log(a) + finite),
            _ => None,
        }
    });
    log_sum_exp(terms)
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(terms.iter().map(|t| libm::exp(t - max)).sum::<f64>())
}

/// `ln Σ_{x∈S_1, y∈S_0} Q(y|x)`; `-∞` when the overlap vanishes.
pub fn overlap_sum_log(n: usize, h: f64, mode: TimeMode) -> Result<f64> {
    mode.check()?;
    if !h.is_finite() {
        return Err(Error::InvalidParameter("transverse field must be finite"));
    }
    let grid = momentum_grids(n)?;
    let sectors = (0..2).map(|p| {
        let a: Vec<f64> = grid.positive(p).map(|k| pair_excitation(h, k, mode)).collect();
        sector_log_overlap(&a)
    });
    Ok(log_sum_exp(sectors))
}

pub fn overlap_sum(n: usize, h: f64, mode: TimeMode) -> Result<f64> {
    overlap_sum_log(n, h, mode).map(libm::exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    FiniteN,
    /// Continuum `γ, λ` in place of the momentum sums.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingBoundResult {
    pub n: usize,
    pub h: f64,
    pub beta: f64,
    pub mode: TimeMode,
    pub kind: BoundKind,
    /// Natural log of the first term; `-∞` when it vanishes.
    pub first_term_log: f64,
    pub first_term: f64,
    pub second_term: f64,
    pub total: f64,
}

impl IsingBoundResult {
    /// `finite_t`, `long_time` or `asymptotic`.
    pub fn mode_tag(&self) -> &'static str {
        match (self.kind, self.mode) {
            (BoundKind::Asymptotic, _) => "asymptotic",
            (_, TimeMode::Finite(_)) => "finite_t",
            (_, TimeMode::LongTime) => "long_time",
        }
    }
}

/// `e^{-4β} / (2 - N(N-1) e^{-4β})`.
pub fn thermal_term(n: usize, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter("beta must be finite and nonnegative"));
    }
    let x = libm::exp(-4.0 * beta);
    let value = (n * (n - 1)) as f64 * x;
    if value >= 2.0 {
        return Err(Error::TemperatureTooHigh { value });
    }
    Ok(x / (2.0 - value))
}

fn assemble(n: usize, h: f64, beta: f64, mode: TimeMode, kind: BoundKind, first_term_log: f64) -> Result<IsingBoundResult> {
    let second_term = thermal_term(n, beta)?;
    let first_term = libm::exp(first_term_log);
    Ok(IsingBoundResult { n, h, beta, mode, kind, first_term_log, first_term, second_term, total: first_term + second_term })
}

pub fn bound_finite_n(n: usize, h: f64, mode: TimeMode, beta: f64) -> Result<IsingBoundResult> {
    let log_overlap = overlap_sum_log(n, h, mode)?;
    let first = log_overlap - libm::log((n * (n - 1)) as f64);
    assemble(n, h, beta, mode, BoundKind::FiniteN, first)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLambda {
    pub gamma: f64,
    pub lambda: f64,
    /// Richardson estimate of the larger of the two quadrature errors.
    pub error_estimate: f64,
}

impl GammaLambda {
    pub fn flagged(&self) -> bool {
        self.error_estimate > QUADRATURE_FLAG_TOL
    }
}

fn midpoint(panels: usize, f: impl Fn(f64) -> (f64, f64)) -> (f64, f64) {
    let dk = PI / panels as f64;
    let (mut g, mut l) = (0.0, 0.0);
    for i in 0..panels {
        let (a, b) = f((i as f64 + 0.5) * dk);
        g += a;
        l += b;
    }
    (g * dk / (2.0 * PI), l * dk / (2.0 * PI))
}

/// Continuum `γ(h,t)` and `λ(h,t)`.
pub fn gamma_lambda(h: f64, mode: TimeMode) -> Result<GammaLambda> {
    gamma_lambda_with(h, mode, DEFAULT_PANELS)
}

/// Composite midpoint rule at `panels` and `2·panels`, Richardson-combined.
/// The midpoint nodes never touch `k = 0`, where the `h = 1` integrand is 0/0.
pub fn gamma_lambda_with(h: f64, mode: TimeMode, panels: usize) -> Result<GammaLambda> {
    mode.check()?;
    if panels < MIN_PANELS {
        return Err(Error::InvalidParameter("quadrature needs at least 1000 panels"));
    }
    if !h.is_finite() {
        return Err(Error::InvalidParameter("transverse field must be finite"));
    }
    let integrand = |k: f64| {
        let a = pair_excitation(h, k, mode);
        let gamma = if a < 1.0 { a / (1.0 - a) } else { f64::INFINITY };
        (gamma, -libm::log1p(-a))
    };
    let coarse = midpoint(panels, integrand);
    let fine = midpoint(2 * panels, integrand);
    let gamma = (4.0 * fine.0 - coarse.0) / 3.0;
    let lambda = (4.0 * fine.1 - coarse.1) / 3.0;
    let error_estimate = ((fine.0 - coarse.0).abs()).max((fine.1 - coarse.1).abs()) / 3.0;
    Ok(GammaLambda { gamma: gamma.max(0.0), lambda: lambda.max(0.0), error_estimate })
}

/// `δ ≤ (2γ/(N-1)) e^{-Nλ} + e^{-4β}/(2 - N(N-1)e^{-4β})`.
pub fn bound_asymptotic(n: usize, h: f64, mode: TimeMode, beta: f64) -> Result<IsingBoundResult> {
    momentum_grids(n)?;
    let gl = gamma_lambda(h, mode)?;
    let first = if gl.gamma > 0.0 {
        libm::log(2.0 * gl.gamma / (n - 1) as f64) - n as f64 * gl.lambda
    } else {
        f64::NEG_INFINITY
    };
    assemble(n, h, beta, mode, BoundKind::Asymptotic, first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(0.0, 1.3), 1.0);
        assert_relative_eq!(dispersion(1.0, PI / 2.0), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(dispersion(0.3, 0.0), 0.7, epsilon = 1e-15);
        assert_eq!(dispersion(1.0, 0.0), 0.0);
    }

    #[test]
    fn grids() {
        let g = momentum_grids(4).unwrap();
        let mut k0 = g.k0.clone();
        k0.sort_by(f64::total_cmp);
        let expected = [-3.0 * PI / 4.0, -PI / 4.0, PI / 4.0, 3.0 * PI / 4.0];
        for (a, b) in k0.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(g.k1.len(), 2);
        assert_relative_eq!(g.k1[0], PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(g.k1[1], -PI / 2.0, epsilon = 1e-15);
        let g6 = momentum_grids(6).unwrap();
        assert_eq!((g6.k0.len(), g6.k1.len()), (6, 4));
        assert!(momentum_grids(5).is_err());
        assert!(momentum_grids(2).is_err());
    }

    proptest! {
        #[test]
        fn grid_invariants(half in 2usize..60) {
            let n = 2 * half;
            let g = momentum_grids(n).unwrap();
            prop_assert_eq!(g.k0.len(), n);
            prop_assert_eq!(g.k1.len(), n - 2);
            for ks in [&g.k0, &g.k1] {
                for &k in ks.iter() {
                    prop_assert!(k > -PI && k <= PI);
                    prop_assert!(ks.iter().any(|&q| (q + k).abs() < 1e-12));
                }
            }
        }

        #[test]
        fn dispersion_nonnegative(h in -3.0f64..3.0, k in -PI..PI) {
            prop_assert!(dispersion(h, k) >= 0.0);
        }

        #[test]
        fn bound_terms_sum(half in 2usize..20, h in 0.0f64..2.0, t in 0.0f64..10.0) {
            let n = 2 * half;
            let r = bound_finite_n(n, h, TimeMode::Finite(t), 8.0).unwrap();
            prop_assert_eq!(r.total, r.first_term + r.second_term);
            prop_assert!(r.second_term > 0.0);
            prop_assert!(r.first_term >= 0.0 && r.first_term <= 1.0);
        }
    }

    #[test]
    fn trivial_overlaps() {
        assert_eq!(overlap_sum(8, 0.0, TimeMode::LongTime).unwrap(), 0.0);
        assert_eq!(overlap_sum(8, 0.7, TimeMode::Finite(0.0)).unwrap(), 0.0);
        let r = bound_finite_n(8, 0.0, TimeMode::LongTime, 5.0).unwrap();
        assert_eq!(r.total, r.second_term);
        let r = bound_asymptotic(8, 0.0, TimeMode::LongTime, 5.0).unwrap();
        assert_eq!(r.total, r.second_term);
        assert_eq!(r.mode_tag(), "asymptotic");
    }

    #[test]
    fn leave_one_out_matches_quotient_form() {
        let a = [0.1, 0.35, 0.02, 0.4];
        let prod: f64 = a.iter().map(|x| 1.0 - x).product();
        let quotient: f64 = a.iter().map(|x| x / (1.0 - x)).sum::<f64>() * prod;
        assert_relative_eq!(libm::exp(sector_log_overlap(&a)), quotient, max_relative = 1e-14);
        // One saturated pair leaves a single surviving term.
        let b = [0.2, 1.0, 0.5];
        assert_relative_eq!(libm::exp(sector_log_overlap(&b)), 0.8 * 0.5, max_relative = 1e-14);
        assert_eq!(sector_log_overlap(&[1.0, 1.0, 0.3]), f64::NEG_INFINITY);
    }

    #[test]
    fn thermal_guard() {
        assert!(matches!(thermal_term(24, 0.5), Err(Error::TemperatureTooHigh { .. })));
        assert_relative_eq!(thermal_term(8, 5.0).unwrap(), libm::exp(-20.0) / (2.0 - 56.0 * libm::exp(-20.0)));
    }

    #[test]
    fn large_n_in_log_space() {
        let r = bound_finite_n(24, 0.8, TimeMode::LongTime, 5.0).unwrap();
        assert!(r.first_term > 0.0 && r.first_term.is_finite());
        let deep = bound_finite_n(8000, 1.5, TimeMode::LongTime, 10.0).unwrap();
        assert!(deep.first_term_log.is_finite() && deep.first_term_log < -700.0);
    }

    #[test]
    fn continuum_small_field_quadratic() {
        assert_eq!(gamma_lambda(0.0, TimeMode::LongTime).unwrap().lambda, 0.0);
        assert_eq!(gamma_lambda(0.0, TimeMode::LongTime).unwrap().gamma, 0.0);
        let a = gamma_lambda(0.01, TimeMode::LongTime).unwrap();
        let b = gamma_lambda(0.02, TimeMode::LongTime).unwrap();
        assert!((a.lambda / b.lambda / 0.25 - 1.0).abs() < 0.05);
        assert!((a.gamma / b.gamma / 0.25 - 1.0).abs() < 0.05);
        assert!(!a.flagged() && !b.flagged());
    }

    #[test]
    fn critical_field_is_integrable() {
        let gl = gamma_lambda(1.0, TimeMode::LongTime).unwrap();
        assert!(gl.gamma.is_finite() && gl.lambda.is_finite() && !gl.flagged());
        assert!(gamma_lambda_with(1.0, TimeMode::LongTime, 10).is_err());
    }

    #[test]
    fn riemann_sums_converge_to_quadrature() {
        let h = 0.99;
        let reference = gamma_lambda_with(h, TimeMode::LongTime, 1 << 16).unwrap().lambda;
        let mut last = f64::INFINITY;
        for n in [64usize, 256, 1024] {
            let grid = momentum_grids(n).unwrap();
            let sum: f64 = grid.positive(0).map(|k| -libm::log1p(-pair_excitation(h, k, TimeMode::LongTime))).sum();
            let err = (sum / n as f64 - reference).abs();
            assert!(err < last, "N={n}: {err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn asymptotic_tracks_finite_n() {
        for h in [0.2, 0.5, 1.0, 1.5, 2.0] {
            let f = bound_finite_n(24, h, TimeMode::LongTime, 5.0).unwrap();
            let a = bound_asymptotic(24, h, TimeMode::LongTime, 5.0).unwrap();
            assert!((a.first_term / f.first_term - 1.0).abs() <= 0.2, "h={h}");
        }
        let f = bound_finite_n(14, 0.3, TimeMode::LongTime, 5.0).unwrap();
        let a = bound_asymptotic(14, 0.3, TimeMode::LongTime, 5.0).unwrap();
        assert!((a.total / f.total - 1.0).abs() <= 0.25);
    }

    fn fitted_slope(points: &[(f64, f64)]) -> f64 {
        let m = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
        let my = points.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn exponential_decay_rate() {
        let lambda = gamma_lambda(0.5, TimeMode::LongTime).unwrap().lambda;
        for kind in [BoundKind::Asymptotic, BoundKind::FiniteN] {
            let points: Vec<(f64, f64)> = (50..=200)
                .step_by(10)
                .map(|n| {
                    let r = match kind {
                        BoundKind::Asymptotic => bound_asymptotic(n, 0.5, TimeMode::LongTime, 10.0),
                        BoundKind::FiniteN => bound_finite_n(n, 0.5, TimeMode::LongTime, 10.0),
                    }
                    .unwrap();
                    (n as f64, r.first_term_log + libm::log((n - 1) as f64))
                })
                .collect();
            let slope = fitted_slope(&points);
            assert!((-slope / lambda - 1.0).abs() <= 0.05, "{kind:?}: {slope} vs {lambda}");
        }
    }
}

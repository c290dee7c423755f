//! Exponential scaling fits `gap(N) ≈ 2^{c - kN}`.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Ensemble summary of one system size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Standard error of the mean; zero for a single sample.
    pub std_error: f64,
    pub count: usize,
}

impl ScalingPoint {
    /// Exact value with no spread, for synthetic inputs.
    pub fn exact(n: usize, value: f64) -> Self {
        Self { n, mean: value, median: value, std_error: 0.0, count: 1 }
    }
}

pub fn summarize(n: usize, samples: &[f64]) -> Result<ScalingPoint> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples to summarize"));
    }
    let count = samples.len();
    let mean = samples.iter().sum::<f64>() / count as f64;
    let std_error = if count > 1 {
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (count - 1) as f64;
        libm::sqrt(var / count as f64)
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if count % 2 == 1 { sorted[count / 2] } else { 0.5 * (sorted[count / 2 - 1] + sorted[count / 2]) };
    Ok(ScalingPoint { n, mean, median, std_error, count })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// Decay exponent in `2^{-kN}`.
    pub k: f64,
    /// Intercept `c` of `log₂ gap = c - kN`.
    pub prefactor_log2: f64,
    /// Root-mean-square residual of `log₂ gap`.
    pub residual: f64,
    /// Whether inverse-variance weights were used.
    pub weighted: bool,
    pub points: Vec<ScalingPoint>,
}

impl ScalingFit {
    pub fn predict_log2(&self, n: usize) -> f64 {
        self.prefactor_log2 - self.k * n as f64
    }
}

/// Least squares on `log₂(mean)` against `N`. When every point carries a
/// positive standard error the fit is weighted by the delta-method variance
/// `(se / (mean ln 2))²`; otherwise it is unweighted.
pub fn fit_scaling(points: &[ScalingPoint]) -> Result<ScalingFit> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::TooFewSizes(sizes.len()));
    }
    if let Some(p) = points.iter().find(|p| !(p.mean > 0.0 && p.mean.is_finite())) {
        return Err(Error::NonPositiveGap(p.mean));
    }
    let weighted = points.iter().all(|p| p.std_error > 0.0 && p.std_error.is_finite());
    let ln2 = core::f64::consts::LN_2;
    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let w = if weighted {
                let sd = p.std_error / (p.mean * ln2);
                1.0 / (sd * sd)
            } else {
                1.0
            };
            (p.n as f64, libm::log2(p.mean), w)
        })
        .collect();
    let sw: f64 = data.iter().map(|d| d.2).sum();
    let mx = data.iter().map(|d| d.2 * d.0).sum::<f64>() / sw;
    let my = data.iter().map(|d| d.2 * d.1).sum::<f64>() / sw;
    let sxx: f64 = data.iter().map(|d| d.2 * (d.0 - mx) * (d.0 - mx)).sum();
    let sxy: f64 = data.iter().map(|d| d.2 * (d.0 - mx) * (d.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sq: f64 = data.iter().map(|d| { let r = d.1 - intercept - slope * d.0; r * r }).sum();
    Ok(ScalingFit {
        k: -slope,
        prefactor_log2: intercept,
        residual: libm::sqrt(sq / data.len() as f64),
        weighted,
        points: points.to_vec(),
    })
}

//! Experiment configuration, validated before any computation.

use std::path::{Path, PathBuf};

use qmcmc_core::disorder::DisorderSeed;
use qmcmc_core::models::{sample_pspin, sample_sk, ClassicalModel};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Default state-space guard, `2^14` configurations.
pub const DEFAULT_MAX_DIMENSION: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelType {
    Ising,
    Sk,
    Pspin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "type")]
    pub kind: ModelType,
    #[serde(rename = "N")]
    pub sizes: Vec<usize>,
    /// Interaction order for `pspin`.
    #[serde(default = "default_order")]
    pub p: usize,
    /// Longitudinal fields `h_i ~ U(-w, w)`. Defaults to 0.25 for SK and 0 for
    /// p-spin; ignored by the Ising chain.
    #[serde(default)]
    pub field_halfwidth: Option<f64>,
}

fn default_order() -> usize {
    3
}

impl ModelSpec {
    /// Name written to the `model` column.
    pub fn label(&self) -> String {
        match self.kind {
            ModelType::Ising => "ising".into(),
            ModelType::Sk => "sk".into(),
            ModelType::Pspin => format!("pspin{}", self.p),
        }
    }

    pub fn field_halfwidth(&self) -> f64 {
        match (self.kind, self.field_halfwidth) {
            (ModelType::Ising, _) => 0.0,
            (_, Some(w)) => w,
            (ModelType::Sk, None) => 0.25,
            (ModelType::Pspin, None) => 0.0,
        }
    }

    /// Instance `index` of size `n`; the Ising chain ignores the seed.
    pub fn build(&self, n: usize, base_seed: u64, index: usize) -> Result<ClassicalModel> {
        let seed = DisorderSeed::new(base_seed, index as u64);
        Ok(match self.kind {
            ModelType::Ising => ClassicalModel::ising_chain(n)?,
            ModelType::Sk => ClassicalModel::Sk(sample_sk(n, seed, self.field_halfwidth())?),
            ModelType::Pspin => ClassicalModel::PSpin(sample_pspin(n, self.p, seed, self.field_halfwidth())?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeModeSpec {
    #[default]
    LongTime,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProposalSpec {
    Quench {
        h: Vec<f64>,
        #[serde(default)]
        t_mode: TimeModeSpec,
        #[serde(default)]
        t: Vec<f64>,
    },
    Uniform,
    Local,
    Perturbative {
        h: Vec<f64>,
    },
    EffectiveXy {
        h: Vec<f64>,
    },
}

impl ProposalSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ProposalSpec::Quench { .. } => "quench",
            ProposalSpec::Uniform => "uniform",
            ProposalSpec::Local => "local",
            ProposalSpec::Perturbative { .. } => "perturbative",
            ProposalSpec::EffectiveXy { .. } => "effective_xy",
        }
    }

    pub fn fields(&self) -> &[f64] {
        match self {
            ProposalSpec::Quench { h, .. } | ProposalSpec::Perturbative { h } | ProposalSpec::EffectiveXy { h } => h,
            ProposalSpec::Uniform | ProposalSpec::Local => &[],
        }
    }
}

/// Energy window for IPR averages, as quantiles of the sorted energy table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IprWindow {
    pub lower: f64,
    pub upper: f64,
}

impl Default for IprWindow {
    fn default() -> Self {
        Self { lower: 0.0, upper: 0.1 }
    }
}

impl IprWindow {
    /// Energy bounds `[E_lo, E_hi]` on a table.
    pub fn bounds(&self, energies: &[f64]) -> (f64, f64) {
        let mut sorted = energies.to_vec();
        sorted.sort_by(f64::total_cmp);
        let dim = sorted.len();
        let lo = ((self.lower * dim as f64).floor() as usize).min(dim - 1);
        let hi = ((self.upper * dim as f64).ceil() as usize).saturating_sub(1).clamp(lo, dim - 1);
        (sorted[lo], sorted[hi])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSpec {
    /// Sizes for the analytic bound; exact gaps use `model.N`.
    #[serde(default = "default_analytic_sizes")]
    pub analytic_sizes: Vec<usize>,
}

fn default_analytic_sizes() -> Vec<usize> {
    (4..=24).step_by(2).collect()
}

impl Default for IsingSpec {
    fn default() -> Self {
        Self { analytic_sizes: default_analytic_sizes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub proposal: ProposalSpec,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Evaluate the bottleneck ladder on energy-threshold cuts.
    #[serde(default)]
    pub cuts: bool,
    /// Record IPR window averages alongside gaps.
    #[serde(default)]
    pub record_ipr: bool,
    #[serde(default)]
    pub ipr_window: IprWindow,
    /// Write each disorder instance as JSON under `instances/`.
    #[serde(default)]
    pub export_instances: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Largest state-space dimension `2^N` allowed.
    #[serde(default = "default_max_dimension")]
    pub max_dimension: usize,
    #[serde(default)]
    pub ising: IsingSpec,
}

fn default_beta() -> f64 {
    5.0
}

fn default_instances() -> usize {
    1
}

fn default_max_dimension() -> usize {
    DEFAULT_MAX_DIMENSION
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Largest spin count admitted by `max_dimension`.
    pub fn max_spins(&self) -> usize {
        self.max_dimension.max(1).ilog2() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.sizes.is_empty() {
            return Err(invalid("model.N must list at least one size"));
        }
        for &n in &m.sizes {
            if n == 0 || n >= usize::BITS as usize - 1 || (1usize << n) > self.max_dimension {
                return Err(invalid(format!("N = {n} exceeds max_dimension {}", self.max_dimension)));
            }
            match m.kind {
                ModelType::Ising if n < 3 => return Err(invalid("Ising chain needs N >= 3")),
                ModelType::Pspin if m.p < 2 || m.p > n => {
                    return Err(invalid(format!("p-spin order {} invalid for N = {n}", m.p)))
                }
                _ => {}
            }
        }
        let w = m.field_halfwidth();
        if !(w.is_finite() && w >= 0.0) {
            return Err(invalid("field_halfwidth must be finite and nonnegative"));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid("beta must be finite and nonnegative"));
        }
        if self.instances == 0 {
            return Err(invalid("instances must be positive"));
        }
        let fields = self.proposal.fields();
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(invalid("transverse fields must be finite"));
        }
        match &self.proposal {
            ProposalSpec::Quench { h, t_mode, t } => {
                if h.is_empty() {
                    return Err(invalid("quench proposal needs a nonempty h grid"));
                }
                if t.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(invalid("times must be finite and nonnegative"));
                }
                if *t_mode == TimeModeSpec::Finite && t.is_empty() {
                    return Err(invalid("finite t_mode needs a nonempty t grid"));
                }
            }
            ProposalSpec::Perturbative { h } if h.is_empty() => {
                return Err(invalid("perturbative proposal needs a nonempty h grid"))
            }
            ProposalSpec::EffectiveXy { h } => {
                if m.kind != ModelType::Sk {
                    return Err(invalid("effective_xy proposal requires the SK model"));
                }
                if h.is_empty() || h.iter().any(|&h| h <= 0.0) {
                    return Err(invalid("effective_xy proposal needs positive fields"));
                }
            }
            _ => {}
        }
        let win = self.ipr_window;
        if !(0.0 <= win.lower && win.lower < win.upper && win.upper <= 1.0) {
            return Err(invalid("ipr_window must satisfy 0 <= lower < upper <= 1"));
        }
        if self.ising.analytic_sizes.iter().any(|&n| n < 4 || n % 2 == 1) {
            return Err(invalid("ising.analytic_sizes must be even and at least 4"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SK: &str = r#"{"model": {"type": "sk", "N": [4, 5]}, "proposal": {"type": "quench", "h": [0.5]}}"#;

    #[test]
    fn defaults_resolve() {
        let c = ExperimentConfig::from_json(SK).unwrap();
        assert_eq!(c.beta, 5.0);
        assert_eq!(c.instances, 1);
        assert_eq!(c.model.field_halfwidth(), 0.25);
        assert_eq!(c.max_spins(), 14);
        assert_eq!(c.model.label(), "sk");
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn pspin_defaults_to_no_fields() {
        let c = ExperimentConfig::from_json(r#"{"model": {"type": "pspin", "N": [5]}, "proposal": {"type": "local"}}"#).unwrap();
        assert_eq!(c.model.field_halfwidth(), 0.0);
        assert_eq!(c.model.label(), "pspin3");
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"model": {"type": "sk", "N": []}, "proposal": {"type": "uniform"}}"#,
            r#"{"model": {"type": "sk", "N": [20]}, "proposal": {"type": "uniform"}}"#,
            r#"{"model": {"type": "ising", "N": [2]}, "proposal": {"type": "uniform"}}"#,
            r#"{"model": {"type": "pspin", "N": [2]}, "proposal": {"type": "uniform"}}"#,
            r#"{"model": {"type": "sk", "N": [4]}, "beta": -1, "proposal": {"type": "uniform"}}"#,
            r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "quench", "h": []}}"#,
            r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "quench", "h": [1], "t_mode": "finite"}}"#,
            r#"{"model": {"type": "ising", "N": [4]}, "proposal": {"type": "effective_xy", "h": [10]}}"#,
            r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "uniform"}, "instances": 0}"#,
            r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "uniform"}, "typo": 1}"#,
            r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "uniform"}, "ipr_window": {"lower": 0.5, "upper": 0.1}}"#,
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_json(text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn ipr_window_bounds() {
        let energies: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(IprWindow::default().bounds(&energies), (0.0, 1.0));
        assert_eq!(IprWindow { lower: 0.0, upper: 1.0 }.bounds(&energies), (0.0, 19.0));
    }
}

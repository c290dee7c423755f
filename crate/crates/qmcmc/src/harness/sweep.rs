//! Resumable sweep over `(N, instance)` work units.
//!
//! A unit's rows are appended as one batch, marker file last. On restart a
//! unit counts as done only when its marker rows match the planned keys
//! exactly; rows of every other unit are dropped and recomputed.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::{info, warn};
use qmcmc_core::bottleneck::{bound_ladder, energy_threshold_cuts};
use qmcmc_core::chain::{metropolis_chain, spectral_gap};
use qmcmc_core::models::{boltzmann, BoltzmannTable, ClassicalModel};
use qmcmc_core::quench::{
    self, build_hamiltonian, default_degeneracy_tol, diagonalize, effective_large_h_hamiltonian, proposal_at_time,
    proposal_long_time, ProposalMatrix, Spectrum,
};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{ExperimentConfig, ProposalSpec, TimeModeSpec};
use crate::io::{write_instance, InstanceRecord};
use crate::output::{read_rows, write_rows, Appender, RunDir};
use crate::records::{BoundRow, GapRow, IprRow, UnitRow};
use crate::{HarnessError, Result};

pub const LONG_TIME: &str = "long_time";
pub const FINITE_T: &str = "finite_t";
pub const CLASSICAL: &str = "none";

/// What one sweep computes and where it goes.
pub(crate) struct Sweep<'a> {
    pub config: &'a ExperimentConfig,
    pub sizes: Vec<usize>,
    /// Proposals evaluated at size `N`.
    pub plan: &'a (dyn Fn(usize) -> Vec<ProposalSpec> + Sync),
    pub gaps: Option<&'a str>,
    pub ipr: Option<&'a str>,
    pub bounds: Option<&'a str>,
}

#[derive(Debug, Default)]
pub(crate) struct SweepRows {
    pub gaps: Vec<GapRow>,
    pub ipr: Vec<IprRow>,
    pub bounds: Vec<BoundRow>,
}

/// Row identity used to check that stored rows belong to the current plan.
#[derive(Debug, Clone, PartialEq)]
enum Key {
    Gap { proposal: &'static str, h: Option<u64>, t: Option<u64> },
    Ipr { h: u64 },
}

fn gap_key(row: &GapRow) -> (String, Option<u64>, Option<u64>) {
    (row.proposal.clone(), row.h.map(f64::to_bits), row.t.map(f64::to_bits))
}

impl Sweep<'_> {
    fn units(&self) -> Vec<(usize, usize)> {
        self.sizes.iter().flat_map(|&n| (0..self.config.instances).map(move |i| (n, i))).collect()
    }

    fn order(&self, unit: (usize, usize)) -> (usize, usize) {
        let pos = self.sizes.iter().position(|&n| n == unit.0).unwrap_or(usize::MAX);
        (pos, unit.1)
    }

    fn expected_keys(&self, n: usize) -> Vec<Key> {
        let mut keys = Vec::new();
        for spec in (self.plan)(n) {
            let label = spec.label();
            match &spec {
                ProposalSpec::Uniform | ProposalSpec::Local => {
                    if self.gaps.is_some() {
                        keys.push(Key::Gap { proposal: label, h: None, t: None });
                    }
                }
                ProposalSpec::Perturbative { h } | ProposalSpec::EffectiveXy { h } => {
                    if self.gaps.is_some() {
                        keys.extend(h.iter().map(|h| Key::Gap { proposal: label, h: Some(h.to_bits()), t: None }));
                    }
                }
                ProposalSpec::Quench { h, t_mode, t } => {
                    for &h in h {
                        if self.gaps.is_none() {
                            keys.push(Key::Ipr { h: h.to_bits() });
                            continue;
                        }
                        match t_mode {
                            TimeModeSpec::LongTime => {
                                keys.push(Key::Gap { proposal: label, h: Some(h.to_bits()), t: None })
                            }
                            TimeModeSpec::Finite => keys.extend(
                                t.iter().map(|t| Key::Gap { proposal: label, h: Some(h.to_bits()), t: Some(t.to_bits()) }),
                            ),
                        }
                    }
                }
            }
        }
        keys
    }

    fn unit_complete(&self, n: usize, gaps: &[&GapRow], ipr: &[&IprRow]) -> bool {
        let expected = self.expected_keys(n);
        let label = self.config.model.label();
        if self.gaps.is_some() {
            gaps.len() == expected.len()
                && gaps.iter().zip(&expected).all(|(row, key)| {
                    let (p, h, t) = gap_key(row);
                    row.model == label
                        && row.beta.to_bits() == self.config.beta.to_bits()
                        && matches!(key, Key::Gap { proposal, h: kh, t: kt } if *proposal == p && *kh == h && *kt == t)
                })
        } else {
            ipr.len() == expected.len()
                && ipr.iter().zip(&expected).all(|(row, key)| {
                    row.model == label && matches!(key, Key::Ipr { h } if *h == row.h.to_bits())
                })
        }
    }

    /// Runs every pending unit and returns all rows in canonical order.
    pub fn run(&self, dir: &mut RunDir, pool: &rayon::ThreadPool, threads: usize) -> Result<SweepRows> {
        let units = self.units();
        let gaps_path = self.gaps.map(|f| dir.file(f));
        let ipr_path = self.ipr.map(|f| dir.file(f));
        let bounds_path = self.bounds.map(|f| dir.file(f));

        let old_gaps: Vec<GapRow> = gaps_path.as_deref().map(read_rows).transpose()?.unwrap_or_default();
        let old_ipr: Vec<IprRow> = ipr_path.as_deref().map(read_rows).transpose()?.unwrap_or_default();
        let complete: HashSet<(usize, usize)> = units
            .iter()
            .copied()
            .filter(|&(n, i)| {
                let g: Vec<&GapRow> = old_gaps.iter().filter(|r| r.unit() == (n, i)).collect();
                let p: Vec<&IprRow> = old_ipr.iter().filter(|r| r.unit() == (n, i)).collect();
                self.unit_complete(n, &g, &p)
            })
            .collect();
        if !complete.is_empty() {
            info!("resuming: {} of {} units already complete", complete.len(), units.len());
        }
        retain_units(gaps_path.as_deref(), old_gaps, &complete)?;
        retain_units(ipr_path.as_deref(), old_ipr, &complete)?;
        if let Some(path) = bounds_path.as_deref() {
            retain_units::<BoundRow>(Some(path), read_rows(path)?, &complete)?;
        }

        let pending: Vec<(usize, usize)> = units.iter().copied().filter(|u| !complete.contains(u)).collect();
        let mut gaps_out = gaps_path.as_deref().map(|p| Appender::open(p, true)).transpose()?;
        let mut ipr_out = ipr_path.as_deref().map(|p| Appender::open(p, true)).transpose()?;
        let mut bounds_out = bounds_path.as_deref().map(|p| Appender::open(p, true)).transpose()?;
        let mut failures = 0;
        for chunk in pending.chunks(threads.max(1)) {
            let results: Vec<Result<SweepRows>> =
                pool.install(|| chunk.par_iter().map(|&(n, i)| self.compute_unit(dir.path(), n, i)).collect());
            for (&(n, i), result) in chunk.iter().zip(results) {
                match result {
                    Ok(rows) => {
                        // Marker file last: gaps when present, else IPR.
                        if let Some(out) = bounds_out.as_mut() {
                            out.append(&rows.bounds)?;
                        }
                        if let Some(out) = ipr_out.as_mut() {
                            out.append(&rows.ipr)?;
                        }
                        if let Some(out) = gaps_out.as_mut() {
                            out.append(&rows.gaps)?;
                        }
                    }
                    Err(e) => {
                        warn!("N = {n}, instance {i}: {e}");
                        failures += 1;
                    }
                }
            }
        }
        drop((gaps_out, ipr_out, bounds_out));
        dir.add_failures(failures);

        let mut rows = SweepRows::default();
        if let (Some(name), Some(path)) = (self.gaps, &gaps_path) {
            rows.gaps = self.canonicalize(path)?;
            dir.record(name, rows.gaps.len());
        }
        if let (Some(name), Some(path)) = (self.ipr, &ipr_path) {
            rows.ipr = self.canonicalize(path)?;
            dir.record(name, rows.ipr.len());
        }
        if let (Some(name), Some(path)) = (self.bounds, &bounds_path) {
            rows.bounds = self.canonicalize(path)?;
            dir.record(name, rows.bounds.len());
        }
        Ok(rows)
    }

    /// Stable sort by unit order, so the file is independent of thread count
    /// and of where a previous run stopped.
    fn canonicalize<T: UnitRow + Serialize + DeserializeOwned>(&self, path: &Path) -> Result<Vec<T>> {
        let mut rows: Vec<T> = read_rows(path)?;
        rows.sort_by_key(|r| self.order(r.unit()));
        write_rows(path, &rows)?;
        Ok(rows)
    }

    fn compute_unit(&self, dir: &Path, n: usize, instance: usize) -> Result<SweepRows> {
        let config = self.config;
        let model = config.model.build(n, config.base_seed, instance)?;
        if config.export_instances {
            let sub = dir.join("instances");
            fs::create_dir_all(&sub).map_err(HarnessError::io(&sub))?;
            let path = sub.join(format!("{}_N{n}_{instance}.json", config.model.label()));
            write_instance(&path, &InstanceRecord::from_model(&model, config.base_seed, instance))?;
        }
        let ctx = UnitContext::new(self, &model, instance)?;
        let mut rows = SweepRows::default();
        for spec in (self.plan)(n) {
            ctx.evaluate(&spec, &mut rows)?;
        }
        Ok(rows)
    }
}

fn retain_units<T: UnitRow + Serialize>(path: Option<&Path>, rows: Vec<T>, keep: &HashSet<(usize, usize)>) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    if !path.exists() {
        return Ok(());
    }
    let kept: Vec<T> = rows.into_iter().filter(|r| keep.contains(&r.unit())).collect();
    write_rows(path, &kept)
}

struct UnitContext<'a> {
    sweep: &'a Sweep<'a>,
    model: &'a ClassicalModel,
    instance: usize,
    table: BoltzmannTable,
    label: String,
    max_spins: usize,
}

impl<'a> UnitContext<'a> {
    fn new(sweep: &'a Sweep<'a>, model: &'a ClassicalModel, instance: usize) -> Result<Self> {
        let max_spins = sweep.config.max_spins();
        let table = boltzmann(model.energy_table(max_spins)?, sweep.config.beta)?;
        Ok(Self { sweep, model, instance, table, label: sweep.config.model.label(), max_spins })
    }

    fn gap_row(&self, q: &ProposalMatrix, proposal: &str, h: Option<f64>, t_mode: &str, t: Option<f64>) -> Result<GapRow> {
        let chain = metropolis_chain(q, &self.table)?;
        let gap = spectral_gap(&chain)?;
        Ok(GapRow {
            model: self.label.clone(),
            n: self.model.n(),
            instance: self.instance,
            h,
            t_mode: t_mode.into(),
            beta: self.table.beta,
            delta: gap.delta,
            lambda2: gap.lambda2_abs,
            reducible: gap.reducible,
            t,
            proposal: proposal.into(),
            db_residual: chain.detailed_balance_residual(),
        })
    }

    fn long_time(spectrum: &Spectrum) -> Result<ProposalMatrix> {
        Ok(proposal_long_time(spectrum, default_degeneracy_tol(spectrum))?)
    }

    fn evaluate(&self, spec: &ProposalSpec, rows: &mut SweepRows) -> Result<()> {
        let sweep = self.sweep;
        let (n, ms) = (self.model.n(), self.max_spins);
        let want_gaps = sweep.gaps.is_some();
        let label = spec.label();
        match spec {
            ProposalSpec::Uniform if want_gaps => {
                rows.gaps.push(self.gap_row(&quench::uniform_proposal(n, ms)?, label, None, CLASSICAL, None)?)
            }
            ProposalSpec::Local if want_gaps => {
                rows.gaps.push(self.gap_row(&quench::local_proposal(n, ms)?, label, None, CLASSICAL, None)?)
            }
            ProposalSpec::Perturbative { h } if want_gaps => {
                for &h in h {
                    let q = quench::perturbative_local_proposal(self.model, h, ms)?;
                    rows.gaps.push(self.gap_row(&q, label, Some(h), LONG_TIME, None)?);
                }
            }
            ProposalSpec::EffectiveXy { h } if want_gaps => {
                for &h in h {
                    let spectrum = diagonalize(&effective_large_h_hamiltonian(self.model, h, ms)?)?;
                    rows.gaps.push(self.gap_row(&Self::long_time(&spectrum)?, label, Some(h), LONG_TIME, None)?);
                }
            }
            ProposalSpec::Quench { h, t_mode, t } => {
                for &h in h {
                    self.quench_at(h, *t_mode, t, rows)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn quench_at(&self, h: f64, t_mode: TimeModeSpec, times: &[f64], rows: &mut SweepRows) -> Result<()> {
        let sweep = self.sweep;
        let config = sweep.config;
        let spectrum = diagonalize(&build_hamiltonian(self.model, h, self.max_spins)?)?;
        let need_ipr = sweep.ipr.is_some() || (sweep.bounds.is_some() && t_mode == TimeModeSpec::LongTime);
        let ipr = if need_ipr { quench::ipr(&spectrum) } else { Vec::new() };
        if sweep.ipr.is_some() {
            let (lo, hi) = config.ipr_window.bounds(&self.table.energies);
            let states = self.table.energies.iter().filter(|&&e| lo <= e && e <= hi).count();
            rows.ipr.push(IprRow {
                model: self.label.clone(),
                n: self.model.n(),
                instance: self.instance,
                h,
                window_lo: lo,
                window_hi: hi,
                states,
                ipr_mean: quench::ipr_window_average(&ipr, &self.table.energies, lo, hi)?,
            });
        }
        if sweep.gaps.is_none() {
            return Ok(());
        }
        match t_mode {
            TimeModeSpec::LongTime => {
                let q = Self::long_time(&spectrum)?;
                let row = self.gap_row(&q, "quench", Some(h), LONG_TIME, None)?;
                if sweep.bounds.is_some() {
                    let chain = metropolis_chain(&q, &self.table)?;
                    for cut in energy_threshold_cuts(&self.table.energies, &self.table.pi) {
                        let report = bound_ladder(&spectrum, &self.table, &cut, &ipr, &chain)?;
                        rows.bounds.push(BoundRow {
                            n: self.model.n(),
                            instance: self.instance,
                            h,
                            beta: self.table.beta,
                            cut_threshold: report.cut_threshold.unwrap_or(f64::NAN),
                            delta: row.delta,
                            lambda_b: report.lambda_b,
                            fg: report.fg_value,
                            cs: report.cs_bound,
                            ipr_bound: report.ipr_bound,
                            fe_bound: report.free_energy_bound,
                            s_f: report.entropy_f,
                            s_g: report.entropy_g,
                            e_c: report.energy_complement,
                            model: self.label.clone(),
                            fg_discrepancy: report.fg_discrepancy,
                        });
                    }
                }
                rows.gaps.push(row);
            }
            TimeModeSpec::Finite => {
                for &t in times {
                    let q = proposal_at_time(&spectrum, t)?;
                    rows.gaps.push(self.gap_row(&q, "quench", Some(h), FINITE_T, Some(t))?);
                }
            }
        }
        Ok(())
    }
}

//! Experiment runs. Each writes CSVs, `config.resolved.json` and
//! `manifest.json` into one output directory and can be resumed there.

pub mod aggregate;
mod sweep;

use std::path::{Path, PathBuf};

use log::{info, warn};
use qmcmc_core::ising_analytic::{bound_asymptotic, bound_finite_n, IsingBoundResult, TimeMode};

use crate::config::{ExperimentConfig, ModelType, ProposalSpec, TimeModeSpec};
use crate::output::{read_rows, write_rows, Manifest, RunDir};
use crate::records::{GapRow, IprRow, IsingBoundRow, IsingExactRow, IsingGridRow, SummaryRow, TraceRow};
use crate::{HarnessError, Result};
use aggregate::{extreme_fields, fit_summaries, summarize_gaps, summarize_ipr, times_n};
use sweep::Sweep;

pub use sweep::{CLASSICAL, FINITE_T, LONG_TIME};

pub const GAPS: &str = "gaps.csv";
pub const IPR: &str = "ipr.csv";
pub const BOUNDS: &str = "bounds.csv";
pub const SUMMARY: &str = "summary.csv";
pub const FITS: &str = "fits.csv";
pub const IPR_SUMMARY: &str = "ipr_summary.csv";
pub const IPR_FITS: &str = "ipr_fits.csv";
pub const TRACE_GAPS: &str = "trace_gaps.csv";
pub const TIME_TRACE: &str = "time_trace.csv";
pub const ISING_BOUND: &str = "ising_bound.csv";
pub const ISING_EXACT: &str = "ising_exact.csv";

/// `ising_grid_N{n}.csv`: finite-N bound over the `(h, t)` grid.
pub fn ising_grid_file(n: usize) -> String {
    format!("ising_grid_N{n}.csv")
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    pub threads: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>, threads: usize) -> Self {
        Self { out: out.into(), threads: threads.max(1) }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
    }
}

fn invalid(msg: &str) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn same_plan(config: &ExperimentConfig) -> impl Fn(usize) -> Vec<ProposalSpec> + Sync + '_ {
    move |_| vec![config.proposal.clone()]
}

fn sweep<'a>(config: &'a ExperimentConfig, plan: &'a (dyn Fn(usize) -> Vec<ProposalSpec> + Sync)) -> Sweep<'a> {
    Sweep { config, sizes: config.model.sizes.clone(), plan, gaps: Some(GAPS), ipr: None, bounds: None }
}

fn write_recorded<T: serde::Serialize>(dir: &mut RunDir, name: &str, rows: &[T]) -> Result<()> {
    write_rows(&dir.file(name), rows)?;
    dir.record(name, rows.len());
    Ok(())
}

fn write_scaling(dir: &mut RunDir, summary: &[SummaryRow], summary_name: &str, fits_name: &str) -> Result<()> {
    write_recorded(dir, summary_name, summary)?;
    write_recorded(dir, fits_name, &fit_summaries(summary))
}

/// Gaps over the configured grid, with IPR and bound rows when enabled.
pub fn run_gap_grid(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    let mut dir = RunDir::create(&opts.out, "gap-grid", config, opts.threads)?;
    let plan = same_plan(config);
    let mut sw = sweep(config, &plan);
    if config.record_ipr {
        sw.ipr = Some(IPR);
    }
    if config.cuts {
        sw.bounds = Some(BOUNDS);
    }
    sw.run(&mut dir, &opts.pool()?, opts.threads)?;
    dir.finish()
}

/// Gaps plus per-`N` summaries and `2^{-kN}` fits per field and time.
pub fn run_gap_scaling(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    let mut dir = RunDir::create(&opts.out, "gap-scaling", config, opts.threads)?;
    let plan = same_plan(config);
    let mut sw = sweep(config, &plan);
    if config.record_ipr {
        sw.ipr = Some(IPR);
    }
    let rows = sw.run(&mut dir, &opts.pool()?, opts.threads)?;
    write_scaling(&mut dir, &summarize_gaps(&rows.gaps)?, SUMMARY, FITS)?;
    if config.record_ipr {
        write_scaling(&mut dir, &summarize_ipr(&rows.ipr)?, IPR_SUMMARY, IPR_FITS)?;
    }
    dir.finish()
}

/// Uniform and local classical chains on the same disorder; fits for
/// `uniform`, `local` and `local_times_n`.
pub fn run_baselines(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    let mut dir = RunDir::create(&opts.out, "baselines", config, opts.threads)?;
    let plan = |_: usize| vec![ProposalSpec::Uniform, ProposalSpec::Local];
    let rows = sweep(config, &plan).run(&mut dir, &opts.pool()?, opts.threads)?;
    let mut summary = summarize_gaps(&rows.gaps)?;
    let scaled = times_n(&summary, "local", "local_times_n");
    summary.extend(scaled);
    write_scaling(&mut dir, &summary, SUMMARY, FITS)?;
    dir.finish()
}

/// Window-averaged IPR of the quench eigenbasis and its scaling per field.
pub fn run_ipr_scan(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    if !matches!(config.proposal, ProposalSpec::Quench { .. }) {
        return Err(invalid("ipr-scan needs a quench proposal"));
    }
    let mut dir = RunDir::create(&opts.out, "ipr-scan", config, opts.threads)?;
    let plan = same_plan(config);
    let mut sw = sweep(config, &plan);
    sw.gaps = None;
    sw.ipr = Some(IPR);
    let rows = sw.run(&mut dir, &opts.pool()?, opts.threads)?;
    write_scaling(&mut dir, &summarize_ipr(&rows.ipr)?, IPR_SUMMARY, IPR_FITS)?;
    dir.finish()
}

/// Bound ladder on every energy-superlevel cut of the long-time chains.
pub fn run_cuts(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    match &config.proposal {
        ProposalSpec::Quench { t_mode: TimeModeSpec::LongTime, .. } => {}
        _ => return Err(invalid("cuts needs a long-time quench proposal")),
    }
    let mut dir = RunDir::create(&opts.out, "cuts", config, opts.threads)?;
    let plan = same_plan(config);
    let mut sw = sweep(config, &plan);
    sw.bounds = Some(BOUNDS);
    sw.run(&mut dir, &opts.pool()?, opts.threads)?;
    dir.finish()
}

/// Long-time gaps over the `h` grid pick `h_max` and `h_min` per `N`; the
/// finite-time gaps at those fields over the `t` grid are then averaged.
pub fn run_time_trace(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    let ProposalSpec::Quench { h, t, .. } = &config.proposal else {
        return Err(invalid("time-trace needs a quench proposal"));
    };
    if t.is_empty() {
        return Err(invalid("time-trace needs a t grid"));
    }
    let mut dir = RunDir::create(&opts.out, "time-trace", config, opts.threads)?;
    let pool = opts.pool()?;
    let long = ProposalSpec::Quench { h: h.clone(), t_mode: TimeModeSpec::LongTime, t: Vec::new() };
    let long_plan = |_: usize| vec![long.clone()];
    let long_rows = sweep(config, &long_plan).run(&mut dir, &pool, opts.threads)?;
    let long_summary = summarize_gaps(&long_rows.gaps)?;
    write_recorded(&mut dir, SUMMARY, &long_summary)?;

    let extremes: Vec<(usize, f64, f64)> = config
        .model
        .sizes
        .iter()
        .filter_map(|&n| extreme_fields(&long_summary, n).map(|(hi, lo)| (n, hi, lo)))
        .collect();
    for &(n, hi, lo) in &extremes {
        info!("N = {n}: h_max = {hi}, h_min = {lo}");
    }
    let times = t.clone();
    let trace_plan = |n: usize| -> Vec<ProposalSpec> {
        extremes
            .iter()
            .find(|e| e.0 == n)
            .map(|&(_, hi, lo)| {
                vec![ProposalSpec::Quench { h: vec![hi, lo], t_mode: TimeModeSpec::Finite, t: times.clone() }]
            })
            .unwrap_or_default()
    };
    let mut sw = sweep(config, &trace_plan);
    sw.sizes = extremes.iter().map(|e| e.0).collect();
    sw.gaps = Some(TRACE_GAPS);
    let trace_rows = sw.run(&mut dir, &pool, opts.threads)?;
    let trace = trace_table(&trace_rows.gaps, &extremes, &long_summary, times.len())?;
    write_recorded(&mut dir, TIME_TRACE, &trace)?;
    dir.finish()
}

fn trace_table(
    rows: &[GapRow],
    extremes: &[(usize, f64, f64)],
    long_summary: &[SummaryRow],
    nt: usize,
) -> Result<Vec<TraceRow>> {
    let mut out = Vec::new();
    for &(n, hi, lo) in extremes {
        let unit_rows: Vec<&GapRow> = rows.iter().filter(|r| r.n == n).collect();
        if unit_rows.is_empty() {
            continue;
        }
        for (which, (label, h)) in [("h_max", hi), ("h_min", lo)].into_iter().enumerate() {
            let long_time_mean = long_summary
                .iter()
                .find(|r| r.n == n && r.h == Some(h))
                .map_or(f64::NAN, |r| r.mean);
            for ti in 0..nt {
                // Each instance contributes `2 nt` rows: h_max block, then h_min.
                let values: Vec<f64> = unit_rows.chunks(2 * nt).map(|c| c[which * nt + ti].delta).collect();
                let p = qmcmc_core::scaling::summarize(n, &values)?;
                out.push(TraceRow {
                    model: unit_rows[0].model.clone(),
                    n,
                    label: label.into(),
                    h,
                    t: unit_rows[which * nt + ti].t.unwrap_or(f64::NAN),
                    mean_delta: p.mean,
                    std_error: p.std_error,
                    count: p.count,
                    long_time_mean,
                });
            }
        }
    }
    Ok(out)
}

fn time_modes(config: &ExperimentConfig) -> Vec<TimeMode> {
    match &config.proposal {
        ProposalSpec::Quench { t_mode: TimeModeSpec::Finite, t, .. } => t.iter().map(|&t| TimeMode::Finite(t)).collect(),
        _ => vec![TimeMode::LongTime],
    }
}

fn ising_row(r: &IsingBoundResult) -> IsingBoundRow {
    IsingBoundRow {
        n: r.n,
        h: r.h,
        t_mode: r.mode_tag().into(),
        t: r.mode.time(),
        beta: r.beta,
        first_term_log: r.first_term_log,
        second_term: r.second_term,
        total: r.total,
    }
}

/// Exact Ising-chain gaps beside the analytic bottleneck bound.
pub fn run_ising_bound(config: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest> {
    if config.model.kind != ModelType::Ising {
        return Err(invalid("ising-bound needs the Ising model"));
    }
    let ProposalSpec::Quench { h: fields, .. } = &config.proposal else {
        return Err(invalid("ising-bound needs a quench proposal"));
    };
    if config.model.sizes.iter().any(|&n| n < 4 || n % 2 == 1) {
        return Err(invalid("ising-bound needs even N >= 4"));
    }
    let mut dir = RunDir::create(&opts.out, "ising-bound", config, opts.threads)?;
    let plan = same_plan(config);
    let rows = sweep(config, &plan).run(&mut dir, &opts.pool()?, opts.threads)?;
    let beta = config.beta;
    let modes = time_modes(config);
    let mut failures = 0;
    let mut note = |e: qmcmc_core::Error| {
        warn!("bound: {e}");
        failures += 1;
    };

    let mut exact = Vec::new();
    for row in rows.gaps.iter().filter(|r| r.instance == 0) {
        let h = row.h.unwrap_or(0.0);
        let mode = row.t.map_or(TimeMode::LongTime, TimeMode::Finite);
        match bound_finite_n(row.n, h, mode, beta) {
            Ok(b) => exact.push(IsingExactRow {
                n: row.n,
                h,
                t: row.t,
                beta,
                delta: row.delta,
                lambda2: row.lambda2,
                bound: b.total,
            }),
            Err(e) => note(e),
        }
    }

    let mut analytic = Vec::new();
    for &n in &config.ising.analytic_sizes {
        for &h in fields {
            for &mode in &modes {
                for result in [bound_finite_n(n, h, mode, beta), bound_asymptotic(n, h, mode, beta)] {
                    match result {
                        Ok(r) => analytic.push(ising_row(&r)),
                        Err(e) => note(e),
                    }
                }
            }
        }
    }

    let mut grids = Vec::new();
    if modes.iter().any(|m| m.time().is_some()) {
        for &n in &config.model.sizes {
            let mut grid = Vec::new();
            for &h in fields {
                for &mode in &modes {
                    match bound_finite_n(n, h, mode, beta) {
                        Ok(b) => grid.push(IsingGridRow { h, t: mode.time().unwrap_or(f64::NAN), bound: b.total }),
                        Err(e) => note(e),
                    }
                }
            }
            grids.push((ising_grid_file(n), grid));
        }
    }

    dir.add_failures(failures);
    write_recorded(&mut dir, ISING_EXACT, &exact)?;
    write_recorded(&mut dir, ISING_BOUND, &analytic)?;
    for (name, grid) in grids {
        write_recorded(&mut dir, &name, &grid)?;
    }
    dir.finish()
}

/// Recomputes summaries and fits from an existing `gaps.csv` (and `ipr.csv`).
pub fn run_fit(config: &ExperimentConfig, input: &Path, opts: &RunOptions) -> Result<Manifest> {
    let gaps: Vec<GapRow> = read_rows(&input.join(GAPS))?;
    let ipr: Vec<IprRow> = read_rows(&input.join(IPR))?;
    if gaps.is_empty() && ipr.is_empty() {
        return Err(invalid("no gaps.csv or ipr.csv rows to fit"));
    }
    let mut dir = RunDir::create(&opts.out, "fit", config, opts.threads)?;
    if !gaps.is_empty() {
        let mut summary = summarize_gaps(&gaps)?;
        if gaps.iter().any(|r| r.proposal == "local") {
            let scaled = times_n(&summary, "local", "local_times_n");
            summary.extend(scaled);
        }
        write_scaling(&mut dir, &summary, SUMMARY, FITS)?;
    }
    if !ipr.is_empty() {
        write_scaling(&mut dir, &summarize_ipr(&ipr)?, IPR_SUMMARY, IPR_FITS)?;
    }
    dir.finish()
}

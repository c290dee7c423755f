//! Instance averages and scaling fits over CSV rows.

use log::warn;
use qmcmc_core::scaling::{fit_scaling, summarize, ScalingFit, ScalingPoint};

use crate::records::{FitRow, GapRow, IprRow, SummaryRow};
use crate::Result;

/// Series identity: everything but `N` and the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesKey {
    pub model: String,
    pub proposal: String,
    pub t_mode: String,
    pub h: Option<f64>,
    pub t: Option<f64>,
}

impl SeriesKey {
    fn of_gap(row: &GapRow) -> Self {
        Self {
            model: row.model.clone(),
            proposal: row.proposal.clone(),
            t_mode: row.t_mode.clone(),
            h: row.h,
            t: row.t,
        }
    }

    fn of_summary(row: &SummaryRow) -> Self {
        Self {
            model: row.model.clone(),
            proposal: row.proposal.clone(),
            t_mode: row.t_mode.clone(),
            h: row.h,
            t: row.t,
        }
    }

    fn same(&self, other: &Self) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        self.model == other.model
            && self.proposal == other.proposal
            && self.t_mode == other.t_mode
            && bits(self.h) == bits(other.h)
            && bits(self.t) == bits(other.t)
    }
}

/// Samples per `N` within one series.
type Series = (SeriesKey, Vec<(usize, Vec<f64>)>);

/// Groups values by series, then by `N`, both in order of first appearance.
fn group(items: impl Iterator<Item = (SeriesKey, usize, f64)>) -> Vec<Series> {
    let mut groups: Vec<Series> = Vec::new();
    for (key, n, value) in items {
        let pos = match groups.iter().position(|(k, _)| k.same(&key)) {
            Some(pos) => pos,
            None => {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        };
        let sizes = &mut groups[pos].1;
        match sizes.iter_mut().find(|(m, _)| *m == n) {
            Some((_, values)) => values.push(value),
            None => sizes.push((n, vec![value])),
        }
    }
    groups
}

fn summary_rows(groups: Vec<Series>) -> Result<Vec<SummaryRow>> {
    let mut out = Vec::new();
    for (key, sizes) in groups {
        for (n, values) in sizes {
            let p = summarize(n, &values)?;
            out.push(SummaryRow {
                model: key.model.clone(),
                proposal: key.proposal.clone(),
                t_mode: key.t_mode.clone(),
                h: key.h,
                t: key.t,
                n,
                mean: p.mean,
                median: p.median,
                std_error: p.std_error,
                count: p.count,
            });
        }
    }
    Ok(out)
}

/// Mean, median and standard error of δ per series and `N`.
pub fn summarize_gaps(rows: &[GapRow]) -> Result<Vec<SummaryRow>> {
    summary_rows(group(rows.iter().map(|r| (SeriesKey::of_gap(r), r.n, r.delta))))
}

/// Window-averaged IPR per `h` and `N`, in the summary schema.
pub fn summarize_ipr(rows: &[IprRow]) -> Result<Vec<SummaryRow>> {
    let key = |r: &IprRow| SeriesKey {
        model: r.model.clone(),
        proposal: "quench".into(),
        t_mode: "long_time".into(),
        h: Some(r.h),
        t: None,
    };
    summary_rows(group(rows.iter().map(|r| (key(r), r.n, r.ipr_mean))))
}

fn point(row: &SummaryRow) -> ScalingPoint {
    ScalingPoint { n: row.n, mean: row.mean, median: row.median, std_error: row.std_error, count: row.count }
}

fn fit_row(key: &SeriesKey, fit: &ScalingFit) -> FitRow {
    FitRow {
        model: key.model.clone(),
        proposal: key.proposal.clone(),
        t_mode: key.t_mode.clone(),
        h: key.h,
        t: key.t,
        k: fit.k,
        prefactor_log2: fit.prefactor_log2,
        residual: fit.residual,
        weighted: fit.weighted,
        sizes: fit.points.iter().map(|p| p.n.to_string()).collect::<Vec<_>>().join(";"),
    }
}

/// One `2^{-kN}` fit per series; series that cannot be fitted (fewer than
/// three sizes, or a zero mean) are logged and skipped.
pub fn fit_summaries(summary: &[SummaryRow]) -> Vec<FitRow> {
    let mut series: Vec<(SeriesKey, Vec<ScalingPoint>)> = Vec::new();
    for row in summary {
        let key = SeriesKey::of_summary(row);
        match series.iter_mut().find(|(k, _)| k.same(&key)) {
            Some((_, points)) => points.push(point(row)),
            None => series.push((key, vec![point(row)])),
        }
    }
    series
        .iter()
        .filter_map(|(key, points)| match fit_scaling(points) {
            Ok(fit) => Some(fit_row(key, &fit)),
            Err(e) => {
                warn!("no fit for {} {} h={:?} t={:?}: {e}", key.model, key.proposal, key.h, key.t);
                None
            }
        })
        .collect()
}

/// Rescales a series by `N`, the "local strategy times N" comparison line.
pub fn times_n(summary: &[SummaryRow], proposal: &str, label: &str) -> Vec<SummaryRow> {
    summary
        .iter()
        .filter(|r| r.proposal == proposal)
        .map(|r| {
            let n = r.n as f64;
            SummaryRow {
                proposal: label.into(),
                mean: r.mean * n,
                median: r.median * n,
                std_error: r.std_error * n,
                ..r.clone()
            }
        })
        .collect()
}

/// Field values of the largest and smallest mean δ at size `n`, first on ties.
pub fn extreme_fields(summary: &[SummaryRow], n: usize) -> Option<(f64, f64)> {
    let series: Vec<(f64, f64)> = summary.iter().filter(|r| r.n == n).filter_map(|r| Some((r.h?, r.mean))).collect();
    let first = *series.first()?;
    let (mut max, mut min) = (first, first);
    for &(h, mean) in &series[1..] {
        if mean > max.1 {
            max = (h, mean);
        }
        if mean < min.1 {
            min = (h, mean);
        }
    }
    Some((max.0, min.0))
}

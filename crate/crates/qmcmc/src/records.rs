//! CSV row schemas. Columns appear in declaration order; columns beyond the
//! documented schemas are appended at the end so positional readers keep
//! working.

use serde::{Deserialize, Serialize};

/// Rows that belong to one `(N, instance)` work unit.
pub trait UnitRow {
    fn unit(&self) -> (usize, usize);
}

/// `model,N,instance,h,t_mode,beta,delta,lambda2,reducible,t,proposal,db_residual`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub instance: usize,
    pub h: Option<f64>,
    /// `long_time`, `finite_t` or `none` for classical proposals.
    pub t_mode: String,
    pub beta: f64,
    pub delta: f64,
    pub lambda2: f64,
    pub reducible: bool,
    pub t: Option<f64>,
    pub proposal: String,
    pub db_residual: f64,
}

/// `model,N,instance,h,window_lo,window_hi,states,ipr_mean`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IprRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub instance: usize,
    pub h: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub states: usize,
    pub ipr_mean: f64,
}

/// `N,instance,h,beta,cut_threshold,delta,lambda_B,fg,cs,ipr_bound,fe_bound,S_f,S_g,E_c,model,fg_discrepancy`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub instance: usize,
    pub h: f64,
    pub beta: f64,
    pub cut_threshold: f64,
    pub delta: f64,
    #[serde(rename = "lambda_B")]
    pub lambda_b: f64,
    pub fg: f64,
    pub cs: f64,
    pub ipr_bound: f64,
    pub fe_bound: f64,
    #[serde(rename = "S_f")]
    pub s_f: f64,
    #[serde(rename = "S_g")]
    pub s_g: f64,
    #[serde(rename = "E_c")]
    pub e_c: f64,
    pub model: String,
    pub fg_discrepancy: f64,
}

macro_rules! unit_row {
    ($($t:ty),*) => {
        $(impl UnitRow for $t {
            fn unit(&self) -> (usize, usize) {
                (self.n, self.instance)
            }
        })*
    };
}
unit_row!(GapRow, IprRow, BoundRow);

/// `N,h,t_mode,t,beta,first_term_log,second_term,total`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingBoundRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    /// `finite_t`, `long_time` or `asymptotic`.
    pub t_mode: String,
    pub t: Option<f64>,
    pub beta: f64,
    pub first_term_log: f64,
    pub second_term: f64,
    pub total: f64,
}

/// `N,h,t,beta,delta,lambda2,bound`: exact gap beside the finite-N bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingExactRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub t: Option<f64>,
    pub beta: f64,
    pub delta: f64,
    pub lambda2: f64,
    pub bound: f64,
}

/// `h,t,bound`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingGridRow {
    pub h: f64,
    pub t: f64,
    pub bound: f64,
}

/// `model,proposal,t_mode,h,t,N,mean,median,std_error,count`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub proposal: String,
    pub t_mode: String,
    pub h: Option<f64>,
    pub t: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    pub count: usize,
}

/// `model,proposal,t_mode,h,t,k,prefactor_log2,residual,weighted,sizes`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub proposal: String,
    pub t_mode: String,
    pub h: Option<f64>,
    pub t: Option<f64>,
    pub k: f64,
    pub prefactor_log2: f64,
    pub residual: f64,
    pub weighted: bool,
    /// Sizes used, `;`-separated.
    pub sizes: String,
}

/// `model,N,label,h,t,mean_delta,std_error,count,long_time_mean`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    /// `h_max` or `h_min`.
    pub label: String,
    pub h: f64,
    pub t: f64,
    pub mean_delta: f64,
    pub std_error: f64,
    pub count: usize,
    pub long_time_mean: f64,
}

//! Disorder instances and per-instance exports.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use qmcmc_core::linalg::Matrix;
use qmcmc_core::models::{ClassicalModel, PSpinModel, SkModel};
use qmcmc_core::quench::ProposalMatrix;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Largest spin count for dense proposal CSV export.
pub const PROPOSAL_CSV_MAX_SPINS: usize = 8;

/// `{"model":"sk","N":..,"J":[[..]],"h":[..],"seed":..,"index":..}`; p-spin
/// instances carry `p`, `tuples` and `couplings` instead of `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    #[serde(default)]
    pub h: Vec<f64>,
    pub seed: u64,
    pub index: usize,
}

impl InstanceRecord {
    pub fn from_model(model: &ClassicalModel, seed: u64, index: usize) -> Self {
        let mut record = Self {
            model: String::new(),
            n: model.n(),
            j: None,
            p: None,
            tuples: None,
            couplings: None,
            h: Vec::new(),
            seed,
            index,
        };
        match model {
            ClassicalModel::IsingChain { .. } => record.model = "ising".into(),
            ClassicalModel::Sk(sk) => {
                record.model = "sk".into();
                let n = sk.n();
                record.j = Some((0..n).map(|i| (0..n).map(|k| sk.coupling(i, k)).collect()).collect());
                record.h = sk.fields().to_vec();
            }
            ClassicalModel::PSpin(ps) => {
                record.model = "pspin".into();
                record.p = Some(ps.order());
                record.tuples = Some(ps.tuples().map(<[usize]>::to_vec).collect());
                record.couplings = Some(ps.couplings().to_vec());
                record.h = ps.fields().to_vec();
            }
        }
        record
    }

    pub fn to_model(&self) -> Result<ClassicalModel> {
        let missing = |what: &str| HarnessError::Config(format!("instance record lacks {what}"));
        Ok(match self.model.as_str() {
            "ising" => ClassicalModel::ising_chain(self.n)?,
            "sk" => {
                let j = self.j.as_ref().ok_or_else(|| missing("J"))?;
                ClassicalModel::Sk(SkModel::new(self.n, j.concat(), self.h.clone())?)
            }
            "pspin" => ClassicalModel::PSpin(PSpinModel::new(
                self.n,
                self.p.ok_or_else(|| missing("p"))?,
                self.tuples.clone().ok_or_else(|| missing("tuples"))?,
                self.couplings.clone().ok_or_else(|| missing("couplings"))?,
                self.h.clone(),
            )?),
            other => return Err(HarnessError::Config(format!("unknown model {other:?}"))),
        })
    }
}

pub fn write_instance(path: &Path, record: &InstanceRecord) -> Result<()> {
    fs::write(path, serde_json::to_string(record)? + "\n").map_err(HarnessError::io(path))
}

pub fn read_instance(path: &Path) -> Result<InstanceRecord> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
struct EnergyRow {
    index: usize,
    energy: f64,
}

#[derive(Serialize)]
struct IprVectorRow {
    index: usize,
    energy: f64,
    ipr: f64,
}

/// `index,energy`
pub fn write_energy_csv(path: &Path, energies: &[f64]) -> Result<()> {
    let rows: Vec<EnergyRow> = energies.iter().enumerate().map(|(index, &energy)| EnergyRow { index, energy }).collect();
    crate::output::write_rows(path, &rows)
}

/// `index,energy,ipr`
pub fn write_ipr_csv(path: &Path, energies: &[f64], ipr: &[f64]) -> Result<()> {
    if energies.len() != ipr.len() {
        return Err(qmcmc_core::Error::DimensionMismatch { expected: energies.len(), actual: ipr.len() }.into());
    }
    let rows: Vec<IprVectorRow> = energies
        .iter()
        .zip(ipr)
        .enumerate()
        .map(|(index, (&energy, &ipr))| IprVectorRow { index, energy, ipr })
        .collect();
    crate::output::write_rows(path, &rows)
}

/// Little-endian `u64` dimension, then `Q(x|y)` row-major with the current
/// state `y` on the row.
pub fn write_proposal_binary(path: &Path, q: &ProposalMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(HarnessError::io(path))?;
    let mut out = BufWriter::new(file);
    let dim = q.dimension();
    let m = q.matrix();
    let mut write = || -> std::io::Result<()> {
        out.write_all(&(dim as u64).to_le_bytes())?;
        for y in 0..dim {
            for x in 0..dim {
                out.write_all(&m[(y, x)].to_le_bytes())?;
            }
        }
        out.flush()
    };
    write().map_err(HarnessError::io(path))
}

pub fn read_proposal_binary(path: &Path) -> Result<Matrix> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(HarnessError::io(path))?;
    let corrupt = || HarnessError::Config(format!("{}: malformed proposal file", path.display()));
    let header: [u8; 8] = bytes.get(..8).ok_or_else(corrupt)?.try_into().map_err(|_| corrupt())?;
    let dim = u64::from_le_bytes(header) as usize;
    let body = &bytes[8..];
    if dim.checked_mul(dim).and_then(|d| d.checked_mul(8)) != Some(body.len()) {
        return Err(corrupt());
    }
    let value = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().expect("8-byte chunk"));
    Ok(Matrix::from_fn(dim, dim, |y, x| value(y * dim + x)))
}

#[derive(Serialize)]
struct ProposalRow {
    from: usize,
    to: usize,
    probability: f64,
}

/// `from,to,probability` for every pair; refused above 8 spins.
pub fn write_proposal_csv(path: &Path, q: &ProposalMatrix) -> Result<()> {
    let dim = q.dimension();
    if dim > 1 << PROPOSAL_CSV_MAX_SPINS {
        return Err(HarnessError::Config(format!("proposal CSV export is limited to N <= {PROPOSAL_CSV_MAX_SPINS}")));
    }
    let rows: Vec<ProposalRow> = (0..dim)
        .flat_map(|from| (0..dim).map(move |to| (from, to)))
        .map(|(from, to)| ProposalRow { from, to, probability: q.prob(to, from) })
        .collect();
    crate::output::write_rows(path, &rows)
}

//! On-disk formats.
//!
//! Trajectory CSV, one row per iteration:
//!
//! ```text
//! k,beta,alpha,n_plus,n_minus,delta_n,infidelity,re_0,im_0,...,re_{d-1},im_{d-1}
//! ```
//!
//! `infidelity` is empty when the run had no reference state; `re_j`/`im_j`
//! are the amplitudes of the estimate after iteration `k`. Summary CSV:
//!
//! ```text
//! iteration,median,q25,q75
//! ```
//!
//! with 1-based iterations. Floats are written in shortest round-trip form,
//! so reading a file back yields bit-identical values. Structured artifacts
//! (run outcomes with their replayable spec, tomograms, tables) are JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::SummaryStats;
use crate::mle::{DensityMatrix, ProjectorSet};
use crate::sgt::Trajectory;

const TRAJECTORY_FIXED_COLUMNS: [&str; 7] =
    ["k", "beta", "alpha", "n_plus", "n_minus", "delta_n", "infidelity"];
const SUMMARY_COLUMNS: [&str; 4] = ["iteration", "median", "q25", "q75"];

pub fn trajectory_header(dim: usize) -> Vec<String> {
    let mut header: Vec<String> = TRAJECTORY_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for j in 0..dim {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    header
}

pub fn write_trajectory_csv<W: Write>(writer: W, trajectory: &Trajectory) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(trajectory_header(trajectory.config.dim))?;
    for r in &trajectory.records {
        let mut row = vec![
            r.k.to_string(),
            r.beta.to_string(),
            r.alpha.to_string(),
            r.counts_plus.to_string(),
            r.counts_minus.to_string(),
            r.delta_n.to_string(),
            r.infidelity_vs_target.map(|v| v.to_string()).unwrap_or_default(),
        ];
        for c in r.estimate.amplitudes() {
            row.push(c.re.to_string());
            row.push(c.im.to_string());
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One parsed row of a trajectory CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub beta: f64,
    pub alpha: f64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub delta_n: f64,
    pub infidelity: Option<f64>,
    pub estimate: Vec<Complex64>,
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize, line: u64) -> Result<T> {
    let raw = record.get(index).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Parse {
        what: "CSV field",
        detail: format!("line {line}, column {}: {raw:?}", index + 1),
    })
}

pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<Vec<TrajectoryRow>> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    let width = header.len();
    if width < TRAJECTORY_FIXED_COLUMNS.len() + 2 || !(width - TRAJECTORY_FIXED_COLUMNS.len()).is_multiple_of(2) {
        return Err(Error::Parse {
            what: "trajectory CSV",
            detail: format!("unexpected header with {width} columns"),
        });
    }
    let dim = (width - TRAJECTORY_FIXED_COLUMNS.len()) / 2;
    if header.iter().map(str::to_string).collect::<Vec<_>>() != trajectory_header(dim) {
        return Err(Error::Parse {
            what: "trajectory CSV",
            detail: "header does not match the trajectory schema".into(),
        });
    }
    let mut rows = Vec::new();
    for record in input.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let infidelity = match record.get(6).map(str::trim) {
            Some("") | None => None,
            Some(_) => Some(parse_field(&record, 6, line)?),
        };
        let estimate = (0..dim)
            .map(|j| {
                let base = TRAJECTORY_FIXED_COLUMNS.len() + 2 * j;
                Ok(Complex64::new(
                    parse_field(&record, base, line)?,
                    parse_field(&record, base + 1, line)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(TrajectoryRow {
            k: parse_field(&record, 0, line)?,
            beta: parse_field(&record, 1, line)?,
            alpha: parse_field(&record, 2, line)?,
            n_plus: parse_field(&record, 3, line)?,
            n_minus: parse_field(&record, 4, line)?,
            delta_n: parse_field(&record, 5, line)?,
            infidelity,
            estimate,
        });
    }
    Ok(rows)
}

/// Infidelity column of a trajectory CSV.
pub fn infidelity_curve_from_rows(rows: &[TrajectoryRow]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.infidelity.ok_or(Error::Parse {
                what: "trajectory CSV",
                detail: format!("iteration {} has no infidelity", r.k),
            })
        })
        .collect()
}

/// Per-iteration median and quartile band, as stored in a summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryCurve {
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

impl SummaryCurve {
    pub fn len(&self) -> usize {
        self.median.len()
    }

    pub fn is_empty(&self) -> bool {
        self.median.is_empty()
    }
}

impl From<&SummaryStats> for SummaryCurve {
    fn from(stats: &SummaryStats) -> Self {
        Self {
            median: stats.median.clone(),
            q25: stats.lower_quartile.clone(),
            q75: stats.upper_quartile.clone(),
        }
    }
}

pub fn write_summary_csv<W: Write>(writer: W, stats: &SummaryStats) -> Result<()> {
    write_summary_curve_csv(writer, &SummaryCurve::from(stats))
}

pub fn write_summary_curve_csv<W: Write>(writer: W, curve: &SummaryCurve) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(SUMMARY_COLUMNS)?;
    for k in 0..curve.len() {
        out.write_record([
            (k + 1).to_string(),
            curve.median[k].to_string(),
            curve.q25[k].to_string(),
            curve.q75[k].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(reader: R) -> Result<SummaryCurve> {
    let mut input = csv::Reader::from_reader(reader);
    if input.headers()?.iter().ne(SUMMARY_COLUMNS) {
        return Err(Error::Parse {
            what: "summary CSV",
            detail: format!("expected header {}", SUMMARY_COLUMNS.join(",")),
        });
    }
    let mut curve = SummaryCurve {
        median: Vec::new(),
        q25: Vec::new(),
        q75: Vec::new(),
    };
    for (i, record) in input.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let iteration: usize = parse_field(&record, 0, line)?;
        if iteration != i + 1 {
            return Err(Error::Parse {
                what: "summary CSV",
                detail: format!("line {line}: iteration {iteration}, expected {}", i + 1),
            });
        }
        curve.median.push(parse_field(&record, 1, line)?);
        curve.q25.push(parse_field(&record, 2, line)?);
        curve.q75.push(parse_field(&record, 3, line)?);
    }
    if curve.is_empty() {
        return Err(Error::EmptyInput("summary CSV without rows"));
    }
    Ok(curve)
}

/// Counts and reconstruction of one maximum-likelihood tomogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomogramRecord {
    pub projectors: ProjectorSet,
    pub counts: Vec<u64>,
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub log_likelihood: f64,
}

pub fn write_json<T: Serialize, P: AsRef<Path>>(path: P, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned, P: AsRef<Path>>(path: P) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

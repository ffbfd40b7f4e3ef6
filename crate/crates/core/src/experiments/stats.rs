use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Percentile with linear interpolation between the closest ranks.
///
/// For sorted values `v[0..n]` the `p`-quantile sits at fractional rank
/// `h = (n − 1)·p`; `{1, 2, 3, 4}` has median 2.5.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("percentile of no values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median with quartile offsets, e.g. a final fidelity `99.35 +0.29 −0.51 %`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub median: f64,
    /// Upper quartile minus median.
    pub upper: f64,
    /// Median minus lower quartile.
    pub lower: f64,
}

impl QuartileSummary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("quartile summary of no values"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = percentile_sorted(&sorted, 0.5);
        Ok(Self {
            median,
            upper: percentile_sorted(&sorted, 0.75) - median,
            lower: median - percentile_sorted(&sorted, 0.25),
        })
    }

    pub fn lower_quartile(&self) -> f64 {
        self.median - self.lower
    }

    pub fn upper_quartile(&self) -> f64 {
        self.median + self.upper
    }
}

/// Per-iteration median and quartile band of infidelity over a population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub population: usize,
    pub median: Vec<f64>,
    pub lower_quartile: Vec<f64>,
    pub upper_quartile: Vec<f64>,
    pub final_fidelity: QuartileSummary,
}

impl SummaryStats {
    pub fn iterations(&self) -> usize {
        self.median.len()
    }

    pub fn final_median_infidelity(&self) -> f64 {
        *self.median.last().expect("summaries are never empty")
    }

    /// First 1-based iteration whose median fidelity reaches `level`.
    pub fn first_iteration_reaching(&self, level: f64) -> Option<usize> {
        self.median
            .iter()
            .position(|&inf| 1.0 - inf >= level)
            .map(|i| i + 1)
    }
}

/// Per-iteration statistics of equally long infidelity curves.
pub fn summarize<C: AsRef<[f64]>>(curves: &[C]) -> Result<SummaryStats> {
    let first = curves.first().ok_or(Error::EmptyInput("no trajectories to summarize"))?;
    let len = first.as_ref().len();
    if len == 0 {
        return Err(Error::EmptyInput("trajectory without iterations"));
    }
    if let Some(bad) = curves.iter().find(|c| c.as_ref().len() != len) {
        return Err(Error::LengthMismatch(format!(
            "trajectory with {} iterations among trajectories with {len}",
            bad.as_ref().len()
        )));
    }
    let mut median = Vec::with_capacity(len);
    let mut lower = Vec::with_capacity(len);
    let mut upper = Vec::with_capacity(len);
    let mut column = vec![0.0; curves.len()];
    for k in 0..len {
        for (slot, curve) in column.iter_mut().zip(curves) {
            *slot = curve.as_ref()[k];
        }
        column.sort_by(f64::total_cmp);
        lower.push(percentile_sorted(&column, 0.25));
        median.push(percentile_sorted(&column, 0.5));
        upper.push(percentile_sorted(&column, 0.75));
    }
    let finals: Vec<f64> = curves.iter().map(|c| 1.0 - c.as_ref()[len - 1]).collect();
    Ok(SummaryStats {
        population: curves.len(),
        median,
        lower_quartile: lower,
        upper_quartile: upper,
        final_fidelity: QuartileSummary::of(&finals)?,
    })
}

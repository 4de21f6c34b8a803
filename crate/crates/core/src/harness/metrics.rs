//! Reward curves: per-run cumulative and windowed averages, and their
//! across-run aggregate.

use crate::error::{Error, Result};

/// Per-episode rewards of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub run: usize,
    pub rewards: Vec<f64>,
}

impl MetricSeries {
    pub fn new(run: usize, rewards: Vec<f64>) -> Self {
        MetricSeries { run, rewards }
    }

    pub fn cumulative_average(&self) -> Result<Vec<f64>> {
        cumulative_average(&self.rewards)
    }

    /// Cumulative average after the last episode.
    pub fn final_average(&self) -> Result<f64> {
        if self.rewards.is_empty() {
            return Err(Error::Data("empty reward series".into()));
        }
        let mut acc = Compensated::default();
        for &r in &self.rewards {
            acc.add(r);
        }
        Ok(acc.total() / self.rewards.len() as f64)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `out[k] = mean(rewards[..=k])`.
pub fn cumulative_average(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::Data("cumulative average of an empty series".into()));
    }
    let mut acc = Compensated::default();
    Ok(rewards
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            acc.add(r);
            acc.total() / (k + 1) as f64
        })
        .collect())
}

/// Trailing mean over at most `window` episodes.
pub fn windowed_mean(rewards: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Usage("window must be at least 1".into()));
    }
    let mut acc = Compensated::default();
    let mut out = Vec::with_capacity(rewards.len());
    for (k, &r) in rewards.iter().enumerate() {
        acc.add(r);
        if k >= window {
            acc.add(-rewards[k - window]);
        }
        out.push(acc.total() / (k + 1).min(window) as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub episode: usize,
    pub mean: f64,
    /// Standard error of the mean across runs (0 for a single run).
    pub stderr: f64,
}

/// Across-run mean and standard error of a per-episode curve.
pub fn aggregate_curves(curves: &[Vec<f64>]) -> Result<Vec<AggregatePoint>> {
    let Some(first) = curves.first() else {
        return Err(Error::Data("no runs to aggregate".into()));
    };
    let len = first.len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(Error::Data("runs have different lengths".into()));
    }
    let n = curves.len() as f64;
    Ok((0..len)
        .map(|k| {
            let mean = curves.iter().map(|c| c[k]).sum::<f64>() / n;
            let stderr = if curves.len() > 1 {
                let var = curves.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            AggregatePoint {
                episode: k + 1,
                mean,
                stderr,
            }
        })
        .collect())
}

/// Mean cumulative-average curve across runs.
pub fn aggregate_cumulative(series: &[MetricSeries]) -> Result<Vec<AggregatePoint>> {
    let curves = series
        .iter()
        .map(MetricSeries::cumulative_average)
        .collect::<Result<Vec<_>>>()?;
    aggregate_curves(&curves)
}

//! Performance measures of a fitted time-course and their aggregation over runs.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::LassoFit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mse_beta: f64,
    /// `None` when the covariate covariance is unknown.
    pub mse_pred: Option<f64>,
    pub msize: f64,
    pub fp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MseBeta,
    MsePred,
    Msize,
    Fp,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::MseBeta, Metric::MsePred, Metric::Msize, Metric::Fp];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MseBeta => "mse_beta",
            Metric::MsePred => "mse_pred",
            Metric::Msize => "msize",
            Metric::Fp => "fp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn value(self, m: &RunMetrics) -> Option<f64> {
        match self {
            Metric::MseBeta => Some(m.mse_beta),
            Metric::MsePred => m.mse_pred,
            Metric::Msize => Some(m.msize),
            Metric::Fp => Some(m.fp),
        }
    }
}

fn check_truth(fits: &[LassoFit], truth: ArrayView2<'_, f64>) -> Result<()> {
    if truth.ncols() != fits.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} fits against {} truth columns",
            fits.len(),
            truth.ncols()
        )));
    }
    if let Some(f) = fits.iter().find(|f| f.coefficients.len() != truth.nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "fit with {} coefficients against {} truth rows",
            f.coefficients.len(),
            truth.nrows()
        )));
    }
    Ok(())
}

fn mean_over(fits: &[LassoFit], f: impl Fn(usize, &LassoFit) -> f64) -> f64 {
    if fits.is_empty() {
        return 0.0;
    }
    fits.iter()
        .enumerate()
        .map(|(r, fit)| f(r, fit))
        .sum::<f64>()
        / fits.len() as f64
}

/// `(1/N) Σ_r ‖β̂(t_r) − β(t_r)‖²`.
pub fn mse_beta(fits: &[LassoFit], truth: ArrayView2<'_, f64>) -> Result<f64> {
    check_truth(fits, truth)?;
    Ok(mean_over(fits, |r, fit| {
        fit.coefficients
            .iter()
            .zip(truth.column(r))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }))
}

/// `(1/N) Σ_r [(β̂₀ − β₀)² + (β̂ − β)ᵀ Σ (β̂ − β)]`.
pub fn mse_pred(
    fits: &[LassoFit],
    truth: ArrayView2<'_, f64>,
    truth_intercepts: &[f64],
    cov: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_truth(fits, truth)?;
    let p = truth.nrows();
    if truth_intercepts.len() != fits.len() || cov.dim() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "{} intercepts and a {:?} covariance for {} fits of {p} coefficients",
            truth_intercepts.len(),
            cov.dim(),
            fits.len()
        )));
    }
    Ok(mean_over(fits, |r, fit| {
        let d: Vec<(usize, f64)> = fit
            .coefficients
            .iter()
            .zip(truth.column(r))
            .map(|(a, b)| a - b)
            .enumerate()
            .filter(|(_, v)| *v != 0.0)
            .collect();
        let mut quad = 0.0;
        for &(j, dj) in &d {
            for &(k, dk) in &d {
                quad += dj * cov[[j, k]] * dk;
            }
        }
        let di = fit.intercept - truth_intercepts[r];
        di * di + quad
    }))
}

/// Mean number of nonzero coefficients (intercept excluded).
pub fn model_size(fits: &[LassoFit]) -> f64 {
    mean_over(fits, |_, f| {
        f.coefficients.iter().filter(|b| **b != 0.0).count() as f64
    })
}

/// Mean number of coefficients that are nonzero in the fit but zero in the truth.
pub fn false_positives(fits: &[LassoFit], truth: ArrayView2<'_, f64>) -> Result<f64> {
    check_truth(fits, truth)?;
    Ok(mean_over(fits, |r, fit| {
        fit.coefficients
            .iter()
            .zip(truth.column(r))
            .filter(|(a, b)| **a != 0.0 && **b == 0.0)
            .count() as f64
    }))
}

/// All four measures; `mse_pred` only when `cov` is given.
pub fn run_metrics(
    fits: &[LassoFit],
    truth: ArrayView2<'_, f64>,
    truth_intercepts: &[f64],
    cov: Option<ArrayView2<'_, f64>>,
) -> Result<RunMetrics> {
    Ok(RunMetrics {
        mse_beta: mse_beta(fits, truth)?,
        mse_pred: cov
            .map(|c| mse_pred(fits, truth, truth_intercepts, c))
            .transpose()?,
        msize: model_size(fits),
        fp: false_positives(fits, truth)?,
    })
}

/// Sample mean and standard deviation (divisor `m − 1`; absent for one run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: Option<f64>,
    pub runs: usize,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyList);
    }
    let m = values.len();
    let mean = values.iter().sum::<f64>() / m as f64;
    let sd = (m > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (m - 1) as f64).sqrt()
    });
    Ok(Summary { mean, sd, runs: m })
}

/// Per-metric summaries in [`Metric::ALL`] order; a metric missing from any
/// run is left out.
pub fn aggregate_runs(metrics: &[RunMetrics]) -> Result<Vec<(Metric, Summary)>> {
    if metrics.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut out = Vec::new();
    for m in Metric::ALL {
        let vals: Option<Vec<f64>> = metrics.iter().map(|r| m.value(r)).collect();
        if let Some(v) = vals {
            out.push((m, summarize(&v)?));
        }
    }
    Ok(out)
}

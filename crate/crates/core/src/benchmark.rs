//! Monte-Carlo runner: simulate, tune, refit, score, aggregate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{fit_timecourse, EstimatorId};
use crate::io::{BenchmarkConfig, ReportRow};
use crate::metrics::{aggregate_runs, run_metrics, RunMetrics};
use crate::simulation::{ar1_covariance, derive_seed, simulate_dataset, DESIGN_RHO};
use crate::tuning::{tune_prepared, ValidationSet};

const TRAIN_STREAM: u64 = 0;
const VALID_STREAM: u64 = 1;

/// Per-run metrics of every estimator, in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    pub estimators: Vec<EstimatorId>,
    /// `runs[k][e]` is run `k`, estimator `e`.
    pub runs: Vec<Vec<RunMetrics>>,
}

impl BenchmarkOutcome {
    pub fn metrics_of(&self, id: EstimatorId) -> Option<Vec<RunMetrics>> {
        let e = self.estimators.iter().position(|x| *x == id)?;
        Some(self.runs.iter().map(|r| r[e]).collect())
    }

    pub fn report_rows(&self, config: &BenchmarkConfig) -> Result<Vec<ReportRow>> {
        let mut rows = Vec::new();
        for (e, &id) in self.estimators.iter().enumerate() {
            let per_run: Vec<RunMetrics> = self.runs.iter().map(|r| r[e]).collect();
            for (metric, s) in aggregate_runs(&per_run)? {
                rows.push(ReportRow {
                    estimator: id,
                    model: config.model,
                    sigma: config.sigma,
                    n: config.n,
                    p: config.p,
                    metric,
                    mean: s.mean,
                    sd: s.sd,
                    runs: s.runs,
                });
            }
        }
        Ok(rows)
    }
}

/// Runs the benchmark and returns the aggregated report rows.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<ReportRow>> {
    run_benchmark_detailed(config)?.report_rows(config)
}

/// Runs the benchmark keeping per-run metrics. Runs are scheduled on a pool
/// of `config.threads` workers; results are ordered by run index, and the
/// lowest failing run index is reported on error.
pub fn run_benchmark_detailed(config: &BenchmarkConfig) -> Result<BenchmarkOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let cov = ar1_covariance(config.p, DESIGN_RHO);
    let results: Vec<Result<Vec<RunMetrics>>> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| single_run(config, run, &cov))
            .collect()
    });
    let mut runs = Vec::with_capacity(config.runs);
    for (run, res) in results.into_iter().enumerate() {
        match res {
            Ok(m) => runs.push(m),
            Err(e) => {
                return Err(Error::Run {
                    run,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(BenchmarkOutcome {
        estimators: config.estimators.clone(),
        runs,
    })
}

fn single_run(
    config: &BenchmarkConfig,
    run: usize,
    cov: &ndarray::Array2<f64>,
) -> Result<Vec<RunMetrics>> {
    let simulate = |n: usize, stream: u64| {
        simulate_dataset(
            config.model,
            n,
            config.p,
            config.sigma,
            config.n_times,
            derive_seed(config.seed, run as u64, stream),
        )
    };
    let train = simulate(config.n, TRAIN_STREAM)?;
    let valid = simulate(config.n / 2, VALID_STREAM)?;
    let prepared = train.prepare()?;
    let vset = ValidationSet::new(&prepared, &valid)?;
    let specs = config.specs();
    let grid = config.tuning_grid()?;
    let tuned = tune_prepared(&specs, &prepared, &vset, &grid, &config.solver)?;
    let truth = train
        .truth
        .as_ref()
        .expect("simulated data carries its truth");
    let intercepts = train
        .truth_intercepts
        .clone()
        .unwrap_or_else(|| vec![0.0; config.n_times]);
    specs
        .iter()
        .zip(&tuned)
        .map(|(spec, params)| {
            let fit = fit_timecourse(spec, &prepared, params, &config.solver)?;
            run_metrics(&fit.fits, truth.view(), &intercepts, Some(cov.view()))
        })
        .collect()
}

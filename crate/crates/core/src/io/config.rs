use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorId, EstimatorSpec};
use crate::simulation::{time_grid, SimModel};
use crate::smoothing::{default_bandwidths, Kernel};
use crate::solver::SolverOptions;
use crate::tuning::{LambdaGrid, TuningGrid};

/// JSON schema of [`BenchmarkConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../../config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lambda_count: usize,
    /// Defaults to `1e-3` when `p < n`, `1e-2` otherwise.
    pub lambda_min_ratio: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub bandwidth_count: usize,
    pub bandwidths: Option<Vec<f64>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lambda_count: 50,
            lambda_min_ratio: None,
            lambdas: None,
            bandwidth_count: 10,
            bandwidths: None,
        }
    }
}

impl GridConfig {
    pub fn to_grid(&self, times: &[f64], n: usize, p: usize) -> TuningGrid {
        let lambdas = match &self.lambdas {
            Some(l) => LambdaGrid::Explicit(l.clone()),
            None => LambdaGrid::Relative {
                count: self.lambda_count,
                min_ratio: self
                    .lambda_min_ratio
                    .unwrap_or(if p >= n { 1e-2 } else { 1e-3 }),
            },
        };
        let bandwidths = match &self.bandwidths {
            Some(b) => b.clone(),
            None => default_bandwidths(times, self.bandwidth_count),
        };
        TuningGrid {
            lambdas,
            bandwidths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub model: SimModel,
    pub n: usize,
    pub p: usize,
    pub n_times: usize,
    pub sigma: f64,
    pub runs: usize,
    pub estimators: Vec<EstimatorId>,
    pub kernel: Kernel,
    pub gamma: f64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub grid: GridConfig,
    pub solver: SolverOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            model: SimModel::SomeLargeEffects,
            n: 50,
            p: 8,
            n_times: 18,
            sigma: 2.0,
            runs: 100,
            estimators: EstimatorId::ALL.to_vec(),
            kernel: Kernel::Gaussian,
            gamma: 1.0,
            seed: 1,
            threads: 0,
            grid: GridConfig::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn is_high_dimensional(&self) -> bool {
        self.p >= self.n
    }

    /// Time grid of the simulated data.
    pub fn times(&self) -> Result<Vec<f64>> {
        match self.n_times {
            1 => Ok(vec![0.0]),
            k => time_grid(k),
        }
    }

    pub fn tuning_grid(&self) -> Result<TuningGrid> {
        let g = self.grid.to_grid(&self.times()?, self.n, self.p);
        g.validate()?;
        Ok(g)
    }

    pub fn specs(&self) -> Vec<EstimatorSpec> {
        self.estimators
            .iter()
            .map(|&id| {
                EstimatorSpec::new(id)
                    .with_kernel(self.kernel)
                    .with_gamma(self.gamma)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if self.n < 4 {
            return bad(format!(
                "n must be >= 4 (validation set has n/2 rows), got {}",
                self.n
            ));
        }
        if self.p < self.model.min_predictors() {
            return bad(format!(
                "model {} needs p >= {}, got {}",
                self.model.number(),
                self.model.min_predictors(),
                self.p
            ));
        }
        if self.n_times == 0 {
            return bad("n_times must be >= 1".into());
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be > 0, got {}", self.sigma));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected".into());
        }
        let mut ids = self.estimators.clone();
        ids.sort();
        ids.dedup();
        if ids.len() != self.estimators.len() {
            return bad("duplicate estimator ids".into());
        }
        if self.is_high_dimensional() {
            if let Some(id) = self.estimators.iter().find(|id| id.uses_ols()) {
                return bad(format!(
                    "estimator {id} needs an OLS initial fit and is unavailable when p >= n"
                ));
            }
        }
        if self.solver.penalty_factors.is_some() {
            return bad("penalty factors cannot be set in a benchmark".into());
        }
        self.solver
            .validate(self.p)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.tuning_grid()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

//! Validation-set selection of `(λ, h)` per time-point.
//!
//! Multi-stage estimators are tuned sequentially: the initial stage is chosen
//! first and frozen, then the final stage's grid is searched. When several
//! estimators are tuned together they share the intermediate results, so the
//! Lasso, adaptive Lasso and smoothed Lasso searches run once per time-point.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorId, EstimatorSpec, RescaledDesign, StageParams};
use crate::simulation::{PreparedTimeCourse, TimeCourseDataset};
use crate::smoothing::{default_bandwidths, smooth_response, smoothing_weights, Kernel};
use crate::solver::{lambda_max, lasso_path, ols_fit, DesignMatrix, LassoFit, SolverOptions};

/// How the penalty values of a stage are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// `count` values geometric from the stage's own `λ_max` down to
    /// `min_ratio·λ_max`, computed per time-point and stage.
    Relative { count: usize, min_ratio: f64 },
    /// The same descending list everywhere.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambdas: LambdaGrid,
    /// Ascending, starting at 0.
    pub bandwidths: Vec<f64>,
}

impl TuningGrid {
    /// 50 penalties (ratio `1e-3`, or `1e-2` when `p ≥ n`) and `{0}` plus ten
    /// geometric bandwidths.
    pub fn default_for(times: &[f64], n: usize, p: usize) -> Self {
        Self {
            lambdas: LambdaGrid::Relative {
                count: 50,
                min_ratio: if p >= n { 1e-2 } else { 1e-3 },
            },
            bandwidths: default_bandwidths(times, 10),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.lambdas {
            LambdaGrid::Relative { count, min_ratio } => {
                if *count < 2 {
                    return Err(Error::InvalidArgument("lambda count must be >= 2".into()));
                }
                if !(*min_ratio > 0.0 && *min_ratio < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "min_ratio must lie in (0, 1), got {min_ratio}"
                    )));
                }
            }
            LambdaGrid::Explicit(l) => {
                if l.is_empty() {
                    return Err(Error::InvalidArgument("empty lambda list".into()));
                }
                if l.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidArgument(
                        "lambdas must be finite and >= 0".into(),
                    ));
                }
                if l.windows(2).any(|w| w[0] <= w[1]) {
                    return Err(Error::InvalidArgument(
                        "lambdas must be strictly descending".into(),
                    ));
                }
            }
        }
        let b = &self.bandwidths;
        if b.first() != Some(&0.0) {
            return Err(Error::InvalidArgument("bandwidths must start at 0".into()));
        }
        if b.iter().any(|v| !v.is_finite()) || b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "bandwidths must be finite and strictly ascending".into(),
            ));
        }
        Ok(())
    }

    fn lambdas_from(&self, anchor: f64) -> Vec<f64> {
        match &self.lambdas {
            LambdaGrid::Relative { count, min_ratio } => {
                let anchor = if anchor.is_finite() && anchor > 0.0 {
                    anchor
                } else {
                    1.0
                };
                geometric_grid(anchor, *count, *min_ratio)
            }
            LambdaGrid::Explicit(l) => l.clone(),
        }
    }
}

/// Selected parameters at one time-point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimepointParams {
    pub stages: Vec<StageParams>,
    /// Validation loss of the final stage.
    pub validation_loss: f64,
    /// Validation loss of each stage's selected fit, initial stage first.
    pub stage_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub estimator: EstimatorId,
    pub timepoints: Vec<TimepointParams>,
}

impl TunedParams {
    /// The same stage parameters at every time-point.
    pub fn constant(estimator: EstimatorId, stages: Vec<StageParams>, timepoints: usize) -> Self {
        let tp = TimepointParams {
            stages,
            validation_loss: f64::NAN,
            stage_losses: Vec::new(),
        };
        Self {
            estimator,
            timepoints: vec![tp; timepoints],
        }
    }
}

/// `count` values from `anchor` down to `min_ratio·anchor`, geometric.
pub fn geometric_grid(anchor: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    if count == 1 {
        return vec![anchor];
    }
    let step = min_ratio.ln() / (count - 1) as f64;
    (0..count)
        .map(|k| match k {
            0 => anchor,
            _ if k + 1 == count => anchor * min_ratio,
            _ => anchor * (step * k as f64).exp(),
        })
        .collect()
}

/// Geometric grid anchored at `lambda_max(x, y)`.
pub fn make_lambda_grid(
    x: &DesignMatrix,
    y: &[f64],
    count: usize,
    min_ratio: f64,
) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidArgument("lambda count must be >= 2".into()));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "min_ratio must lie in (0, 1), got {min_ratio}"
        )));
    }
    Ok(geometric_grid(lambda_max(x, y)?, count, min_ratio))
}

/// `(1/n_v)·‖y_v − β̂₀ − X_v β̂‖²`; `x_v` must already carry the training
/// centers and scales.
pub fn validation_loss(fit: &LassoFit, x_v: &DesignMatrix, y_v: &[f64]) -> Result<f64> {
    if y_v.len() != x_v.nrows() || fit.coefficients.len() != x_v.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "validation design {}×{}, response {}, fit with {} coefficients",
            x_v.nrows(),
            x_v.ncols(),
            y_v.len(),
            fit.coefficients.len()
        )));
    }
    let mut pred = vec![fit.intercept; y_v.len()];
    for &j in &fit.active_set {
        let b = fit.coefficients[j];
        for (p, v) in pred.iter_mut().zip(x_v.column(j)) {
            *p += b * v;
        }
    }
    let sse: f64 = pred.iter().zip(y_v).map(|(p, y)| (y - p) * (y - p)).sum();
    Ok(sse / y_v.len() as f64)
}

/// Validation data expressed on the training scale.
#[derive(Debug, Clone)]
pub struct ValidationSet {
    pub design: DesignMatrix,
    pub responses: Array2<f64>,
}

impl ValidationSet {
    pub fn new(train: &PreparedTimeCourse, valid: &TimeCourseDataset) -> Result<Self> {
        valid.validate()?;
        if valid.times != train.times {
            return Err(Error::DimensionMismatch(
                "validation set uses a different time grid".into(),
            ));
        }
        if valid.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("validation responses"));
        }
        Ok(Self {
            design: train.design.transform(valid.x.view())?,
            responses: valid.y.clone(),
        })
    }

    pub fn from_parts(design: DesignMatrix, responses: ArrayView2<'_, f64>) -> Result<Self> {
        if design.nrows() != responses.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "validation design has {} rows, responses {}",
                design.nrows(),
                responses.nrows()
            )));
        }
        Ok(Self {
            design,
            responses: responses.to_owned(),
        })
    }
}

/// Tunes one estimator.
pub fn tune_estimator(
    spec: &EstimatorSpec,
    train: &TimeCourseDataset,
    valid: &TimeCourseDataset,
    grid: &TuningGrid,
    opts: &SolverOptions,
) -> Result<TunedParams> {
    let prepared = train.prepare()?;
    let vset = ValidationSet::new(&prepared, valid)?;
    let mut out = tune_prepared(std::slice::from_ref(spec), &prepared, &vset, grid, opts)?;
    Ok(out.remove(0))
}

/// Tunes several estimators on prepared data, sharing intermediate searches.
/// Time-points are processed in parallel; results are returned in `specs` order.
pub fn tune_prepared(
    specs: &[EstimatorSpec],
    train: &PreparedTimeCourse,
    valid: &ValidationSet,
    grid: &TuningGrid,
    opts: &SolverOptions,
) -> Result<Vec<TunedParams>> {
    grid.validate()?;
    if valid.design.ncols() != train.design.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "training data has {} predictors, validation {}",
            train.design.ncols(),
            valid.design.ncols()
        )));
    }
    if valid.responses.ncols() != train.timepoints() {
        return Err(Error::DimensionMismatch(format!(
            "training data has {} time-points, validation {}",
            train.timepoints(),
            valid.responses.ncols()
        )));
    }
    for s in specs {
        if !(s.gamma > 0.0) || !s.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be > 0, got {}",
                s.gamma
            )));
        }
    }
    let per_tp: Vec<Result<Vec<TimepointParams>>> = (0..train.timepoints())
        .into_par_iter()
        .map(|r| tune_timepoint(specs, train, valid, grid, opts, r))
        .collect();

    let mut out: Vec<TunedParams> = specs
        .iter()
        .map(|s| TunedParams {
            estimator: s.id,
            timepoints: Vec::with_capacity(train.timepoints()),
        })
        .collect();
    let mut errors = Vec::new();
    for (r, res) in per_tp.into_iter().enumerate() {
        match res {
            Ok(tps) => {
                for (o, tp) in out.iter_mut().zip(tps) {
                    o.timepoints.push(tp);
                }
            }
            Err(e) => errors.push((r, e)),
        }
    }
    if !errors.is_empty() {
        return Err(Error::TimePoints(errors));
    }
    Ok(out)
}

fn tune_timepoint(
    specs: &[EstimatorSpec],
    train: &PreparedTimeCourse,
    valid: &ValidationSet,
    grid: &TuningGrid,
    opts: &SolverOptions,
    r: usize,
) -> Result<Vec<TimepointParams>> {
    // One shared search state per (kernel, gamma).
    let mut tuners: Vec<TimepointTuner<'_>> = Vec::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let idx = match tuners
            .iter()
            .position(|t| t.kernel == spec.kernel && t.gamma.to_bits() == spec.gamma.to_bits())
        {
            Some(i) => i,
            None => {
                tuners.push(TimepointTuner::new(
                    train,
                    valid,
                    grid,
                    opts,
                    r,
                    spec.kernel,
                    spec.gamma,
                ));
                tuners.len() - 1
            }
        };
        let choice = tuners[idx].tune(spec.id)?;
        out.push(TimepointParams {
            stages: choice.stages,
            validation_loss: choice.loss,
            stage_losses: choice.stage_losses,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct Choice {
    stages: Vec<StageParams>,
    loss: f64,
    stage_losses: Vec<f64>,
    fit: LassoFit,
}

/// Running argmin over grid cells: smallest loss, ties toward larger λ, then larger h.
#[derive(Default)]
struct Best {
    cell: Option<(f64, f64, f64, LassoFit)>,
    first_error: Option<Error>,
}

impl Best {
    fn offer(&mut self, lambda: f64, h: f64, loss: f64, fit: &LassoFit) {
        let loss = if loss.is_nan() { f64::INFINITY } else { loss };
        let better = match &self.cell {
            None => true,
            Some((bl, bh, bloss, _)) => {
                loss < *bloss || (loss == *bloss && (lambda > *bl || (lambda == *bl && h > *bh)))
            }
        };
        if better {
            self.cell = Some((lambda, h, loss, fit.clone()));
        }
    }

    fn error(&mut self, e: Error) {
        if self.first_error.is_none() {
            self.first_error = Some(e);
        }
    }

    fn finish(self) -> Result<(f64, f64, f64, LassoFit)> {
        match (self.cell, self.first_error) {
            (Some(c), _) => Ok(c),
            (None, Some(e)) => Err(e),
            (None, None) => Err(Error::InvalidArgument("empty tuning grid".into())),
        }
    }
}

struct TimepointTuner<'a> {
    train: &'a PreparedTimeCourse,
    valid: &'a ValidationSet,
    grid: &'a TuningGrid,
    opts: &'a SolverOptions,
    r: usize,
    kernel: Kernel,
    gamma: f64,
    y: Vec<f64>,
    y_v: Vec<f64>,
    smoothed: Vec<Option<Vec<f64>>>,
    est1: Option<Choice>,
    est3: Option<Choice>,
    est4: Option<Choice>,
}

impl<'a> TimepointTuner<'a> {
    fn new(
        train: &'a PreparedTimeCourse,
        valid: &'a ValidationSet,
        grid: &'a TuningGrid,
        opts: &'a SolverOptions,
        r: usize,
        kernel: Kernel,
        gamma: f64,
    ) -> Self {
        Self {
            train,
            valid,
            grid,
            opts,
            r,
            kernel,
            gamma,
            y: train.response(r),
            y_v: valid.responses.column(r).to_vec(),
            smoothed: vec![None; grid.bandwidths.len()],
            est1: None,
            est3: None,
            est4: None,
        }
    }

    fn tune(&mut self, id: EstimatorId) -> Result<Choice> {
        match id {
            EstimatorId::Lasso => self.est1(),
            EstimatorId::AdaptiveOls => self.est2(),
            EstimatorId::AdaptiveLasso => self.est3(),
            EstimatorId::SmoothedLasso => self.est4(),
            EstimatorId::SmoothedAdaptiveOls => self.est5(),
            EstimatorId::SmoothedAdaptiveSmoothedInit => {
                let init = self.est4()?;
                self.smoothed_adaptive(init)
            }
            EstimatorId::SmoothedAdaptiveAdaptiveInit => {
                let init = self.est3()?;
                self.smoothed_adaptive(init)
            }
        }
    }

    fn loss(&self, fit: &LassoFit) -> f64 {
        validation_loss(fit, &self.valid.design, &self.y_v).unwrap_or(f64::INFINITY)
    }

    fn response(&mut self, k: usize) -> Result<Vec<f64>> {
        let h = self.grid.bandwidths[k];
        if h == 0.0 {
            return Ok(self.y.clone());
        }
        if let Some(v) = &self.smoothed[k] {
            return Ok(v.clone());
        }
        let w = smoothing_weights(&self.train.times, self.r, h, self.kernel)?;
        let v = smooth_response(self.train.responses.view(), &w)?;
        self.smoothed[k] = Some(v.clone());
        Ok(v)
    }

    fn scan(&self, best: &mut Best, lambdas: &[f64], h: f64, fits: &[LassoFit]) {
        for (&l, f) in lambdas.iter().zip(fits) {
            best.offer(l, h, self.loss(f), f);
        }
    }

    fn est1(&mut self) -> Result<Choice> {
        if let Some(c) = &self.est1 {
            return Ok(c.clone());
        }
        let x = &self.train.design;
        let lambdas = self.grid.lambdas_from(lambda_max(x, &self.y)?);
        let fits = lasso_path(x, &self.y, &lambdas, self.opts)?;
        let mut best = Best::default();
        self.scan(&mut best, &lambdas, 0.0, &fits);
        let (l, _, loss, fit) = best.finish()?;
        let c = Choice {
            stages: vec![StageParams::univariate(l)],
            loss,
            stage_losses: vec![loss],
            fit,
        };
        self.est1 = Some(c.clone());
        Ok(c)
    }

    /// Final adaptive stage on the unsmoothed response.
    fn univariate_adaptive(&self, init: &[f64]) -> Result<(f64, f64, LassoFit)> {
        let design = RescaledDesign::new(&self.train.design, init, self.gamma)?;
        let lambdas = self.grid.lambdas_from(design.weighted_lambda_max(&self.y));
        let fits = design.path(&self.y, &lambdas, self.opts);
        let mut best = Best::default();
        self.scan(&mut best, &lambdas, 0.0, &fits);
        let (l, _, loss, fit) = best.finish()?;
        Ok((l, loss, fit))
    }

    fn est2(&mut self) -> Result<Choice> {
        let init = ols_fit(&self.train.design, &self.y)?;
        let (l, loss, fit) = self.univariate_adaptive(&init.coefficients)?;
        Ok(Choice {
            stages: vec![StageParams::univariate(l)],
            loss,
            stage_losses: vec![loss],
            fit,
        })
    }

    fn est3(&mut self) -> Result<Choice> {
        if let Some(c) = &self.est3 {
            return Ok(c.clone());
        }
        let init = self.est1()?;
        let (l, loss, fit) = self.univariate_adaptive(&init.fit.coefficients)?;
        let mut stages = init.stages;
        stages.push(StageParams::univariate(l));
        let mut stage_losses = init.stage_losses;
        stage_losses.push(loss);
        let c = Choice {
            stages,
            loss,
            stage_losses,
            fit,
        };
        self.est3 = Some(c.clone());
        Ok(c)
    }

    fn est4(&mut self) -> Result<Choice> {
        if let Some(c) = &self.est4 {
            return Ok(c.clone());
        }
        let lambdas = self
            .grid
            .lambdas_from(lambda_max(&self.train.design, &self.y)?);
        let mut best = Best::default();
        for k in 0..self.grid.bandwidths.len() {
            let h = self.grid.bandwidths[k];
            let fits = self
                .response(k)
                .and_then(|y| lasso_path(&self.train.design, &y, &lambdas, self.opts));
            match fits {
                Ok(f) => self.scan(&mut best, &lambdas, h, &f),
                Err(e) => best.error(e),
            }
        }
        let (l, h, loss, fit) = best.finish()?;
        let c = Choice {
            stages: vec![StageParams::smoothed(l, h)],
            loss,
            stage_losses: vec![loss],
            fit,
        };
        self.est4 = Some(c.clone());
        Ok(c)
    }

    fn est5(&mut self) -> Result<Choice> {
        let x = &self.train.design;
        let anchor = ols_fit(x, &self.y)
            .and_then(|f| RescaledDesign::new(x, &f.coefficients, self.gamma))
            .map(|d| d.weighted_lambda_max(&self.y))
            .unwrap_or(f64::NAN);
        let lambdas = self.grid.lambdas_from(anchor);
        let mut best = Best::default();
        for k in 0..self.grid.bandwidths.len() {
            let h = self.grid.bandwidths[k];
            let fits = self.response(k).and_then(|y| {
                let init = ols_fit(x, &y)?;
                let d = RescaledDesign::new(x, &init.coefficients, self.gamma)?;
                Ok(d.path(&y, &lambdas, self.opts))
            });
            match fits {
                Ok(f) => self.scan(&mut best, &lambdas, h, &f),
                Err(e) => best.error(e),
            }
        }
        let (l, h, loss, fit) = best.finish()?;
        Ok(Choice {
            stages: vec![StageParams::smoothed(l, h)],
            loss,
            stage_losses: vec![loss],
            fit,
        })
    }

    /// Final smoothed adaptive stage with a frozen initial estimator.
    fn smoothed_adaptive(&mut self, init: Choice) -> Result<Choice> {
        let design = RescaledDesign::new(&self.train.design, &init.fit.coefficients, self.gamma)?;
        let lambdas = self.grid.lambdas_from(design.weighted_lambda_max(&self.y));
        let mut best = Best::default();
        for k in 0..self.grid.bandwidths.len() {
            let h = self.grid.bandwidths[k];
            match self.response(k) {
                Ok(y) => {
                    let fits = design.path(&y, &lambdas, self.opts);
                    self.scan(&mut best, &lambdas, h, &fits);
                }
                Err(e) => best.error(e),
            }
        }
        let (l, h, loss, fit) = best.finish()?;
        let mut stages = init.stages;
        stages.push(StageParams::smoothed(l, h));
        let mut stage_losses = init.stage_losses;
        stage_losses.push(loss);
        Ok(Choice {
            stages,
            loss,
            stage_losses,
            fit,
        })
    }
}

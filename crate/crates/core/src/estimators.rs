//! The seven estimator pipelines.
//!
//! | id | pipeline |
//! |----|----------|
//! | 1 | Lasso on `y(t_r)` |
//! | 2 | Adaptive Lasso on `y(t_r)`, OLS initial estimator |
//! | 3 | Adaptive Lasso on `y(t_r)`, Lasso initial estimator |
//! | 4 | Lasso on the smoothed response `ỹ(t_r)` |
//! | 5 | Adaptive Lasso on `ỹ(t_r)`, OLS-on-`ỹ(t_r)` initial estimator |
//! | 6 | Adaptive Lasso on `ỹ(t_r)`, estimator 4 as initial estimator |
//! | 7 | Adaptive Lasso on `ỹ(t_r)`, estimator 3 as initial estimator |

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::PreparedTimeCourse;
use crate::smoothing::{smooth_response, smoothing_weights, Kernel};
use crate::solver::{lasso_fit, ols_fit, solve, Columns, DesignMatrix, LassoFit, SolverOptions};
use crate::tuning::TunedParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum EstimatorId {
    Lasso,
    AdaptiveOls,
    AdaptiveLasso,
    SmoothedLasso,
    SmoothedAdaptiveOls,
    SmoothedAdaptiveSmoothedInit,
    SmoothedAdaptiveAdaptiveInit,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 7] = [
        EstimatorId::Lasso,
        EstimatorId::AdaptiveOls,
        EstimatorId::AdaptiveLasso,
        EstimatorId::SmoothedLasso,
        EstimatorId::SmoothedAdaptiveOls,
        EstimatorId::SmoothedAdaptiveSmoothedInit,
        EstimatorId::SmoothedAdaptiveAdaptiveInit,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(id: u8) -> Result<Self> {
        id.checked_sub(1)
            .and_then(|i| Self::ALL.get(i as usize).copied())
            .ok_or_else(|| Error::InvalidArgument(format!("estimator id must be 1..=7, got {id}")))
    }

    pub fn is_smoothed(self) -> bool {
        self.number() >= 4
    }

    pub fn uses_ols(self) -> bool {
        matches!(
            self,
            EstimatorId::AdaptiveOls | EstimatorId::SmoothedAdaptiveOls
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            EstimatorId::Lasso => "Lasso",
            EstimatorId::AdaptiveOls => "Adapt. Lasso with OLS",
            EstimatorId::AdaptiveLasso => "Adapt. Lasso with univ. Lasso",
            EstimatorId::SmoothedLasso => "Smoothed Lasso",
            EstimatorId::SmoothedAdaptiveOls => "Smoothed Adapt. Lasso with smoothed OLS",
            EstimatorId::SmoothedAdaptiveSmoothedInit => "Smoothed Adapt. Lasso with 4.",
            EstimatorId::SmoothedAdaptiveAdaptiveInit => "Smoothed Adapt. Lasso with 3.",
        }
    }

    /// Expected stage layout, initial stage first: `true` where the stage
    /// carries a bandwidth.
    pub fn stage_layout(self) -> &'static [bool] {
        match self {
            EstimatorId::Lasso | EstimatorId::AdaptiveOls => &[false],
            EstimatorId::AdaptiveLasso => &[false, false],
            EstimatorId::SmoothedLasso | EstimatorId::SmoothedAdaptiveOls => &[true],
            EstimatorId::SmoothedAdaptiveSmoothedInit => &[true, true],
            EstimatorId::SmoothedAdaptiveAdaptiveInit => &[false, false, true],
        }
    }

    pub fn check_params(self, stages: &[StageParams]) -> Result<()> {
        let layout = self.stage_layout();
        let ok = stages.len() == layout.len()
            && stages
                .iter()
                .zip(layout)
                .all(|(s, &bw)| s.bandwidth.is_some() == bw);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "estimator {} expects stages {:?} (true = has bandwidth), got {:?}",
                self.number(),
                layout,
                stages
            )));
        }
        for s in stages {
            if !(s.lambda >= 0.0) || !s.lambda.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "invalid lambda {}",
                    s.lambda
                )));
            }
            if let Some(h) = s.bandwidth {
                if !(h >= 0.0) || !h.is_finite() {
                    return Err(Error::InvalidArgument(format!("invalid bandwidth {h}")));
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<u8> for EstimatorId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::from_number(v)
    }
}

impl From<EstimatorId> for u8 {
    fn from(id: EstimatorId) -> u8 {
        id.number()
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Parses `"1,3,4"` or `"1-7"` style lists.
pub fn parse_estimator_list(s: &str) -> Result<Vec<EstimatorId>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::InvalidArgument(format!("bad estimator list entry '{part}'"));
        if let Some((a, b)) = part.split_once('-') {
            let a: u8 = a.trim().parse().map_err(|_| bad())?;
            let b: u8 = b.trim().parse().map_err(|_| bad())?;
            for id in a..=b {
                out.push(EstimatorId::from_number(id)?);
            }
        } else {
            out.push(EstimatorId::from_number(part.parse().map_err(|_| bad())?)?);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyList);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub id: EstimatorId,
    /// Exponent in `τ_j = 1/|β_init,j|^γ`.
    pub gamma: f64,
    pub kernel: Kernel,
}

impl EstimatorSpec {
    pub fn new(id: EstimatorId) -> Self {
        Self {
            id,
            gamma: 1.0,
            kernel: Kernel::Gaussian,
        }
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Penalty and (for smoothed stages) bandwidth of one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

impl StageParams {
    pub fn univariate(lambda: f64) -> Self {
        Self {
            lambda,
            bandwidth: None,
        }
    }

    pub fn smoothed(lambda: f64, bandwidth: f64) -> Self {
        Self {
            lambda,
            bandwidth: Some(bandwidth),
        }
    }
}

/// `τ_j = 1/|β_init,j|^γ`, `+∞` exactly where `β_init,j = 0`.
pub fn adaptive_penalty_weights(beta_init: &[f64], gamma: f64) -> Vec<f64> {
    beta_init
        .iter()
        .map(|b| {
            if *b == 0.0 {
                f64::INFINITY
            } else {
                1.0 / b.abs().powf(gamma)
            }
        })
        .collect()
}

/// Design with column j multiplied by `|β_init,j|^γ`; columns with a zero
/// initial coefficient are dropped.
pub(crate) struct RescaledDesign {
    p: usize,
    n: usize,
    keep: Vec<usize>,
    scales: Vec<f64>,
    data: Vec<f64>,
    sq_norms: Vec<f64>,
}

impl RescaledDesign {
    pub(crate) fn new(x: &DesignMatrix, beta_init: &[f64], gamma: f64) -> Result<Self> {
        if beta_init.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "initial estimate has {} entries for {} columns",
                beta_init.len(),
                x.ncols()
            )));
        }
        if beta_init.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("initial estimate"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be > 0, got {gamma}"
            )));
        }
        let n = x.nrows();
        let keep: Vec<usize> = (0..x.ncols()).filter(|&j| beta_init[j] != 0.0).collect();
        let scales: Vec<f64> = keep
            .iter()
            .map(|&j| beta_init[j].abs().powf(gamma))
            .collect();
        let mut data = Vec::with_capacity(n * keep.len());
        let mut sq_norms = Vec::with_capacity(keep.len());
        for (&j, &s) in keep.iter().zip(&scales) {
            let start = data.len();
            data.extend(x.column(j).iter().map(|v| v * s));
            sq_norms.push(data[start..].iter().map(|v| v * v).sum());
        }
        Ok(Self {
            p: x.ncols(),
            n,
            keep,
            scales,
            data,
            sq_norms,
        })
    }

    pub(crate) fn weighted_lambda_max(&self, y: &[f64]) -> f64 {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        self.data
            .chunks_exact(self.n.max(1))
            .map(|c| {
                2.0 * c
                    .iter()
                    .zip(y)
                    .map(|(a, b)| a * (b - mean))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Solves on the rescaled columns and maps back to the original coordinates.
    pub(crate) fn fit(
        &self,
        y: &[f64],
        lambda: f64,
        warm: Option<&[f64]>,
        opts: &SolverOptions,
    ) -> LassoFit {
        let cols = Columns {
            n: self.n,
            data: &self.data,
            sq_norms: &self.sq_norms,
        };
        let warm_scaled: Option<Vec<f64>> = warm.map(|w| {
            self.keep
                .iter()
                .zip(&self.scales)
                .map(|(&j, s)| w[j] / s)
                .collect()
        });
        let inner = solve(
            &cols,
            y,
            lambda,
            None,
            Some(&self.scales),
            warm_scaled.as_deref(),
            opts,
            None,
        );
        let mut coefficients = vec![0.0; self.p];
        for ((&j, s), b) in self.keep.iter().zip(&self.scales).zip(&inner.coefficients) {
            let v = s * b;
            coefficients[j] = if v.is_subnormal() { 0.0 } else { v };
        }
        LassoFit::new(
            inner.intercept,
            coefficients,
            inner.objective,
            inner.iterations,
            inner.converged,
            self.p - self.keep.len(),
        )
    }

    pub(crate) fn path(&self, y: &[f64], lambdas: &[f64], opts: &SolverOptions) -> Vec<LassoFit> {
        let mut fits: Vec<LassoFit> = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let warm = fits.last().map(|f| f.coefficients.as_slice());
            let fit = self.fit(y, lambda, warm, opts);
            fits.push(fit);
        }
        fits
    }
}

/// Minimizes `‖y − β₀ − Xβ‖² + λ Σ τ_j|β_j|` with `τ_j = 1/|β_init,j|^γ`, by
/// rescaling the design columns and solving a plain Lasso on the columns
/// whose initial coefficient is nonzero.
///
/// When `beta_init` is identically zero the intercept-only fit is returned
/// and [`LassoFit::all_excluded`] reports it. `opts.penalty_factors` is not
/// consulted.
pub fn adaptive_lasso_fit(
    x: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    beta_init: &[f64],
    gamma: f64,
    opts: &SolverOptions,
) -> Result<LassoFit> {
    crate::solver::check_response(x, y)?;
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let base = SolverOptions {
        penalty_factors: None,
        ..opts.clone()
    };
    base.validate(x.ncols())?;
    Ok(RescaledDesign::new(x, beta_init, gamma)?.fit(y, lambda, None, &base))
}

/// Response used at time-point `r` for bandwidth `h` (`h = 0` is `y(t_r)` itself).
pub fn response_at(
    data: &PreparedTimeCourse,
    r: usize,
    h: f64,
    kernel: Kernel,
) -> Result<Vec<f64>> {
    if r >= data.timepoints() {
        return Err(Error::InvalidArgument(format!(
            "time-point {r} out of range for {} time-points",
            data.timepoints()
        )));
    }
    if h == 0.0 {
        return Ok(data.response(r));
    }
    let w = smoothing_weights(&data.times, r, h, kernel)?;
    smooth_response(data.responses.view(), &w)
}

/// Runs estimator `spec.id` at time-point `r` with fixed stage parameters.
pub fn fit_estimator_at(
    spec: &EstimatorSpec,
    data: &PreparedTimeCourse,
    r: usize,
    stages: &[StageParams],
    opts: &SolverOptions,
) -> Result<LassoFit> {
    spec.id.check_params(stages)?;
    let x = &data.design;
    let gamma = spec.gamma;
    let smoothed = |s: &StageParams| response_at(data, r, s.bandwidth.unwrap_or(0.0), spec.kernel);
    let lasso = |y: &[f64], lambda: f64| lasso_fit(x, y, lambda, opts);
    let adaptive =
        |y: &[f64], lambda: f64, init: &[f64]| adaptive_lasso_fit(x, y, lambda, init, gamma, opts);

    match spec.id {
        EstimatorId::Lasso | EstimatorId::SmoothedLasso => {
            lasso(&smoothed(&stages[0])?, stages[0].lambda)
        }
        EstimatorId::AdaptiveOls | EstimatorId::SmoothedAdaptiveOls => {
            let y = smoothed(&stages[0])?;
            let init = ols_fit(x, &y)?;
            adaptive(&y, stages[0].lambda, &init.coefficients)
        }
        EstimatorId::AdaptiveLasso => {
            let y = data.response(r);
            let init = lasso(&y, stages[0].lambda)?;
            adaptive(&y, stages[1].lambda, &init.coefficients)
        }
        EstimatorId::SmoothedAdaptiveSmoothedInit => {
            let init = lasso(&smoothed(&stages[0])?, stages[0].lambda)?;
            adaptive(&smoothed(&stages[1])?, stages[1].lambda, &init.coefficients)
        }
        EstimatorId::SmoothedAdaptiveAdaptiveInit => {
            let y = data.response(r);
            let first = lasso(&y, stages[0].lambda)?;
            let second = adaptive(&y, stages[1].lambda, &first.coefficients)?;
            adaptive(
                &smoothed(&stages[2])?,
                stages[2].lambda,
                &second.coefficients,
            )
        }
    }
}

/// Fits of one estimator at every time-point.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCourseFit {
    pub fits: Vec<LassoFit>,
    pub spec: EstimatorSpec,
    pub params: TunedParams,
}

/// Maps [`fit_estimator_at`] over all time-points in parallel.
pub fn fit_timecourse(
    spec: &EstimatorSpec,
    data: &PreparedTimeCourse,
    tuned: &TunedParams,
    opts: &SolverOptions,
) -> Result<TimeCourseFit> {
    if tuned.timepoints.len() != data.timepoints() {
        return Err(Error::DimensionMismatch(format!(
            "parameters for {} time-points, data has {}",
            tuned.timepoints.len(),
            data.timepoints()
        )));
    }
    let results: Vec<Result<LassoFit>> = (0..data.timepoints())
        .into_par_iter()
        .map(|r| fit_estimator_at(spec, data, r, &tuned.timepoints[r].stages, opts))
        .collect();
    let mut fits = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(f) => fits.push(f),
            Err(e) => errors.push((r, e)),
        }
    }
    if !errors.is_empty() {
        return Err(Error::TimePoints(errors));
    }
    Ok(TimeCourseFit {
        fits,
        spec: *spec,
        params: tuned.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::standardize_columns;
    use ndarray::array;

    #[test]
    fn penalty_weight_examples() {
        assert_eq!(
            adaptive_penalty_weights(&[1.0, 1.0, 1.0], 1.0),
            vec![1.0; 3]
        );
        assert_eq!(adaptive_penalty_weights(&[2.0, 0.5], 1.0), vec![0.5, 2.0]);
        assert_eq!(
            adaptive_penalty_weights(&[-2.0, 0.0], 2.0),
            vec![0.25, f64::INFINITY]
        );
    }

    #[test]
    fn estimator_ids_round_trip() {
        for id in EstimatorId::ALL {
            assert_eq!(EstimatorId::from_number(id.number()).unwrap(), id);
        }
        assert!(EstimatorId::from_number(0).is_err());
        assert!(EstimatorId::from_number(8).is_err());
        assert_eq!(
            parse_estimator_list("7, 1,3-4").unwrap(),
            vec![
                EstimatorId::Lasso,
                EstimatorId::AdaptiveLasso,
                EstimatorId::SmoothedLasso,
                EstimatorId::SmoothedAdaptiveAdaptiveInit
            ]
        );
        assert!(parse_estimator_list("1,x").is_err());
    }

    #[test]
    fn stage_layout_is_enforced() {
        let id = EstimatorId::SmoothedAdaptiveAdaptiveInit;
        let good = [
            StageParams::univariate(1.0),
            StageParams::univariate(2.0),
            StageParams::smoothed(3.0, 0.5),
        ];
        assert!(id.check_params(&good).is_ok());
        assert!(id.check_params(&good[..2]).is_err());
        assert!(EstimatorId::Lasso
            .check_params(&[StageParams::smoothed(1.0, 0.2)])
            .is_err());
        assert!(EstimatorId::SmoothedLasso
            .check_params(&[StageParams::smoothed(-1.0, 0.2)])
            .is_err());
    }

    #[test]
    fn zero_initial_estimate_gives_intercept_only() {
        let x = array![[1.0, 0.5], [2.0, -1.0], [3.0, 2.0], [4.0, 0.0], [0.0, 1.0]];
        let d = standardize_columns(x.view()).unwrap();
        let y = [1.0, 2.0, 4.0, 3.0, 0.0];
        let fit =
            adaptive_lasso_fit(&d, &y, 0.5, &[0.0, 0.0], 1.0, &SolverOptions::default()).unwrap();
        assert!(fit.all_excluded());
        assert_eq!(fit.coefficients, vec![0.0, 0.0]);
        assert!((fit.intercept - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unit_initial_estimate_is_plain_lasso() {
        let x = array![
            [1.0, 0.5],
            [2.0, -1.0],
            [3.0, 2.0],
            [4.0, 0.0],
            [0.0, 1.0],
            [1.5, 1.5]
        ];
        let d = standardize_columns(x.view()).unwrap();
        let y = [1.0, 2.0, 4.0, 3.0, 0.0, 1.0];
        let opts = SolverOptions::default();
        let a = adaptive_lasso_fit(&d, &y, 0.8, &[1.0, 1.0], 1.0, &opts).unwrap();
        let b = lasso_fit(&d, &y, 0.8, &opts).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.intercept, b.intercept);
    }
}

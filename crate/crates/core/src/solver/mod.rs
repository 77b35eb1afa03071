//! ℓ₁-penalized least squares.
//!
//! Every fit minimizes the unnormalized objective
//!
//! ```text
//! ‖y − β₀·1 − Xβ‖₂² + λ · Σ_j τ_j |β_j|
//! ```
//!
//! with an unpenalized intercept `β₀`. Plain Lasso uses `τ_j ≡ 1`. With this
//! convention the orthogonal-design solution is `soft_threshold(x_jᵀy_c / n, λ / 2n)`
//! and the smallest all-zero penalty is `2 · max_j |x_jᵀ y_c|`.

mod bruteforce;
mod cd;
mod ols;

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bruteforce::lasso_bruteforce;
pub(crate) use cd::{solve, Columns};
pub use ols::ols_fit;

/// `sign(z) · max(|z| − t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Column-major design matrix together with the centering and scaling that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
    centers: Vec<f64>,
    scales: Vec<f64>,
    sq_norms: Vec<f64>,
    standardized: bool,
}

impl DesignMatrix {
    /// Wraps a matrix as-is (centers 0, scales 1, not flagged standardized).
    pub fn from_raw(x: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, p) = x.dim();
        check_finite_matrix(x, "design matrix")?;
        let data: Vec<f64> = x.t().iter().copied().collect();
        Ok(Self::assemble(
            n,
            p,
            data,
            vec![0.0; p],
            vec![1.0; p],
            false,
        ))
    }

    fn assemble(
        n: usize,
        p: usize,
        data: Vec<f64>,
        centers: Vec<f64>,
        scales: Vec<f64>,
        standardized: bool,
    ) -> Self {
        let sq_norms = data
            .chunks_exact(n.max(1))
            .take(p)
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        Self {
            n,
            p,
            data,
            centers,
            scales,
            sq_norms,
            standardized,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.n, self.p).f(), &self.data).expect("consistent shape")
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub(crate) fn columns(&self) -> Columns<'_> {
        Columns {
            n: self.n,
            data: &self.data,
            sq_norms: &self.sq_norms,
        }
    }

    /// Applies the stored centers and scales to new raw rows (e.g. a
    /// validation set), returning a column-major matrix on this design's scale.
    pub fn transform(&self, raw: ArrayView2<'_, f64>) -> Result<DesignMatrix> {
        let (m, p) = raw.dim();
        if p != self.p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} columns, got {p}",
                self.p
            )));
        }
        check_finite_matrix(raw, "design matrix")?;
        let mut data = Vec::with_capacity(m * p);
        for j in 0..p {
            let (c, s) = (self.centers[j], self.scales[j]);
            data.extend(raw.column(j).iter().map(|v| (v - c) / s));
        }
        Ok(Self::assemble(
            m,
            p,
            data,
            self.centers.clone(),
            self.scales.clone(),
            false,
        ))
    }

    /// Maps standardized-scale coefficients back to the raw column scale.
    pub fn coefficients_to_raw(&self, intercept: f64, coefficients: &[f64]) -> (f64, Vec<f64>) {
        let raw: Vec<f64> = coefficients
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| b / s)
            .collect();
        let shift: f64 = raw.iter().zip(&self.centers).map(|(b, c)| b * c).sum();
        (intercept - shift, raw)
    }

    /// `β₀ + Xβ`, touching only the nonzero coefficients.
    pub fn predict(&self, intercept: f64, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![intercept; self.n];
        for (j, &b) in coefficients.iter().enumerate() {
            if b != 0.0 {
                for (o, x) in out.iter_mut().zip(self.column(j)) {
                    *o += b * x;
                }
            }
        }
        out
    }

    pub fn to_array(&self) -> Array2<f64> {
        self.values().to_owned()
    }
}

/// Centers each column to mean 0 and scales it to variance 1 (divisor n).
pub fn standardize_columns(x: ArrayView2<'_, f64>) -> Result<DesignMatrix> {
    let (n, p) = x.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    check_finite_matrix(x, "design matrix")?;
    let mut data = Vec::with_capacity(n * p);
    let mut centers = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for j in 0..p {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = var.sqrt();
        let magnitude = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(scale > 1e-12 * magnitude) || scale == 0.0 {
            return Err(Error::ConstantColumn(j));
        }
        data.extend(col.iter().map(|v| (v - mean) / scale));
        centers.push(mean);
        scales.push(scale);
    }
    Ok(DesignMatrix::assemble(n, p, data, centers, scales, true))
}

/// Result of a single penalized (or OLS) fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub intercept: f64,
    /// Exact zeros for inactive coordinates.
    pub coefficients: Vec<f64>,
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Coordinates fixed at zero by an infinite penalty factor.
    #[serde(default)]
    pub excluded: usize,
}

impl LassoFit {
    pub(crate) fn new(
        intercept: f64,
        coefficients: Vec<f64>,
        objective: f64,
        iterations: usize,
        converged: bool,
        excluded: usize,
    ) -> Self {
        let active_set = active_indices(&coefficients);
        Self {
            intercept,
            coefficients,
            active_set,
            objective,
            iterations,
            converged,
            excluded,
        }
    }

    pub fn size(&self) -> usize {
        self.active_set.len()
    }

    /// True when every coordinate was excluded up front; the fit is then the
    /// intercept-only model.
    pub fn all_excluded(&self) -> bool {
        !self.coefficients.is_empty() && self.excluded == self.coefficients.len()
    }
}

pub(crate) fn active_indices(coefficients: &[f64]) -> Vec<usize> {
    coefficients
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when the largest absolute coefficient change in a sweep is below this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// τ_j; `+∞` pins the coordinate at zero. `None` means τ ≡ 1.
    #[serde(skip)]
    pub penalty_factors: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_sweeps: 100_000,
            penalty_factors: None,
        }
    }
}

impl SolverOptions {
    pub fn with_penalty_factors(mut self, factors: Vec<f64>) -> Self {
        self.penalty_factors = Some(factors);
        self
    }

    pub(crate) fn validate(&self, p: usize) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        if let Some(tau) = &self.penalty_factors {
            if tau.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "{} penalty factors for {p} columns",
                    tau.len()
                )));
            }
            if tau.iter().any(|t| t.is_nan() || *t < 0.0) {
                return Err(Error::InvalidArgument(
                    "penalty factors must be >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Absolute tolerance used when certifying a fit through its KKT conditions.
pub fn kkt_tolerance(lambda: f64) -> f64 {
    1e-6 * (1.0 + lambda)
}

/// `2 · max_j |x_jᵀ(y − ȳ)|`: the smallest λ at which the Lasso fit is all zeros.
pub fn lambda_max(x: &DesignMatrix, y: &[f64]) -> Result<f64> {
    lambda_max_weighted(x, y, None)
}

/// Weighted version of [`lambda_max`]: `2 · max_j |x_jᵀ y_c| / τ_j` over
/// finite, positive τ_j.
pub fn lambda_max_weighted(x: &DesignMatrix, y: &[f64], penalty: Option<&[f64]>) -> Result<f64> {
    check_response(x, y)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut best = 0.0_f64;
    for j in 0..x.ncols() {
        let tau = penalty.map_or(1.0, |t| t[j]);
        if !tau.is_finite() || tau <= 0.0 {
            continue;
        }
        let corr: f64 = x.column(j).iter().zip(y).map(|(a, b)| a * (b - mean)).sum();
        best = best.max(2.0 * corr.abs() / tau);
    }
    Ok(best)
}

/// Penalized least squares by cyclic coordinate descent.
///
/// A fit that exhausts `max_sweeps` is still returned, with `converged = false`.
pub fn lasso_fit(
    x: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<LassoFit> {
    lasso_fit_warm(x, y, lambda, opts, None)
}

/// [`lasso_fit`] started from the coefficients of a previous fit.
pub fn lasso_fit_warm(
    x: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&[f64]>,
) -> Result<LassoFit> {
    check_inputs(x, y, lambda, opts)?;
    let penalty = opts.penalty_factors.as_deref();
    Ok(solve(
        &x.columns(),
        y,
        lambda,
        penalty,
        None,
        warm,
        opts,
        None,
    ))
}

/// Same as [`lasso_fit`], also returning the objective after every sweep.
pub fn lasso_fit_traced(
    x: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(LassoFit, Vec<f64>)> {
    check_inputs(x, y, lambda, opts)?;
    let mut trace = Vec::new();
    let fit = solve(
        &x.columns(),
        y,
        lambda,
        opts.penalty_factors.as_deref(),
        None,
        None,
        opts,
        Some(&mut trace),
    );
    Ok((fit, trace))
}

/// Fits a descending sequence of λ values, warm-starting each from the last.
pub fn lasso_path(
    x: &DesignMatrix,
    y: &[f64],
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<LassoFit>> {
    let mut fits: Vec<LassoFit> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let warm = fits.last().map(|f| f.coefficients.as_slice());
        fits.push(lasso_fit_warm(x, y, lambda, opts, warm)?);
    }
    Ok(fits)
}

/// `‖y − β₀ − Xβ‖₂² + λ Σ τ_j |β_j|`, recomputed from scratch.
pub fn objective(
    x: &DesignMatrix,
    y: &[f64],
    fit_intercept: f64,
    coefficients: &[f64],
    lambda: f64,
    penalty: Option<&[f64]>,
) -> f64 {
    let fitted = x.predict(fit_intercept, coefficients);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    rss + lambda * penalty_sum(coefficients, penalty)
}

pub(crate) fn penalty_sum(coefficients: &[f64], penalty: Option<&[f64]>) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, b)| penalty.map_or(1.0, |t| t[j]) * b.abs())
        .sum()
}

/// Largest KKT violation of `fit` for the given λ and penalty factors.
///
/// For active j this is `|2x_jᵀr − λτ_j sign(β_j)|`; for inactive j with
/// finite τ_j it is `max(0, |2x_jᵀr| − λτ_j)`.
pub fn kkt_violation(
    x: &DesignMatrix,
    y: &[f64],
    fit: &LassoFit,
    lambda: f64,
    penalty: Option<&[f64]>,
) -> f64 {
    let fitted = x.predict(fit.intercept, &fit.coefficients);
    let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut worst = 0.0_f64;
    for j in 0..x.ncols() {
        let tau = penalty.map_or(1.0, |t| t[j]);
        let b = fit.coefficients[j];
        if !tau.is_finite() {
            if b != 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        let g = 2.0 * x.column(j).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        let v = if b != 0.0 {
            (g - lambda * tau * b.signum()).abs()
        } else {
            (g.abs() - lambda * tau).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn check_inputs(x: &DesignMatrix, y: &[f64], lambda: f64, opts: &SolverOptions) -> Result<()> {
    check_response(x, y)?;
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    opts.validate(x.ncols())
}

pub(crate) fn check_response(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {} rows",
            y.len(),
            x.nrows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    Ok(())
}

fn check_finite_matrix(x: ArrayView2<'_, f64>, what: &'static str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

//! Seeded generation of the two simulation designs: a shared AR(1)-correlated
//! Gaussian design, sinusoidal coefficient paths on `[0, 2π]`, and i.i.d.
//! Gaussian noise per time-point.
//!
//! Random numbers come from ChaCha20 (`rand_chacha`) seeded through
//! `seed_from_u64`; normal variates use `rand_distr::StandardNormal`. The
//! pair is recorded as [`GENERATOR_ID`] on every dataset.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{standardize_columns, DesignMatrix};

pub const GENERATOR_ID: &str = "chacha20/standard-normal-ziggurat/v1";

/// Correlation between neighboring predictors in the simulation design.
pub const DESIGN_RHO: f64 = 0.5;

/// Time-course data: one design shared by `N` responses.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCourseDataset {
    /// `n × p`.
    pub x: Array2<f64>,
    /// `n × N`, column r is `y(t_r)`.
    pub y: Array2<f64>,
    pub times: Vec<f64>,
    /// `p × N`, column r is `β(t_r)`.
    pub truth: Option<Array2<f64>>,
    pub truth_intercepts: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub seed: u64,
    pub generator_id: String,
}

impl TimeCourseDataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>, times: Vec<f64>) -> Result<Self> {
        let ds = Self {
            x,
            y,
            times,
            truth: None,
            truth_intercepts: None,
            sigma: None,
            seed: 0,
            generator_id: "external".into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn timepoints(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.nrows() != self.x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows, responses have {}",
                self.x.nrows(),
                self.y.nrows()
            )));
        }
        if self.y.ncols() != self.times.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} response columns for {} time-points",
                self.y.ncols(),
                self.times.len()
            )));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("times"));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design"));
        }
        if let Some(b) = &self.truth {
            if b.dim() != (self.p(), self.timepoints()) {
                return Err(Error::DimensionMismatch(format!(
                    "truth is {:?}, expected {:?}",
                    b.dim(),
                    (self.p(), self.timepoints())
                )));
            }
        }
        if let Some(b0) = &self.truth_intercepts {
            if b0.len() != self.timepoints() {
                return Err(Error::DimensionMismatch(format!(
                    "{} truth intercepts for {} time-points",
                    b0.len(),
                    self.timepoints()
                )));
            }
        }
        Ok(())
    }

    /// Standardizes the design for fitting.
    pub fn prepare(&self) -> Result<PreparedTimeCourse> {
        self.validate()?;
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        Ok(PreparedTimeCourse {
            design: standardize_columns(self.x.view())?,
            responses: self.y.clone(),
            times: self.times.clone(),
        })
    }
}

/// A dataset with its design standardized, ready for fitting.
#[derive(Debug, Clone)]
pub struct PreparedTimeCourse {
    pub design: DesignMatrix,
    pub responses: Array2<f64>,
    pub times: Vec<f64>,
}

impl PreparedTimeCourse {
    pub fn timepoints(&self) -> usize {
        self.times.len()
    }

    pub fn response(&self, r: usize) -> Vec<f64> {
        self.responses.column(r).to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SimModel {
    /// Three large, smoothly varying effects.
    SomeLargeEffects,
    /// Eight moderate effects around 0.85.
    ManySmallEffects,
}

impl SimModel {
    pub fn number(self) -> u8 {
        match self {
            SimModel::SomeLargeEffects => 1,
            SimModel::ManySmallEffects => 2,
        }
    }

    pub fn min_predictors(self) -> usize {
        match self {
            SimModel::SomeLargeEffects => 3,
            SimModel::ManySmallEffects => 8,
        }
    }
}

impl TryFrom<u8> for SimModel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(SimModel::SomeLargeEffects),
            2 => Ok(SimModel::ManySmallEffects),
            _ => Err(Error::InvalidArgument(format!("unknown model {v}"))),
        }
    }
}

impl From<SimModel> for u8 {
    fn from(m: SimModel) -> u8 {
        m.number()
    }
}

/// `t_r = r · 2π / (N − 1)` for `r = 0..N`.
pub fn time_grid(n_times: usize) -> Result<Vec<f64>> {
    if n_times < 2 {
        return Err(Error::InvalidArgument(format!(
            "time grid needs N >= 2, got {n_times}"
        )));
    }
    let step = 2.0 * PI / (n_times - 1) as f64;
    let mut t: Vec<f64> = (0..n_times).map(|r| r as f64 * step).collect();
    t[n_times - 1] = 2.0 * PI;
    Ok(t)
}

pub fn true_beta(model: SimModel, t: f64, p: usize) -> Result<Vec<f64>> {
    if p < model.min_predictors() {
        return Err(Error::TooFewColumns {
            model: model.number(),
            needed: model.min_predictors(),
            p,
        });
    }
    let mut beta = vec![0.0; p];
    match model {
        SimModel::SomeLargeEffects => {
            beta[0] = 0.45 * t;
            beta[1] = 3.0 * t.sin();
            beta[2] = 3.0 * (t - 3.0).cos();
        }
        SimModel::ManySmallEffects => {
            for k in 0..4 {
                let shift = t - k as f64;
                beta[2 * k] = 0.85 + 0.5 * shift.sin();
                beta[2 * k + 1] = 0.85 + 0.5 * shift.cos();
            }
        }
    }
    Ok(beta)
}

/// `p × N` matrix whose column r is `β(t_r)`.
pub fn truth_matrix(model: SimModel, times: &[f64], p: usize) -> Result<Array2<f64>> {
    let mut b = Array2::zeros((p, times.len()));
    for (r, &t) in times.iter().enumerate() {
        for (j, v) in true_beta(model, t, p)?.into_iter().enumerate() {
            b[[j, r]] = v;
        }
    }
    Ok(b)
}

/// `Σ_{jk} = ρ^{|j−k|}`.
pub fn ar1_covariance(p: usize, rho: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(j, k)| rho.powi(j.abs_diff(k) as i32))
}

/// Rows i.i.d. `N(0, Σ)` with `Σ_{jk} = ρ^{|j−k|}`, via the AR(1) recursion
/// `x_1 = z_1`, `x_j = ρ x_{j−1} + √(1−ρ²) z_j`.
pub fn gen_design<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must lie in (-1, 1), got {rho}"
        )));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + innov * z };
            x[[i, j]] = v;
            prev = v;
        }
    }
    Ok(x)
}

/// Draws one dataset. The design is standardized before the responses are
/// generated, so the recorded truth is exact on the fitted scale.
///
/// `sigma = 0` gives noiseless responses; `n_times = 1` uses the single time `0`.
pub fn simulate_dataset(
    model: SimModel,
    n: usize,
    p: usize,
    sigma: f64,
    n_times: usize,
    seed: u64,
) -> Result<TimeCourseDataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let times = match n_times {
        0 => {
            return Err(Error::InvalidArgument(
                "need at least one time-point".into(),
            ))
        }
        1 => vec![0.0],
        _ => time_grid(n_times)?,
    };
    let truth = truth_matrix(model, &times, p)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw = gen_design(n, p, DESIGN_RHO, &mut rng)?;
    let x = standardize_columns(raw.view())?.to_array();

    let mut y = x.dot(&truth);
    for r in 0..times.len() {
        for i in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            y[[i, r]] += sigma * e;
        }
    }
    Ok(TimeCourseDataset {
        x,
        y,
        times,
        truth: Some(truth),
        truth_intercepts: Some(vec![0.0; n_times]),
        sigma: Some(sigma),
        seed,
        generator_id: GENERATOR_ID.into(),
    })
}

/// `(1/N) Σ_r β(t_r)ᵀ Σ β(t_r) / σ²`.
pub fn snr(truth: ArrayView2<'_, f64>, cov: ArrayView2<'_, f64>, sigma: f64) -> Result<f64> {
    let (p, n_times) = truth.dim();
    if cov.dim() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {:?}, truth has {p} rows",
            cov.dim()
        )));
    }
    if n_times == 0 {
        return Ok(0.0);
    }
    let total: f64 = truth
        .columns()
        .into_iter()
        .map(|b| b.dot(&cov.dot(&b)))
        .sum();
    Ok(total / n_times as f64 / (sigma * sigma))
}

/// SplitMix64 finalizer over (seed, run, stream): decorrelated sub-seeds for
/// Monte-Carlo runs.
pub fn derive_seed(seed: u64, run: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(run.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

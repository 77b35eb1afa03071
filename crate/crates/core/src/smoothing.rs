//! Kernel weights over a time grid and the smoothed response
//! `ỹ(t_r) = Σ_s w(t_s, t_r) y(t_s)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
    Uniform,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Gaussian, Kernel::Epanechnikov, Kernel::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Uniform => "uniform",
        }
    }

    /// `K(u)`; every kind is a symmetric density.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn kernel_eval(kernel: Kernel, u: f64) -> f64 {
    kernel.eval(u)
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Kernel::Gaussian),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "uniform" => Ok(Kernel::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Why a weight vector deviates from plain kernel normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFallback {
    /// Every neighbor received zero kernel mass; the result is the point mass.
    PointMass,
    /// Several entries sit at distance zero with `h = 0`; mass is split equally.
    AmbiguousTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub target_index: usize,
    pub fallback: Option<WeightFallback>,
}

impl WeightVector {
    pub fn point_mass(len: usize, target: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[target] = 1.0;
        Self {
            weights,
            target_index: target,
            fallback: None,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_point_mass(&self) -> bool {
        self.weights.iter().enumerate().all(|(s, &w)| {
            if s == self.target_index {
                w == 1.0
            } else {
                w == 0.0
            }
        })
    }

    /// `‖w‖₂²`: the variance factor of the smoothed noise.
    pub fn sum_of_squares(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Normalized weights `K((t_s − t_r)/h) / Σ_u K((t_u − t_r)/h)`.
///
/// `h = 0` gives the point mass at `r`.
pub fn smoothing_weights(times: &[f64], r: usize, h: f64, kernel: Kernel) -> Result<WeightVector> {
    if r >= times.len() {
        return Err(Error::InvalidArgument(format!(
            "target index {r} out of range for {} time-points",
            times.len()
        )));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("time grid"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    check_bandwidth(h)?;
    if h == 0.0 {
        return Ok(WeightVector::point_mass(times.len(), r));
    }
    let tr = times[r];
    let raw: Vec<f64> = times.iter().map(|t| kernel.eval((t - tr) / h)).collect();
    Ok(normalize(raw, r))
}

/// Weights `∝ K(d_s / h)` from precomputed pseudo-distances to the target.
///
/// The target is the (first) zero-distance entry.
pub fn pseudo_distance_weights(distances: &[f64], h: f64, kernel: Kernel) -> Result<WeightVector> {
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("distances"));
    }
    if distances.iter().any(|d| *d < 0.0) {
        return Err(Error::InvalidArgument("distances must be >= 0".into()));
    }
    check_bandwidth(h)?;
    let zeros: Vec<usize> = (0..distances.len())
        .filter(|&s| distances[s] == 0.0)
        .collect();
    let Some(&target) = zeros.first() else {
        return Err(Error::InvalidArgument(
            "no zero-distance entry marks the target".into(),
        ));
    };
    if h == 0.0 {
        if zeros.len() == 1 {
            return Ok(WeightVector::point_mass(distances.len(), target));
        }
        let share = 1.0 / zeros.len() as f64;
        let mut weights = vec![0.0; distances.len()];
        for &s in &zeros {
            weights[s] = share;
        }
        return Ok(WeightVector {
            weights,
            target_index: target,
            fallback: Some(WeightFallback::AmbiguousTarget),
        });
    }
    let raw: Vec<f64> = distances.iter().map(|d| kernel.eval(d / h)).collect();
    Ok(normalize(raw, target))
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !h.is_finite() {
        return Err(Error::NonFinite("bandwidth"));
    }
    if h < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be >= 0, got {h}"
        )));
    }
    Ok(())
}

// K(0) > 0 for every kernel, so the target always carries mass and `total > 0`.
fn normalize(raw: Vec<f64>, target: usize) -> WeightVector {
    let neighbors_empty = raw
        .iter()
        .enumerate()
        .all(|(s, &k)| s == target || k == 0.0);
    if neighbors_empty {
        let mut w = WeightVector::point_mass(raw.len(), target);
        if raw.len() > 1 {
            w.fallback = Some(WeightFallback::PointMass);
        }
        return w;
    }
    let total: f64 = raw.iter().sum();
    WeightVector {
        weights: raw.into_iter().map(|k| k / total).collect(),
        target_index: target,
        fallback: None,
    }
}

/// `Σ_s w_s · Y[:, s]` for an `n × N` response matrix.
pub fn smooth_response(y: ArrayView2<'_, f64>, w: &WeightVector) -> Result<Vec<f64>> {
    let (n, cols) = y.dim();
    if cols != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "response has {cols} time-points, weights have {}",
            w.len()
        )));
    }
    if w.is_point_mass() {
        return Ok(y.column(w.target_index).to_vec());
    }
    let mut out = vec![0.0; n];
    for (s, &ws) in w.weights.iter().enumerate() {
        if ws == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(y.column(s)) {
            *o += ws * v;
        }
    }
    Ok(out)
}

/// `{0}` followed by `count` bandwidths spaced geometrically in
/// `[Δt, N·Δt/2]`, where `Δt` is the mean grid spacing. A single time-point
/// admits only `h = 0`.
pub fn default_bandwidths(times: &[f64], count: usize) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0];
    if n < 2 || count == 0 {
        return out;
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let lo = dt;
    let hi = (n as f64 * dt / 2.0).max(lo);
    if count == 1 || hi == lo {
        out.push(lo);
        return out;
    }
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    for k in 0..count {
        let h = if k + 1 == count {
            hi
        } else {
            lo * ratio.powi(k as i32)
        };
        out.push(h);
    }
    out
}

#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use smoothlasso::solver::{
    kkt_tolerance, kkt_violation, standardize_columns, DesignMatrix, LassoFit,
};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut impl Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

pub fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Standardized random design.
pub fn random_design(rng: &mut impl Rng, n: usize, p: usize) -> DesignMatrix {
    standardize_columns(normal_matrix(rng, n, p).view()).unwrap()
}

/// `n × n` design with `XᵀX = n·I`: a constant column followed by a random
/// orthonormal basis of the centered subspace, scaled by `√n`.
pub fn random_orthogonal_design(rng: &mut impl Rng, n: usize) -> DesignMatrix {
    let mut m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    m.column_mut(0).fill(1.0);
    let q = m.qr().q();
    let scale = (n as f64).sqrt();
    let mut x = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            x[[i, j]] = q[(i, j)] * scale;
        }
    }
    DesignMatrix::from_raw(x.view()).unwrap()
}

/// Panics unless `fit` is flagged converged and meets the KKT conditions.
pub fn assert_certified(
    x: &DesignMatrix,
    y: &[f64],
    fit: &LassoFit,
    lambda: f64,
    penalty: Option<&[f64]>,
) {
    assert!(fit.converged, "fit not converged at λ = {lambda}");
    let v = kkt_violation(x, y, fit, lambda, penalty);
    assert!(
        v <= kkt_tolerance(lambda),
        "KKT violation {v:e} at λ = {lambda}"
    );
}

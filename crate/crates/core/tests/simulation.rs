mod common;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use smoothlasso::simulation::*;

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn time_grid_endpoints() {
    for n in [2, 5, 18, 100] {
        let t = time_grid(n).unwrap();
        assert_eq!(t[0], 0.0);
        assert_eq!(t[n - 1], 2.0 * std::f64::consts::PI);
    }
    let t = time_grid(18).unwrap();
    assert!((t[1] - 0.3696).abs() < 1e-4);
    assert!(time_grid(1).is_err());
}

#[test]
fn true_beta_values() {
    let b = true_beta(SimModel::SomeLargeEffects, 0.0, 4).unwrap();
    assert_eq!(&b[..2], &[0.0, 0.0]);
    assert!((b[2] + 2.969_977_4).abs() < 1e-6);
    assert_eq!(b[3], 0.0);
    let b = true_beta(SimModel::ManySmallEffects, 0.0, 8).unwrap();
    assert_eq!(b[0], 0.85);
    assert_eq!(b[1], 1.35);
    assert!(true_beta(SimModel::SomeLargeEffects, 0.0, 2).is_err());
    assert!(true_beta(SimModel::ManySmallEffects, 0.0, 7).is_err());
}

#[test]
fn truth_support_is_fixed() {
    let times = time_grid(18).unwrap();
    let b = truth_matrix(SimModel::SomeLargeEffects, &times, 20).unwrap();
    assert!(b.slice(ndarray::s![3.., ..]).iter().all(|v| *v == 0.0));
    for r in 1..18 {
        assert!((0..3).all(|j| b[[j, r]] != 0.0));
    }
    let b = truth_matrix(SimModel::ManySmallEffects, &times, 20).unwrap();
    assert!(b.slice(ndarray::s![8.., ..]).iter().all(|v| *v == 0.0));
}

#[test]
fn ar_design_has_the_target_correlations() {
    let x = gen_design(100_000, 5, 0.5, &mut rng(20)).unwrap();
    let c = |j: usize, k: usize| correlation(&x.column(j).to_vec(), &x.column(k).to_vec());
    assert!((c(0, 1) - 0.5).abs() < 0.01, "{}", c(0, 1));
    assert!((c(0, 2) - 0.25).abs() < 0.01, "{}", c(0, 2));
    let x = gen_design(100_000, 3, 0.0, &mut rng(21)).unwrap();
    assert!(correlation(&x.column(0).to_vec(), &x.column(1).to_vec()).abs() < 0.01);
}

#[test]
fn ar_recursion_matches_cholesky_sampling() {
    let p = 5;
    let draws = 10_000;
    let cov = ar1_covariance(p, 0.5);
    let l = DMatrix::from_fn(p, p, |i, j| cov[[i, j]])
        .cholesky()
        .unwrap()
        .l();
    let mut r = rng(22);
    let chol: Vec<f64> = (0..draws)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| r.sample(StandardNormal)).collect();
            (0..p).map(|k| l[(2, k)] * z[k]).sum()
        })
        .collect();
    let x = gen_design(draws, p, 0.5, &mut rng(23)).unwrap();
    let d = ks_statistic(x.column(2).to_vec(), chol);
    let n = draws as f64;
    let critical = 1.628 * ((n + n) / (n * n)).sqrt();
    assert!(d < critical, "KS {d} >= {critical}");
}

#[test]
fn snr_matches_quoted_values() {
    let times = time_grid(18).unwrap();
    let cov = ar1_covariance(8, DESIGN_RHO);
    for (model, sigma, lo, hi) in [
        (SimModel::SomeLargeEffects, 2.0, 2.5, 2.9),
        (SimModel::SomeLargeEffects, 4.0, 0.6, 0.8),
        (SimModel::ManySmallEffects, 2.0, 3.6, 4.0),
        (SimModel::ManySmallEffects, 4.0, 0.8, 1.0),
    ] {
        let b = truth_matrix(model, &times, 8).unwrap();
        let s = snr(b.view(), cov.view(), sigma).unwrap();
        assert!(
            (lo..=hi).contains(&s),
            "model {} sigma {sigma}: {s}",
            model.number()
        );
    }
    let zero = ndarray::Array2::zeros((8, 18));
    assert_eq!(snr(zero.view(), cov.view(), 2.0).unwrap(), 0.0);
}

#[test]
fn simulation_is_reproducible_and_shares_the_design() {
    let a = simulate_dataset(SimModel::SomeLargeEffects, 50, 8, 2.0, 18, 7).unwrap();
    let b = simulate_dataset(SimModel::SomeLargeEffects, 50, 8, 2.0, 18, 7).unwrap();
    assert_eq!(a, b);
    let c = simulate_dataset(SimModel::SomeLargeEffects, 50, 8, 2.0, 18, 8).unwrap();
    assert_ne!(a.y, c.y);
    assert_eq!(a.generator_id, GENERATOR_ID);

    let noiseless = simulate_dataset(SimModel::ManySmallEffects, 30, 10, 0.0, 5, 1).unwrap();
    let fitted = noiseless.x.dot(noiseless.truth.as_ref().unwrap());
    assert_eq!(noiseless.y, fitted);
}

#[test]
fn errors_are_independent_across_time() {
    let n = 200;
    let bound = 3.0 / (n as f64).sqrt();
    for seed in 0..10 {
        let d = simulate_dataset(SimModel::SomeLargeEffects, n, 8, 2.0, 6, seed).unwrap();
        let e = &d.y - &d.x.dot(d.truth.as_ref().unwrap());
        for r in 0..6 {
            for s in (r + 1)..6 {
                let c = correlation(&e.column(r).to_vec(), &e.column(s).to_vec());
                assert!(c.abs() < bound, "seed {seed} ({r},{s}): {c}");
            }
        }
    }
}

#[test]
fn derived_seeds_differ_by_run_and_stream() {
    let mut seen = std::collections::HashSet::new();
    for run in 0..100 {
        for stream in 0..2 {
            assert!(seen.insert(derive_seed(1, run, stream)));
        }
    }
}

#[test]
fn external_datasets_are_validated() {
    let x = ndarray::Array2::<f64>::zeros((4, 2));
    let y = ndarray::Array2::<f64>::zeros((4, 3));
    assert!(TimeCourseDataset::new(x.clone(), y.clone(), vec![0.0, 1.0, 2.0]).is_ok());
    assert!(TimeCourseDataset::new(x.clone(), y.clone(), vec![0.0, 1.0]).is_err());
    assert!(TimeCourseDataset::new(x.clone(), y.clone(), vec![0.0, 2.0, 1.0]).is_err());
    assert!(TimeCourseDataset::new(x, y, vec![0.0, f64::NAN, 2.0]).is_err());
}

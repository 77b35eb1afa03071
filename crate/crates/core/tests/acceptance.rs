//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Criteria 9 to 11 run full Monte-Carlo benchmarks and take minutes.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use rand::Rng;
use rand_distr::StandardNormal;
use smoothlasso::benchmark::{run_benchmark_detailed, BenchmarkOutcome};
use smoothlasso::estimators::*;
use smoothlasso::io::BenchmarkConfig;
use smoothlasso::metrics::{summarize, RunMetrics};
use smoothlasso::simulation::*;
use smoothlasso::smoothing::{smoothing_weights, Kernel};
use smoothlasso::solver::*;
use smoothlasso::tuning::{tune_prepared, ValidationSet};

type Outcome = Result<String, String>;

/// Running KKT audit over every fit the acceptance run produces.
#[derive(Default)]
struct Audit {
    fits: usize,
    failures: Vec<String>,
    worst: f64,
}

impl Audit {
    fn check(
        &mut self,
        x: &DesignMatrix,
        y: &[f64],
        fit: &LassoFit,
        lambda: f64,
        penalty: Option<&[f64]>,
    ) {
        self.fits += 1;
        let v = kkt_violation(x, y, fit, lambda, penalty);
        let rel = v / kkt_tolerance(lambda);
        self.worst = self.worst.max(rel);
        let bad = !fit.converged || rel.is_nan() || rel > 1.0;
        if bad && self.failures.len() < 5 {
            self.failures.push(format!(
                "λ={lambda:.4e} violation {v:.3e} converged={}",
                fit.converged
            ));
        }
    }

    /// Rebuilds every stage of an estimator pipeline and certifies each one.
    fn pipeline(
        &mut self,
        spec: &EstimatorSpec,
        data: &PreparedTimeCourse,
        r: usize,
        stages: &[StageParams],
    ) {
        let opts = SolverOptions::default();
        let x = &data.design;
        let y = |s: &StageParams| {
            response_at(data, r, s.bandwidth.unwrap_or(0.0), spec.kernel).unwrap()
        };
        let mut last: Option<LassoFit> = None;
        let mut init: Option<Vec<f64>> = None;
        for (k, st) in stages.iter().enumerate() {
            let yk = y(st);
            let fit = if k == 0 && !spec.id.uses_ols() {
                let f = lasso_fit(x, &yk, st.lambda, &opts).unwrap();
                self.check(x, &yk, &f, st.lambda, None);
                f
            } else {
                let beta = match &init {
                    Some(b) => b.clone(),
                    None => ols_fit(x, &yk).unwrap().coefficients,
                };
                let tau = adaptive_penalty_weights(&beta, spec.gamma);
                let f = adaptive_lasso_fit(x, &yk, st.lambda, &beta, spec.gamma, &opts).unwrap();
                self.check(x, &yk, &f, st.lambda, Some(&tau));
                f
            };
            init = Some(fit.coefficients.clone());
            last = Some(fit);
        }
        let direct = fit_estimator_at(spec, data, r, stages, &opts).unwrap();
        if last.as_ref() != Some(&direct) {
            self.failures.push(format!(
                "estimator {} at r={r}: rebuilt pipeline differs",
                spec.id
            ));
        }
    }
}

fn orthogonal_oracle(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(2001);
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let n = [8, 16, 32][k % 3];
        let x = random_orthogonal_design(&mut rng, n);
        let y = normal_vec(&mut rng, n);
        let lambda = rng.random_range(0.0..1.2) * lambda_max(&x, &y).unwrap();
        let fit = lasso_fit(&x, &y, lambda, &SolverOptions::default()).unwrap();
        audit.check(&x, &y, &fit, lambda, None);
        let ybar = y.iter().sum::<f64>() / n as f64;
        for j in 0..n {
            let z: f64 = x
                .column(j)
                .iter()
                .zip(&y)
                .map(|(a, b)| a * (b - ybar))
                .sum::<f64>()
                / n as f64;
            worst = worst
                .max((fit.coefficients[j] - soft_threshold(z, lambda / (2.0 * n as f64))).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("max |β - soft threshold| = {worst:.2e} over 100 designs, {secs:.2} s");
    if worst < 1e-8 && secs < 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bruteforce_equivalence(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(2002);
    let mut worst = 0.0_f64;
    let opts = SolverOptions::default();
    for _ in 0..200 {
        let p = rng.random_range(1..=3);
        let n = rng.random_range(6..20);
        let x = random_design(&mut rng, n, p);
        let y = normal_vec(&mut rng, n);
        let frac = rng.random_range(0.0..1.5);

        let lambda = frac * lambda_max(&x, &y).unwrap();
        let fit = lasso_fit(&x, &y, lambda, &opts).unwrap();
        audit.check(&x, &y, &fit, lambda, None);
        let exact = lasso_bruteforce(&x, &y, lambda, &vec![1.0; p]).unwrap();
        let obj = objective(&x, &y, fit.intercept, &fit.coefficients, lambda, None);
        worst = worst.max((obj - exact.objective).abs() / exact.objective.max(1.0));

        let mut init = normal_vec(&mut rng, p);
        if rng.random_bool(0.3) {
            init[rng.random_range(0..p)] = 0.0;
        }
        let tau = adaptive_penalty_weights(&init, 1.0);
        let lambda = frac * lambda_max_weighted(&x, &y, Some(&tau)).unwrap();
        let fit = adaptive_lasso_fit(&x, &y, lambda, &init, 1.0, &opts).unwrap();
        audit.check(&x, &y, &fit, lambda, Some(&tau));
        let exact = lasso_bruteforce(&x, &y, lambda, &tau).unwrap();
        let obj = objective(&x, &y, fit.intercept, &fit.coefficients, lambda, Some(&tau));
        worst = worst.max((obj - exact.objective).abs() / exact.objective.max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("max relative objective gap {worst:.2e} over 200 problems, {secs:.2} s");
    if worst <= 1e-8 && secs < 30.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Tunes every estimator on the first runs of the benchmark streams and
/// certifies each stage of each tuned pipeline at each time-point.
fn certify_tuned_pipelines(audit: &mut Audit) {
    for (model, n, p, ids, runs) in [
        (
            SimModel::SomeLargeEffects,
            50,
            8,
            EstimatorId::ALL.to_vec(),
            3,
        ),
        (
            SimModel::ManySmallEffects,
            50,
            8,
            EstimatorId::ALL.to_vec(),
            3,
        ),
        (
            SimModel::SomeLargeEffects,
            100,
            1000,
            vec![
                EstimatorId::Lasso,
                EstimatorId::AdaptiveLasso,
                EstimatorId::SmoothedLasso,
            ],
            1,
        ),
    ] {
        let cfg = BenchmarkConfig {
            model,
            n,
            p,
            estimators: ids,
            ..Default::default()
        };
        let grid = cfg.tuning_grid().unwrap();
        let specs = cfg.specs();
        for run in 0..runs {
            let train =
                simulate_dataset(model, n, p, 2.0, 18, derive_seed(cfg.seed, run, 0)).unwrap();
            let valid =
                simulate_dataset(model, n / 2, p, 2.0, 18, derive_seed(cfg.seed, run, 1)).unwrap();
            let prep = train.prepare().unwrap();
            let vset = ValidationSet::new(&prep, &valid).unwrap();
            let tuned = tune_prepared(&specs, &prep, &vset, &grid, &cfg.solver).unwrap();
            for (spec, t) in specs.iter().zip(&tuned) {
                for (r, tp) in t.timepoints.iter().enumerate() {
                    audit.pipeline(spec, &prep, r, &tp.stages);
                }
            }
        }
    }
}

fn kkt_certification(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    certify_tuned_pipelines(audit);
    let msg = format!(
        "{} fits, worst violation/tolerance {:.2e}, {:.1} s",
        audit.fits,
        audit.worst,
        start.elapsed().as_secs_f64()
    );
    if audit.failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", audit.failures.join("; ")))
    }
}

fn zero_bandwidth_identity(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut mismatches = Vec::new();
    let mut literal_equal = 0;
    let mut compared = 0;
    for seed in 0..20 {
        let data = simulate_dataset(SimModel::SomeLargeEffects, 50, 8, 2.0, 18, 3000 + seed)
            .unwrap()
            .prepare()
            .unwrap();
        for r in 0..18 {
            let y = data.response(r);
            let l = 0.1 * lambda_max(&data.design, &y).unwrap();
            let l3 = 0.5 * l;
            let run = |id: EstimatorId, stages: &[StageParams]| {
                fit_estimator_at(&EstimatorSpec::new(id), &data, r, stages, &opts).unwrap()
            };
            let u = StageParams::univariate;
            let s = |l| StageParams::smoothed(l, 0.0);
            let one = run(EstimatorId::Lasso, &[u(l)]);
            let three = run(EstimatorId::AdaptiveLasso, &[u(l), u(l3)]);
            audit.check(&data.design, &y, &one, l, None);
            if run(EstimatorId::SmoothedLasso, &[s(l)]) != one {
                mismatches.push(format!("4 vs 1, seed {seed} r {r}"));
            }
            if run(EstimatorId::SmoothedAdaptiveSmoothedInit, &[s(l), s(l3)]) != three {
                mismatches.push(format!("6 vs 3, seed {seed} r {r}"));
            }
            let seven = run(
                EstimatorId::SmoothedAdaptiveAdaptiveInit,
                &[u(l), u(l3), s(l3)],
            );
            let refit =
                adaptive_lasso_fit(&data.design, &y, l3, &three.coefficients, 1.0, &opts).unwrap();
            if seven != refit {
                mismatches.push(format!("7 vs adaptive refit of 3, seed {seed} r {r}"));
            }
            compared += 1;
            if seven == three {
                literal_equal += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "4≡1, 6≡3 and 7(h=0)≡adaptive refit of 3 on 20 datasets × 18 time-points, {secs:.2} s; \
         7(h=0) equals 3 itself in {literal_equal} of {compared} cases"
    );
    if mismatches.is_empty() && secs < 10.0 {
        Ok(msg)
    } else {
        Err(format!(
            "{msg}; {}",
            mismatches
                .into_iter()
                .take(5)
                .collect::<Vec<_>>()
                .join("; ")
        ))
    }
}

fn variance_contraction() -> Outcome {
    let start = Instant::now();
    let times = time_grid(18).unwrap();
    let sigma = 2.0;
    let mut rng = rng(2005);
    let mut worst = 0.0_f64;
    for (r, h) in [(0, 0.5), (8, 0.4), (8, 1.5), (17, 0.8)] {
        let w = smoothing_weights(&times, r, h, Kernel::Gaussian).unwrap();
        let reps = 10_000;
        let draws: Vec<f64> = (0..reps)
            .map(|_| {
                w.weights
                    .iter()
                    .map(|ws| ws * sigma * rng.sample::<f64, _>(StandardNormal))
                    .sum()
            })
            .collect();
        let var = summarize(&draws).unwrap().sd.unwrap().powi(2);
        let want = sigma * sigma * w.sum_of_squares();
        worst = worst.max(((var - want) / want).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "max relative error {:.2}% over 4 (t, h) pairs, {secs:.2} s",
        100.0 * worst
    );
    if worst < 0.05 && secs < 5.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bias_order() -> Outcome {
    let start = Instant::now();
    let times = time_grid(2001).unwrap();
    let r = 1000;
    let truth: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| true_beta(SimModel::SomeLargeEffects, t, 8).unwrap())
        .collect();
    let bias = |h: f64| {
        let w = smoothing_weights(&times, r, h, Kernel::Gaussian).unwrap();
        (0..8)
            .map(|j| {
                let s: f64 = w.weights.iter().zip(&truth).map(|(ws, b)| ws * b[j]).sum();
                (s - truth[r][j]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    let ratios: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| bias(h) / bias(h / 2.0))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("ratios {ratios:.3?} for h = 0.2, 0.1, 0.05, {secs:.3} s");
    if ratios.iter().all(|q| (3.5..=4.5).contains(q)) && secs < 1.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn zero_init_exclusion(audit: &mut Audit) -> Outcome {
    let mut rng = rng(2007);
    let opts = SolverOptions::default();
    let (mut fits, mut zeros, mut leaks) = (0, 0, 0);
    for _ in 0..300 {
        let n = rng.random_range(10..60);
        let p = rng.random_range(2..25);
        let x = random_design(&mut rng, n, p);
        let y = normal_vec(&mut rng, n);
        let init: Vec<f64> = (0..p)
            .map(|_| {
                if rng.random_bool(0.4) {
                    0.0
                } else {
                    rng.random_range(-2.0..2.0)
                }
            })
            .collect();
        let gamma = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let tau = adaptive_penalty_weights(&init, gamma);
        let lmax = lambda_max_weighted(&x, &y, Some(&tau)).unwrap_or(1.0);
        let lambda = rng.random_range(0.0..1.0) * lmax;
        let fit = adaptive_lasso_fit(&x, &y, lambda, &init, gamma, &opts).unwrap();
        audit.check(&x, &y, &fit, lambda, Some(&tau));
        fits += 1;
        for (b0, b) in init.iter().zip(&fit.coefficients) {
            if *b0 == 0.0 {
                zeros += 1;
                if *b != 0.0 {
                    leaks += 1;
                }
            }
        }
    }
    let msg = format!("{zeros} zero-initialized coefficients across {fits} fits, {leaks} nonzero");
    if leaks == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn snr_reproduction() -> Outcome {
    let times = time_grid(18).unwrap();
    let cov = ar1_covariance(8, DESIGN_RHO);
    let mut parts = Vec::new();
    let mut ok = true;
    for (model, sigma, lo, hi) in [
        (SimModel::SomeLargeEffects, 2.0, 2.5, 2.9),
        (SimModel::SomeLargeEffects, 4.0, 0.6, 0.8),
        (SimModel::ManySmallEffects, 2.0, 3.6, 4.0),
        (SimModel::ManySmallEffects, 4.0, 0.8, 1.0),
    ] {
        let b = truth_matrix(model, &times, 8).unwrap();
        let s = snr(b.view(), cov.view(), sigma).unwrap();
        ok &= (lo..=hi).contains(&s);
        parts.push(format!("model {} σ={sigma}: {s:.3}", model.number()));
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn mean_of(out: &BenchmarkOutcome, id: EstimatorId, f: impl Fn(&RunMetrics) -> f64) -> f64 {
    let m = out.metrics_of(id).unwrap();
    m.iter().map(f).sum::<f64>() / m.len() as f64
}

fn low_dim(model: SimModel, sigma: f64) -> BenchmarkOutcome {
    let cfg = BenchmarkConfig {
        model,
        sigma,
        ..Default::default()
    };
    run_benchmark_detailed(&cfg).unwrap()
}

fn within(value: f64, target: f64) -> bool {
    (value - target).abs() <= 0.2 * target
}

fn table_low_dim(out: &BenchmarkOutcome) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, target) in [
        (EstimatorId::Lasso, 0.83),
        (EstimatorId::SmoothedLasso, 0.54),
        (EstimatorId::SmoothedAdaptiveAdaptiveInit, 0.51),
    ] {
        let v = mean_of(out, id, |m| m.mse_beta);
        ok &= within(v, target);
        parts.push(format!("est {id} MSE_β {v:.3} (target {target})"));
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn orderings(settings: &[(SimModel, f64, BenchmarkOutcome)]) -> Outcome {
    use EstimatorId::*;
    let mut ok = true;
    let mut parts = Vec::new();
    for (model, sigma, out) in settings {
        let mse = |id| mean_of(out, id, |m| m.mse_beta);
        let size = |id| mean_of(out, id, |m| m.msize);
        let fp = |id| mean_of(out, id, |m| m.fp);
        let mut good = mse(SmoothedLasso) < mse(Lasso) && size(SmoothedLasso) > size(Lasso);
        if *model == SimModel::SomeLargeEffects {
            let others = [
                SmoothedLasso,
                SmoothedAdaptiveOls,
                SmoothedAdaptiveSmoothedInit,
            ];
            let seven = SmoothedAdaptiveAdaptiveInit;
            good &= others
                .iter()
                .all(|&o| size(seven) < size(o) && fp(seven) < fp(o));
        }
        ok &= good;
        let sizes: Vec<String> = EstimatorId::ALL
            .iter()
            .map(|&id| format!("{:.2}", size(id)))
            .collect();
        parts.push(format!(
            "model {} σ={sigma}: {} (MSE_β 1/4 {:.2}/{:.2}, MSize {})",
            model.number(),
            if good { "ok" } else { "violated" },
            mse(Lasso),
            mse(SmoothedLasso),
            sizes.join("/")
        ));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn high_dim() -> Outcome {
    use EstimatorId::*;
    let start = Instant::now();
    let ids = vec![
        Lasso,
        AdaptiveLasso,
        SmoothedLasso,
        SmoothedAdaptiveSmoothedInit,
        SmoothedAdaptiveAdaptiveInit,
    ];
    let cfg = BenchmarkConfig {
        n: 100,
        p: 1000,
        runs: 10,
        estimators: ids.clone(),
        ..Default::default()
    };
    let out = run_benchmark_detailed(&cfg).unwrap();
    let mse = |id| mean_of(&out, id, |m| m.mse_beta);
    let size = |id| mean_of(&out, id, |m| m.msize);
    let gate = mse(SmoothedLasso) < mse(Lasso)
        && ids
            .iter()
            .filter(|&&id| id != SmoothedAdaptiveAdaptiveInit)
            .all(|&id| size(SmoothedAdaptiveAdaptiveInit) < size(id));
    let close = [
        (mse(Lasso), 2.16),
        (mse(SmoothedLasso), 1.05),
        (size(SmoothedAdaptiveAdaptiveInit), 5.10),
    ]
    .iter()
    .filter(|(v, t)| within(*v, *t))
    .count();
    let values: Vec<String> = ids
        .iter()
        .map(|&id| format!("est {id} MSE_β {:.2} MSize {:.2}", mse(id), size(id)))
        .collect();
    let msg = format!(
        "{}; {close} of 3 headline values within ±20%, {:.0} s",
        values.join(", "),
        start.elapsed().as_secs_f64()
    );
    if gate {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_smoothlasso"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn large_cli_run() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let path = |name: &str| d.join(name).to_str().unwrap().to_owned();
    let cfg = path("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2587, "p": 666, "n_times": 12, "grid": {"lambda_count": 6, "bandwidth_count": 2}}"#,
    )
    .map_err(|e| e.to_string())?;
    let (train, valid, params) = (path("train.csv"), path("valid.csv"), path("params.json"));
    cli(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "12",
        "--out",
        &train,
        "--valid-out",
        &valid,
    ])?;
    let ids = "1,4,7";
    let mut outputs = Vec::new();
    for k in 0..2 {
        let (p, f) = (format!("{params}.{k}"), path(&format!("fit{k}.csv")));
        cli(&[
            "tune",
            "--config",
            &cfg,
            "--estimators",
            ids,
            "--train",
            &train,
            "--valid",
            &valid,
            "--out",
            &p,
        ])?;
        cli(&[
            "fit", "--config", &cfg, "--train", &train, "--params", &p, "--out", &f,
        ])?;
        outputs.push((read(Path::new(&p))?, read(Path::new(&f))?));
    }
    let msg = format!(
        "2587×666×12, estimators {ids}, two tune+fit passes, {:.0} s",
        start.elapsed().as_secs_f64()
    );
    if outputs[0] == outputs[1] {
        Ok(format!("{msg}, byte-identical output"))
    } else {
        Err(format!("{msg}, outputs differ"))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |k: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(s) => ("PASS", s),
            Err(s) => {
                failed += 1;
                ("FAIL", s)
            }
        };
        println!("{tag} {k:>2} {name}: {detail}");
    };

    let mut audit = Audit::default();
    report(1, "orthogonal oracle", orthogonal_oracle(&mut audit));
    report(
        2,
        "brute-force equivalence",
        bruteforce_equivalence(&mut audit),
    );
    let four = zero_bandwidth_identity(&mut audit);
    let seven = zero_init_exclusion(&mut audit);
    report(3, "KKT certification", kkt_certification(&mut audit));
    report(4, "zero-bandwidth identity", four);
    report(5, "variance contraction", variance_contraction());
    report(6, "bias order", bias_order());
    report(7, "zero-init exclusion", seven);
    report(8, "signal-to-noise ratios", snr_reproduction());

    let settings: Vec<(SimModel, f64, BenchmarkOutcome)> = [
        (SimModel::SomeLargeEffects, 2.0),
        (SimModel::SomeLargeEffects, 4.0),
        (SimModel::ManySmallEffects, 2.0),
        (SimModel::ManySmallEffects, 4.0),
    ]
    .into_iter()
    .map(|(m, s)| (m, s, low_dim(m, s)))
    .collect();
    report(
        9,
        "low-dimensional Model 1 table values",
        table_low_dim(&settings[0].2),
    );
    report(10, "low-dimensional orderings", orderings(&settings));
    report(11, "high-dimensional reduced run", high_dim());
    report(12, "large synthetic CLI run", large_cli_run());

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

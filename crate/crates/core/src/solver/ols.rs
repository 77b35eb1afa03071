use super::{check_response, DesignMatrix, LassoFit};
use crate::error::{Error, Result};

/// Below this reciprocal condition estimate the Gram matrix is treated as singular.
const RCOND_MIN: f64 = 1e-12;

/// Ordinary least squares with intercept, via a Cholesky factorization of the
/// centered Gram matrix. `objective` holds the residual sum of squares.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<LassoFit> {
    check_response(x, y)?;
    let (n, p) = (x.nrows(), x.ncols());
    if p >= n {
        return Err(Error::NotApplicable(format!(
            "OLS needs p < n (p = {p}, n = {n})"
        )));
    }
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let col_means: Vec<f64> = (0..p)
        .map(|j| x.column(j).iter().sum::<f64>() / nf)
        .collect();

    // Centered Gram matrix and right-hand side, row-major p×p.
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for j in 0..p {
        let xj = x.column(j);
        rhs[j] = xj
            .iter()
            .zip(y)
            .map(|(a, b)| (a - col_means[j]) * (b - y_mean))
            .sum();
        for k in 0..=j {
            let xk = x.column(k);
            let g: f64 = xj
                .iter()
                .zip(xk)
                .map(|(a, b)| (a - col_means[j]) * (b - col_means[k]))
                .sum();
            gram[j * p + k] = g;
            gram[k * p + j] = g;
        }
    }

    let l = cholesky(&gram, p)?;
    let coefficients = cholesky_solve(&l, p, &rhs);
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&col_means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    let fitted = x.predict(intercept, &coefficients);
    let rss = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(LassoFit::new(intercept, coefficients, rss, 0, true, 0))
}

/// Lower-triangular factor of a symmetric positive definite matrix (row-major).
///
/// The reciprocal condition number is estimated as `(min L_ii / max L_ii)²`.
fn cholesky(a: &[f64], p: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::RankDeficient { rcond: 0.0 });
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let diag = (0..p).map(|i| l[i * p + i]);
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    let rcond = if p == 0 { 1.0 } else { (lo / hi).powi(2) };
    if rcond < RCOND_MIN {
        return Err(Error::RankDeficient { rcond });
    }
    Ok(l)
}

fn cholesky_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i * p + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k * p + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * p + i];
    }
    x
}

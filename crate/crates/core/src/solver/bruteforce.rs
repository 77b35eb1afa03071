use super::{check_response, DesignMatrix, LassoFit};
use crate::error::{Error, Result};

const MAX_P: usize = 10;

/// Exact penalized least-squares minimizer by sign-pattern enumeration.
///
/// For each of the `3^p` patterns in `{−, 0, +}^p` the smooth problem with
/// the zero coordinates removed and `|β_j|` replaced by `s_j β_j` is solved in
/// closed form. Candidates whose signs match the pattern and which satisfy
/// the KKT conditions on the zero coordinates are kept; the one with the
/// smallest objective wins. Centering is done here, independently of how `x`
/// was prepared. Intended as a test oracle for small problems.
pub fn lasso_bruteforce(
    x: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    penalty_factors: &[f64],
) -> Result<LassoFit> {
    check_response(x, y)?;
    let (n, p) = (x.nrows(), x.ncols());
    if p > MAX_P {
        return Err(Error::TooLarge(p));
    }
    if penalty_factors.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} penalty factors for {p} columns",
            penalty_factors.len()
        )));
    }
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let means: Vec<f64> = (0..p)
        .map(|j| x.column(j).iter().sum::<f64>() / nf)
        .collect();
    let xc: Vec<Vec<f64>> = (0..p)
        .map(|j| x.column(j).iter().map(|v| v - means[j]).collect())
        .collect();
    let gram: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..p).map(|k| dot(&xc[j], &xc[k])).collect())
        .collect();
    let corr: Vec<f64> = (0..p).map(|j| dot(&xc[j], &yc)).collect();

    let objective_of = |beta: &[f64]| -> f64 {
        let mut rss = 0.0;
        for i in 0..n {
            let fit: f64 = (0..p).map(|j| xc[j][i] * beta[j]).sum();
            rss += (yc[i] - fit).powi(2);
        }
        let pen: f64 = (0..p)
            .filter(|&j| beta[j] != 0.0)
            .map(|j| penalty_factors[j] * beta[j].abs())
            .sum();
        rss + lambda * pen
    };
    let kkt_slack = 1e-7 * (1.0 + lambda + corr.iter().fold(0.0_f64, |m, c| m.max(c.abs())));

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut fallback: Option<(f64, Vec<f64>)> = None;
    let mut pattern = vec![0i8; p];
    let total = 3usize.pow(p as u32);
    for code in 0..total {
        let mut c = code;
        for s in pattern.iter_mut() {
            *s = (c % 3) as i8 - 1;
            c /= 3;
        }
        if (0..p).any(|j| pattern[j] != 0 && !penalty_factors[j].is_finite()) {
            continue;
        }
        let active: Vec<usize> = (0..p).filter(|&j| pattern[j] != 0).collect();
        let k = active.len();
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (r, &j) in active.iter().enumerate() {
            for (s, &l) in active.iter().enumerate() {
                a[r][s] = gram[j][l];
            }
            b[r] = corr[j] - 0.5 * lambda * penalty_factors[j] * f64::from(pattern[j]);
        }
        let Some(sol) = gauss_solve(a, b) else {
            continue;
        };
        let mut beta = vec![0.0; p];
        for (r, &j) in active.iter().enumerate() {
            beta[j] = sol[r];
        }
        if active
            .iter()
            .any(|&j| beta[j] == 0.0 || beta[j].signum() != f64::from(pattern[j]))
        {
            continue;
        }
        let obj = objective_of(&beta);
        let feasible = (0..p).filter(|&j| pattern[j] == 0).all(|j| {
            if !penalty_factors[j].is_finite() {
                return true;
            }
            let g: f64 = 2.0 * (corr[j] - (0..p).map(|l| gram[j][l] * beta[l]).sum::<f64>());
            g.abs() <= lambda * penalty_factors[j] + kkt_slack
        });
        let slot = if feasible { &mut best } else { &mut fallback };
        if slot.as_ref().is_none_or(|(o, _)| obj < *o) {
            *slot = Some((obj, beta));
        }
    }

    let (obj, beta) = best
        .or(fallback)
        .expect("the all-zero pattern is always sign-consistent");
    let intercept = y_mean - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    let excluded = penalty_factors.iter().filter(|t| !t.is_finite()).count();
    Ok(LassoFit::new(intercept, beta, obj, 0, true, excluded))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; `None` if numerically singular.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|c| a[i][c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

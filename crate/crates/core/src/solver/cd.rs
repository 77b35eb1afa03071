use super::{kkt_tolerance, soft_threshold, LassoFit, SolverOptions};

/// Borrowed column-major storage: `data[j*n .. (j+1)*n]` is column j.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Columns<'a> {
    pub n: usize,
    pub data: &'a [f64],
    pub sq_norms: &'a [f64],
}

impl<'a> Columns<'a> {
    #[inline]
    fn col(&self, j: usize) -> &'a [f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    fn p(&self) -> usize {
        self.sq_norms.len()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct State<'a> {
    cols: Columns<'a>,
    beta: Vec<f64>,
    intercept: f64,
    resid: Vec<f64>,
    thresholds: Vec<f64>,
}

impl State<'_> {
    /// One pass over `set` in ascending order, followed by the closed-form
    /// intercept update. Returns the largest coefficient change.
    fn sweep(&mut self, set: &[usize]) -> f64 {
        let mut max_change = 0.0_f64;
        for &j in set {
            let sq = self.cols.sq_norms[j];
            let xj = self.cols.col(j);
            let old = self.beta[j];
            let z = dot(xj, &self.resid) + sq * old;
            let mut new = soft_threshold(z, self.thresholds[j]) / sq;
            if new.is_subnormal() {
                new = 0.0;
            }
            if new != old {
                let d = new - old;
                for (r, x) in self.resid.iter_mut().zip(xj) {
                    *r -= d * x;
                }
                self.beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        let shift = self.resid.iter().sum::<f64>() / self.resid.len() as f64;
        if shift != 0.0 {
            self.intercept += shift;
            self.resid.iter_mut().for_each(|r| *r -= shift);
        }
        max_change
    }

    fn objective(&self, lambda: f64, working: &[usize], penalty: Option<&[f64]>) -> f64 {
        let rss: f64 = self.resid.iter().map(|r| r * r).sum();
        let pen: f64 = working
            .iter()
            .filter(|&&j| self.beta[j] != 0.0)
            .map(|&j| penalty.map_or(1.0, |t| t[j]) * self.beta[j].abs())
            .sum();
        rss + lambda * pen
    }

    fn kkt_ok(
        &self,
        lambda: f64,
        working: &[usize],
        penalty: Option<&[f64]>,
        kkt_scale: Option<&[f64]>,
    ) -> bool {
        let base = kkt_tolerance(lambda);
        working.iter().all(|&j| {
            let tau = penalty.map_or(1.0, |t| t[j]);
            let tol = base * kkt_scale.map_or(1.0, |s| s[j]);
            let g = 2.0 * dot(self.cols.col(j), &self.resid);
            let b = self.beta[j];
            if b != 0.0 {
                (g - lambda * tau * b.signum()).abs() <= tol
            } else {
                g.abs() <= lambda * tau + tol
            }
        })
    }
}

/// Cyclic coordinate descent with an active-set inner loop.
///
/// Coordinates with infinite penalty (or an all-zero column) never enter the
/// working set. `kkt_scale` multiplies the KKT tolerance per column; callers
/// solving a rescaled problem use it to certify in the original coordinates.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve(
    cols: &Columns<'_>,
    y: &[f64],
    lambda: f64,
    penalty: Option<&[f64]>,
    kkt_scale: Option<&[f64]>,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> LassoFit {
    let p = cols.p();
    let n = cols.n;
    let excluded = penalty.map_or(0, |t| t.iter().filter(|v| !v.is_finite()).count());
    let working: Vec<usize> = (0..p)
        .filter(|&j| penalty.is_none_or(|t| t[j].is_finite()) && cols.sq_norms[j] > 0.0)
        .collect();

    let mut beta = vec![0.0; p];
    if let Some(w) = warm.filter(|w| w.len() == p) {
        for &j in &working {
            beta[j] = w[j];
        }
    }
    let mut resid = y.to_vec();
    for &j in &working {
        if beta[j] != 0.0 {
            for (r, x) in resid.iter_mut().zip(cols.col(j)) {
                *r -= beta[j] * x;
            }
        }
    }
    let intercept = resid.iter().sum::<f64>() / n as f64;
    resid.iter_mut().for_each(|r| *r -= intercept);

    let thresholds = (0..p)
        .map(|j| {
            let tau = penalty.map_or(1.0, |t| t[j]);
            if tau.is_finite() {
                0.5 * lambda * tau
            } else {
                0.0
            }
        })
        .collect();

    let mut st = State {
        cols: *cols,
        beta,
        intercept,
        resid,
        thresholds,
    };

    let mut tol = opts.tolerance;
    let tol_floor = opts.tolerance * 1e-8;
    let mut sweeps = 0usize;
    let mut converged = false;

    'outer: while sweeps < opts.max_sweeps {
        let change = st.sweep(&working);
        sweeps += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(st.objective(lambda, &working, penalty));
        }
        if change < tol {
            if st.kkt_ok(lambda, &working, penalty, kkt_scale) {
                converged = true;
                break;
            }
            if tol <= tol_floor {
                break;
            }
            tol *= 0.1;
            continue;
        }
        let active: Vec<usize> = working
            .iter()
            .copied()
            .filter(|&j| st.beta[j] != 0.0)
            .collect();
        loop {
            if sweeps >= opts.max_sweeps {
                break 'outer;
            }
            let change = st.sweep(&active);
            sweeps += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(st.objective(lambda, &working, penalty));
            }
            if change < tol {
                break;
            }
        }
    }

    let objective = st.objective(lambda, &working, penalty);
    LassoFit::new(
        st.intercept,
        st.beta,
        objective,
        sweeps,
        converged,
        excluded,
    )
}

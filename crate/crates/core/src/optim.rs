//! Box-constrained Nelder–Mead simplex search.
//!
//! Trial points are projected onto the box before evaluation, so the
//! objective is only ever called inside the bounds. Non-finite objective
//! values are treated as +inf.

use serde::{Deserialize, Serialize};

use crate::model::ParamVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitPolicy {
    /// Moment-based starting values chosen per model.
    Moments,
    /// Start from the given point (still projected onto Θ).
    Fixed(ParamVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Tolerance on the spread of objective values across the simplex,
    /// relative to 1 + |f_best|.
    pub tol_f: f64,
    /// Tolerance on the simplex diameter in sup-norm.
    pub tol_x: f64,
    pub restarts: usize,
    pub init_policy: InitPolicy,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 500,
            tol_f: 1e-8,
            tol_x: 1e-8,
            restarts: 3,
            init_policy: InitPolicy::Moments,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// True if any coordinate sits within `tol` of a bound.
    pub fn touches(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(v, (lo, hi))| (v - lo).abs() <= tol || (hi - v).abs() <= tol)
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn eval(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Minimizes `f` from `start` with initial simplex edge lengths `steps`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
    bounds: &Bounds,
    cfg: &OptimizerConfig,
) -> Minimum {
    let n = start.len();
    let mut x0 = start.to_vec();
    bounds.project(&mut x0);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.clone());
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += steps[i];
        bounds.project(&mut v);
        if v[i] == x0[i] {
            // pinned at the upper bound: step inwards instead
            v[i] = x0[i] - steps[i];
            bounds.project(&mut v);
        }
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(&mut f, v)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let f_spread = fv[n] - fv[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread.is_finite()
            && f_spread <= cfg.tol_f * (1.0 + fv[0].abs())
            && x_spread <= cfg.tol_x
        {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            bounds.project(&mut p);
            p
        };

        let xr = along(REFLECT);
        let fr = eval(&mut f, &xr);
        if fr < fv[0] {
            let xe = along(EXPAND);
            let fe = eval(&mut f, &xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(CONTRACT * REFLECT);
            let fc = eval(&mut f, &xc);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&mut f, &xc);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + SHRINK * (simplex[i][j] - best[j]);
            }
            fv[i] = eval(&mut f, &simplex[i]);
        }
    }

    let (best, _) = fv
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        f: fv[best],
        iterations,
        converged,
    }
}

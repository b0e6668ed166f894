//! Maximum-likelihood fitting by bounded Nelder–Mead search in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::likelihood::LogLikelihood;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    /// Total cost-evaluation budget across restarts.
    pub max_evaluations: usize,
    /// Extra restarts from the incumbent once a search converges.
    pub max_restarts: usize,
    /// Converged when every vertex is within this log-space distance of the best.
    pub x_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 200_000,
            max_restarts: 6,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    /// Natural-space minimiser.
    pub theta: Vec<f64>,
    pub cost: f64,
    pub evaluations: usize,
    pub restarts: usize,
}

struct Search<'a, F> {
    cost: &'a F,
    bounds: &'a [(f64, f64)],
    evaluations: usize,
    budget: usize,
    best: (Vec<f64>, f64),
}

impl<F: Fn(&[f64]) -> f64> Search<'_, F> {
    fn project(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        if self.evaluations >= self.budget {
            return Err(Error::NotConverged {
                evaluations: self.evaluations,
                best_cost: self.best.1,
                best_point: self.best.0.iter().map(|v| v.exp()).collect(),
            });
        }
        self.evaluations += 1;
        let f = (self.cost)(x);
        let f = if f.is_nan() { f64::INFINITY } else { f };
        if f < self.best.1 {
            self.best = (x.to_vec(), f);
        }
        Ok(f)
    }

    /// One Nelder–Mead run with adaptive coefficients, started at `x0`.
    fn run(&mut self, x0: &[f64], x_tol: f64) -> Result<(Vec<f64>, f64)> {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), self.eval(x0)?));
        for i in 0..n {
            let (lo, hi) = self.bounds[i];
            let step = (0.1 * (hi - lo)).clamp(1e-3, 0.5);
            let mut x = x0.to_vec();
            x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
            let f = self.eval(&x)?;
            simplex.push((x, f));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if diameter < x_tol {
                return Ok(simplex.swap_remove(0));
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / nf;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
            };
            let mut xr = along(alpha);
            self.project(&mut xr);
            let fr = self.eval(&xr)?;
            if fr < simplex[0].1 {
                let mut xe = along(alpha * beta);
                self.project(&mut xe);
                let fe = self.eval(&xe)?;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (mut xc, outside) = if fr < worst.1 {
                (along(alpha * gamma), true)
            } else {
                (along(-gamma), false)
            };
            self.project(&mut xc);
            let fc = self.eval(&xc)?;
            if (outside && fc <= fr) || (!outside && fc < worst.1) {
                simplex[n] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for v in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best.iter().zip(&v.0).map(|(b, x)| b + delta * (x - b)).collect();
                let f = self.eval(&x)?;
                *v = (x, f);
            }
        }
    }
}

/// Minimises `cost(θ)` over `θ = exp(x)` with `x` inside `log_bounds`.
/// Cost evaluation errors count as `+inf`.
pub fn minimize_log_space<F>(
    cost: F,
    init: &[f64],
    log_bounds: &[(f64, f64)],
    opts: &MleOptions,
) -> Result<MleResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if init.len() != log_bounds.len() {
        return Err(Error::Validation("initial point and bounds differ in length".into()));
    }
    let x0: Vec<f64> = init.iter().map(|v| v.ln()).collect();
    for (i, (&x, &(lo, hi))) in x0.iter().zip(log_bounds).enumerate() {
        if !(x >= lo && x <= hi) {
            return Err(Error::Validation(format!(
                "initial value {} of coordinate {i} lies outside [{}, {}]",
                init[i],
                lo.exp(),
                hi.exp()
            )));
        }
    }
    let wrapped = |x: &[f64]| {
        let theta: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        cost(&theta).unwrap_or(f64::INFINITY)
    };
    let mut s = Search {
        cost: &wrapped,
        bounds: log_bounds,
        evaluations: 0,
        budget: opts.max_evaluations,
        best: (x0.clone(), f64::INFINITY),
    };
    let (mut x, mut f) = s.run(&x0, opts.x_tol)?;
    let mut restarts = 0;
    while restarts < opts.max_restarts {
        restarts += 1;
        let (xn, fnew) = s.run(&x, opts.x_tol)?;
        let moved = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let improved = fnew < f;
        if improved {
            x = xn;
            f = fnew;
        }
        if !improved || moved < 10.0 * opts.x_tol {
            break;
        }
    }
    if !f.is_finite() {
        return Err(Error::NotConverged {
            evaluations: s.evaluations,
            best_cost: f,
            best_point: init.to_vec(),
        });
    }
    Ok(MleResult {
        theta: x.iter().map(|v| v.exp()).collect(),
        cost: f,
        evaluations: s.evaluations,
        restarts,
    })
}

/// Maximum-likelihood estimate starting from `init`.
pub fn mle_fit(
    lik: &dyn LogLikelihood,
    init: &[f64],
    log_bounds: &[(f64, f64)],
    opts: &MleOptions,
) -> Result<MleResult> {
    minimize_log_space(|t| lik.log_likelihood(t).map(|l| -l), init, log_bounds, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(t: &[f64]) -> Result<f64> {
        Ok((t[0] - 1.0).powi(2) + 3.0 * (t[1] - 2.0).powi(2) + 0.5 * (t[0] - 1.0) * (t[1] - 2.0))
    }

    const BOX: [(f64, f64); 2] = [(-5.0, 5.0), (-5.0, 5.0)];

    #[test]
    fn recovers_quadratic_minimum() {
        let r = minimize_log_space(quad, &[3.0, 0.5], &BOX, &MleOptions::default()).unwrap();
        assert!((r.theta[0] - 1.0).abs() < 1e-4 && (r.theta[1] / 2.0 - 1.0).abs() < 1e-4, "{r:?}");
        assert!(r.cost <= quad(&[3.0, 0.5]).unwrap());
    }

    #[test]
    fn affine_rescaling_of_cost_keeps_minimiser() {
        let a = minimize_log_space(quad, &[3.0, 0.5], &BOX, &MleOptions::default()).unwrap();
        let b = minimize_log_space(|t| quad(t).map(|c| 250.0 * c + 17.0), &[3.0, 0.5], &BOX, &MleOptions::default())
            .unwrap();
        for (x, y) in a.theta.iter().zip(&b.theta) {
            assert!((x / y - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn respects_bounds() {
        let bx = [(0.0, 1.0f64.ln() + 0.1), (-5.0, 5.0)];
        let r = minimize_log_space(|t| Ok((t[0] - 10.0).powi(2) + (t[1] - 1.0).powi(2)), &[1.0, 1.0], &bx, &MleOptions::default())
            .unwrap();
        assert!(r.theta[0] <= (0.1f64).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn budget_exhaustion_reports_best_point() {
        let opts = MleOptions {
            max_evaluations: 10,
            ..Default::default()
        };
        match minimize_log_space(quad, &[3.0, 0.5], &BOX, &opts) {
            Err(Error::NotConverged { evaluations, best_point, best_cost }) => {
                assert_eq!(evaluations, 10);
                assert_eq!(best_point.len(), 2);
                assert!(best_cost <= quad(&[3.0, 0.5]).unwrap());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn init_outside_bounds_rejected() {
        assert!(minimize_log_space(quad, &[1e5, 1.0], &BOX, &MleOptions::default()).is_err());
    }
}

//! Adaptive linearly implicit (Rosenbrock) integrator for small stiff systems.
//!
//! Uses the four-stage-order, six-stage RODAS4 tableau of Hairer and Wanner with
//! its embedded third-order error estimate. Output between steps is cubic Hermite
//! interpolation from the step end points and their derivatives.

use nalgebra::{Const, DimMin, SMatrix, SVector};

use crate::error::{Error, Result};

pub trait OdeSystem<const N: usize> {
    /// Right-hand side of an autonomous system.
    fn rhs(&self, y: &SVector<f64, N>) -> Result<SVector<f64, N>>;

    /// Jacobian of `rhs` at `y`; `f0 = rhs(y)`. Defaults to forward differences.
    fn jacobian(&self, y: &SVector<f64, N>, f0: &SVector<f64, N>) -> Result<SMatrix<f64, N, N>> {
        let mut jac = SMatrix::<f64, N, N>::zeros();
        for c in 0..N {
            let eta = 1e-7 * y[c].abs().max(1e-5);
            let mut yp = *y;
            yp[c] += eta;
            let fp = self.rhs(&yp)?;
            jac.set_column(c, &((fp - f0) / eta));
        }
        Ok(jac)
    }

    /// Projection applied after every accepted step (e.g. clipping to bounds).
    fn project(&self, _y: &mut SVector<f64, N>) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const GAMMA: f64 = 0.25;
const A21: f64 = 1.544;
const A31: f64 = 0.946_678_528_081_582_6;
const A32: f64 = 0.255_701_169_898_328_4;
const A41: f64 = 3.314_825_187_068_521;
const A42: f64 = 2.896_124_015_972_201;
const A43: f64 = 0.998_641_913_997_781_7;
const A51: f64 = 1.221_224_509_226_641;
const A52: f64 = 6.019_134_481_288_629;
const A53: f64 = 12.537_083_329_320_87;
const A54: f64 = -0.687_886_036_105_895;
const C21: f64 = -5.6688;
const C31: f64 = -2.430_093_356_833_875;
const C32: f64 = -0.206_359_915_709_191_5;
const C41: f64 = -0.107_352_905_815_137_5;
const C42: f64 = -9.594_562_251_023_355;
const C43: f64 = -20.470_286_148_096_16;
const C51: f64 = 7.496_443_313_967_647;
const C52: f64 = -10.246_804_314_643_52;
const C53: f64 = -33.999_903_528_199_05;
const C54: f64 = 11.708_908_932_061_6;
const C61: f64 = 8.083_246_795_921_522;
const C62: f64 = -7.981_132_988_064_893;
const C63: f64 = -31.521_594_328_743_71;
const C64: f64 = 16.319_305_431_231_36;
const C65: f64 = -6.058_818_238_834_054;

fn hermite<const N: usize>(
    s: f64,
    h: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    f1: &SVector<f64, N>,
) -> SVector<f64, N> {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + f0 * (h10 * h) + y1 * h01 + f1 * (h11 * h)
}

/// One RODAS4 step. Returns `(y_new, error_vector)` or `None` when a stage
/// could not be evaluated (treated as a rejected step by the caller).
fn rodas_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    y: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    jac: &SMatrix<f64, N, N>,
    h: f64,
    stats: &mut StepStats,
) -> Option<(SVector<f64, N>, SVector<f64, N>)>
where
    Const<N>: DimMin<Const<N>, Output = Const<N>>,
{
    let w = SMatrix::<f64, N, N>::identity() * (1.0 / (h * GAMMA)) - jac;
    let lu = w.lu();
    let solve = |b: SVector<f64, N>| lu.solve(&b);
    let mut eval = |y: &SVector<f64, N>| {
        stats.rhs_evals += 1;
        sys.rhs(y).ok().filter(|f| f.iter().all(|v| v.is_finite()))
    };

    let k1 = solve(*f0)?;
    let y2 = y + k1 * A21;
    let k2 = solve(eval(&y2)? + k1 * (C21 / h))?;
    let y3 = y + k1 * A31 + k2 * A32;
    let k3 = solve(eval(&y3)? + k1 * (C31 / h) + k2 * (C32 / h))?;
    let y4 = y + k1 * A41 + k2 * A42 + k3 * A43;
    let k4 = solve(eval(&y4)? + k1 * (C41 / h) + k2 * (C42 / h) + k3 * (C43 / h))?;
    let y5 = y + k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54;
    let k5 = solve(eval(&y5)? + k1 * (C51 / h) + k2 * (C52 / h) + k3 * (C53 / h) + k4 * (C54 / h))?;
    let y6 = y5 + k5;
    let k6 = solve(
        eval(&y6)?
            + k1 * (C61 / h)
            + k2 * (C62 / h)
            + k3 * (C63 / h)
            + k4 * (C64 / h)
            + k5 * (C65 / h),
    )?;
    let y_new = y6 + k6;
    if y_new.iter().all(|v| v.is_finite()) {
        Some((y_new, k6))
    } else {
        None
    }
}

/// Integrates from `t0` to `t1`, pushing the interpolated state at every
/// `out_times` entry in `(t0, t1]`. `h` carries the step size between calls.
#[allow(clippy::too_many_arguments)]
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    tol: &Tolerances<N>,
    t0: f64,
    t1: f64,
    y0: SVector<f64, N>,
    h: &mut f64,
    out_times: &[f64],
    out: &mut Vec<SVector<f64, N>>,
    stats: &mut StepStats,
) -> Result<SVector<f64, N>>
where
    Const<N>: DimMin<Const<N>, Output = Const<N>>,
{
    let mut t = t0;
    let mut y = y0;
    let mut f0 = sys.rhs(&y)?;
    stats.rhs_evals += 1;
    let mut jac = sys.jacobian(&y, &f0)?;
    let mut next_out = out_times.partition_point(|&s| s <= t0);
    if !(*h > 0.0) {
        *h = tol.h_init;
    }
    let mut steps = 0usize;
    while t < t1 {
        if steps >= tol.max_steps {
            return Err(Error::numeric(
                format!("integration at t = {t}"),
                format!("exceeded {} steps", tol.max_steps),
            ));
        }
        steps += 1;
        let last = t + *h >= t1 - 1e-12 * t1.abs().max(1.0);
        let hs = if last { t1 - t } else { h.min(tol.h_max) };

        let err_norm = match rodas_step(sys, &y, &f0, &jac, hs, stats) {
            Some((y_new, err)) => {
                let mut acc = 0.0;
                for i in 0..N {
                    let sk = tol.atol[i] + tol.rtol * y[i].abs().max(y_new[i].abs());
                    acc += (err[i] / sk).powi(2);
                }
                let e = (acc / N as f64).sqrt();
                if e <= 1.0 {
                    let mut y_acc = y_new;
                    sys.project(&mut y_acc);
                    let f1 = sys.rhs(&y_acc)?;
                    stats.rhs_evals += 1;
                    let t_new = if last { t1 } else { t + hs };
                    while next_out < out_times.len() && out_times[next_out] <= t_new {
                        let s = ((out_times[next_out] - t) / hs).clamp(0.0, 1.0);
                        let mut yi = hermite(s, hs, &y, &f0, &y_acc, &f1);
                        sys.project(&mut yi);
                        out.push(yi);
                        next_out += 1;
                    }
                    t = t_new;
                    y = y_acc;
                    f0 = f1;
                    stats.accepted += 1;
                    if t < t1 {
                        jac = sys.jacobian(&y, &f0)?;
                    }
                }
                e
            }
            None => f64::INFINITY,
        };
        if err_norm > 1.0 {
            stats.rejected += 1;
        }
        let fac = if err_norm.is_finite() {
            (0.9 * err_norm.max(1e-10).powf(-0.25)).clamp(0.2, 6.0)
        } else {
            0.25
        };
        let h_new = hs * fac;
        if err_norm > 1.0 || !last {
            *h = h_new;
        }
        if *h < tol.h_min {
            return Err(Error::numeric(
                format!("integration at t = {t}"),
                format!("step size {:.3e} fell below minimum {:.3e}", *h, tol.h_min),
            ));
        }
    }
    Ok(y)
}

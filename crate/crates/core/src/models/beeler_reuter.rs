//! Beeler–Reuter ventricular action potential model.
//!
//! State order: `V_m, Ca_i, x1, m, h, j, d, f`. Time in ms, voltage in mV,
//! currents in μA/cm², calcium in M.

use nalgebra::{SMatrix, SVector};

use super::ode::{integrate, OdeSystem, StepStats, Tolerances};
use crate::data::ObservationGrid;
use crate::error::{Error, Result};
use crate::model::{resolve, Model};
use crate::params::{ParameterEntry, ParameterSpec};

pub type BrVector = SVector<f64, 8>;

pub const STATE_NAMES: [&str; 8] = ["V_m", "Ca_i", "x1", "m", "h", "j", "d", "f"];

/// Rate constant of the f-gate closing rate β_f (1/ms), as in the original
/// Beeler–Reuter formulation. A tenfold larger value shortens the plateau to ~75 ms.
pub const BETA_F_RATE: f64 = 0.0065;

pub const INITIAL_STATE: [f64; 8] = [-83.3, 1.87e-7, 0.1644, 0.01, 0.9814, 0.9673, 0.0033, 0.9884];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeelerReuterParams {
    pub r_ca: f64,
    pub ca_sr: f64,
    pub k_up: f64,
    pub a_k1: f64,
    pub a_x1: f64,
    pub e_na: f64,
    pub g_na: f64,
    pub g_nac: f64,
    pub g_s: f64,
    pub a_s: f64,
    pub t_on: f64,
    pub t_dur: f64,
    pub c_m: f64,
}

impl Default for BeelerReuterParams {
    fn default() -> Self {
        Self {
            r_ca: 1e-7,
            ca_sr: 1e-7,
            k_up: 0.07,
            a_k1: 0.35,
            a_x1: 0.8,
            e_na: 50.0,
            g_na: 4.0,
            g_nac: 0.003,
            g_s: 0.09,
            a_s: 40.0,
            t_on: 50.0,
            t_dur: 1.0,
            c_m: 1.0,
        }
    }
}

impl BeelerReuterParams {
    /// From the full 13-entry vector in spec order.
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            r_ca: v[0],
            ca_sr: v[1],
            k_up: v[2],
            a_k1: v[3],
            a_x1: v[4],
            e_na: v[5],
            g_na: v[6],
            g_nac: v[7],
            g_s: v[8],
            a_s: v[9],
            t_on: v[10],
            t_dur: v[11],
            c_m: v[12],
        }
    }

    pub fn stimulus(&self, t: f64) -> f64 {
        if t >= self.t_on && t < self.t_on + self.t_dur {
            self.a_s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeelerReuterState {
    pub v: f64,
    pub ca: f64,
    pub x1: f64,
    pub m: f64,
    pub h: f64,
    pub j: f64,
    pub d: f64,
    pub f: f64,
}

impl BeelerReuterState {
    pub fn initial() -> Self {
        Self::from_vector(&BrVector::from(INITIAL_STATE))
    }

    pub fn from_vector(y: &BrVector) -> Self {
        Self {
            v: y[0],
            ca: y[1],
            x1: y[2],
            m: y[3],
            h: y[4],
            j: y[5],
            d: y[6],
            f: y[7],
        }
    }

    pub fn to_vector(&self) -> BrVector {
        BrVector::from([self.v, self.ca, self.x1, self.m, self.h, self.j, self.d, self.f])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Currents {
    pub i_k1: f64,
    pub i_x1: f64,
    pub i_na: f64,
    pub i_s: f64,
    pub i_stim: f64,
}

/// Opening (α) and closing (β) rates of the gates x1, m, h, j, d, f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateRates {
    pub alpha: [f64; 6],
    pub beta: [f64; 6],
}

pub fn gate_rates(v: f64) -> GateRates {
    let a_x1 = 0.0005 * (0.083 * (v + 50.0)).exp() / ((0.057 * (v + 50.0)).exp() + 1.0);
    let b_x1 = 0.0013 * (-0.06 * (v + 20.0)).exp() / ((-0.04 * (v + 20.0)).exp() + 1.0);
    let u = v + 47.0;
    let a_m = if u.abs() < 1e-6 {
        10.0 + 0.5 * u
    } else {
        -u / ((-0.1 * u).exp() - 1.0)
    };
    let b_m = 40.0 * (-0.056 * (v + 72.0)).exp();
    let a_h = 0.126 * (-0.25 * (v + 77.0)).exp();
    let b_h = 1.7 / ((-0.082 * (v + 22.5)).exp() + 1.0);
    let a_j = 0.055 * (-0.25 * (v + 78.0)).exp() / ((-0.2 * (v + 78.0)).exp() + 1.0);
    let b_j = 0.3 / ((-0.1 * (v + 32.0)).exp() + 1.0);
    let a_d = 0.095 * (-0.01 * (v - 5.0)).exp() / ((-0.072 * (v - 5.0)).exp() + 1.0);
    let b_d = 0.07 * (-0.017 * (v + 44.0)).exp() / ((0.05 * (v + 44.0)).exp() + 1.0);
    let a_f = 0.012 * (-0.008 * (v + 28.0)).exp() / ((0.15 * (v + 28.0)).exp() + 1.0);
    let b_f = BETA_F_RATE * (-0.02 * (v + 30.0)).exp() / ((-0.2 * (v + 30.0)).exp() + 1.0);
    GateRates {
        alpha: [a_x1, a_m, a_h, a_j, a_d, a_f],
        beta: [b_x1, b_m, b_h, b_j, b_d, b_f],
    }
}

/// Calcium reversal potential.
pub fn e_s(ca: f64) -> Result<f64> {
    if !(ca > 0.0) {
        return Err(Error::domain("Ca_i", format!("concentration {ca} is not positive")));
    }
    Ok(-82.3 - 13.0287 * ca.ln())
}

fn i_k1_shape(v: f64) -> f64 {
    let first = 4.0 * ((0.04 * (v + 85.0)).exp() - 1.0)
        / ((0.08 * (v + 53.0)).exp() + (0.04 * (v + 53.0)).exp());
    let u = v + 23.0;
    let second = if u.abs() < 1e-6 {
        5.0 + 0.1 * u
    } else {
        0.2 * u / (1.0 - (-0.04 * u).exp())
    };
    first + second
}

fn i_x1_shape(v: f64) -> f64 {
    ((0.04 * (v + 77.0)).exp() - 1.0) / (0.04 * (v + 35.0)).exp()
}

fn currents_at(s: &BeelerReuterState, p: &BeelerReuterParams, i_stim: f64) -> Result<Currents> {
    let es = e_s(s.ca)?;
    Ok(Currents {
        i_k1: p.a_k1 * i_k1_shape(s.v),
        i_x1: p.a_x1 * s.x1 * i_x1_shape(s.v),
        i_na: (p.g_na * s.m.powi(3) * s.h * s.j + p.g_nac) * (s.v - p.e_na),
        i_s: p.g_s * s.d * s.f * (s.v - es),
        i_stim,
    })
}

pub fn br_currents(s: &BeelerReuterState, p: &BeelerReuterParams, t: f64) -> Result<Currents> {
    currents_at(s, p, p.stimulus(t))
}

fn membrane_rate(c: &Currents, p: &BeelerReuterParams) -> f64 {
    -(c.i_k1 + c.i_x1 + c.i_na + c.i_s - c.i_stim) / p.c_m
}

fn derivatives_at(y: &BrVector, p: &BeelerReuterParams, i_stim: f64) -> Result<BrVector> {
    let s = BeelerReuterState::from_vector(y);
    let c = currents_at(&s, p, i_stim)?;
    let g = gate_rates(s.v);
    let mut dy = BrVector::zeros();
    dy[0] = membrane_rate(&c, p);
    dy[1] = -p.r_ca * c.i_s + p.k_up * (p.ca_sr - s.ca);
    for k in 0..6 {
        let x = y[k + 2];
        dy[k + 2] = g.alpha[k] * (1.0 - x) - g.beta[k] * x;
    }
    Ok(dy)
}

/// Time derivatives of every state variable, returned in state layout.
pub fn br_derivatives(
    s: &BeelerReuterState,
    p: &BeelerReuterParams,
    t: f64,
) -> Result<BeelerReuterState> {
    Ok(BeelerReuterState::from_vector(&derivatives_at(&s.to_vector(), p, p.stimulus(t))?))
}

struct BrSystem<'a> {
    p: &'a BeelerReuterParams,
    i_stim: f64,
}

impl OdeSystem<8> for BrSystem<'_> {
    fn rhs(&self, y: &BrVector) -> Result<BrVector> {
        derivatives_at(y, self.p, self.i_stim)
    }

    fn jacobian(&self, y: &BrVector, f0: &BrVector) -> Result<SMatrix<f64, 8, 8>> {
        let p = self.p;
        let s = BeelerReuterState::from_vector(y);
        let es = e_s(s.ca)?;
        let g = gate_rates(s.v);
        let mut jac = SMatrix::<f64, 8, 8>::zeros();

        // voltage column by forward difference
        let eta = 1e-6 * s.v.abs().max(1.0);
        let mut yp = *y;
        yp[0] += eta;
        let fp = self.rhs(&yp)?;
        jac.set_column(0, &((fp - f0) / eta));

        let drive_na = s.v - p.e_na;
        let drive_s = s.v - es;
        let dis_dca = p.g_s * s.d * s.f * 13.0287 / s.ca;
        let dis_dd = p.g_s * s.f * drive_s;
        let dis_df = p.g_s * s.d * drive_s;
        let inv_cm = 1.0 / p.c_m;

        jac[(0, 1)] = -inv_cm * dis_dca;
        jac[(0, 2)] = -inv_cm * p.a_x1 * i_x1_shape(s.v);
        jac[(0, 3)] = -inv_cm * p.g_na * 3.0 * s.m * s.m * s.h * s.j * drive_na;
        jac[(0, 4)] = -inv_cm * p.g_na * s.m.powi(3) * s.j * drive_na;
        jac[(0, 5)] = -inv_cm * p.g_na * s.m.powi(3) * s.h * drive_na;
        jac[(0, 6)] = -inv_cm * dis_dd;
        jac[(0, 7)] = -inv_cm * dis_df;

        jac[(1, 1)] = -p.r_ca * dis_dca - p.k_up;
        jac[(1, 6)] = -p.r_ca * dis_dd;
        jac[(1, 7)] = -p.r_ca * dis_df;

        for k in 0..6 {
            jac[(k + 2, k + 2)] = -(g.alpha[k] + g.beta[k]);
        }
        Ok(jac)
    }

    fn project(&self, y: &mut BrVector) {
        for k in 2..8 {
            y[k] = y[k].clamp(0.0, 1.0);
        }
    }
}

/// Integrator settings for the action-potential model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrSolverOptions {
    pub rtol: f64,
    /// Absolute tolerance for voltage and gates; calcium uses this times 1e-7.
    pub atol: f64,
}

impl Default for BrSolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
        }
    }
}

impl BrSolverOptions {
    fn tolerances(&self) -> Tolerances<8> {
        let mut atol = [self.atol; 8];
        atol[1] = self.atol * 1e-7;
        Tolerances {
            rtol: self.rtol,
            atol,
            h_init: 1e-2,
            h_min: 1e-10,
            h_max: 20.0,
            max_steps: 200_000,
        }
    }
}

/// Full state at each of `times` (strictly increasing, starting at 0).
pub fn br_simulate_states(
    p: &BeelerReuterParams,
    times: &[f64],
    opts: &BrSolverOptions,
) -> Result<(Vec<BrVector>, StepStats)> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(Error::Validation("time grid must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("time grid must be strictly increasing".into()));
    }
    let tol = opts.tolerances();
    let t_end = *times.last().unwrap();
    let t_off = p.t_on + p.t_dur;
    let mut bounds = vec![0.0];
    for b in [p.t_on, t_off] {
        if b > 0.0 && b < t_end {
            bounds.push(b);
        }
    }
    bounds.push(t_end);

    let y0 = BrVector::from(INITIAL_STATE);
    let mut out = vec![y0];
    let mut stats = StepStats::default();
    let mut y = y0;
    let mut h = 0.0;
    for w in bounds.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let sys = BrSystem {
            p,
            i_stim: p.stimulus(w[0]),
        };
        y = integrate(&sys, &tol, w[0], w[1], y, &mut h, times, &mut out, &mut stats)?;
        // restart each segment with a modest step so the discontinuity is resolved
        h = h.min(0.05);
    }
    debug_assert_eq!(out.len(), times.len());
    Ok((out, stats))
}

/// Membrane potential at each of `times`.
pub fn br_simulate(p: &BeelerReuterParams, times: &[f64], opts: &BrSolverOptions) -> Result<Vec<f64>> {
    Ok(br_simulate_states(p, times, opts)?.0.iter().map(|y| y[0]).collect())
}

pub fn trajectory_csv(times: &[f64], states: &[BrVector]) -> String {
    let mut out = String::from("t");
    for n in STATE_NAMES {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (t, y) in times.iter().zip(states) {
        out.push_str(&format!("{t:.16e}"));
        for v in y.iter() {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct BeelerReuter {
    spec: ParameterSpec,
    channels: Vec<String>,
    solver: BrSolverOptions,
}

impl BeelerReuter {
    pub fn new() -> Self {
        let d = BeelerReuterParams::default();
        let spec = ParameterSpec::new(vec![
            ParameterEntry::new("r_Ca", "M cm^2/nC", d.r_ca, true),
            ParameterEntry::new("Ca_SR", "M", d.ca_sr, true),
            ParameterEntry::new("k_up", "1/ms", d.k_up, true),
            ParameterEntry::new("A_K1", "uA/cm^2", d.a_k1, true),
            ParameterEntry::new("A_x1", "uA/cm^2", d.a_x1, true),
            ParameterEntry::new("E_Na", "mV", d.e_na, true),
            ParameterEntry::new("g_Na", "mS/cm^2", d.g_na, true),
            ParameterEntry::new("g_NaC", "mS/cm^2", d.g_nac, true),
            ParameterEntry::new("g_s", "mS/cm^2", d.g_s, true),
            ParameterEntry::new("A_s", "uA/cm^2", d.a_s, false),
            ParameterEntry::new("t_on", "ms", d.t_on, false),
            ParameterEntry::new("t_dur", "ms", d.t_dur, false),
            ParameterEntry::new("C_m", "uF/cm^2", d.c_m, false),
        ])
        .expect("static spec");
        Self::with_spec(spec)
    }

    pub fn with_spec(spec: ParameterSpec) -> Self {
        Self {
            spec,
            channels: vec!["V_m".into()],
            solver: BrSolverOptions::default(),
        }
    }

    pub fn with_solver(mut self, solver: BrSolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn params(&self, theta: &[f64]) -> BeelerReuterParams {
        BeelerReuterParams::from_slice(&resolve(&self.spec, theta))
    }
}

impl Default for BeelerReuter {
    fn default() -> Self {
        Self::new()
    }
}

impl Model for BeelerReuter {
    fn name(&self) -> &str {
        "beeler_reuter"
    }

    fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    fn channels(&self) -> &[String] {
        &self.channels
    }

    fn predict(&self, theta: &[f64], grid: &ObservationGrid) -> Result<Vec<f64>> {
        self.check_inputs(theta, grid)?;
        let mut times: Vec<f64> = grid.points().iter().map(|p| p.x[0]).collect();
        if times.iter().any(|&t| t < 0.0) {
            return Err(Error::domain("t", "negative observation time"));
        }
        times.push(0.0);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let v = br_simulate(&self.params(theta), &times, &self.solver)?;
        Ok(grid
            .points()
            .iter()
            .map(|pt| {
                let i = times.partition_point(|&t| t < pt.x[0]);
                v[i]
            })
            .collect())
    }
}

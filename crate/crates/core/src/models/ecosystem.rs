//! Quarterly pasture / rabbit / threatened-mammal / fox difference equations.

use crate::data::ObservationGrid;
use crate::error::{Error, Result};
use crate::model::{resolve, Model};
use crate::params::{ParameterEntry, ParameterSpec};

pub const N_FLOOR: f64 = 0.08;
pub const M_FLOOR: f64 = 0.08;
pub const P_FLOOR: f64 = 0.001;

pub const PARAMETER_NAMES: [&str; 20] = [
    "a_N", "c_N", "d_N", "a_M", "c_M", "d_M", "a_P", "c_P", "d_P", "k", "D_II", "D_III", "nu",
    "f", "w", "R", "V0", "N0", "M0", "P0",
];

const UNITS: [&str; 20] = [
    "1/quarter",
    "1/quarter",
    "ha",
    "1/quarter",
    "1/quarter",
    "ha",
    "1/quarter",
    "1/quarter",
    "ha",
    "kg/quarter",
    "1/ha",
    "1/ha",
    "kg/(kg^0.75 quarter)",
    "kg/ha",
    "kg",
    "mm",
    "kg/ha",
    "1/ha",
    "1/ha",
    "1/ha",
];

pub const REFERENCE: [f64; 20] = [
    4.60, 5.50, 0.0045, 4.60, 5.50, 0.0045, 0.56, 0.77, 3.20, 100.01, 0.99, 1.32, 6.21, 138.00,
    0.78, 74.48, 300.0, 0.08, 0.08, 0.001,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcosystemParams {
    pub a_n: f64,
    pub c_n: f64,
    pub d_n: f64,
    pub a_m: f64,
    pub c_m: f64,
    pub d_m: f64,
    pub a_p: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub k: f64,
    pub d_ii: f64,
    pub d_iii: f64,
    pub nu: f64,
    pub f: f64,
    pub w: f64,
    pub r: f64,
    pub v0: f64,
    pub n0: f64,
    pub m0: f64,
    pub p0: f64,
}

impl EcosystemParams {
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            a_n: v[0],
            c_n: v[1],
            d_n: v[2],
            a_m: v[3],
            c_m: v[4],
            d_m: v[5],
            a_p: v[6],
            c_p: v[7],
            d_p: v[8],
            k: v[9],
            d_ii: v[10],
            d_iii: v[11],
            nu: v[12],
            f: v[13],
            w: v[14],
            r: v[15],
            v0: v[16],
            n0: v[17],
            m0: v[18],
            p0: v[19],
        }
    }

    pub fn initial_state(&self) -> EcosystemState {
        EcosystemState {
            v: self.v0,
            n: self.n0,
            m: self.m0,
            p: self.p0,
        }
    }
}

impl Default for EcosystemParams {
    fn default() -> Self {
        Self::from_slice(&REFERENCE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcosystemState {
    pub v: f64,
    pub n: f64,
    pub m: f64,
    pub p: f64,
}

impl EcosystemState {
    pub fn channel(&self, j: usize) -> f64 {
        match j {
            0 => self.v,
            1 => self.n,
            2 => self.m,
            _ => self.p,
        }
    }
}

/// Constitutive rates evaluated on one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcosystemRates {
    pub r_v: f64,
    pub g_n: f64,
    pub r_n: f64,
    pub g_p: f64,
    pub r_m: f64,
    pub h_p: f64,
    pub q_p: f64,
    pub r_p: f64,
}

fn finite(value: f64, equation: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numeric(equation, format!("non-finite value {value}")))
    }
}

pub fn ecosystem_rates(s: &EcosystemState, p: &EcosystemParams, dt: f64) -> Result<EcosystemRates> {
    let r_v = finite(
        -55.12 - 0.0153 * s.v - 0.00056 * s.v * s.v + 2.5 * p.r,
        "r_V (pasture growth rate)",
    )?;
    // g_N = h_M: the same intake curve for rabbits and threatened mammals
    let g_n = finite(
        p.nu * p.w.powf(0.75) * (1.0 - (-(s.v + r_v * dt) / p.f).exp()),
        "g_N (pasture intake)",
    )?;
    let r_n = finite(
        -p.a_n + p.c_n * (1.0 - (-p.d_n * s.v).exp()),
        "r_N (rabbit numerical response)",
    )?;
    let n2 = s.n * s.n;
    let g_p = finite(
        (p.k / p.w) * n2 / (n2 + p.d_iii * p.d_iii),
        "g_P (fox functional response to rabbits)",
    )?;
    let r_m = finite(
        -p.a_m + p.c_m * (1.0 - (-p.d_m * s.v).exp()),
        "r_M (threatened species numerical response)",
    )?;
    let h_p = finite(
        (p.k / p.w) * s.m / (s.m + p.d_ii),
        "h_P (fox functional response to threatened species)",
    )?;
    let q_p = finite(h_p * (1.0 - g_p / p.k), "q_P (fox predation on threatened species)")?;
    let r_p = finite(
        -p.a_p + p.c_p * (1.0 - (-p.d_p * (s.m + s.p)).exp()),
        "r_P (fox numerical response)",
    )?;
    Ok(EcosystemRates {
        r_v,
        g_n,
        r_n,
        g_p,
        r_m,
        h_p,
        q_p,
        r_p,
    })
}

/// One explicit update of length `dt` quarters followed by the density floors.
pub fn ecosystem_step(s: &EcosystemState, p: &EcosystemParams, dt: f64) -> Result<EcosystemState> {
    let r = ecosystem_rates(s, p, dt)?;
    let dv = finite(r.r_v - r.g_n * s.n - r.g_n * s.m, "dV (pasture biomass)")?;
    let dn = finite(r.r_n * s.n - r.g_p * s.p, "dN (rabbit density)")?;
    let dm = finite(r.r_m * s.m - r.q_p * s.p, "dM (threatened species density)")?;
    let dp = finite(r.r_p * s.p, "dP (fox density)")?;
    Ok(EcosystemState {
        v: (s.v + dt * dv).max(0.0),
        n: (s.n + dt * dn).max(N_FLOOR),
        m: (s.m + dt * dm).max(M_FLOOR),
        p: (s.p + dt * dp).max(P_FLOOR),
    })
}

/// Trajectory of `quarters + 1` states starting from the initial conditions in `p`.
pub fn ecosystem_simulate(p: &EcosystemParams, quarters: usize) -> Result<Vec<EcosystemState>> {
    let mut traj = Vec::with_capacity(quarters + 1);
    let mut s = p.initial_state();
    traj.push(s);
    for q in 0..quarters {
        s = ecosystem_step(&s, p, 1.0).map_err(|e| match e {
            Error::Numeric { context, reason } => Error::Numeric {
                context: format!("{context} at quarter {q}"),
                reason,
            },
            other => other,
        })?;
        traj.push(s);
    }
    Ok(traj)
}

pub fn trajectory_csv(traj: &[EcosystemState]) -> String {
    let mut out = String::from("t,V,N,M,P\n");
    for (t, s) in traj.iter().enumerate() {
        out.push_str(&format!("{t},{:.16e},{:.16e},{:.16e},{:.16e}\n", s.v, s.n, s.m, s.p));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Ecosystem {
    spec: ParameterSpec,
    channels: Vec<String>,
}

impl Ecosystem {
    pub fn new() -> Self {
        let entries = PARAMETER_NAMES
            .iter()
            .zip(UNITS)
            .zip(REFERENCE)
            .map(|((n, u), r)| ParameterEntry::new(n, u, r, true))
            .collect();
        Self::with_spec(ParameterSpec::new(entries).expect("static spec"))
    }

    pub fn with_spec(spec: ParameterSpec) -> Self {
        Self {
            spec,
            channels: ["V", "N", "M", "P"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Default for Ecosystem {
    fn default() -> Self {
        Self::new()
    }
}

impl Model for Ecosystem {
    fn name(&self) -> &str {
        "ecosystem"
    }

    fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    fn channels(&self) -> &[String] {
        &self.channels
    }

    fn predict(&self, theta: &[f64], grid: &ObservationGrid) -> Result<Vec<f64>> {
        self.check_inputs(theta, grid)?;
        let mut horizon = 0usize;
        for pt in grid.points() {
            let t = pt.x[0];
            if t < 0.0 || t.fract() != 0.0 {
                return Err(Error::domain("t", format!("{t} is not a whole quarter")));
            }
            horizon = horizon.max(t as usize);
        }
        let p = EcosystemParams::from_slice(&resolve(&self.spec, theta));
        let traj = ecosystem_simulate(&p, horizon)?;
        Ok(grid
            .points()
            .iter()
            .map(|pt| traj[pt.x[0] as usize].channel(pt.channel))
            .collect())
    }
}

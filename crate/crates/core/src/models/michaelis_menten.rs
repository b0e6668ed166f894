//! Michaelis–Menten enzyme kinetics.

use crate::data::ObservationGrid;
use crate::error::{Error, Result};
use crate::model::{resolve, Model};
use crate::params::{ParameterEntry, ParameterSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MichaelisMentenParams {
    pub k_cat: f64,
    pub e_t: f64,
    pub k_m: f64,
}

impl Default for MichaelisMentenParams {
    fn default() -> Self {
        Self {
            k_cat: 100.0,
            e_t: 5.0,
            k_m: 146.7,
        }
    }
}

/// Reaction rate `k_cat·E_T·S/(K_M+S)` in μM/min.
pub fn mm_rate(s: f64, p: &MichaelisMentenParams) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain("S", format!("substrate concentration {s} is negative")));
    }
    Ok(p.k_cat * p.e_t * s / (p.k_m + s))
}

#[derive(Debug, Clone)]
pub struct MichaelisMenten {
    spec: ParameterSpec,
    channels: Vec<String>,
}

impl MichaelisMenten {
    pub fn new() -> Self {
        let d = MichaelisMentenParams::default();
        let spec = ParameterSpec::new(vec![
            ParameterEntry::new("k_cat", "1/min", d.k_cat, true),
            ParameterEntry::new("[E_T]", "uM", d.e_t, true),
            ParameterEntry::new("K_M", "uM", d.k_m, true),
        ])
        .expect("static spec");
        Self {
            spec,
            channels: vec!["rate".into()],
        }
    }

    pub fn with_spec(spec: ParameterSpec) -> Self {
        Self {
            spec,
            channels: vec!["rate".into()],
        }
    }
}

impl Default for MichaelisMenten {
    fn default() -> Self {
        Self::new()
    }
}

impl Model for MichaelisMenten {
    fn name(&self) -> &str {
        "michaelis_menten"
    }

    fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    fn channels(&self) -> &[String] {
        &self.channels
    }

    fn predict(&self, theta: &[f64], grid: &ObservationGrid) -> Result<Vec<f64>> {
        self.check_inputs(theta, grid)?;
        let v = resolve(&self.spec, theta);
        let p = MichaelisMentenParams {
            k_cat: v[0],
            e_t: v[1],
            k_m: v[2],
        };
        grid.points().iter().map(|pt| mm_rate(pt.x[0], &p)).collect()
    }
}

//! Observation grids, noise models and datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One requested model output: input condition `x` on output channel `channel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPoint {
    pub x: Vec<f64>,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationGrid {
    points: Vec<ObservationPoint>,
}

impl ObservationGrid {
    pub fn new(points: Vec<ObservationPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("observation grid is empty".into()));
        }
        let nx = points[0].x.len();
        for (i, p) in points.iter().enumerate() {
            if p.x.len() != nx {
                return Err(Error::Validation(format!(
                    "grid point {i} has {} inputs, expected {nx}",
                    p.x.len()
                )));
            }
            if p.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("grid point {i} has a non-finite input")));
            }
        }
        Ok(Self { points })
    }

    /// Single-input grid over one channel.
    pub fn scalar(xs: &[f64], channel: usize) -> Result<Self> {
        Self::new(
            xs.iter()
                .map(|&x| ObservationPoint { x: vec![x], channel })
                .collect(),
        )
    }

    /// Every `x` observed on every channel in `channels`, channel-major.
    pub fn product(xs: &[f64], channels: &[usize]) -> Result<Self> {
        let mut pts = Vec::with_capacity(xs.len() * channels.len());
        for &c in channels {
            for &x in xs {
                pts.push(ObservationPoint { x: vec![x], channel: c });
            }
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[ObservationPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.points[0].x.len()
    }

    pub fn max_channel(&self) -> usize {
        self.points.iter().map(|p| p.channel).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Standard deviation proportional to the noiseless signal.
    Heteroscedastic { epsilon: f64 },
    /// Constant standard deviation in output units.
    Homoscedastic { sigma: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Heteroscedastic { epsilon } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::Validation(format!("epsilon {epsilon} not in (0,1)")));
                }
            }
            NoiseSpec::Homoscedastic { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Validation(format!("sigma {sigma} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Name of the appended noise parameter.
    pub fn parameter_name(&self) -> &'static str {
        match self {
            NoiseSpec::Heteroscedastic { .. } => "epsilon",
            NoiseSpec::Homoscedastic { .. } => "sigma",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            NoiseSpec::Heteroscedastic { epsilon } => epsilon,
            NoiseSpec::Homoscedastic { sigma } => sigma,
        }
    }

    pub fn is_heteroscedastic(&self) -> bool {
        matches!(self, NoiseSpec::Heteroscedastic { .. })
    }

    /// Same scheme with a different magnitude.
    pub fn with_value(&self, v: f64) -> NoiseSpec {
        match self {
            NoiseSpec::Heteroscedastic { .. } => NoiseSpec::Heteroscedastic { epsilon: v },
            NoiseSpec::Homoscedastic { .. } => NoiseSpec::Homoscedastic { sigma: v },
        }
    }
}

/// How a synthetic dataset was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub model: String,
    pub parameter_names: Vec<String>,
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: ObservationGrid,
    y_obs: Vec<f64>,
    noise: NoiseSpec,
    provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(
        grid: ObservationGrid,
        y_obs: Vec<f64>,
        noise: NoiseSpec,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        noise.validate()?;
        if y_obs.len() != grid.len() {
            return Err(Error::Validation(format!(
                "{} observations for {} grid points",
                y_obs.len(),
                grid.len()
            )));
        }
        for (i, &y) in y_obs.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::Validation(format!("observation {i} is not finite")));
            }
            if noise.is_heteroscedastic() && y < 0.0 {
                return Err(Error::Validation(format!(
                    "observation {i} is negative under heteroscedastic noise"
                )));
            }
        }
        Ok(Self {
            grid,
            y_obs,
            noise,
            provenance,
        })
    }

    pub fn grid(&self) -> &ObservationGrid {
        &self.grid
    }

    pub fn observations(&self) -> &[f64] {
        &self.y_obs
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.y_obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_obs.is_empty()
    }

    /// Records as `(x, channel, y_obs)` triples.
    pub fn records(&self) -> impl Iterator<Item = (&[f64], usize, f64)> + '_ {
        self.grid
            .points()
            .iter()
            .zip(&self.y_obs)
            .map(|(p, &y)| (p.x.as_slice(), p.channel, y))
    }

    /// Copy with records reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let pts = perm.iter().map(|&i| self.grid.points()[i].clone()).collect();
        let ys = perm.iter().map(|&i| self.y_obs[i]).collect();
        Dataset::new(ObservationGrid::new(pts)?, ys, self.noise, self.provenance.clone())
    }
}

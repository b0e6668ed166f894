use crate::data::{ObservationGrid, ObservationPoint};
use crate::error::{Error, Result};
use crate::params::ParameterSpec;

/// A deterministic mechanistic model.
///
/// `theta` always holds the estimated parameters of [`Model::spec`] in spec
/// order, natural space. Fixed entries are read from the spec.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    fn spec(&self) -> &ParameterSpec;

    /// Output channel names; a grid point's `channel` indexes this list.
    fn channels(&self) -> &[String];

    /// Noiseless outputs for every point of `grid`, in grid order.
    fn predict(&self, theta: &[f64], grid: &ObservationGrid) -> Result<Vec<f64>>;

    fn predict_point(&self, theta: &[f64], x: &[f64], channel: usize) -> Result<f64> {
        let grid = ObservationGrid::new(vec![ObservationPoint {
            x: x.to_vec(),
            channel,
        }])?;
        Ok(self.predict(theta, &grid)?[0])
    }

    fn check_inputs(&self, theta: &[f64], grid: &ObservationGrid) -> Result<()> {
        let d = self.spec().dim();
        if theta.len() != d {
            return Err(Error::Validation(format!(
                "{}: expected {d} parameters, got {}",
                self.name(),
                theta.len()
            )));
        }
        let names = self.spec().estimated_names();
        for (i, &v) in theta.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(&names[i], format!("value {v} is not strictly positive")));
            }
        }
        if grid.max_channel() >= self.channels().len() {
            return Err(Error::Validation(format!(
                "{}: channel {} out of range",
                self.name(),
                grid.max_channel()
            )));
        }
        Ok(())
    }
}

/// Resolves named values from an estimated vector plus the spec's fixed entries.
pub(crate) fn resolve(spec: &ParameterSpec, theta: &[f64]) -> Vec<f64> {
    let mut it = theta.iter();
    spec.entries()
        .iter()
        .map(|e| {
            if e.estimated {
                *it.next().expect("theta length checked")
            } else {
                e.reference_value
            }
        })
        .collect()
}

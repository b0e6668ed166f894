//! Synthetic noisy datasets from a model at known parameters.

use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, NoiseSpec, ObservationGrid, Provenance};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::{substream, tags};

fn provenance(model: &dyn Model, theta: &[f64], seed: u64) -> Provenance {
    Provenance {
        seed,
        model: model.name().to_string(),
        parameter_names: model.spec().estimated_names(),
        parameters: theta.to_vec(),
    }
}

/// Truncated-normal draw `N(mu, (eps·mu)²)` restricted to `[0, ∞)`, by rejection.
fn truncated_draw(mu: f64, eps: f64, seed: u64, index: usize) -> f64 {
    let mut rng = substream(seed, &[tags::SYNTH, index as u64]);
    if mu == 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = StandardNormal.sample(&mut rng);
        let y = mu + eps * mu * z;
        if y >= 0.0 {
            return y;
        }
    }
}

/// Noise with standard deviation `epsilon·y_model`, truncated below at zero.
pub fn synth_heteroscedastic(
    model: &dyn Model,
    theta: &[f64],
    grid: &ObservationGrid,
    epsilon: f64,
    seed: u64,
) -> Result<Dataset> {
    let noise = NoiseSpec::Heteroscedastic { epsilon };
    noise.validate()?;
    let y_model = model.predict(theta, grid)?;
    let mut ys = Vec::with_capacity(y_model.len());
    for (i, &mu) in y_model.iter().enumerate() {
        if !(mu >= 0.0) {
            return Err(Error::ModelOutput(format!(
                "model output {mu} at grid point {i} is negative; heteroscedastic noise needs non-negative signals"
            )));
        }
        ys.push(truncated_draw(mu, epsilon, seed, i));
    }
    Dataset::new(grid.clone(), ys, noise, Some(provenance(model, theta, seed)))
}

/// Additive `N(0, σ²)` noise, untruncated.
pub fn synth_homoscedastic(
    model: &dyn Model,
    theta: &[f64],
    grid: &ObservationGrid,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    let noise = NoiseSpec::Homoscedastic { sigma };
    noise.validate()?;
    let y_model = model.predict(theta, grid)?;
    let ys = y_model
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let mut rng = substream(seed, &[tags::SYNTH, i as u64]);
            let z: f64 = StandardNormal.sample(&mut rng);
            mu + sigma * z
        })
        .collect();
    Dataset::new(grid.clone(), ys, noise, Some(provenance(model, theta, seed)))
}

/// Dispatches on the noise scheme.
pub fn synthesize(
    model: &dyn Model,
    theta: &[f64],
    grid: &ObservationGrid,
    noise: NoiseSpec,
    seed: u64,
) -> Result<Dataset> {
    match noise {
        NoiseSpec::Heteroscedastic { epsilon } => synth_heteroscedastic(model, theta, grid, epsilon, seed),
        NoiseSpec::Homoscedastic { sigma } => synth_homoscedastic(model, theta, grid, sigma, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::MichaelisMenten;
    use crate::params::ParameterSpec;

    const THETA: [f64; 3] = [100.0, 5.0, 146.7];

    /// Constant-output model used to probe noise statistics.
    struct Constant {
        value: f64,
        spec: ParameterSpec,
        channels: Vec<String>,
    }

    impl Constant {
        fn new(value: f64) -> Self {
            Self {
                value,
                spec: ParameterSpec::new(vec![crate::params::ParameterEntry::new("c", "", 1.0, true)]).unwrap(),
                channels: vec!["y".into()],
            }
        }
    }

    impl Model for Constant {
        fn name(&self) -> &str {
            "constant"
        }
        fn spec(&self) -> &ParameterSpec {
            &self.spec
        }
        fn channels(&self) -> &[String] {
            &self.channels
        }
        fn predict(&self, _theta: &[f64], grid: &ObservationGrid) -> Result<Vec<f64>> {
            Ok(vec![self.value; grid.len()])
        }
    }

    fn replicate_grid(n: usize) -> ObservationGrid {
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        ObservationGrid::scalar(&xs, 0).unwrap()
    }

    fn sd(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    }

    #[test]
    fn tiny_epsilon_reproduces_model() {
        let m = MichaelisMenten::new();
        let g = ObservationGrid::scalar(&[1500.0, 2000.0, 2500.0], 0).unwrap();
        let ds = synth_heteroscedastic(&m, &THETA, &g, 1e-12, 3).unwrap();
        let clean = m.predict(&THETA, &g).unwrap();
        for (a, b) in ds.observations().iter().zip(&clean) {
            assert!((a - b).abs() < 1e-8 * b);
        }
    }

    #[test]
    fn heteroscedastic_values_non_negative_and_sd() {
        let m = Constant::new(10.0);
        let ds = synth_heteroscedastic(&m, &[1.0], &replicate_grid(10_000), 0.25, 11).unwrap();
        assert!(ds.observations().iter().all(|&y| y >= 0.0));
        let s = sd(ds.observations());
        assert!((s / 2.5 - 1.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn truncation_holds_for_large_epsilon() {
        let m = Constant::new(1.0);
        let ds = synth_heteroscedastic(&m, &[1.0], &replicate_grid(2000), 0.9, 5).unwrap();
        assert!(ds.observations().iter().all(|&y| y >= 0.0));
    }

    #[test]
    fn negative_signal_is_model_output_error() {
        let m = Constant::new(-1.0);
        let r = synth_heteroscedastic(&m, &[1.0], &replicate_grid(3), 0.25, 5);
        assert!(matches!(r, Err(Error::ModelOutput(_))));
    }

    #[test]
    fn homoscedastic_sd_and_small_sigma_limit() {
        let m = Constant::new(-80.0);
        let ds = synth_homoscedastic(&m, &[1.0], &replicate_grid(10_000), 2.0, 9).unwrap();
        let s = sd(ds.observations());
        assert!((s - 2.0).abs() < 0.05, "{s}");
        let tiny = synth_homoscedastic(&m, &[1.0], &replicate_grid(10), 1e-12, 9).unwrap();
        assert!(tiny.observations().iter().all(|y| (y + 80.0).abs() < 1e-9));
    }

    #[test]
    fn deterministic_given_seed() {
        let m = MichaelisMenten::new();
        let g = ObservationGrid::scalar(&[2.0, 5.0, 10.0, 15.0, 20.0], 0).unwrap();
        let a = synth_heteroscedastic(&m, &THETA, &g, 0.25, 42).unwrap();
        let b = synth_heteroscedastic(&m, &THETA, &g, 0.25, 42).unwrap();
        let c = synth_heteroscedastic(&m, &THETA, &g, 0.25, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.observations(), c.observations());
        assert_eq!(a.provenance().unwrap().seed, 42);
    }

    #[test]
    fn noise_uncorrelated_between_points() {
        // correlation between the noise at two fixed grid points over seeds
        let m = Constant::new(0.0);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for seed in 0..4000 {
            let ds = synth_homoscedastic(&m, &[1.0], &replicate_grid(2), 1.0, seed).unwrap();
            a.push(ds.observations()[0]);
            b.push(ds.observations()[1]);
        }
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let r = cov / (sd(&a) * sd(&b));
        assert!(r.abs() < 4.0 / n.sqrt(), "{r}");
    }
}

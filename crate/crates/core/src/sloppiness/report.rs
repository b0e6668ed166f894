use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::eigen::eigendecompose;
use super::eigenparameter::{extract_eigenparameters, Eigenparameter};
use super::matrix::{MatrixKind, SensitivityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub kind: MatrixKind,
    pub context: String,
    pub parameters: Vec<String>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub rescaled_eigenvalues: Vec<f64>,
    /// One unit vector per eigenvalue, over `parameters`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub eigenparameters: Vec<Eigenparameter>,
}

impl SensitivityReport {
    pub fn stiffest(&self) -> Option<&Eigenparameter> {
        self.eigenparameters.iter().find(|e| e.rank == 1)
    }

    pub fn eigenparameter(&self, rank: usize) -> Option<&Eigenparameter> {
        self.eigenparameters.iter().find(|e| e.rank == rank)
    }

    /// `rank,lambda,lambda_rel` rows.
    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("rank,lambda,lambda_rel\n");
        for (k, (l, r)) in self.eigenvalues.iter().zip(&self.rescaled_eigenvalues).enumerate() {
            s.push_str(&format!("{},{:.16e},{:.16e}\n", k + 1, l, r));
        }
        s
    }
}

pub fn build_report(s: &SensitivityMatrix, threshold: f64) -> Result<SensitivityReport> {
    let eig = eigendecompose(&s.values)?;
    let l1 = eig.values[0];
    let rescaled = eig.values.iter().map(|l| l / l1).collect();
    let vectors: Vec<Vec<f64>> = (0..eig.values.len()).map(|k| eig.vector(k)).collect();
    let eigenparameters = extract_eigenparameters(&vectors, &eig.values, &s.names, threshold)?;
    Ok(SensitivityReport {
        kind: s.kind,
        context: s.context.clone(),
        parameters: s.names.clone(),
        eigenvalues: eig.values,
        rescaled_eigenvalues: rescaled,
        eigenvectors: vectors,
        eigenparameters,
    })
}

//! Sensitivity matrices, their spectra and eigenparameters.

pub mod eigen;
pub mod eigenparameter;
pub mod matrix;
pub mod report;

pub use eigen::{eigendecompose, Eigensystem};
pub use eigenparameter::{
    exponent_distance, extract_eigenparameters, format_terms, parse_display, Eigenparameter, Term, DEFAULT_THRESHOLD,
};
pub use matrix::{
    hessian_h, invert_covariance, lis_matrix_g, lm_hessian_l, log_hessian, pca_matrix_p, sample_log_covariance,
    LisOptions, MatrixKind, SensitivityMatrix,
};
pub use report::{build_report, SensitivityReport};

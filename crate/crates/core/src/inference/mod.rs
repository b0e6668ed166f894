pub mod likelihood;
pub mod mle;
pub mod prior;
pub mod smc;

pub use likelihood::{cost_function, log_likelihood, LogLikelihood, ModelLikelihood};
pub use mle::{mle_fit, MleOptions, MleResult};
pub use prior::{PriorComponent, PriorSpec};
pub use smc::{ess, smc_sample, ParticleEnsemble, SmcConfig, SmcDiagnostics};

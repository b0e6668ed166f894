pub mod beeler_reuter;
pub mod ecosystem;
pub mod michaelis_menten;
pub mod ode;

pub use beeler_reuter::BeelerReuter;
pub use ecosystem::Ecosystem;
pub use michaelis_menten::MichaelisMenten;

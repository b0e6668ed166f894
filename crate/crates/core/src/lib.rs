pub mod data;
pub mod error;
pub mod exec;
pub mod inference;
pub mod model;
pub mod models;
pub mod io;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod sloppiness;
pub mod synth;

pub use error::{Error, Result};

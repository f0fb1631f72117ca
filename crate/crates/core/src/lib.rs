pub mod baselines;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod data;
pub mod dirichlet;
pub mod error;
pub mod optimizer;
pub mod risk;
pub mod rng;
pub mod specfun;
pub mod train;
pub mod voters;

pub use error::{Error, Result};

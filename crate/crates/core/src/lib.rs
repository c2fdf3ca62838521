//! Grey wolf optimizer engine with a stagnation-analysis toolkit, analytic
//! central-moment theory and a Monte Carlo verification lab.

pub mod benchmarks;
pub mod criteria;
pub mod csv_io;
pub mod error;
pub mod gwo;
pub mod moments;
pub mod montecarlo;
pub mod rng;
pub mod stagnation;
pub mod stats;
pub mod target;

pub use error::{Error, Result};

pub mod bootstrap;
pub mod charts;
pub mod cli;
pub mod error;
pub mod extension;
pub mod kernels;
pub mod poly;
pub mod qc;
pub mod regularity;
pub mod sampling;
pub mod sphere;
pub mod sum;

pub use error::{Error, Result};

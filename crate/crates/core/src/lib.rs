pub mod cli;
pub mod counting;
pub mod covering;
pub mod elliptic;
pub mod error;
pub mod mcmullen;
pub mod models;
pub mod orbits;
pub mod selftest;
pub mod sphere;

pub use error::{Error, Result};

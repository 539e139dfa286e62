//! Expurgated error exponents of the generalized stochastic likelihood decoder
//! over discrete memoryless channels, and a desk-scale simulator for the
//! decoder and the half-expurgation argument behind the exponent.

pub mod error;
pub mod exponents;
pub mod measures;
pub mod metrics;
pub mod optimizer;
pub mod simulator;

pub use error::{Error, Result};

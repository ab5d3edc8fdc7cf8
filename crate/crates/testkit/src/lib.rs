//! Independent numerical oracles for the ddreg test suites.
//!
//! Nothing in here calls into `ddreg-core`; every value is computed from first
//! principles (double-exponential quadrature, brute-force CDF tables, direct
//! recursions) so that tests can check the library against a separate route.

pub mod bspline;
pub mod cdf;
pub mod generator;
pub mod ks;
pub mod quad;

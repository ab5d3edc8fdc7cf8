//! Bayesian density-discontinuity regression.
pub mod baseline;
pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod selection;
pub mod special;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use model::{Dataset, LinkConfig, ParamVector, Window, WindowedModel};
pub use sampler::{ChainConfig, CoefSummary, PosteriorDraws, ThetaSummary};
pub use special::ShapePair;

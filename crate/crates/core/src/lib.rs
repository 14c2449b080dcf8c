//! Hyperbolic interaction model for hierarchical multi-label text
//! classification: Poincaré ball algebra, Riemannian optimization, label and
//! word embeddings, a hyperbolic GRU encoder, the interaction classifier and
//! ranking metrics.

pub mod ball;
pub mod cli;
pub mod diff;
pub mod embed;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};

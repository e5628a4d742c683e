pub mod error;
pub mod graph;
pub mod seed;

pub use error::{Error, Result};
pub mod align;
pub mod embed;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod synth;

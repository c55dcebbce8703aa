pub mod cli;
pub mod consensus;
pub mod error;
pub mod evalstats;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod matrix;
pub mod param_maps;
pub mod pipeline;
pub mod volume;

pub use error::{Error, Result};

pub mod error;
pub mod graph;
pub mod stats;
pub mod types;

pub use error::{FdrError, Result};
pub use graph::{CombinationMethod, HypothesisGraph};
pub use types::*;
pub mod filters;
pub mod fixtures;
pub mod io;
pub mod procedures;
pub mod simulate;

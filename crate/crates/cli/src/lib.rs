//! The `hcx` pipeline: corpus in, per-dimension forests, explanation files and
//! reports out. The binary is a thin layer over [`pipeline`].

pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};

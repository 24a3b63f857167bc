//! File formats, a thread-pool executor and the `bartvs` command line on top
//! of [`bartvs_core`].

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod report;

pub use bartvs_core as core;
pub use error::{CliError, CliResult};
pub use exec::RayonExecutor;

//! Command-line experiments for the Kelvin–Voigt solver in `kvflow-core`:
//! configuration, the convergence, decay and boundedness studies, report
//! files, a mesh dump format and the self-test suite.

pub mod config;
pub mod error;
pub mod mesh_io;
pub mod oracle;
pub mod output;
pub mod selftest;
pub mod studies;

pub use config::{Overrides, RunConfig, Study};
pub use error::{CliError, CliResult};

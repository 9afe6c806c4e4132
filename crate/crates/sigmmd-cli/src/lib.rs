//! Command-line frontend for the signature-kernel two-sample testing
//! library: dataset generation, single tests with JSON reports, and
//! repeated-statistic histograms.
//!
//! The binary is `sigmmd` with subcommands `gen`, `test`, and `histogram`.
//! Every command is deterministic given its full flag set including the
//! seed; the only output field that varies between identical invocations is
//! the measured wall time in test reports.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

pub use args::{Cli, Command};
pub use commands::run;
pub use error::CliError;

//! Command implementations behind the `viewprune` binary.
//!
//! Each `cmd_*` function does the work of one subcommand and returns a
//! value the binary prints; argument parsing lives in `main.rs`.

pub mod config;
pub mod output;
pub mod prune;
pub mod report;
pub mod simulate;
pub mod sweep;
pub mod tables;

pub use prune::{cmd_prune, PruneArgs};
pub use report::{cmd_report, ReportArgs};
pub use simulate::{cmd_simulate, SimulateArgs};
pub use sweep::{cmd_sweep, SweepArgs};

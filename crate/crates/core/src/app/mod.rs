//! Configuration, run orchestration, serialization and the command line.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod csv;
pub mod run;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, Checkpoint};
pub use cli::run_cli;
pub use config::{Checks, RunConfig};
pub use run::{simulate, simulate_quiet, simulate_to_csv, RunReport};

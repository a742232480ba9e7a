//! Library backing the `atbat-mdp` command-line tool. Each subcommand is a
//! plain function over paths and options so the behavior is testable
//! without spawning processes.

pub mod commands;
pub mod report;

pub use commands::*;

//! Scenario runner behind the `radial-lab` command.

pub mod emit;
pub mod error;
pub mod grid;
pub mod report;
pub mod run;
pub mod scenario;
pub mod verify;

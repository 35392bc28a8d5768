//! Experiment orchestration for `fblab`: configuration, artifact manifests and the
//! `solve`, `diagnose`, `sweep` and `oracle` commands.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::Outcome;
pub use config::LabConfig;

//! Sweep runner, replay verifier and file schemas for the cusp simulator.

pub mod config;
pub mod replay;
pub mod run;
pub mod schema;

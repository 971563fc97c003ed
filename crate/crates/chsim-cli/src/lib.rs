//! Library surface of the experiment driver: configuration, the canned
//! experiments with their pass rules, and the artifact-writing runner.
//! The `chsim` binary is a thin shell over these.

pub mod config;
pub mod presets;
pub mod runner;

//! Library half of the `gvfsim` binary: scenario parsing and the command
//! implementations, exposed so integration tests can drive them directly.

pub mod commands;
pub mod scenario;

/// Environment variable naming the base directory for relative output paths.
pub const OUT_DIR_ENV: &str = "GVFSIM_OUT_DIR";

//! Presets, config loading and artifact writing behind the `skorolim`
//! binary.

pub mod config;
pub mod output;
pub mod presets;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SKOROLIM_OUT";

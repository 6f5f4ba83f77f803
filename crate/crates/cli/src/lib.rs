//! Configuration files, output writers and the `evodyn` command line for
//! [`evodyn_core`].
//!
//! Outputs are byte-for-byte reproducible: trajectories as CSV, summaries
//! as canonical JSON and three-strategy runs as ternary SVG plots.

pub mod cli;
pub mod config;
pub mod error;
pub mod json;
pub mod svg;
pub mod table;

pub use cli::cli_main;
pub use config::{parse_config, parse_config_str, DynamicChoice, Format, LandscapeSpec, RunSpec, SpecBuilder};
pub use error::{CliError, Result};
pub use json::{summary_json, write_summary_json, Json, Summary};
pub use svg::{render_ternary_svg, ternary_uv, write_ternary_svg};
pub use table::{trajectory_csv, write_trajectory_csv};

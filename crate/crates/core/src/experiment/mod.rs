//! Config files, parameter sweeps and the artifacts they produce.

pub mod config;
pub mod render;
pub mod suite;

pub use config::{parse_config, parse_terrain_spec, ConfigError, ExperimentConfig, TerrainSource};
pub use render::{render_map, Image, RenderError};
pub use suite::{run_episodes, run_suite, EpisodeOutcome, SuiteError, SuiteSummary};

//! Config-driven covariate pipeline: staged, cached computation of the
//! bioclimatic layers, niche-diagram export and synthetic test inputs.

pub mod cache;
pub mod config;
pub mod error;
pub mod niche;
pub mod pipeline;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{PipelineError, Result};
pub use pipeline::{run_pipeline, validate_inputs, RunReport, StageStatus};

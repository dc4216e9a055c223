//! Workbench around the core library: staged pipeline over a hashed
//! workspace, evaluation reports, command-line verbs and the HTTP editing
//! service.

pub mod ablation;
pub mod cli;
pub mod config;
mod error;
pub mod eval;
pub mod pipeline;
pub mod server;
pub mod service;
pub mod stages;
pub mod workspace;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, Pipeline, Stage};
pub use workspace::{WorkspaceIndex, WorkspaceLayout};

//! Configuration, orchestration and file outputs for pruning experiments.

pub mod config;
pub mod export;
pub mod params;
pub mod run;

pub use config::{ConfigFile, OracleSpec, Overrides, RunConfig};
pub use params::{param_reduction, ModelDims, ParamReduction};
pub use run::{run, summarize, Manifest, RunArtifacts};

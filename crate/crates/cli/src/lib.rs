//! Scenario orchestration for the `periodica` command-line tool.
//!
//! A scenario file names a medium, a grid, initial data and an experiment
//! kind; [`run_scenario`] turns it into a directory of artifacts with a
//! manifest recording the configuration hash, the tool version and every
//! tolerance involved.

pub mod artifacts;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod scenario;

pub use error::{CliError, Result};
pub use experiments::{
    band_table, compare_heat_experiment, decay_experiment, gcc_experiment, homogenize_medium, perturbation_experiment,
    run_loaded, run_scenario, Check, Outcome,
};
pub use scenario::{ExperimentKind, Scenario};

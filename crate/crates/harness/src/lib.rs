//! Seeded experiment runner for the `morl` simulations: flat configuration
//! files, presets for the regret and exploration studies, per-cell CSV logs,
//! summaries and plot data.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod seeds;

use thiserror::Error;

pub use config::{AgentKind, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, run_online_cells, run_pfe_cells, Artifacts, OnlineCell, PfeCell};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] morl::MorlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Mismatch(String),
}

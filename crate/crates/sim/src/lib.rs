//! Experiment runner for the CD-OFDM joint communication and sensing link:
//! configuration, SINR sweeps, CSV output and the `cdofdm` command line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::SimConfig;
pub use error::{Result, SimError};
pub use experiment::{
    run_aepp, run_ber_sweep, run_radar_demo, run_rmse_sweep, run_theorem_check, select_scheme,
    ExperimentResult, Row,
};

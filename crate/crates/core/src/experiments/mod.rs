//! Reproduction harness: scenario configs, Monte Carlo runs and reports.

mod config;
mod example21;
mod multi_energy;
mod report;
pub mod systems;

pub use config::{ExperimentConfig, MultiEnergySettings, Overrides, Scenario};
pub use example21::{
    example_dataset, run_example_2_1, run_filsub_validation, step_on_grid, true_step,
    windowed_step_re, Row, RowSettings, FAST_SAMPLING_TIME, FAST_WINDOW, STEP_HORIZON, TRUE_ORDER,
};
pub use multi_energy::{
    channel_dataset, channel_tests, e_st_filsub_config, run_multi_energy, ChannelTest,
};
pub use report::{MethodRecord, MonteCarloReport, StepSeries, Summary};

use crate::error::Result;
use crate::par::Execution;

/// Runs whichever scenario the config names.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<MonteCarloReport> {
    match cfg.scenario {
        Scenario::Example21A | Scenario::Example21B | Scenario::Example21C => {
            run_example_2_1(cfg, exec)
        }
        Scenario::FilsubValidation => run_filsub_validation(cfg, exec),
        Scenario::MultiEnergy => run_multi_energy(cfg, exec),
    }
}

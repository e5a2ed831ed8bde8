use std::path::Path;

use serde::{Deserialize, Serialize};

use super::systems::MultiEnergySurrogate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[serde(rename = "example_2_1_a")]
    Example21A,
    #[serde(rename = "example_2_1_b")]
    Example21B,
    #[serde(rename = "example_2_1_c")]
    Example21C,
    FilsubValidation,
    MultiEnergy,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Example21A => "example_2_1_a",
            Scenario::Example21B => "example_2_1_b",
            Scenario::Example21C => "example_2_1_c",
            Scenario::FilsubValidation => "filsub_validation",
            Scenario::MultiEnergy => "multi_energy",
        }
    }
}

/// Optional knobs on top of a scenario's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub filter_cutoff: Option<f64>,
    pub filter_order: Option<usize>,
    pub decimate: Option<bool>,
    pub noise_order: Option<usize>,
    pub amplitude: Option<f64>,
    /// Per-sample switching probability of the (fast) GBN.
    pub switching_probability: Option<f64>,
    /// Per-coarse-step switching probability of the slow GBN.
    pub slow_switching_probability: Option<f64>,
    /// Step-response horizon, seconds.
    pub step_horizon: Option<f64>,
    /// End of the fast step-response window, seconds.
    pub fast_window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiEnergySettings {
    #[serde(default)]
    pub surrogate: MultiEnergySurrogate,
    #[serde(default = "e_st_duration")]
    pub e_st_duration: f64,
    #[serde(default = "e_gt_duration")]
    pub e_gt_duration: f64,
    #[serde(default = "q_h_duration")]
    pub q_h_duration: f64,
    /// Highest order tried by the FOE scan for the single-time-scale outputs.
    #[serde(default = "max_scan_order")]
    pub max_scan_order: usize,
}

fn e_st_duration() -> f64 {
    200_000.0
}
fn e_gt_duration() -> f64 {
    20_000.0
}
fn q_h_duration() -> f64 {
    200_000.0
}
fn max_scan_order() -> usize {
    3
}

impl Default for MultiEnergySettings {
    fn default() -> Self {
        MultiEnergySettings {
            surrogate: MultiEnergySurrogate::default(),
            e_st_duration: e_st_duration(),
            e_gt_duration: e_gt_duration(),
            q_h_duration: q_h_duration(),
            max_scan_order: max_scan_order(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seeds: usize,
    /// Seed `k` (1-based) uses `seed_base + k - 1`.
    #[serde(default = "seed_base")]
    pub seed_base: u64,
    /// Disturbance variance over clean-output variance; scenario default when absent.
    #[serde(default)]
    pub noise_to_signal: Option<f64>,
    /// Record length in seconds; scenario default when absent.
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub multi_energy: MultiEnergySettings,
}

fn seed_base() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, seeds: usize) -> Self {
        ExperimentConfig {
            scenario,
            seeds,
            seed_base: seed_base(),
            noise_to_signal: None,
            duration: None,
            overrides: Overrides::default(),
            multi_energy: MultiEnergySettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if let Some(d) = self.duration {
            if !(d > 0.0) {
                return Err(Error::Config(format!("duration must be positive, got {d}")));
            }
        }
        if let Some(r) = self.noise_to_signal {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Config(format!(
                    "noise_to_signal must be >= 0, got {r}"
                )));
            }
        }
        let me = &self.multi_energy;
        if !(me.e_st_duration > 0.0 && me.e_gt_duration > 0.0 && me.q_h_duration > 0.0) {
            return Err(Error::Config(
                "multi-energy test durations must be positive".into(),
            ));
        }
        if me.max_scan_order == 0 {
            return Err(Error::Config("max_scan_order must be >= 1".into()));
        }
        me.surrogate.validate()
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.seed_base + k).collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Input {
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

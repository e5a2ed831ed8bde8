//! Monte Carlo runs on the two-time-scale example system.

use super::config::{ExperimentConfig, Scenario};
use super::report::{MethodRecord, MonteCarloReport, StepSeries};
use super::systems::{g_a, g_a_filsub_config};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_bj, estimate_oe, relative_error_of_series, EstimationOptions, ModelOrders,
};
use crate::filsub::{identify_filsub, FilSubConfig};
use crate::par::{map_ordered, Execution};
use crate::signals::{
    derive_seed, generate_disturbance, generate_gbn, generate_held_gbn,
    reference_disturbance_filter, superpose, variance, white_noise, DisturbanceConfig,
    GbnSignalConfig,
};
use crate::tf::TransferFunction;
use crate::zoh::discretize_zoh;

/// Test conditions of the three example records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Row {
    /// Fast sampling, fast GBN.
    A,
    /// Slow sampling, GBN on the slow grid.
    B,
    /// Fast sampling, fast GBN plus a slow GBN held on the fast grid.
    C,
}

pub const FAST_SAMPLING_TIME: f64 = 0.04;
pub const SLOW_SAMPLING_TIME: f64 = 4.0;
pub const DEFAULT_DURATION: f64 = 4000.0;
pub const DEFAULT_SWITCHING_PROBABILITY: f64 = 0.06;
pub const DEFAULT_NOISE_TO_SIGNAL: f64 = 0.15;
pub const STEP_HORIZON: f64 = 200.0;
pub const FAST_WINDOW: f64 = 2.0;
/// True process order of the sampled example system.
pub const TRUE_ORDER: usize = 3;

/// Signal and record settings of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSettings {
    pub duration: f64,
    pub noise_to_signal: f64,
    pub amplitude: f64,
    pub switching_probability: f64,
    pub slow_switching_probability: f64,
}

impl RowSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let o = &cfg.overrides;
        RowSettings {
            duration: cfg.duration.unwrap_or(DEFAULT_DURATION),
            noise_to_signal: cfg.noise_to_signal.unwrap_or(DEFAULT_NOISE_TO_SIGNAL),
            amplitude: o.amplitude.unwrap_or(1.0),
            switching_probability: o
                .switching_probability
                .unwrap_or(DEFAULT_SWITCHING_PROBABILITY),
            slow_switching_probability: o
                .slow_switching_probability
                .unwrap_or(DEFAULT_SWITCHING_PROBABILITY),
        }
    }
}

impl Default for RowSettings {
    fn default() -> Self {
        RowSettings {
            duration: DEFAULT_DURATION,
            noise_to_signal: DEFAULT_NOISE_TO_SIGNAL,
            amplitude: 1.0,
            switching_probability: DEFAULT_SWITCHING_PROBABILITY,
            slow_switching_probability: DEFAULT_SWITCHING_PROBABILITY,
        }
    }
}

impl Row {
    pub fn sampling_time(&self) -> f64 {
        match self {
            Row::B => SLOW_SAMPLING_TIME,
            Row::A | Row::C => FAST_SAMPLING_TIME,
        }
    }
}

/// Noisy record (with its clean output) of the example system for one seed.
pub fn example_dataset(row: Row, settings: &RowSettings, seed: u64) -> Result<TimeSeriesDataset> {
    let ts = row.sampling_time();
    let len = (settings.duration / ts).round() as usize;
    let gbn = |p: f64, stream: u64| GbnSignalConfig {
        switching_probability: p,
        amplitude: settings.amplitude,
        length: len,
        sampling_time: ts,
        seed: derive_seed(seed, stream),
    };
    let u = match row {
        Row::A | Row::B => generate_gbn(&gbn(settings.switching_probability, 1))?,
        Row::C => {
            let fast = generate_gbn(&gbn(settings.switching_probability, 1))?;
            let hold = (SLOW_SAMPLING_TIME / FAST_SAMPLING_TIME).round() as usize;
            let slow = generate_held_gbn(&gbn(settings.slow_switching_probability, 2), hold)?;
            superpose(&fast, &slow)?
        }
    };
    let plant = discretize_zoh(&g_a(), ts)?;
    let clean = plant.simulate(&u)?.output;
    // The disturbance always evolves on the fast grid; the slow record
    // samples it.
    let hold = (ts / FAST_SAMPLING_TIME).round() as usize;
    let v = if hold > 1 && settings.noise_to_signal > 0.0 {
        let e = white_noise(len * hold, derive_seed(seed, 3));
        let fine = reference_disturbance_filter(FAST_SAMPLING_TIME)
            .simulate(&e)?
            .output;
        let w: Vec<f64> = fine.into_iter().step_by(hold).collect();
        let (vw, vc) = (variance(&w), variance(&clean));
        if !(vw > 0.0 && vc > 0.0) {
            return Err(Error::Calibration(
                "zero-variance disturbance or output".into(),
            ));
        }
        let alpha = (settings.noise_to_signal * vc / vw).sqrt();
        w.into_iter().map(|x| alpha * x).collect()
    } else {
        generate_disturbance(
            &DisturbanceConfig {
                shaping_filter: reference_disturbance_filter(ts),
                target_noise_to_signal: settings.noise_to_signal,
                seed: derive_seed(seed, 3),
            },
            &clean,
        )?
    };
    let y = clean.iter().zip(&v).map(|(c, n)| c + n).collect();
    TimeSeriesDataset::new(ts, vec![u], vec![y])?.with_clean_outputs(vec![clean])
}

/// Model step response sampled on a fine grid; slower models are held
/// between their own sampling instants.
pub fn step_on_grid(model: &TransferFunction, horizon: f64, grid: f64) -> Result<Vec<f64>> {
    let ts = model
        .sampling_time()
        .ok_or_else(|| Error::arg("step_on_grid expects a discrete model"))?;
    let coarse = model.step_response(horizon + ts, ts)?.outputs()[0].clone();
    let n = (horizon / grid + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|k| {
            let idx = ((k as f64 * grid) / ts + 1e-9).floor() as usize;
            coarse[idx.min(coarse.len() - 1)]
        })
        .collect())
}

/// `(truth, grid)` step response of the example system.
pub fn true_step(horizon: f64) -> Result<Vec<f64>> {
    Ok(g_a().step_response(horizon, FAST_SAMPLING_TIME)?.outputs()[0].clone())
}

/// Relative error of a step response over `[0, window]`.
pub fn windowed_step_re(truth: &[f64], model: &[f64], window: f64, grid: f64) -> Result<f64> {
    let n = ((window / grid + 1e-9).floor() as usize + 1)
        .min(truth.len())
        .min(model.len());
    relative_error_of_series(&truth[..n], &model[..n])
}

pub(crate) fn estimation_options(
    cfg: &ExperimentConfig,
    order: usize,
    noise: Option<usize>,
) -> EstimationOptions {
    let mut o = EstimationOptions::new(ModelOrders {
        process: order,
        noise,
        delay: 1,
    });
    if let Some(m) = cfg.overrides.max_iterations {
        o.max_iterations = m;
    }
    if let Some(t) = cfg.overrides.tolerance {
        o.tolerance = t;
    }
    o
}

pub(crate) fn apply_filsub_overrides(cfg: &ExperimentConfig, mut fs: FilSubConfig) -> FilSubConfig {
    let o = &cfg.overrides;
    if let Some(v) = o.filter_cutoff {
        fs.filter_cutoff = Some(v);
    }
    if let Some(v) = o.filter_order {
        fs.filter_order = v;
    }
    if let Some(v) = o.decimate {
        fs.decimate = v;
    }
    if let Some(v) = o.noise_order {
        fs.noise_order = v;
    }
    if let Some(v) = o.max_iterations {
        fs.max_iterations = v;
    }
    if let Some(v) = o.tolerance {
        fs.tolerance = v;
    }
    fs
}

struct SeedOutcome {
    records: Vec<MethodRecord>,
    steps: Vec<Vec<f64>>,
}

fn evaluate(
    seed: u64,
    method: &str,
    model: &[TransferFunction],
    data: &TimeSeriesDataset,
    truth: &[f64],
    horizon: f64,
    window: f64,
) -> Result<(MethodRecord, Vec<f64>)> {
    let yh = crate::tf::simulate_miso(model, data.inputs())?;
    let clean = &data
        .clean_outputs()
        .expect("scenario data carry clean outputs")[0];
    let re = relative_error_of_series(clean, &yh)?;
    let step = step_on_grid(&model[0], horizon, FAST_SAMPLING_TIME)?;
    let full = windowed_step_re(truth, &step, horizon, FAST_SAMPLING_TIME)?;
    let fast = windowed_step_re(truth, &step, window, FAST_SAMPLING_TIME)?;
    Ok((
        MethodRecord {
            seed,
            method: method.into(),
            re,
            step_re_full: Some(full),
            step_re_fast: Some(fast),
            selected_order: None,
        },
        step,
    ))
}

fn run(
    cfg: &ExperimentConfig,
    row: Row,
    with_filsub: bool,
    exec: Execution,
) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let settings = RowSettings::from_config(cfg);
    let horizon = cfg.overrides.step_horizon.unwrap_or(STEP_HORIZON);
    let window = cfg.overrides.fast_window.unwrap_or(FAST_WINDOW);
    let truth = true_step(horizon)?;
    let oe_opts = estimation_options(cfg, TRUE_ORDER, None);
    let bj_opts = estimation_options(
        cfg,
        TRUE_ORDER,
        Some(cfg.overrides.noise_order.unwrap_or(1)),
    );
    let fs_cfg = apply_filsub_overrides(cfg, g_a_filsub_config());
    let seeds = cfg.seed_list();
    let outcomes = map_ordered(&seeds, exec, |&seed| -> Result<SeedOutcome> {
        let data = example_dataset(row, &settings, seed)?;
        let oe = estimate_oe(&data, &oe_opts)?;
        let bj = estimate_bj(&data, &bj_opts)?;
        let mut models: Vec<(&str, Vec<TransferFunction>)> =
            vec![("oe", oe.process_models), ("bj", bj.process_models)];
        if with_filsub {
            models.push(("filsub", identify_filsub(&data, &fs_cfg)?.combined));
        }
        let mut out = SeedOutcome {
            records: Vec::new(),
            steps: Vec::new(),
        };
        for (name, m) in &models {
            let (rec, step) = evaluate(seed, name, m, &data, &truth, horizon, window)?;
            out.records.push(rec);
            out.steps.push(step);
        }
        Ok(out)
    });
    let mut records = Vec::new();
    let mut steps: Vec<StepSeries> = Vec::new();
    for (seed, outcome) in seeds.iter().zip(outcomes) {
        let outcome = outcome?;
        for (rec, step) in outcome.records.into_iter().zip(outcome.steps) {
            match steps.iter_mut().find(|s| s.key == rec.method) {
                Some(s) => s.per_seed.push((*seed, step)),
                None => steps.push(StepSeries {
                    key: rec.method.clone(),
                    sampling_time: FAST_SAMPLING_TIME,
                    truth: truth.clone(),
                    per_seed: vec![(*seed, step)],
                }),
            }
            records.push(rec);
        }
    }
    Ok(MonteCarloReport {
        scenario: cfg.scenario.name().into(),
        records,
        steps,
    })
}

/// OE and BJ at the true order on rows A, B or C.
pub fn run_example_2_1(cfg: &ExperimentConfig, exec: Execution) -> Result<MonteCarloReport> {
    let row = match cfg.scenario {
        Scenario::Example21A => Row::A,
        Scenario::Example21B => Row::B,
        Scenario::Example21C => Row::C,
        other => {
            return Err(Error::Config(format!(
                "scenario {} is not an example 2.1 row",
                other.name()
            )))
        }
    };
    run(cfg, row, false, exec)
}

/// OE, BJ and fil-sub on identical row C records.
pub fn run_filsub_validation(cfg: &ExperimentConfig, exec: Execution) -> Result<MonteCarloReport> {
    if cfg.scenario != Scenario::FilsubValidation {
        return Err(Error::Config(format!(
            "scenario {} is not filsub_validation",
            cfg.scenario.name()
        )));
    }
    run(cfg, Row::C, true, exec)
}

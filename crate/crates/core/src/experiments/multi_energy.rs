//! Channel-by-channel identification of the 3×3 surrogate plant.

use super::config::{ExperimentConfig, Scenario};
use super::example21::{
    apply_filsub_overrides, estimation_options, step_on_grid, windowed_step_re,
};
use super::report::{MethodRecord, MonteCarloReport, StepSeries};
use super::systems::OUTPUT_NAMES;
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_bj, estimate_oe, relative_error_of_series, select_order_foe, EstimationOptions, Method,
};
use crate::filsub::{identify_filsub, FilSubConfig};
use crate::par::{map_ordered, Execution};
use crate::signals::{
    derive_seed, generate_disturbance, generate_gbn, generate_held_gbn, superpose,
    DisturbanceConfig, GbnSignalConfig,
};
use crate::tf::{TimeDomain, TransferFunction, TransferMatrix};

pub const DEFAULT_NOISE_TO_SIGNAL: f64 = 0.05;

/// Sampling time and GBN dwell times (seconds) of one channel test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTest {
    pub output: usize,
    pub sampling_time: f64,
    pub fast_dwell: f64,
    /// Dwell of the superposed slow GBN, when the test uses one.
    pub slow_dwell: Option<f64>,
    pub duration: f64,
    pub step_horizon: f64,
}

pub fn channel_tests(cfg: &ExperimentConfig) -> [ChannelTest; 3] {
    let me = &cfg.multi_energy;
    [
        ChannelTest {
            output: 0,
            sampling_time: 10.0,
            fast_dwell: 100.0,
            slow_dwell: Some(2000.0),
            duration: me.e_st_duration,
            step_horizon: 5.0 * me.surrogate.e_st_slow_time_constant,
        },
        ChannelTest {
            output: 1,
            sampling_time: 2.0,
            fast_dwell: 30.0,
            slow_dwell: None,
            duration: me.e_gt_duration,
            step_horizon: 7.0 * me.surrogate.e_gt_time_constant,
        },
        ChannelTest {
            output: 2,
            sampling_time: 50.0,
            fast_dwell: 1000.0,
            slow_dwell: None,
            duration: me.q_h_duration,
            step_horizon: 5.0 * me.surrogate.q_h_time_constant,
        },
    ]
}

/// Slow GBN levels switch on a grid of this fraction of the slow dwell.
const SLOW_GRID_FRACTION: f64 = 0.06;

/// Record of one channel test: independent GBNs on all three inputs.
pub fn channel_dataset(
    plant: &TransferMatrix,
    test: &ChannelTest,
    noise_to_signal: f64,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    let ts = test.sampling_time;
    let len = (test.duration / ts).round() as usize;
    let mut inputs = Vec::with_capacity(3);
    for i in 0..3u64 {
        let fast = generate_gbn(&GbnSignalConfig::from_mean_switch_time(
            test.fast_dwell,
            1.0,
            len,
            ts,
            derive_seed(seed, 10 * i + 1),
        )?)?;
        let u = match test.slow_dwell {
            Some(dwell) => {
                let hold = ((SLOW_GRID_FRACTION * dwell / ts).round() as usize).max(1);
                let slow = generate_held_gbn(
                    &GbnSignalConfig {
                        switching_probability: hold as f64 * ts / dwell,
                        amplitude: 1.0,
                        length: len,
                        sampling_time: ts,
                        seed: derive_seed(seed, 10 * i + 2),
                    },
                    hold,
                )?;
                superpose(&fast, &slow)?
            }
            None => fast,
        };
        inputs.push(u);
    }
    let discrete = plant.discretize_zoh(ts)?;
    let clean = crate::tf::simulate_miso(discrete.row(test.output), &inputs)?;
    let v = generate_disturbance(
        &DisturbanceConfig {
            shaping_filter: TransferFunction::gain(1.0, TimeDomain::Discrete { sampling_time: ts }),
            target_noise_to_signal: noise_to_signal,
            seed: derive_seed(seed, 100 + test.output as u64),
        },
        &clean,
    )?;
    let y = clean.iter().zip(&v).map(|(c, n)| c + n).collect();
    TimeSeriesDataset::new(ts, inputs, vec![y])?.with_clean_outputs(vec![clean])
}

/// Fil-sub settings for the two-time-scale output.
pub fn e_st_filsub_config(cfg: &ExperimentConfig) -> FilSubConfig {
    let (fast, slow) = cfg.multi_energy.surrogate.e_st_bandwidths();
    let mut fs = FilSubConfig::new(fast, slow, 1, 1);
    // The plant's own separation is the admissible floor here.
    fs.min_separation = (fast / slow).min(crate::filsub::MIN_SCALE_SEPARATION);
    apply_filsub_overrides(cfg, fs)
}

struct Fit {
    method: &'static str,
    models: Vec<TransferFunction>,
    selected_order: Option<usize>,
}

fn fits_for(
    cfg: &ExperimentConfig,
    test: &ChannelTest,
    data: &TimeSeriesDataset,
) -> Result<Vec<Fit>> {
    let noise = Some(cfg.overrides.noise_order.unwrap_or(1));
    if test.output == 0 {
        let fs = identify_filsub(data, &e_st_filsub_config(cfg))?;
        let oe = estimate_oe(data, &estimation_options(cfg, 2, None))?;
        let bj = estimate_bj(data, &estimation_options(cfg, 2, noise))?;
        return Ok(vec![
            Fit {
                method: "filsub",
                models: fs.combined,
                selected_order: None,
            },
            Fit {
                method: "oe",
                models: oe.process_models,
                selected_order: None,
            },
            Fit {
                method: "bj",
                models: bj.process_models,
                selected_order: None,
            },
        ]);
    }
    let opts: EstimationOptions = estimation_options(cfg, 1, noise);
    let scan = select_order_foe(
        data,
        1..=cfg.multi_energy.max_scan_order,
        Method::BoxJenkins,
        &opts,
    )?;
    let mut chosen = opts.clone();
    chosen.orders.process = scan.selected;
    let bj = estimate_bj(data, &chosen)?;
    Ok(vec![Fit {
        method: "bj",
        models: bj.process_models,
        selected_order: Some(scan.selected),
    }])
}

pub fn run_multi_energy(cfg: &ExperimentConfig, exec: Execution) -> Result<MonteCarloReport> {
    if cfg.scenario != Scenario::MultiEnergy {
        return Err(Error::Config(format!(
            "scenario {} is not multi_energy",
            cfg.scenario.name()
        )));
    }
    cfg.validate()?;
    let plant = cfg.multi_energy.surrogate.transfer_matrix()?;
    let noise = cfg.noise_to_signal.unwrap_or(DEFAULT_NOISE_TO_SIGNAL);
    let tests = channel_tests(cfg);
    let truths: Vec<Vec<f64>> = tests
        .iter()
        .map(|t| {
            Ok(plant
                .get(t.output, 0)
                .step_response(t.step_horizon, t.sampling_time)?
                .outputs()[0]
                .clone())
        })
        .collect::<Result<_>>()?;
    let seeds = cfg.seed_list();
    type Outcome = Vec<(MethodRecord, Vec<f64>)>;
    let outcomes = map_ordered(&seeds, exec, |&seed| -> Result<Outcome> {
        let mut out = Vec::new();
        for (test, truth) in tests.iter().zip(&truths) {
            let data = channel_dataset(&plant, test, noise, seed)?;
            let clean = &data.clean_outputs().expect("clean output recorded")[0];
            for fit in fits_for(cfg, test, &data)? {
                let yh = crate::tf::simulate_miso(&fit.models, data.inputs())?;
                let step = step_on_grid(&fit.models[0], test.step_horizon, test.sampling_time)?;
                let record = MethodRecord {
                    seed,
                    method: format!("{}/{}", OUTPUT_NAMES[test.output], fit.method),
                    re: relative_error_of_series(clean, &yh)?,
                    step_re_full: Some(windowed_step_re(
                        truth,
                        &step,
                        test.step_horizon,
                        test.sampling_time,
                    )?),
                    step_re_fast: None,
                    selected_order: fit.selected_order,
                };
                out.push((record, step));
            }
        }
        Ok(out)
    });
    let mut records = Vec::new();
    let mut steps: Vec<StepSeries> = Vec::new();
    for (seed, outcome) in seeds.iter().zip(outcomes) {
        for (rec, step) in outcome? {
            let output = OUTPUT_NAMES
                .iter()
                .position(|n| rec.method.starts_with(n))
                .unwrap_or(0);
            match steps.iter_mut().find(|s| s.key == rec.method) {
                Some(s) => s.per_seed.push((*seed, step)),
                None => steps.push(StepSeries {
                    key: rec.method.clone(),
                    sampling_time: tests[output].sampling_time,
                    truth: truths[output].clone(),
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

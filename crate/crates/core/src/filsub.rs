//! Filtering–subtraction identification of two-time-scale systems.
//!
//! 1. High-pass filter inputs and output and fit the fast model.
//! 2. Subtract the fast model's simulated output from the raw output.
//! 3. Low-pass filter inputs and the remainder and fit the slow model.
//! 4. Add the two models.

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::estimation::{estimate, EstimationOptions, Method, ModelEstimate, ModelOrders};
use crate::filtering::{
    apply_filter, default_cutoff, ChannelSelection, FilterKind, FilterSpec, Prefilter,
};
use crate::pfe;
use crate::signals::{generate_gbn, generate_held_gbn, superpose, variance, GbnSignalConfig};
use crate::tf::{simulate_miso, TransferFunction};
use crate::zoh::resample_zoh;

/// Default minimum ratio between the fast and slow bandwidths.
pub const MIN_SCALE_SEPARATION: f64 = 30.0;

/// Slow poles land near this radius after decimation.
const DECIMATED_POLE_RADIUS: f64 = 0.95;

/// The decimated Nyquist frequency stays at least this many times above
/// the filter cut-off.
const ALIAS_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilSubConfig {
    /// Bandwidth of the fast subsystem, rad/s.
    pub fast_cutoff: f64,
    /// Bandwidth of the slow subsystem, rad/s.
    pub slow_cutoff: f64,
    /// Prefilter cut-off; defaults to [`default_cutoff`].
    #[serde(default)]
    pub filter_cutoff: Option<f64>,
    pub fast_order: usize,
    pub slow_order: usize,
    #[serde(default = "default_estimator")]
    pub estimator: Method,
    /// Noise-model order for Box–Jenkins stages.
    #[serde(default = "default_noise_order")]
    pub noise_order: usize,
    #[serde(default = "default_filter_order")]
    pub filter_order: usize,
    /// Downsample the low-pass data before the slow fit.
    #[serde(default = "default_true")]
    pub decimate: bool,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Fail when a stage stops without meeting the convergence test.
    #[serde(default = "default_true")]
    pub require_convergence: bool,
    /// Required `ω_HF / ω_LF`.
    #[serde(default = "default_separation")]
    pub min_separation: f64,
}

fn default_separation() -> f64 {
    MIN_SCALE_SEPARATION
}

fn default_estimator() -> Method {
    Method::BoxJenkins
}
fn default_noise_order() -> usize {
    1
}
fn default_filter_order() -> usize {
    crate::filtering::DEFAULT_FILTER_ORDER
}
fn default_true() -> bool {
    true
}
fn default_max_iterations() -> usize {
    200
}
fn default_tolerance() -> f64 {
    1e-9
}

impl FilSubConfig {
    pub fn new(fast_cutoff: f64, slow_cutoff: f64, fast_order: usize, slow_order: usize) -> Self {
        FilSubConfig {
            fast_cutoff,
            slow_cutoff,
            filter_cutoff: None,
            fast_order,
            slow_order,
            estimator: default_estimator(),
            noise_order: default_noise_order(),
            filter_order: default_filter_order(),
            decimate: true,
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            require_convergence: true,
            min_separation: MIN_SCALE_SEPARATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slow_cutoff > 0.0 && self.fast_cutoff.is_finite()) {
            return Err(Error::Config("cut-off frequencies must be positive".into()));
        }
        if !(self.min_separation > 1.0) {
            return Err(Error::Config(
                "minimum bandwidth separation must exceed 1".into(),
            ));
        }
        if self.fast_cutoff < self.min_separation * self.slow_cutoff {
            return Err(Error::Config(format!(
                "fast bandwidth {} rad/s is less than {}x the slow bandwidth {} rad/s",
                self.fast_cutoff, self.min_separation, self.slow_cutoff
            )));
        }
        if self.fast_order == 0 || self.slow_order == 0 {
            return Err(Error::Config("subsystem orders must be >= 1".into()));
        }
        if let Some(c) = self.filter_cutoff {
            if !(c > self.slow_cutoff && c < self.fast_cutoff) {
                return Err(Error::Config(format!(
                    "filter cut-off {c} rad/s must lie between the slow and fast bandwidths"
                )));
            }
        }
        if self.filter_order == 0 {
            return Err(Error::Config("filter order must be >= 1".into()));
        }
        Ok(())
    }

    pub fn cutoff(&self) -> f64 {
        self.filter_cutoff
            .unwrap_or_else(|| default_cutoff(self.slow_cutoff, self.fast_cutoff))
    }

    fn stage_options(&self, order: usize) -> EstimationOptions {
        let noise = (self.estimator == Method::BoxJenkins).then_some(self.noise_order);
        let mut o = EstimationOptions::new(ModelOrders {
            process: order,
            noise,
            delay: 1,
        });
        o.max_iterations = self.max_iterations;
        o.tolerance = self.tolerance;
        o
    }

    /// Sampling time equal to 1% of the fast subsystem's settling time
    /// (taken as `4/ω_HF`).
    pub fn default_sampling_time(&self) -> f64 {
        0.01 * 4.0 / self.fast_cutoff
    }

    /// Decimation factor for the slow stage at base sampling time `ts`.
    pub fn decimation_factor(&self, ts: f64) -> usize {
        if !self.decimate {
            return 1;
        }
        let target = -DECIMATED_POLE_RADIUS.ln() / (self.slow_cutoff * ts);
        let alias_cap = std::f64::consts::PI / (ALIAS_MARGIN * self.cutoff() * ts);
        target.min(alias_cap).floor().max(1.0) as usize
    }
}

/// Intermediate data of each stage, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct FilSubAudit {
    pub high_passed: TimeSeriesDataset,
    /// Raw inputs with the output replaced by `y − Ĝ_fst u`.
    pub slow_residual: TimeSeriesDataset,
    pub low_passed: TimeSeriesDataset,
    /// The data the slow model was fitted on (decimated when enabled).
    pub slow_stage: TimeSeriesDataset,
}

impl FilSubAudit {
    /// `(name, dataset)` pairs in pipeline order.
    pub fn stages(&self) -> [(&'static str, &TimeSeriesDataset); 4] {
        [
            ("high_passed", &self.high_passed),
            ("slow_residual", &self.slow_residual),
            ("low_passed", &self.low_passed),
            ("slow_stage", &self.slow_stage),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeScaleModel {
    pub fast: ModelEstimate,
    /// Slow fit, at the slow-stage sampling time.
    pub slow: ModelEstimate,
    /// Slow models re-expressed at the base sampling time, one per input.
    pub slow_models: Vec<TransferFunction>,
    /// `Ĝ_fst + Ĝ_slw` per input.
    pub combined: Vec<TransferFunction>,
    pub decimation: usize,
    pub audit: FilSubAudit,
}

impl TwoTimeScaleModel {
    pub fn combined_model(&self) -> &TransferFunction {
        &self.combined[0]
    }

    pub fn simulate(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        simulate_miso(&self.combined, inputs)
    }

    /// The combined model as a process-only estimate, for the generic metrics.
    pub fn as_estimate(&self) -> ModelEstimate {
        ModelEstimate {
            process_models: self.combined.clone(),
            noise_model: None,
            loss: self.slow.loss,
            iterations: self.fast.iterations + self.slow.iterations,
            converged: self.fast.converged && self.slow.converged,
            noise_reflected: self.fast.noise_reflected || self.slow.noise_reflected,
            parameter_count: self.fast.parameter_count + self.slow.parameter_count,
            first_sample: self.fast.first_sample,
            loss_history: Vec::new(),
        }
    }
}

fn stage_error(stage: &str, e: Error) -> Error {
    match e {
        Error::Identifiability(msg) => Error::Identifiability(format!("{stage} stage: {msg}")),
        other => Error::Stage {
            stage: stage.into(),
            reason: other.to_string(),
        },
    }
}

fn check_single_output(data: &TimeSeriesDataset) -> Result<()> {
    if data.outputs().len() != 1 {
        return Err(Error::arg(
            "fil-sub identification needs exactly one output channel",
        ));
    }
    Ok(())
}

fn check_band(raw: &TimeSeriesDataset, filtered: &TimeSeriesDataset, band: &str) -> Result<()> {
    for (i, (u, uf)) in raw.inputs().iter().zip(filtered.inputs()).enumerate() {
        let from = filtered.transient().min(uf.len());
        let vf = variance(&uf[from..]);
        if !(vf > 1e-10 * variance(u)) || vf == 0.0 {
            return Err(Error::Identifiability(format!(
                "input {} carries no power in the {band} band",
                i + 1
            )));
        }
    }
    Ok(())
}

fn fit_stage(
    cfg: &FilSubConfig,
    stage: &str,
    data: &TimeSeriesDataset,
    order: usize,
) -> Result<ModelEstimate> {
    let est = estimate(data, cfg.estimator, &cfg.stage_options(order))
        .map_err(|e| stage_error(stage, e))?;
    if cfg.require_convergence && !est.converged {
        return Err(Error::Stage {
            stage: stage.into(),
            reason: format!(
                "estimator did not converge within {} iterations",
                cfg.max_iterations
            ),
        });
    }
    Ok(est)
}

fn filter(cfg: &FilSubConfig, kind: FilterKind, ts: f64) -> Result<Prefilter> {
    Prefilter::design(&FilterSpec {
        kind,
        cutoff: cfg.cutoff(),
        order: cfg.filter_order,
        sampling_time: ts,
    })
}

fn fast_stage(
    data: &TimeSeriesDataset,
    cfg: &FilSubConfig,
) -> Result<(ModelEstimate, TimeSeriesDataset)> {
    let hp = filter(cfg, FilterKind::HighPass, data.sampling_time())
        .map_err(|e| stage_error("fast", e))?;
    let high_passed = apply_filter(&hp, data, &ChannelSelection::all(data))?;
    check_band(data, &high_passed, "fast")?;
    let fast = fit_stage(cfg, "fast", &high_passed, cfg.fast_order)?;
    Ok((fast, high_passed))
}

fn slow_stage(
    data: &TimeSeriesDataset,
    fast: ModelEstimate,
    high_passed: TimeSeriesDataset,
    cfg: &FilSubConfig,
) -> Result<TwoTimeScaleModel> {
    let ts = data.sampling_time();
    let fast_out = fast.simulate(data.inputs())?;
    let remainder: Vec<f64> = data.outputs()[0]
        .iter()
        .zip(&fast_out)
        .map(|(y, f)| y - f)
        .collect();
    let mut slow_residual = data.with_outputs(vec![remainder])?;
    if let Some(clean) = data.clean_outputs() {
        let c: Vec<f64> = clean[0].iter().zip(&fast_out).map(|(y, f)| y - f).collect();
        slow_residual = slow_residual.with_clean_outputs(vec![c])?;
    }
    let lp = filter(cfg, FilterKind::LowPass, ts).map_err(|e| stage_error("slow", e))?;
    let low_passed = apply_filter(&lp, &slow_residual, &ChannelSelection::all(&slow_residual))?;
    check_band(data, &low_passed, "slow")?;
    let decimation = cfg.decimation_factor(ts);
    let slow_stage = if decimation > 1 {
        low_passed.decimate(decimation)?
    } else {
        low_passed.clone()
    };
    let slow = fit_stage(cfg, "slow", &slow_stage, cfg.slow_order)?;
    let slow_models = slow
        .process_models
        .iter()
        .map(|g| slow_to_base_rate(g, ts))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| stage_error("slow", e))?;
    let combined = fast
        .process_models
        .iter()
        .zip(&slow_models)
        .map(|(f, s)| f.parallel_add(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoTimeScaleModel {
        fast,
        slow,
        slow_models,
        combined,
        decimation,
        audit: FilSubAudit {
            high_passed,
            slow_residual,
            low_passed,
            slow_stage,
        },
    })
}

/// Resamples a slow-stage model to the base grid. Poles on the negative
/// real axis (oscillation at the decimated Nyquist rate) have no hold
/// preimage and lie far outside the slow band; their terms are kept only
/// through their DC contribution.
fn slow_to_base_rate(g: &TransferFunction, ts: f64) -> Result<TransferFunction> {
    match resample_zoh(g, ts) {
        Err(Error::UnsupportedStructure(_)) => {}
        other => return other,
    }
    let prf = pfe::partial_fraction(g)?;
    let (keep, drop): (Vec<pfe::PoleResidue>, Vec<pfe::PoleResidue>) = prf
        .terms
        .iter()
        .partition(|t| !(t.pole.im.abs() < 1e-12 && t.pole.re <= 0.0));
    let static_gain: f64 = drop.iter().map(|t| (t.residue / (1.0 - t.pole)).re).sum();
    let kept = pfe::recombine_terms(&keep, prf.direct_term, g.domain())?;
    let moved = resample_zoh(&kept, ts)?;
    moved.parallel_add(&TransferFunction::gain(static_gain, moved.domain()))
}

/// Runs the four steps on one open-loop dataset.
pub fn identify_filsub(data: &TimeSeriesDataset, cfg: &FilSubConfig) -> Result<TwoTimeScaleModel> {
    cfg.validate()?;
    check_single_output(data)?;
    let (fast, high_passed) = fast_stage(data, cfg)?;
    slow_stage(data, fast, high_passed, cfg)
}

/// Two-test variant: `fast_data` drives the fast fit, `slow_data` the
/// subtraction and the slow fit.
pub fn identify_filsub_two_tests(
    fast_data: &TimeSeriesDataset,
    slow_data: &TimeSeriesDataset,
    cfg: &FilSubConfig,
) -> Result<TwoTimeScaleModel> {
    cfg.validate()?;
    check_single_output(fast_data)?;
    check_single_output(slow_data)?;
    if !crate::tf::same_ts(fast_data.sampling_time(), slow_data.sampling_time())
        || fast_data.inputs().len() != slow_data.inputs().len()
    {
        return Err(Error::arg(
            "both tests need the same sampling time and input channels",
        ));
    }
    let (fast, high_passed) = fast_stage(fast_data, cfg)?;
    slow_stage(slow_data, fast, high_passed, cfg)
}

/// Superposed test signal: a fast GBN with mean dwell `5/ω_HF` plus a slow
/// GBN with mean dwell `2/ω_LF`, the latter switching on a coarse grid and
/// held on the base grid. Amplitude 0 yields the zero signal.
pub fn design_test_signal(
    cfg: &FilSubConfig,
    sampling_time: f64,
    length: usize,
    amplitude: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if amplitude == 0.0 {
        return Ok(vec![0.0; length]);
    }
    let fast_dwell = 5.0 / cfg.fast_cutoff;
    let slow_dwell = 2.0 / cfg.slow_cutoff;
    if fast_dwell < sampling_time {
        return Err(Error::Config(format!(
            "sampling time {sampling_time} s is too coarse for the fast band (dwell {fast_dwell} s)"
        )));
    }
    let fast = generate_gbn(&GbnSignalConfig::from_mean_switch_time(
        fast_dwell,
        amplitude,
        length,
        sampling_time,
        crate::signals::derive_seed(seed, 1),
    )?)?;
    let hold = ((0.06 * slow_dwell / sampling_time).round() as usize).max(1);
    let slow_cfg = GbnSignalConfig {
        switching_probability: (hold as f64 * sampling_time / slow_dwell).min(0.5),
        amplitude,
        length,
        sampling_time,
        seed: crate::signals::derive_seed(seed, 2),
    };
    let slow = generate_held_gbn(&slow_cfg, hold)?;
    superpose(&fast, &slow)
}

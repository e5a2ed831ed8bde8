//! High-pass and low-pass data prefilters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::poly;
use crate::tf::{same_ts, TimeDomain, TransferFunction};

pub const DEFAULT_FILTER_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    HighPass,
    LowPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Cut-off frequency in rad/s.
    pub cutoff: f64,
    pub order: usize,
    pub sampling_time: f64,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_time > 0.0) {
            return Err(Error::arg("filter sampling time must be positive"));
        }
        let nyquist = std::f64::consts::PI / self.sampling_time;
        if !(self.cutoff > 0.0 && self.cutoff < nyquist) {
            return Err(Error::arg(format!(
                "cutoff {} rad/s must lie in (0, Nyquist = {nyquist} rad/s)",
                self.cutoff
            )));
        }
        if self.order == 0 {
            return Err(Error::arg("filter order must be >= 1"));
        }
        Ok(())
    }

    /// `ceil(5·order / (cutoff·Ts))` leading samples treated as transient.
    pub fn transient_samples(&self) -> usize {
        (5.0 * self.order as f64 / (self.cutoff * self.sampling_time)).ceil() as usize
    }
}

/// A discrete prefilter plus the number of start-up samples it spoils.
#[derive(Debug, Clone, PartialEq)]
pub struct Prefilter {
    tf: TransferFunction,
    transient: usize,
}

impl Prefilter {
    pub fn design(spec: &FilterSpec) -> Result<Self> {
        Ok(Prefilter {
            tf: design_filter(spec)?,
            transient: spec.transient_samples(),
        })
    }

    pub fn identity(sampling_time: f64) -> Self {
        Prefilter {
            tf: TransferFunction::gain(1.0, TimeDomain::Discrete { sampling_time }),
            transient: 0,
        }
    }

    pub fn from_transfer_function(tf: TransferFunction, transient: usize) -> Result<Self> {
        if tf.is_continuous() {
            return Err(Error::arg("prefilter must be discrete"));
        }
        Ok(Prefilter { tf, transient })
    }

    pub fn transfer_function(&self) -> &TransferFunction {
        &self.tf
    }

    pub fn transient(&self) -> usize {
        self.transient
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.tf.filter(x)
    }
}

/// Butterworth filter via the bilinear transform with the cut-off
/// prewarped, so the digital magnitude at `cutoff` is exactly `1/√2`.
pub fn design_filter(spec: &FilterSpec) -> Result<TransferFunction> {
    spec.validate()?;
    let ts = spec.sampling_time;
    let n = spec.order;
    let warped = 2.0 / ts * (spec.cutoff * ts / 2.0).tan();
    let k = 2.0 / ts;
    let mut zpoles = Vec::with_capacity(n);
    for i in 0..n {
        let theta = std::f64::consts::PI * (2 * i + n + 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(warped, theta);
        zpoles.push((k + p) / (k - p));
    }
    let den = poly::qinv_from_roots(&zpoles);
    let zero = match spec.kind {
        FilterKind::LowPass => -1.0,
        FilterKind::HighPass => 1.0,
    };
    let num = poly::qinv_from_roots(&vec![Complex64::new(zero, 0.0); n]);
    // Unit gain in the passband: at q⁻¹ = 1 (DC) or q⁻¹ = -1 (Nyquist).
    let at = match spec.kind {
        FilterKind::LowPass => 1.0,
        FilterKind::HighPass => -1.0,
    };
    let g = poly::Polynomial::new(&num, poly::Variable::QInv).eval(at)
        / poly::Polynomial::new(&den, poly::Variable::QInv).eval(at);
    let num: Vec<f64> = num.iter().map(|v| v / g).collect();
    TransferFunction::discrete(&num, &den, ts)
}

/// `max(2·ω_LF, √(ω_LF·ω_HF))`.
pub fn default_cutoff(slow_cutoff: f64, fast_cutoff: f64) -> f64 {
    (2.0 * slow_cutoff).max((slow_cutoff * fast_cutoff).sqrt())
}

/// Which channels of a dataset a filter is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChannelSelection {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl ChannelSelection {
    pub fn all(data: &TimeSeriesDataset) -> Self {
        ChannelSelection {
            inputs: (0..data.inputs().len()).collect(),
            outputs: (0..data.outputs().len()).collect(),
        }
    }

    pub fn inputs_only(data: &TimeSeriesDataset) -> Self {
        ChannelSelection {
            inputs: (0..data.inputs().len()).collect(),
            outputs: Vec::new(),
        }
    }

    pub fn outputs_only(data: &TimeSeriesDataset) -> Self {
        ChannelSelection {
            inputs: Vec::new(),
            outputs: (0..data.outputs().len()).collect(),
        }
    }
}

/// Causally filters the selected channels (clean outputs follow their
/// noisy counterparts) and extends the dataset's transient mark.
pub fn apply_filter(
    filter: &Prefilter,
    data: &TimeSeriesDataset,
    channels: &ChannelSelection,
) -> Result<TimeSeriesDataset> {
    let fts = filter.tf.sampling_time().unwrap_or(f64::NAN);
    if !same_ts(fts, data.sampling_time()) {
        return Err(Error::arg(format!(
            "filter sampling time {fts} s does not match dataset sampling time {} s",
            data.sampling_time()
        )));
    }
    for &i in &channels.inputs {
        if i >= data.inputs().len() {
            return Err(Error::arg(format!("no input channel {i}")));
        }
    }
    for &o in &channels.outputs {
        if o >= data.outputs().len() {
            return Err(Error::arg(format!("no output channel {o}")));
        }
    }
    let inputs: Vec<Vec<f64>> = data
        .inputs()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            if channels.inputs.contains(&i) {
                filter.apply(u)
            } else {
                u.clone()
            }
        })
        .collect();
    let outputs: Vec<Vec<f64>> = data
        .outputs()
        .iter()
        .enumerate()
        .map(|(o, y)| {
            if channels.outputs.contains(&o) {
                filter.apply(y)
            } else {
                y.clone()
            }
        })
        .collect();
    let clean = data.clean_outputs().map(|c| {
        c.iter()
            .enumerate()
            .map(|(o, y)| {
                if channels.outputs.contains(&o) {
                    filter.apply(y)
                } else {
                    y.clone()
                }
            })
            .collect()
    });
    let mut out = data.clone();
    out.set_channels(inputs, outputs, clean);
    Ok(out.with_transient(data.transient().max(filter.transient)))
}

//! Output-error and Box–Jenkins estimation, fit metrics and order selection.
//!
//! Models are parameterized per input channel as `Bᵢ(q)/Fᵢ(q)` with
//! `Bᵢ = q^{-nk}(b₀ + b₁q⁻¹ + … + b_{n−1}q^{−(n−1)})` and monic `Fᵢ` of
//! degree `n`. A Box–Jenkins fit adds a monic noise model `C(q)/D(q)`.
//! Multiple-input data are fitted as a sum of channel models.

mod init;
mod metrics;
mod pem;
pub use pem::NOISE_ROOT_RADIUS;

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::signals::variance;
use crate::tf::TransferFunction;

pub use metrics::{
    foe_criterion, foe_value, relative_error, relative_error_of_series, residuals,
    select_order_foe, FitReport, OrderScan, OrderScanRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OutputError,
    BoxJenkins,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oe" | "output_error" | "output-error" => Ok(Method::OutputError),
            "bj" | "box_jenkins" | "box-jenkins" => Ok(Method::BoxJenkins),
            other => Err(Error::Config(format!(
                "unknown estimator '{other}' (expected oe or bj)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOrders {
    /// Process order `n` (numerator terms and denominator degree).
    pub process: usize,
    /// Degree of both noise polynomials `C` and `D`; required for Box–Jenkins.
    #[serde(default)]
    pub noise: Option<usize>,
    /// Input delay `nk` in samples.
    #[serde(default = "default_delay")]
    pub delay: usize,
}

fn default_delay() -> usize {
    1
}

impl ModelOrders {
    pub fn oe(process: usize) -> Self {
        ModelOrders {
            process,
            noise: None,
            delay: 1,
        }
    }

    pub fn bj(process: usize, noise: usize) -> Self {
        ModelOrders {
            process,
            noise: Some(noise),
            delay: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initialization {
    /// High-order equation-error fit reduced to order `n`.
    #[default]
    HighOrderReduction,
    /// Start from given models (one per input, optional noise model `C/D`).
    UserSupplied {
        process: Vec<TransferFunction>,
        noise: Option<TransferFunction>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationOptions {
    pub orders: ModelOrders,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Relative loss decrease below which the search stops.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_true")]
    pub enforce_stability: bool,
    #[serde(skip)]
    pub initialization: Initialization,
}

fn default_max_iterations() -> usize {
    200
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_true() -> bool {
    true
}

impl EstimationOptions {
    pub fn new(orders: ModelOrders) -> Self {
        EstimationOptions {
            orders,
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            enforce_stability: true,
            initialization: Initialization::HighOrderReduction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.process == 0 {
            return Err(Error::Config("process order must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(
                "convergence tolerance must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of a prediction-error fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEstimate {
    /// One discrete model per input channel.
    pub process_models: Vec<TransferFunction>,
    /// `Ĥ = C/D` for Box–Jenkins fits.
    pub noise_model: Option<TransferFunction>,
    /// Mean squared prediction error over the summed samples.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// A noise-model root was reflected into the unit circle during the search.
    pub noise_reflected: bool,
    pub parameter_count: usize,
    /// First sample included in loss sums.
    pub first_sample: usize,
    /// Loss after initialization and after every accepted step.
    pub loss_history: Vec<f64>,
}

impl ModelEstimate {
    /// Process model of the first (usually only) input.
    pub fn process_model(&self) -> &TransferFunction {
        &self.process_models[0]
    }

    /// Simulated (noise-free) output for the given inputs.
    pub fn simulate(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        crate::tf::simulate_miso(&self.process_models, inputs)
    }
}

pub fn estimate(
    data: &TimeSeriesDataset,
    method: Method,
    opts: &EstimationOptions,
) -> Result<ModelEstimate> {
    match method {
        Method::OutputError => estimate_oe(data, opts),
        Method::BoxJenkins => estimate_bj(data, opts),
    }
}

/// Output-error fit: minimizes the mean of `(y − Σ Ĝᵢuᵢ)²`.
pub fn estimate_oe(data: &TimeSeriesDataset, opts: &EstimationOptions) -> Result<ModelEstimate> {
    let orders = ModelOrders {
        noise: None,
        ..opts.orders
    };
    let problem = prepare(data, opts, orders)?;
    let theta0 = match &opts.initialization {
        Initialization::HighOrderReduction => init::process_guess(&problem),
        Initialization::UserSupplied { process, .. } => problem.theta_from_models(process, None)?,
    };
    problem.solve(theta0, opts)
}

/// Box–Jenkins fit: minimizes the mean of `((D/C)(y − Σ Ĝᵢuᵢ))²`.
pub fn estimate_bj(data: &TimeSeriesDataset, opts: &EstimationOptions) -> Result<ModelEstimate> {
    let nc = opts
        .orders
        .noise
        .ok_or_else(|| Error::Config("Box-Jenkins estimation needs a noise order".into()))?;
    let problem = prepare(data, opts, opts.orders)?;
    let theta0 = match &opts.initialization {
        Initialization::HighOrderReduction => {
            let oe_problem = prepare(
                data,
                opts,
                ModelOrders {
                    noise: None,
                    ..opts.orders
                },
            )?;
            let oe = oe_problem.solve(init::process_guess(&oe_problem), opts)?;
            let process = oe_problem.theta_from_models(&oe.process_models, None)?;
            let w = oe_problem.output_error(&process);
            let (c, d) = init::arma_guess(&w[problem.start..], nc, nc);
            let mut theta = process;
            theta.extend_from_slice(&c[1..]);
            theta.extend_from_slice(&d[1..]);
            theta
        }
        Initialization::UserSupplied { process, noise } => {
            problem.theta_from_models(process, noise.as_ref())?
        }
    };
    problem.solve(theta0, opts)
}

fn prepare<'a>(
    data: &'a TimeSeriesDataset,
    opts: &EstimationOptions,
    orders: ModelOrders,
) -> Result<pem::Problem<'a>> {
    opts.validate()?;
    if data.outputs().len() != 1 {
        return Err(Error::arg(format!(
            "estimation needs exactly one output channel, got {}",
            data.outputs().len()
        )));
    }
    if data.inputs().is_empty() {
        return Err(Error::arg("estimation needs at least one input channel"));
    }
    let n = orders.process;
    let nn = orders.noise.unwrap_or(0);
    let lag = n.max(orders.delay + n - 1).max(nn);
    let start = lag.max(data.transient());
    let params = data.inputs().len() * 2 * n + 2 * nn;
    let usable = data.len().saturating_sub(start);
    let needed = 10 * (2 * n + 1);
    if data.len() <= needed || usable <= params.max(needed / 2) {
        return Err(Error::Identifiability(format!(
            "{} samples ({usable} after the first {start}) are too few for order {n} (need more than {needed})",
            data.len()
        )));
    }
    for (i, u) in data.inputs().iter().enumerate() {
        let ms = u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64;
        if !(ms > 0.0) || variance(u) <= 1e-12 * ms {
            return Err(Error::Identifiability(format!(
                "input {} is not excited (zero variance)",
                i + 1
            )));
        }
    }
    Ok(pem::Problem::new(data, orders, start))
}

#[cfg(test)]
mod tests;

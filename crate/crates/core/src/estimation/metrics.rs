use std::io::Write;

use super::{estimate, EstimationOptions, Method, ModelEstimate, ModelOrders};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::signals::variance;

/// `y − Σ Ĝᵢuᵢ` over the whole record.
pub fn residuals(model: &ModelEstimate, data: &TimeSeriesDataset) -> Result<Vec<f64>> {
    let y = data
        .outputs()
        .first()
        .ok_or_else(|| Error::arg("dataset has no output channel"))?;
    let yh = model.simulate(data.inputs())?;
    Ok(y.iter().zip(&yh).map(|(a, b)| a - b).collect())
}

/// `var(y° − ŷ) / var(y°)`.
pub fn relative_error_of_series(clean: &[f64], predicted: &[f64]) -> Result<f64> {
    if clean.len() != predicted.len() {
        return Err(Error::arg(format!(
            "series lengths differ ({} vs {})",
            clean.len(),
            predicted.len()
        )));
    }
    let v = variance(clean);
    if !(v > 0.0) {
        return Err(Error::Domain("clean output has zero variance".into()));
    }
    let diff: Vec<f64> = clean.iter().zip(predicted).map(|(a, b)| a - b).collect();
    Ok(variance(&diff) / v)
}

/// Relative error of the model's simulated output against the clean
/// output of `clean_data` (its noisy output when no clean record exists),
/// skipping the dataset's transient samples.
pub fn relative_error(model: &ModelEstimate, clean_data: &TimeSeriesDataset) -> Result<f64> {
    let clean = match clean_data.clean_outputs() {
        Some(c) => &c[0],
        None => clean_data
            .outputs()
            .first()
            .ok_or_else(|| Error::arg("dataset has no output channel"))?,
    };
    let yh = model.simulate(clean_data.inputs())?;
    let from = clean_data.transient().min(clean.len());
    relative_error_of_series(&clean[from..], &yh[from..])
}

/// `((N+d)/(N−d)) · mean(r²)` for `N = residuals.len()`.
pub fn foe_value(residuals: &[f64], parameter_count: usize) -> Result<f64> {
    let n = residuals.len();
    if parameter_count >= n {
        return Err(Error::Domain(format!(
            "{parameter_count} parameters for {n} samples"
        )));
    }
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    let (nf, df) = (n as f64, parameter_count as f64);
    Ok((nf + df) / (nf - df) * mse)
}

pub fn foe_criterion(model: &ModelEstimate, data: &TimeSeriesDataset) -> Result<f64> {
    let r = residuals(model, data)?;
    let from = model.first_sample.max(data.transient()).min(r.len());
    foe_value(&r[from..], model.parameter_count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderScanRow {
    pub order: usize,
    pub foe: f64,
    pub loss: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderScan {
    pub rows: Vec<OrderScanRow>,
    pub selected: usize,
}

impl OrderScan {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("order,foe,loss,converged\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.order, r.foe, r.loss, r.converged
            ));
        }
        s
    }
}

/// Fits every order in `orders` and picks the smallest FOE; ties go to the
/// smaller order. Values closer than `1e-12` of the output power count as
/// ties, so exact-fit orders above the true one are not preferred for
/// round-off.
pub fn select_order_foe(
    data: &TimeSeriesDataset,
    orders: impl IntoIterator<Item = usize>,
    method: Method,
    opts: &EstimationOptions,
) -> Result<OrderScan> {
    let mut list: Vec<usize> = orders.into_iter().collect();
    list.sort_unstable();
    list.dedup();
    if list.is_empty() {
        return Err(Error::arg("empty order range"));
    }
    let mut rows = Vec::with_capacity(list.len());
    for order in list {
        let o = EstimationOptions {
            orders: ModelOrders {
                process: order,
                ..opts.orders
            },
            ..opts.clone()
        };
        let est = estimate(data, method, &o)?;
        rows.push(OrderScanRow {
            order,
            foe: foe_criterion(&est, data)?,
            loss: est.loss,
            converged: est.converged,
        });
    }
    let y = &data.outputs()[0];
    let power = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    let tie = 1e-12 * power;
    let mut best = &rows[0];
    for r in &rows[1..] {
        if r.foe < best.foe - tie.max(1e-12 * best.foe) {
            best = r;
        }
    }
    let selected = best.order;
    Ok(OrderScan { rows, selected })
}

/// Quality summary of a fitted model on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Present when the dataset carries a clean output.
    pub relative_error: Option<f64>,
    pub foe: f64,
    pub mse: f64,
    pub loss: f64,
    pub residuals: Vec<f64>,
    pub first_sample: usize,
}

impl FitReport {
    pub fn new(model: &ModelEstimate, data: &TimeSeriesDataset) -> Result<Self> {
        let r = residuals(model, data)?;
        let from = model.first_sample.max(data.transient()).min(r.len());
        let tail = &r[from..];
        let relative_error = match data.clean_outputs() {
            Some(_) => Some(relative_error(model, data)?),
            None => None,
        };
        Ok(FitReport {
            relative_error,
            foe: foe_value(tail, model.parameter_count)?,
            mse: tail.iter().map(|v| v * v).sum::<f64>() / tail.len().max(1) as f64,
            loss: model.loss,
            residuals: r,
            first_sample: from,
        })
    }

    /// `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        if let Some(re) = self.relative_error {
            s.push_str(&format!("relative_error={re}\n"));
        }
        s.push_str(&format!(
            "foe={}\nmse={}\nloss={}\n",
            self.foe, self.mse, self.loss
        ));
        s.push_str(&format!(
            "samples={}\nfirst_sample={}\n",
            self.residuals.len(),
            self.first_sample
        ));
        s
    }

    pub fn write_residuals_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,residual")?;
        for (k, r) in self.residuals.iter().enumerate() {
            writeln!(w, "{k},{r}")?;
        }
        Ok(())
    }
}

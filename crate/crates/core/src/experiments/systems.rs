//! Benchmark plants: the two-time-scale example system and the 3×3
//! multi-energy surrogate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filsub::FilSubConfig;
use crate::pfe::{partial_fraction, split_fast_slow, SplitThreshold};
use crate::tf::{TransferFunction, TransferMatrix};

/// Natural frequency of the fast pole pair, `1/√0.019` rad/s.
pub fn g_a_fast_bandwidth() -> f64 {
    1.0 / 0.019f64.sqrt()
}

pub const G_A_SLOW_BANDWIDTH: f64 = 1.0 / 30.0;

/// `0.3/(0.019s² + 0.166s + 1) · (15s + 1)/(30s + 1)`.
pub fn g_a() -> TransferFunction {
    let quad = TransferFunction::continuous(&[0.3], &[1.0, 0.166, 0.019]).expect("valid");
    let lead = TransferFunction::continuous(&[1.0, 15.0], &[1.0, 30.0]).expect("valid");
    quad.series_multiply(&lead).expect("continuous product")
}

/// True fast and slow parts of `g_a`.
pub fn g_a_split() -> Result<(TransferFunction, TransferFunction)> {
    split_fast_slow(
        &partial_fraction(&g_a())?,
        SplitThreshold::Bandwidths {
            slow: G_A_SLOW_BANDWIDTH,
            fast: g_a_fast_bandwidth(),
        },
    )
}

/// Fil-sub settings for `g_a`: a second-order fast part and a first-order
/// slow part, Box–Jenkins at both stages.
pub fn g_a_filsub_config() -> FilSubConfig {
    FilSubConfig::new(g_a_fast_bandwidth(), G_A_SLOW_BANDWIDTH, 2, 1)
}

pub const OUTPUT_NAMES: [&str; 3] = ["e_st", "e_gt", "q_h"];

/// LTI stand-in for the multi-energy plant. Outputs are steam-turbine
/// power, gas-turbine power and heat; all three inputs act on every output
/// except gas-turbine power, which does not see input 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiEnergySurrogate {
    /// Positive gain of each (output, input) entry.
    #[serde(default = "unit_gains")]
    pub gains: [[f64; 3]; 3],
    #[serde(default = "e_st_fast")]
    pub e_st_fast_time_constant: f64,
    #[serde(default = "e_st_slow")]
    pub e_st_slow_time_constant: f64,
    #[serde(default = "e_gt")]
    pub e_gt_time_constant: f64,
    #[serde(default = "q_h")]
    pub q_h_time_constant: f64,
}

fn unit_gains() -> [[f64; 3]; 3] {
    [[1.0; 3]; 3]
}
fn e_st_fast() -> f64 {
    200.0
}
fn e_st_slow() -> f64 {
    5000.0
}
fn e_gt() -> f64 {
    70.0
}
fn q_h() -> f64 {
    2000.0
}

impl Default for MultiEnergySurrogate {
    fn default() -> Self {
        MultiEnergySurrogate {
            gains: unit_gains(),
            e_st_fast_time_constant: e_st_fast(),
            e_st_slow_time_constant: e_st_slow(),
            e_gt_time_constant: e_gt(),
            q_h_time_constant: q_h(),
        }
    }
}

fn lag(gain: f64, tau: f64) -> Result<TransferFunction> {
    TransferFunction::continuous(&[gain], &[1.0, tau])
}

impl MultiEnergySurrogate {
    pub fn validate(&self) -> Result<()> {
        if self
            .gains
            .iter()
            .flatten()
            .any(|g| !(*g > 0.0) || !g.is_finite())
        {
            return Err(Error::Config("surrogate gains must be positive".into()));
        }
        let taus = [
            self.e_st_fast_time_constant,
            self.e_st_slow_time_constant,
            self.e_gt_time_constant,
            self.q_h_time_constant,
        ];
        if taus.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("time constants must be positive".into()));
        }
        if self.e_st_slow_time_constant <= self.e_st_fast_time_constant {
            return Err(Error::Config(
                "E_ST slow time constant must exceed the fast one".into(),
            ));
        }
        Ok(())
    }

    /// Fast and slow parts of E_ST entry `input`.
    pub fn e_st_parts(&self, input: usize) -> Result<(TransferFunction, TransferFunction)> {
        let g = self.gains[0][input];
        Ok((
            lag(g, self.e_st_fast_time_constant)?,
            lag(g, self.e_st_slow_time_constant)?,
        ))
    }

    pub fn transfer_matrix(&self) -> Result<TransferMatrix> {
        self.validate()?;
        let mut rows = Vec::with_capacity(3);
        let mut e_st = Vec::with_capacity(3);
        for i in 0..3 {
            let (f, s) = self.e_st_parts(i)?;
            e_st.push(f.parallel_add(&s)?);
        }
        rows.push(e_st);
        rows.push(vec![
            lag(self.gains[1][0], self.e_gt_time_constant)?,
            lag(self.gains[1][1], self.e_gt_time_constant)?,
            TransferFunction::zero(crate::tf::TimeDomain::Continuous),
        ]);
        rows.push(
            (0..3)
                .map(|i| lag(self.gains[2][i], self.q_h_time_constant))
                .collect::<Result<_>>()?,
        );
        TransferMatrix::new(rows)
    }

    /// Fast and slow bandwidths of the E_ST row, rad/s.
    pub fn e_st_bandwidths(&self) -> (f64, f64) {
        (
            1.0 / self.e_st_fast_time_constant,
            1.0 / self.e_st_slow_time_constant,
        )
    }
}

//! TOML model files.
//!
//! ```toml
//! sampling_time = 0.04      # omit for a continuous-time system
//!
//! [[process]]               # one entry per input
//! num = [0.0, 0.1]          # ascending powers of q⁻¹ (or of s)
//! den = [1.0, -0.9]
//!
//! [noise]                   # optional
//! num = [1.0, -0.62]
//! den = [1.0, -0.92]
//! ```
//!
//! Fil-sub fits also record their `fast` and `slow` parts per input.

use serde::{Deserialize, Serialize};
use tsid::{Error, Result, TimeDomain, TransferFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rational {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_time: Option<f64>,
    pub process: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Rational>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fast: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slow: Vec<Rational>,
}

impl Rational {
    fn of(tf: &TransferFunction) -> Self {
        Rational {
            num: tf.numerator().coeffs().to_vec(),
            den: tf.denominator().coeffs().to_vec(),
        }
    }

    fn build(&self, domain: TimeDomain) -> Result<TransferFunction> {
        TransferFunction::new(&self.num, &self.den, domain)
    }
}

impl ModelFile {
    pub fn from_models(process: &[TransferFunction], noise: Option<&TransferFunction>) -> Self {
        ModelFile {
            sampling_time: process.first().and_then(|g| g.sampling_time()),
            process: process.iter().map(Rational::of).collect(),
            noise: noise.map(Rational::of),
            fast: Vec::new(),
            slow: Vec::new(),
        }
    }

    pub fn with_parts(mut self, fast: &[TransferFunction], slow: &[TransferFunction]) -> Self {
        self.fast = fast.iter().map(Rational::of).collect();
        self.slow = slow.iter().map(Rational::of).collect();
        self
    }

    pub fn domain(&self) -> TimeDomain {
        match self.sampling_time {
            Some(sampling_time) => TimeDomain::Discrete { sampling_time },
            None => TimeDomain::Continuous,
        }
    }

    pub fn process_models(&self) -> Result<Vec<TransferFunction>> {
        if self.process.is_empty() {
            return Err(Error::Config("model file has no [[process]] entry".into()));
        }
        self.process
            .iter()
            .map(|r| r.build(self.domain()))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: ModelFile = toml::from_str(text).map_err(|e| crate::toml_error(text, e))?;
        m.process_models()?;
        if let Some(n) = &m.noise {
            n.build(m.domain())?;
        }
        Ok(m)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model file serializes")
    }
}

//! Rational transfer functions in continuous (`s`) or discrete (`q⁻¹`) time,
//! together with the small amount of algebra the identification methods need.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::poly::{self, Polynomial, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeDomain {
    Continuous,
    Discrete { sampling_time: f64 },
}

impl TimeDomain {
    pub fn variable(&self) -> Variable {
        match self {
            TimeDomain::Continuous => Variable::S,
            TimeDomain::Discrete { .. } => Variable::QInv,
        }
    }

    pub fn sampling_time(&self) -> Option<f64> {
        match *self {
            TimeDomain::Continuous => None,
            TimeDomain::Discrete { sampling_time } => Some(sampling_time),
        }
    }

    /// Same kind and, for discrete time, the same sampling interval.
    pub fn compatible(&self, other: &TimeDomain) -> bool {
        match (self, other) {
            (TimeDomain::Continuous, TimeDomain::Continuous) => true,
            (
                TimeDomain::Discrete { sampling_time: a },
                TimeDomain::Discrete { sampling_time: b },
            ) => same_ts(*a, *b),
            _ => false,
        }
    }
}

pub(crate) fn same_ts(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// `numerator / denominator` with a time-domain tag.
///
/// Discrete transfer functions are kept with a monic denominator
/// (`a0 = 1`), which makes them causal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
    domain: TimeDomain,
}

impl TransferFunction {
    pub fn new(num: &[f64], den: &[f64], domain: TimeDomain) -> Result<Self> {
        let var = domain.variable();
        if let TimeDomain::Discrete { sampling_time } = domain {
            if !(sampling_time > 0.0) || !sampling_time.is_finite() {
                return Err(Error::arg(format!(
                    "sampling time must be positive, got {sampling_time}"
                )));
            }
        }
        if num.iter().chain(den).any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite coefficient"));
        }
        let den_p = Polynomial::new(den, var);
        if den_p.is_zero() {
            return Err(Error::arg("denominator is identically zero"));
        }
        let num_p = Polynomial::new(num, var);
        match domain {
            TimeDomain::Continuous => {
                if !num_p.is_zero() && num_p.degree() > den_p.degree() {
                    return Err(Error::arg(format!(
                        "improper continuous transfer function: numerator degree {} > denominator degree {}",
                        num_p.degree(),
                        den_p.degree()
                    )));
                }
                Ok(TransferFunction {
                    num: num_p,
                    den: den_p,
                    domain,
                })
            }
            TimeDomain::Discrete { .. } => {
                // Strip delays common to numerator and denominator.
                let mut n = num_p.coeffs().to_vec();
                let mut d = den_p.coeffs().to_vec();
                while d.len() > 1 && d[0] == 0.0 && n.len() > 1 && n[0] == 0.0 {
                    d.remove(0);
                    n.remove(0);
                }
                if d[0] == 0.0 {
                    if num_p.is_zero() {
                        while d[0] == 0.0 {
                            d.remove(0);
                        }
                    } else {
                        return Err(Error::arg("non-causal discrete transfer function (a0 = 0)"));
                    }
                }
                let a0 = d[0];
                let n: Vec<f64> = n.iter().map(|v| v / a0).collect();
                let d: Vec<f64> = d.iter().map(|v| v / a0).collect();
                Ok(TransferFunction {
                    num: Polynomial::new(&n, var),
                    den: Polynomial::new(&d, var),
                    domain,
                })
            }
        }
    }

    /// Continuous `num(s)/den(s)`, coefficients constant term first.
    pub fn continuous(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(num, den, TimeDomain::Continuous)
    }

    /// Discrete `num(q⁻¹)/den(q⁻¹)`, coefficients constant term first.
    pub fn discrete(num: &[f64], den: &[f64], sampling_time: f64) -> Result<Self> {
        Self::new(num, den, TimeDomain::Discrete { sampling_time })
    }

    pub fn gain(k: f64, domain: TimeDomain) -> Self {
        Self::new(&[k], &[1.0], domain).expect("static gain is always valid")
    }

    pub fn zero(domain: TimeDomain) -> Self {
        Self::gain(0.0, domain)
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn sampling_time(&self) -> Option<f64> {
        self.domain.sampling_time()
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.domain, TimeDomain::Continuous)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Order: degree of the denominator.
    pub fn order(&self) -> usize {
        self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        match self.domain {
            TimeDomain::Continuous => self.num.is_zero() || self.num.degree() < self.den.degree(),
            TimeDomain::Discrete { .. } => self.num.coeffs()[0] == 0.0,
        }
    }

    /// Frequency response at `omega` rad/s.
    pub fn freq_response(&self, omega: f64) -> Complex64 {
        match self.domain {
            TimeDomain::Continuous => {
                let s = Complex64::new(0.0, omega);
                self.num.eval_complex(s) / self.den.eval_complex(s)
            }
            TimeDomain::Discrete { sampling_time } => {
                let qinv = Complex64::from_polar(1.0, -omega * sampling_time);
                self.num.eval_complex(qinv) / self.den.eval_complex(qinv)
            }
        }
    }

    /// Static gain: `G(0)` in continuous time, `G(q = 1)` in discrete time.
    pub fn dc_gain(&self) -> f64 {
        match self.domain {
            TimeDomain::Continuous => self.num.eval(0.0) / self.den.eval(0.0),
            TimeDomain::Discrete { .. } => self.num.eval(1.0) / self.den.eval(1.0),
        }
    }

    /// Roots of the denominator, with multiplicity. Discrete poles are
    /// given in `z`; poles at the origin introduced by pure delays in the
    /// numerator are not listed.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den.degree() == 0 {
            return Err(Error::Domain("denominator has degree 0; no poles".into()));
        }
        match self.domain {
            TimeDomain::Continuous => self.den.roots(),
            TimeDomain::Discrete { .. } => poly::qinv_roots(self.den.coeffs()),
        }
    }

    /// Zeros of the numerator (in `z` for discrete time).
    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() {
            return Err(Error::Domain(
                "zero transfer function has no finite zeros".into(),
            ));
        }
        match self.domain {
            TimeDomain::Continuous => self.num.roots(),
            TimeDomain::Discrete { .. } => {
                let c = self.num.coeffs();
                let first = c.iter().position(|&v| v != 0.0).unwrap_or(0);
                poly::qinv_roots(&c[first..])
            }
        }
    }

    /// Asymptotic stability; a constant denominator counts as stable.
    pub fn is_stable(&self) -> bool {
        if self.den.degree() == 0 {
            return true;
        }
        match (self.poles(), self.domain) {
            (Ok(p), TimeDomain::Continuous) => p.iter().all(|z| z.re < 0.0),
            (Ok(p), TimeDomain::Discrete { .. }) => p.iter().all(|z| z.norm() < 1.0),
            (Err(_), _) => false,
        }
    }

    fn check_compatible(&self, other: &TransferFunction) -> Result<()> {
        if !self.domain.compatible(&other.domain) {
            return Err(Error::arg(format!(
                "mismatched time domains: {:?} vs {:?}",
                self.domain, other.domain
            )));
        }
        Ok(())
    }

    /// Parallel connection `self + other`.
    pub fn parallel_add(&self, other: &TransferFunction) -> Result<TransferFunction> {
        self.check_compatible(other)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(TransferFunction {
                domain: self.domain,
                ..other.clone()
            });
        }
        let n = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let d = self.den.mul(&other.den);
        TransferFunction::new(n.coeffs(), d.coeffs(), self.domain)
    }

    /// Series connection `self · other`.
    pub fn series_multiply(&self, other: &TransferFunction) -> Result<TransferFunction> {
        self.check_compatible(other)?;
        let n = self.num.mul(&other.num);
        let d = self.den.mul(&other.den);
        TransferFunction::new(n.coeffs(), d.coeffs(), self.domain)
    }

    pub fn scale(&self, k: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.scale(k),
            ..self.clone()
        }
    }

    /// Zero-initial-state response to `u`. Requires discrete time.
    pub fn simulate(&self, u: &[f64]) -> Result<SimulationResult> {
        if self.is_continuous() {
            return Err(Error::arg("simulate requires a discrete transfer function"));
        }
        Ok(SimulationResult {
            output: self.filter(u),
            stable: self.is_stable(),
        })
    }

    /// Raw difference-equation filtering without the stability check.
    pub(crate) fn filter(&self, u: &[f64]) -> Vec<f64> {
        poly::lfilter(self.num.coeffs(), self.den.coeffs(), u)
    }

    /// Unit-step response on the grid `t = k·Ts`, `k = 0..=horizon/Ts`.
    /// Continuous systems are discretized with a zero-order hold, which is
    /// exact for a step input.
    pub fn step_response(&self, horizon: f64, sampling_time: f64) -> Result<TimeSeriesDataset> {
        if !(horizon > 0.0) || !(sampling_time > 0.0) {
            return Err(Error::arg("horizon and sampling time must be positive"));
        }
        let d = match self.domain {
            TimeDomain::Continuous => crate::zoh::discretize_zoh(self, sampling_time)?,
            TimeDomain::Discrete { sampling_time: ts } => {
                if !same_ts(ts, sampling_time) {
                    return Err(Error::arg(format!(
                        "step response grid {sampling_time} s differs from model sampling time {ts} s"
                    )));
                }
                self.clone()
            }
        };
        let n = (horizon / sampling_time + 1e-9).floor() as usize + 1;
        let u = vec![1.0; n];
        let y = d.filter(&u);
        TimeSeriesDataset::new(sampling_time, vec![u], vec![y])
    }
}

/// Output of [`TransferFunction::simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub output: Vec<f64>,
    /// False when the simulated system has a pole on or outside the unit circle.
    pub stable: bool,
}

/// Rows are outputs, columns are inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    entries: Vec<Vec<TransferFunction>>,
    domain: TimeDomain,
}

impl TransferMatrix {
    pub fn new(entries: Vec<Vec<TransferFunction>>) -> Result<Self> {
        let first = entries
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::arg("transfer matrix needs at least one entry"))?;
        let domain = first.domain();
        let cols = entries[0].len();
        for row in &entries {
            if row.len() != cols {
                return Err(Error::arg("transfer matrix rows have different lengths"));
            }
            for e in row {
                if !e.domain().compatible(&domain) {
                    return Err(Error::arg(
                        "transfer matrix entries use different time domains",
                    ));
                }
            }
        }
        Ok(TransferMatrix { entries, domain })
    }

    pub fn outputs(&self) -> usize {
        self.entries.len()
    }

    pub fn inputs(&self) -> usize {
        self.entries[0].len()
    }

    pub fn get(&self, output: usize, input: usize) -> &TransferFunction {
        &self.entries[output][input]
    }

    pub fn row(&self, output: usize) -> &[TransferFunction] {
        &self.entries[output]
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn discretize_zoh(&self, sampling_time: f64) -> Result<TransferMatrix> {
        let entries = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|g| crate::zoh::discretize_zoh(g, sampling_time))
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        TransferMatrix::new(entries)
    }

    /// Noise-free outputs for the given input channels (discrete only).
    pub fn simulate(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if inputs.len() != self.inputs() {
            return Err(Error::arg(format!(
                "expected {} inputs, got {}",
                self.inputs(),
                inputs.len()
            )));
        }
        self.entries
            .iter()
            .map(|row| simulate_miso(row, inputs))
            .collect()
    }
}

/// `y = Σ Gᵢ uᵢ` for discrete `Gᵢ`.
pub fn simulate_miso(models: &[TransferFunction], inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    if models.len() != inputs.len() {
        return Err(Error::arg(format!(
            "{} models for {} inputs",
            models.len(),
            inputs.len()
        )));
    }
    let n = inputs.first().map(|u| u.len()).unwrap_or(0);
    let mut y = vec![0.0; n];
    for (g, u) in models.iter().zip(inputs) {
        if g.is_continuous() {
            return Err(Error::arg(
                "simulation requires discrete transfer functions",
            ));
        }
        if g.is_zero() {
            continue;
        }
        for (acc, v) in y.iter_mut().zip(g.filter(u)) {
            *acc += v;
        }
    }
    Ok(y)
}

/// `n` logarithmically spaced frequencies in `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Maximum over `freqs` of `|A(jω) − B(jω)| / max(|A(jω)|, floor)` where the
/// floor is a small fraction of the peak `|A|`.
pub fn max_relative_response_error(
    a: &TransferFunction,
    b: &TransferFunction,
    freqs: &[f64],
) -> f64 {
    let ra: Vec<Complex64> = freqs.iter().map(|&w| a.freq_response(w)).collect();
    let peak = ra.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = (peak * 1e-12).max(f64::MIN_POSITIVE);
    freqs
        .iter()
        .zip(&ra)
        .map(|(&w, za)| (za - b.freq_response(w)).norm() / za.norm().max(floor))
        .fold(0.0, f64::max)
}

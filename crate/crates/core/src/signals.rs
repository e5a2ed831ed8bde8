//! Test signals (generalized binary noise) and output disturbances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::TransferFunction;

/// Generalized binary noise: a ±amplitude signal whose sign flips with a
/// fixed per-sample probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbnSignalConfig {
    pub switching_probability: f64,
    pub amplitude: f64,
    pub length: usize,
    pub sampling_time: f64,
    pub seed: u64,
}

impl GbnSignalConfig {
    /// Builds a config from a mean switch interval (seconds), `p = Ts / T_sw`.
    pub fn from_mean_switch_time(
        mean_switch_time: f64,
        amplitude: f64,
        length: usize,
        sampling_time: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(mean_switch_time > 0.0) {
            return Err(Error::Config("mean switch time must be positive".into()));
        }
        let cfg = GbnSignalConfig {
            switching_probability: sampling_time / mean_switch_time,
            amplitude,
            length,
            sampling_time,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.switching_probability;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!(
                "switching probability must lie in (0, 1), got {p}"
            )));
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::Config(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.sampling_time > 0.0) {
            return Err(Error::Config("sampling time must be positive".into()));
        }
        Ok(())
    }

    /// Expected dwell time between switches, `Ts / p`.
    pub fn mean_switch_time(&self) -> f64 {
        self.sampling_time / self.switching_probability
    }
}

pub fn generate_gbn(cfg: &GbnSignalConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut level = if rng.random_bool(0.5) {
        cfg.amplitude
    } else {
        -cfg.amplitude
    };
    let mut out = Vec::with_capacity(cfg.length);
    for k in 0..cfg.length {
        if k > 0 && rng.random_bool(cfg.switching_probability) {
            level = -level;
        }
        out.push(level);
    }
    Ok(out)
}

/// GBN drawn on a coarse grid of `hold` samples and held constant between
/// coarse instants; `cfg.length` counts fine samples and the switching
/// probability applies per coarse step.
pub fn generate_held_gbn(cfg: &GbnSignalConfig, hold: usize) -> Result<Vec<f64>> {
    if hold == 0 {
        return Err(Error::Config("hold length must be >= 1".into()));
    }
    let coarse = GbnSignalConfig {
        length: cfg.length.div_ceil(hold),
        ..*cfg
    };
    let levels = generate_gbn(&coarse)?;
    let mut out: Vec<f64> = levels
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, hold))
        .collect();
    out.truncate(cfg.length);
    Ok(out)
}

/// Elementwise sum of two equally long signals.
pub fn superpose(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "cannot superpose signals of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

/// Zero-mean, unit-variance Gaussian white noise.
pub fn white_noise(length: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Filtered white noise `v = α F(q) e` calibrated against a reference output.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceConfig {
    pub shaping_filter: TransferFunction,
    /// Target `var(v) / var(reference)`.
    pub target_noise_to_signal: f64,
    pub seed: u64,
}

impl DisturbanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shaping_filter.is_continuous() {
            return Err(Error::Config("shaping filter must be discrete".into()));
        }
        if !self.shaping_filter.is_stable() {
            return Err(Error::Config("shaping filter must be stable".into()));
        }
        let r = self.target_noise_to_signal;
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Config(format!(
                "noise-to-signal ratio must lie in [0, 1), got {r}"
            )));
        }
        Ok(())
    }
}

/// The `(1 − 0.62 q⁻¹)/(1 − 0.92 q⁻¹)` shaping filter used by the
/// reference experiments.
pub fn reference_disturbance_filter(sampling_time: f64) -> TransferFunction {
    TransferFunction::discrete(&[1.0, -0.62], &[1.0, -0.92], sampling_time)
        .expect("fixed coefficients are valid")
}

pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Draws the disturbance and scales it so that
/// `var(v) / var(reference_output)` equals the target exactly.
pub fn generate_disturbance(cfg: &DisturbanceConfig, reference_output: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = reference_output.len();
    if cfg.target_noise_to_signal == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let ref_var = variance(reference_output);
    if !(ref_var > 0.0) {
        return Err(Error::Calibration(
            "reference output has zero variance".into(),
        ));
    }
    let e = white_noise(n, cfg.seed);
    let w = cfg.shaping_filter.filter(&e);
    let w_var = variance(&w);
    if !(w_var > 0.0) {
        return Err(Error::Calibration("shaped noise has zero variance".into()));
    }
    let alpha = (cfg.target_noise_to_signal * ref_var / w_var).sqrt();
    Ok(w.into_iter().map(|v| alpha * v).collect())
}

/// Fraction of a signal's periodogram power that falls in `[lo, hi]` rad/s.
pub fn band_power_fraction(x: &[f64], sampling_time: f64, lo: f64, hi: f64) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let xc: Vec<f64> = x.iter().map(|v| v - mean).collect();
    // Block-averaged periodogram on a log-friendly frequency grid; an FFT
    // is not needed for the handful of band checks done here.
    let nyq = std::f64::consts::PI / sampling_time;
    let bins = 400usize;
    let w_lo = (nyq * 1e-5).max(2.0 * std::f64::consts::PI / (n as f64 * sampling_time));
    let grid = crate::tf::logspace(w_lo, nyq, bins);
    let mut total = 0.0;
    let mut band = 0.0;
    for k in 0..bins {
        let w = grid[k];
        let dw = if k + 1 < bins {
            grid[k + 1] - w
        } else {
            w - grid[k - 1]
        };
        let (mut re, mut im) = (0.0, 0.0);
        let (c, s) = ((w * sampling_time).cos(), (w * sampling_time).sin());
        let (mut cr, mut ci) = (1.0f64, 0.0f64);
        for &v in &xc {
            re += v * cr;
            im -= v * ci;
            let nr = cr * c - ci * s;
            ci = cr * s + ci * c;
            cr = nr;
        }
        let p = (re * re + im * im) * dw;
        total += p;
        if w >= lo && w <= hi {
            band += p;
        }
    }
    if total > 0.0 {
        band / total
    } else {
        0.0
    }
}

/// Deterministic sub-seed derivation (splitmix64 finalizer) so that the
/// streams of one Monte Carlo run do not overlap.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gbn(p: f64, n: usize, seed: u64) -> Vec<f64> {
        generate_gbn(&GbnSignalConfig {
            switching_probability: p,
            amplitude: 1.5,
            length: n,
            sampling_time: 0.04,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn amplitude_and_determinism() {
        let a = gbn(0.06, 5000, 7);
        assert!(a.iter().all(|v| v.abs() == 1.5));
        assert_eq!(a, gbn(0.06, 5000, 7));
        assert_ne!(a, gbn(0.06, 5000, 8));
    }

    #[test]
    fn held_gbn_switches_only_on_coarse_grid() {
        let cfg = GbnSignalConfig {
            switching_probability: 0.3,
            amplitude: 1.0,
            length: 1050,
            sampling_time: 0.04,
            seed: 3,
        };
        let x = generate_held_gbn(&cfg, 100).unwrap();
        assert_eq!(x.len(), 1050);
        for k in 1..x.len() {
            if x[k] != x[k - 1] {
                assert_eq!(k % 100, 0);
            }
        }
        assert!(generate_held_gbn(&cfg, 0).is_err());
    }

    #[test]
    fn invalid_config() {
        let mut c = GbnSignalConfig {
            switching_probability: 0.0,
            amplitude: 1.0,
            length: 3,
            sampling_time: 1.0,
            seed: 0,
        };
        assert!(generate_gbn(&c).is_err());
        c.switching_probability = 1.0;
        assert!(generate_gbn(&c).is_err());
        c.switching_probability = 0.5;
        c.amplitude = 0.0;
        assert!(generate_gbn(&c).is_err());
    }

    #[test]
    fn mean_dwell_time_matches_geometric_mean() {
        // Oracle: dwell times are geometric with mean 1/p samples.
        for &p in &[0.01, 0.06] {
            let x = gbn(p, 1_000_000, 11);
            let switches = x.windows(2).filter(|w| w[0] != w[1]).count();
            let dwell = 0.04 * (x.len() - 1) as f64 / switches as f64;
            let expected = 0.04 / p;
            assert!(
                (dwell - expected).abs() / expected < 0.02,
                "p={p}: {dwell} vs {expected}"
            );
        }
        let c = GbnSignalConfig {
            switching_probability: 0.06,
            amplitude: 1.0,
            length: 1,
            sampling_time: 0.04,
            seed: 0,
        };
        assert_relative_eq!(c.mean_switch_time(), 0.04 / 0.06, epsilon = 1e-15);
    }

    #[test]
    fn switch_count_within_binomial_bounds() {
        let p = 0.06;
        let n = 200_000;
        let x = gbn(p, n, 3);
        let k = x.windows(2).filter(|w| w[0] != w[1]).count() as f64;
        let m = (n - 1) as f64;
        let sigma = (m * p * (1.0 - p)).sqrt();
        assert!((k - m * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn superposition() {
        let a = gbn(0.06, 4000, 1);
        let b = gbn(0.0006, 4000, 2);
        let zeros = vec![0.0; 4000];
        assert_eq!(superpose(&a, &zeros).unwrap(), a);
        assert_eq!(superpose(&a, &b).unwrap(), superpose(&b, &a).unwrap());
        let s = superpose(&a, &b).unwrap();
        assert!(s.iter().all(|v| [-3.0, 0.0, 3.0].contains(v)));
        assert!(superpose(&a, &b[..10]).is_err());
    }

    #[test]
    fn disturbance_calibration_is_exact() {
        let reference: Vec<f64> = gbn(0.06, 20_000, 5).iter().map(|v| 0.3 * v).collect();
        let cfg = DisturbanceConfig {
            shaping_filter: reference_disturbance_filter(0.04),
            target_noise_to_signal: 0.15,
            seed: 9,
        };
        let v = generate_disturbance(&cfg, &reference).unwrap();
        let ratio = variance(&v) / variance(&reference);
        assert!((ratio - 0.15).abs() < 0.0015);
        assert_eq!(v, generate_disturbance(&cfg, &reference).unwrap());
    }

    #[test]
    fn disturbance_edge_cases() {
        let reference = gbn(0.06, 1000, 5);
        let mut cfg = DisturbanceConfig {
            shaping_filter: reference_disturbance_filter(0.04),
            target_noise_to_signal: 0.0,
            seed: 1,
        };
        assert!(generate_disturbance(&cfg, &reference)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        cfg.target_noise_to_signal = 0.1;
        assert!(matches!(
            generate_disturbance(&cfg, &vec![2.0; 100]),
            Err(Error::Calibration(_))
        ));
        cfg.shaping_filter = TransferFunction::discrete(&[1.0], &[1.0, -1.2], 0.04).unwrap();
        assert!(generate_disturbance(&cfg, &reference).is_err());
    }

    #[test]
    fn white_disturbance_has_no_lag_one_correlation() {
        let n = 50_000;
        let reference = gbn(0.06, n, 5);
        let cfg = DisturbanceConfig {
            shaping_filter: TransferFunction::gain(
                1.0,
                crate::tf::TimeDomain::Discrete {
                    sampling_time: 0.04,
                },
            ),
            target_noise_to_signal: 0.2,
            seed: 4,
        };
        let v = generate_disturbance(&cfg, &reference).unwrap();
        let mean = v.iter().sum::<f64>() / n as f64;
        let c0: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        let c1: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((c1 / c0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn superposed_signal_covers_both_bands() {
        let fast = gbn(0.06, 40_000, 21);
        let slow = gbn(0.0006, 40_000, 22);
        let s = superpose(&fast, &slow).unwrap();
        let low = band_power_fraction(&s, 0.04, 0.0, 0.05);
        let high = band_power_fraction(&s, 0.04, 0.5, 100.0);
        assert!(low > 0.1, "low band {low}");
        assert!(high > 0.1, "high band {high}");
    }
}

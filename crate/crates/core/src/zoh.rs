//! Zero-order-hold conversions between continuous and discrete time.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pfe::{self, PoleResidue};
use crate::poly;
use crate::tf::{TimeDomain, TransferFunction};

/// ZOH equivalent of a proper continuous transfer function.
///
/// Poles map exactly as `p ↦ e^{p·Ts}`; the numerator is recovered from
/// the first Markov parameters of the sampled state-space realization, so
/// repeated poles are handled as well.
pub fn discretize_zoh(tf: &TransferFunction, sampling_time: f64) -> Result<TransferFunction> {
    if !tf.is_continuous() {
        return Err(Error::arg(
            "discretize_zoh expects a continuous transfer function",
        ));
    }
    if !(sampling_time > 0.0) || !sampling_time.is_finite() {
        return Err(Error::arg(format!(
            "sampling time must be positive, got {sampling_time}"
        )));
    }
    let domain = TimeDomain::Discrete { sampling_time };
    let den = tf.denominator().coeffs();
    let n = den.len() - 1;
    let lead = den[n];
    if n == 0 {
        return Ok(TransferFunction::gain(
            tf.numerator().coeffs()[0] / lead,
            domain,
        ));
    }
    if tf.is_zero() {
        return Ok(TransferFunction::zero(domain));
    }
    let a: Vec<f64> = den.iter().map(|v| v / lead).collect();
    let mut num: Vec<f64> = tf.numerator().coeffs().iter().map(|v| v / lead).collect();
    num.resize(n + 1, 0.0);
    let direct = num[n];
    let c: Vec<f64> = (0..n).map(|i| num[i] - direct * a[i]).collect();

    // Controllable canonical form, augmented with the input for the hold.
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n - 1 {
        m[(i, i + 1)] = sampling_time;
    }
    for j in 0..n {
        m[(n - 1, j)] = -a[j] * sampling_time;
    }
    m[(n - 1, n)] = sampling_time;
    let e = m.exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let gamma = e.view((0, n), (n, 1)).into_owned();

    let mut markov = vec![direct];
    let mut x = gamma;
    for _ in 0..n {
        let h: f64 = (0..n).map(|i| c[i] * x[(i, 0)]).sum();
        markov.push(h);
        x = &phi * x;
    }

    let poles = poly::roots(&a)?;
    let zpoles: Vec<Complex64> = poles.iter().map(|p| (p * sampling_time).exp()).collect();
    let ad = poly::qinv_from_roots(&zpoles);
    let mut bd = poly::convolve(&ad, &markov);
    bd.truncate(n + 1);
    TransferFunction::discrete(&bd, &ad, sampling_time)
}

/// Discrete pole–residue terms with every pole usable for a hold
/// conversion (simple, nonzero, off the negative real axis).
fn hold_terms(tf: &TransferFunction) -> Result<(Vec<PoleResidue>, f64)> {
    let prf = pfe::partial_fraction(tf)?;
    for t in &prf.terms {
        if t.pole.norm() < 1e-12 || (t.pole.im.abs() < 1e-12 && t.pole.re < 0.0) {
            return Err(Error::UnsupportedStructure(format!(
                "discrete pole {:.4e}{:+.4e}j has no continuous-time ZOH preimage",
                t.pole.re, t.pole.im
            )));
        }
    }
    Ok((prf.terms, prf.direct_term))
}

/// Continuous system whose ZOH discretization is `tf` (inverse of
/// [`discretize_zoh`] for simple poles).
pub fn to_continuous(tf: &TransferFunction) -> Result<TransferFunction> {
    let ts = tf
        .sampling_time()
        .ok_or_else(|| Error::arg("to_continuous expects a discrete transfer function"))?;
    if tf.order() == 0 {
        return Ok(TransferFunction::gain(tf.dc_gain(), TimeDomain::Continuous));
    }
    let (terms, direct) = hold_terms(tf)?;
    let cont: Vec<PoleResidue> = terms
        .iter()
        .map(|t| {
            let p = t.pole.ln() / ts;
            let denom = t.pole - 1.0;
            let k = if denom.norm() < 1e-12 {
                t.residue / ts
            } else {
                t.residue * p / denom
            };
            PoleResidue {
                pole: p,
                residue: k,
            }
        })
        .collect();
    pfe::recombine_terms(&cont, direct, TimeDomain::Continuous)
}

/// Re-expresses a discrete model at another sampling time, assuming it is
/// the ZOH equivalent of some continuous system.
pub fn resample_zoh(tf: &TransferFunction, new_sampling_time: f64) -> Result<TransferFunction> {
    let ts = tf
        .sampling_time()
        .ok_or_else(|| Error::arg("resample_zoh expects a discrete transfer function"))?;
    if !(new_sampling_time > 0.0) {
        return Err(Error::arg("sampling time must be positive"));
    }
    let domain = TimeDomain::Discrete {
        sampling_time: new_sampling_time,
    };
    if crate::tf::same_ts(ts, new_sampling_time) {
        return Ok(tf.clone());
    }
    if tf.is_zero() {
        return Ok(TransferFunction::zero(domain));
    }
    if tf.order() == 0 {
        return Ok(TransferFunction::gain(tf.dc_gain(), domain));
    }
    let ratio = new_sampling_time / ts;
    let (terms, direct) = hold_terms(tf)?;
    let moved: Vec<PoleResidue> = terms
        .iter()
        .map(|t| {
            let lam = t.pole;
            let lam_new = (lam.ln() * ratio).exp();
            let denom = lam - 1.0;
            let r = if denom.norm() < 1e-12 {
                t.residue * ratio
            } else {
                t.residue * (lam_new - 1.0) / denom
            };
            PoleResidue {
                pole: lam_new,
                residue: r,
            }
        })
        .collect();
    pfe::recombine_terms(&moved, direct, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::{logspace, max_relative_response_error};
    use approx::assert_relative_eq;

    fn g_a() -> TransferFunction {
        let quad = TransferFunction::continuous(&[0.3], &[1.0, 0.166, 0.019]).unwrap();
        let lead = TransferFunction::continuous(&[1.0, 15.0], &[1.0, 30.0]).unwrap();
        quad.series_multiply(&lead).unwrap()
    }

    #[test]
    fn first_order_closed_form() {
        // K/(s-p): b1 = K/p (e^{pT} - 1), a1 = -e^{pT}
        let (k, p, ts) = (2.0, -0.7, 0.3);
        let g = TransferFunction::continuous(&[k], &[-p, 1.0]).unwrap();
        let d = discretize_zoh(&g, ts).unwrap();
        let lam = (p * ts).exp();
        assert_relative_eq!(d.denominator().coeffs()[1], -lam, epsilon = 1e-15);
        assert_relative_eq!(
            d.numerator().coeffs()[1],
            k / p * (lam - 1.0),
            epsilon = 1e-14
        );
        assert!(d.numerator().coeffs()[0].abs() < 1e-15);
    }

    #[test]
    fn slow_lag_at_four_seconds() {
        let g = TransferFunction::continuous(&[1.2], &[1.0, 100.0]).unwrap();
        let d = discretize_zoh(&g, 4.0).unwrap();
        assert_relative_eq!(d.poles().unwrap()[0].re, (-0.04f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(d.dc_gain(), 1.2, epsilon = 1e-12);
    }

    #[test]
    fn g_a_keeps_dc_gain_and_stability() {
        let g = g_a();
        for ts in [0.04, 0.5, 4.0] {
            let d = discretize_zoh(&g, ts).unwrap();
            assert!(
                (d.dc_gain() - 0.3).abs() < 1e-9,
                "ts={ts} gain={}",
                d.dc_gain()
            );
            assert!(d.is_stable());
        }
    }

    #[test]
    fn repeated_poles_supported() {
        // 1/(s+1)^2, step response 1 - (1+t) e^{-t}
        let g = TransferFunction::continuous(&[1.0], &[1.0, 2.0, 1.0]).unwrap();
        let d = discretize_zoh(&g, 0.1).unwrap();
        let y = d.simulate(&vec![1.0; 31]).unwrap().output;
        let t: f64 = 3.0;
        assert_relative_eq!(y[30], 1.0 - (1.0 + t) * (-t).exp(), epsilon = 1e-12);
    }

    #[test]
    fn proper_system_direct_term() {
        let g = TransferFunction::continuous(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
        let d = discretize_zoh(&g, 0.2).unwrap();
        assert_relative_eq!(d.numerator().coeffs()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(d.dc_gain(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = TransferFunction::continuous(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(discretize_zoh(&g, 0.0).is_err());
        assert!(discretize_zoh(&g, -1.0).is_err());
        let d = discretize_zoh(&g, 1.0).unwrap();
        assert!(discretize_zoh(&d, 1.0).is_err());
    }

    #[test]
    fn continuous_round_trip() {
        let g = g_a();
        let d = discretize_zoh(&g, 0.04).unwrap();
        let c = to_continuous(&d).unwrap();
        let freqs = logspace(1e-3, 20.0, 30);
        assert!(max_relative_response_error(&g, &c, &freqs) < 1e-6);
    }

    #[test]
    fn resample_matches_direct_discretization() {
        let g = g_a();
        let fine = discretize_zoh(&g, 0.04).unwrap();
        let coarse = discretize_zoh(&g, 0.4).unwrap();
        let r = resample_zoh(&coarse, 0.04).unwrap();
        let freqs = logspace(1e-3, 50.0, 30);
        let e = max_relative_response_error(&fine, &r, &freqs);
        assert!(e < 1e-7, "{e}");
    }
}

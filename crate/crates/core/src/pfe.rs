//! Partial-fraction (pole–residue) form and the fast/slow split built on it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{self, eval_complex};
use crate::tf::{TimeDomain, TransferFunction};

/// Relative tolerance under which two poles count as coincident.
pub const POLE_COINCIDENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleResidue {
    pub pole: Complex64,
    pub residue: Complex64,
}

/// `G = Σ Kⱼ/(x − pⱼ) + D` where `x` is `s` in continuous time and `z` in
/// discrete time.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueForm {
    pub terms: Vec<PoleResidue>,
    pub direct_term: f64,
    pub domain: TimeDomain,
}

/// Numerator and denominator in the expansion variable, ascending.
fn expansion_polys(tf: &TransferFunction) -> (Vec<f64>, Vec<f64>) {
    let n = tf.numerator().coeffs();
    let d = tf.denominator().coeffs();
    match tf.domain() {
        TimeDomain::Continuous => (n.to_vec(), d.to_vec()),
        TimeDomain::Discrete { .. } => {
            // Multiply through by z^m; q⁻ᵏ becomes z^{m-k}.
            let m = n.len().max(d.len()) - 1;
            let mut nz = vec![0.0; m + 1];
            let mut dz = vec![0.0; m + 1];
            for (k, &v) in n.iter().enumerate() {
                nz[m - k] = v;
            }
            for (k, &v) in d.iter().enumerate() {
                dz[m - k] = v;
            }
            (nz, dz)
        }
    }
}

/// Forces exact conjugate symmetry on a root set computed in floating point.
fn symmetrize(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let n = roots.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let r = roots[i];
        if r.im.abs() <= 1e-10 * r.norm().max(1e-300) {
            roots[i] = Complex64::new(r.re, 0.0);
            done[i] = true;
            continue;
        }
        let partner = (0..n).filter(|&j| j != i && !done[j]).min_by(|&a, &b| {
            let da = (roots[a] - r.conj()).norm();
            let db = (roots[b] - r.conj()).norm();
            da.partial_cmp(&db).unwrap()
        });
        done[i] = true;
        if let Some(j) = partner {
            let avg = (r + roots[j].conj()) * 0.5;
            roots[i] = avg;
            roots[j] = avg.conj();
            done[j] = true;
        }
    }
    roots
}

pub(crate) fn check_distinct(poles: &[Complex64]) -> Result<()> {
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            let scale = poles[i].norm().max(poles[j].norm()).max(1e-12);
            if (poles[i] - poles[j]).norm() <= POLE_COINCIDENCE_TOL * scale {
                return Err(Error::UnsupportedStructure(format!(
                    "repeated pole near {:.6e}{:+.6e}j",
                    poles[i].re, poles[i].im
                )));
            }
        }
    }
    Ok(())
}

/// Expands `tf` into simple-pole terms. Repeated poles are rejected.
pub fn partial_fraction(tf: &TransferFunction) -> Result<PoleResidueForm> {
    let (num, den) = expansion_polys(tf);
    let deg = den.len() - 1;
    if deg == 0 {
        return Ok(PoleResidueForm {
            terms: Vec::new(),
            direct_term: tf.numerator().coeffs()[0] / tf.denominator().coeffs()[0],
            domain: tf.domain(),
        });
    }
    let poles = symmetrize(poly::roots(&den)?);
    check_distinct(&poles)?;
    let lead = den[deg];
    let direct = if num.len() == den.len() {
        num[deg] / lead
    } else {
        0.0
    };
    let dder = crate::poly::Polynomial::new(&den, poly::Variable::S).derivative();
    let mut terms: Vec<PoleResidue> = Vec::with_capacity(deg);
    for &p in &poles {
        // Conjugate partner already computed: reuse its conjugate residue.
        if p.im < 0.0 {
            if let Some(t) = terms.iter().find(|t| t.pole == p.conj()) {
                terms.push(PoleResidue {
                    pole: p,
                    residue: t.residue.conj(),
                });
                continue;
            }
        }
        let k = eval_complex(&num, p) / eval_complex(dder.coeffs(), p);
        let k = if p.im == 0.0 {
            Complex64::new(k.re, 0.0)
        } else {
            k
        };
        terms.push(PoleResidue {
            pole: p,
            residue: k,
        });
    }
    // Fill in any partners that appeared before their positive-imaginary twin.
    for i in 0..terms.len() {
        if terms[i].pole.im < 0.0 {
            if let Some(t) = terms
                .iter()
                .find(|t| t.pole == terms[i].pole.conj())
                .copied()
            {
                terms[i].residue = t.residue.conj();
            }
        }
    }
    Ok(PoleResidueForm {
        terms,
        direct_term: direct,
        domain: tf.domain(),
    })
}

impl PoleResidueForm {
    /// Rebuilds a rational transfer function from (a subset of) the terms.
    pub fn recombine(&self) -> Result<TransferFunction> {
        recombine_terms(&self.terms, self.direct_term, self.domain)
    }
}

pub(crate) fn recombine_terms(
    terms: &[PoleResidue],
    direct: f64,
    domain: TimeDomain,
) -> Result<TransferFunction> {
    if terms.is_empty() {
        return Ok(TransferFunction::gain(direct, domain));
    }
    let poles: Vec<Complex64> = terms.iter().map(|t| t.pole).collect();
    let den_c = poly::poly_from_roots_complex(&poles);
    let n = poles.len();
    let mut num_c = vec![Complex64::new(0.0, 0.0); n + 1];
    for (j, t) in terms.iter().enumerate() {
        let others: Vec<Complex64> = poles
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &p)| p)
            .collect();
        let part = poly::poly_from_roots_complex(&others);
        for (i, c) in part.iter().enumerate() {
            num_c[i] += t.residue * c;
        }
    }
    for (i, c) in den_c.iter().enumerate() {
        num_c[i] += c * direct;
    }
    let num: Vec<f64> = num_c.iter().map(|c| c.re).collect();
    let den: Vec<f64> = den_c.iter().map(|c| c.re).collect();
    match domain {
        TimeDomain::Continuous => TransferFunction::new(&num, &den, domain),
        TimeDomain::Discrete { .. } => {
            // Degree-n polynomials in z back to q⁻¹: coefficient of z^{n-k} is that of q⁻ᵏ.
            let nq: Vec<f64> = num.iter().rev().copied().collect();
            let dq: Vec<f64> = den.iter().rev().copied().collect();
            TransferFunction::new(&nq, &dq, domain)
        }
    }
}

/// How the fast/slow boundary is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitThreshold {
    /// Explicit boundary in rad/s.
    Explicit(f64),
    /// Geometric mean of the slow and fast bandwidths.
    Bandwidths { slow: f64, fast: f64 },
}

impl SplitThreshold {
    pub fn value(&self) -> f64 {
        match *self {
            SplitThreshold::Explicit(w) => w,
            SplitThreshold::Bandwidths { slow, fast } => (slow * fast).sqrt(),
        }
    }
}

/// Splits a continuous pole–residue form into a fast part (poles with
/// `|p| ≥ threshold`, plus the direct term) and a slow part.
pub fn split_fast_slow(
    prf: &PoleResidueForm,
    threshold: SplitThreshold,
) -> Result<(TransferFunction, TransferFunction)> {
    if prf.domain != TimeDomain::Continuous {
        return Err(Error::arg(
            "fast/slow split is defined on continuous-time forms",
        ));
    }
    let w = threshold.value();
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::arg(format!(
            "split threshold must be positive, got {w}"
        )));
    }
    for t in &prf.terms {
        let m = t.pole.norm();
        if (m - w).abs() <= 0.05 * w {
            return Err(Error::AmbiguousSplit {
                magnitude: m,
                threshold: w,
            });
        }
    }
    let (fast, slow): (Vec<PoleResidue>, Vec<PoleResidue>) =
        prf.terms.iter().partition(|t| t.pole.norm() >= w);
    let fast_tf = recombine_terms(&fast, prf.direct_term, prf.domain)?;
    let slow_tf = recombine_terms(&slow, 0.0, prf.domain)?;
    Ok((fast_tf, slow_tf))
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
    fn two_real_poles_residues() {
        // 1/((s+1)(100s+1)) = 1/(100 (s+1)(s+0.01))
        let g = TransferFunction::continuous(&[1.0], &[1.0, 101.0, 100.0]).unwrap();
        let prf = partial_fraction(&g).unwrap();
        let at = |p: f64| {
            prf.terms
                .iter()
                .find(|t| (t.pole.re - p).abs() < 1e-9)
                .unwrap()
                .residue
        };
        assert_relative_eq!(at(-1.0).re, -1.0 / 99.0, epsilon = 1e-14);
        assert_relative_eq!(at(-0.01).re, 1.0 / 99.0, epsilon = 1e-14);
        assert_eq!(prf.direct_term, 0.0);
    }

    #[test]
    fn single_term_is_itself() {
        let g = TransferFunction::continuous(&[2.0], &[3.0, 1.0]).unwrap(); // 2/(s+3)
        let prf = partial_fraction(&g).unwrap();
        assert_eq!(prf.terms.len(), 1);
        assert_relative_eq!(prf.terms[0].pole.re, -3.0, epsilon = 1e-15);
        assert_relative_eq!(prf.terms[0].residue.re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn g_a_expansion_against_symbolic_residues() {
        let g = g_a();
        let prf = partial_fraction(&g).unwrap();
        assert_eq!(prf.terms.len(), 3);
        // Independent oracle: residue at s = -1/30 of
        // 0.3 (15s+1) / ((0.019 s^2 + 0.166 s + 1)(30 s + 1)) is
        // 0.3 (15p+1) / (30 (0.019 p^2 + 0.166 p + 1)).
        let p = -1.0 / 30.0;
        let k_expected = 0.3 * (15.0 * p + 1.0) / (30.0 * (0.019 * p * p + 0.166 * p + 1.0));
        let slow = prf.terms.iter().find(|t| t.pole.im == 0.0).unwrap();
        assert_relative_eq!(slow.pole.re, p, epsilon = 1e-13);
        assert_relative_eq!(slow.residue.re, k_expected, epsilon = 1e-13);
        let pair: Vec<_> = prf.terms.iter().filter(|t| t.pole.im != 0.0).collect();
        assert_eq!(pair.len(), 2);
        assert_eq!(pair[0].pole, pair[1].pole.conj());
        assert_eq!(pair[0].residue, pair[1].residue.conj());
        let back = prf.recombine().unwrap();
        let freqs = logspace(1e-4, 1e3, 50);
        assert!(max_relative_response_error(&g, &back, &freqs) < 1e-9);
    }

    #[test]
    fn repeated_poles_rejected() {
        let g = TransferFunction::continuous(&[1.0], &[1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            partial_fraction(&g),
            Err(Error::UnsupportedStructure(_))
        ));
    }

    #[test]
    fn proper_system_has_direct_term() {
        // (s+2)/(s+1) = 1 + 1/(s+1)
        let g = TransferFunction::continuous(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
        let prf = partial_fraction(&g).unwrap();
        assert_relative_eq!(prf.direct_term, 1.0, epsilon = 1e-15);
        assert_relative_eq!(prf.terms[0].residue.re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn split_g_a() {
        let g = g_a();
        let prf = partial_fraction(&g).unwrap();
        let (fast, slow) = split_fast_slow(&prf, SplitThreshold::Explicit(0.3)).unwrap();
        assert_eq!(fast.order(), 2);
        assert_eq!(slow.order(), 1);
        assert_relative_eq!(slow.poles().unwrap()[0].re, -1.0 / 30.0, epsilon = 1e-13);
        let freqs = logspace(1e-4, 1e3, 50);
        let sum = fast.parallel_add(&slow).unwrap();
        assert!(max_relative_response_error(&g, &sum, &freqs) < 1e-8);
        assert_relative_eq!(fast.dc_gain() + slow.dc_gain(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn split_matrix_entry() {
        let g = TransferFunction::continuous(&[1.0], &[1.0, 101.0, 100.0]).unwrap();
        let prf = partial_fraction(&g).unwrap();
        let (fast, slow) = split_fast_slow(&prf, SplitThreshold::Explicit(0.1)).unwrap();
        assert_relative_eq!(fast.poles().unwrap()[0].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(slow.poles().unwrap()[0].re, -0.01, epsilon = 1e-14);
    }

    #[test]
    fn all_fast_gives_zero_slow() {
        let g = TransferFunction::continuous(&[1.0], &[2.0, 3.0, 1.0]).unwrap(); // poles -1, -2
        let prf = partial_fraction(&g).unwrap();
        let (_, slow) = split_fast_slow(&prf, SplitThreshold::Explicit(0.5)).unwrap();
        assert!(slow.is_zero());
    }

    #[test]
    fn ambiguous_threshold_rejected() {
        let g = TransferFunction::continuous(&[1.0], &[1.0, 1.0]).unwrap();
        let prf = partial_fraction(&g).unwrap();
        assert!(matches!(
            split_fast_slow(&prf, SplitThreshold::Explicit(1.03)),
            Err(Error::AmbiguousSplit { .. })
        ));
        let t = SplitThreshold::Bandwidths {
            slow: 0.01,
            fast: 1.0,
        };
        assert_relative_eq!(t.value(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn discrete_expansion_round_trip() {
        let g = TransferFunction::discrete(&[0.0, 0.5, -0.2], &[1.0, -1.5, 0.56], 0.1).unwrap();
        let prf = partial_fraction(&g).unwrap();
        let mut p: Vec<f64> = prf.terms.iter().map(|t| t.pole.re).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(p[0], 0.7, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-12);
        let back = prf.recombine().unwrap();
        let freqs = logspace(1e-2, 30.0, 40);
        assert!(max_relative_response_error(&g, &back, &freqs) < 1e-10);
    }
}

//! Real polynomials in `s` (continuous time) or `q⁻¹` (discrete time).
//!
//! Coefficients are stored constant term first, so `[a0, a1, a2]` is
//! `a0 + a1·x + a2·x²` where `x` is the indeterminate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Indeterminate of a [`Polynomial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Variable {
    /// Laplace variable `s`.
    S,
    /// Backward shift `q⁻¹`.
    QInv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    var: Variable,
}

impl Polynomial {
    /// Builds a polynomial, stripping trailing (highest power) zeros.
    /// An empty or all-zero slice yields the zero polynomial `[0.0]`.
    pub fn new(coeffs: &[f64], var: Variable) -> Self {
        let mut c = coeffs.to_vec();
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Polynomial { coeffs: c, var }
    }

    pub fn zero(var: Variable) -> Self {
        Polynomial::new(&[0.0], var)
    }

    pub fn one(var: Variable) -> Self {
        Polynomial::new(&[1.0], var)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn variable(&self) -> Variable {
        self.var
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        eval_complex(&self.coeffs, x)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Polynomial::new(&add(&self.coeffs, &other.coeffs), self.var)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        Polynomial::new(&convolve(&self.coeffs, &other.coeffs), self.var)
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        let c: Vec<f64> = self.coeffs.iter().map(|&v| v * k).collect();
        Polynomial::new(&c, self.var)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::zero(self.var);
        }
        let c: Vec<f64> = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, &v)| v * (i + 1) as f64)
            .collect();
        Polynomial::new(&c, self.var)
    }

    /// Roots in the polynomial's own indeterminate, with multiplicity.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        roots(&self.coeffs)
    }
}

/// Evaluates an ascending-coefficient polynomial at a complex point.
pub fn eval_complex(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn convolve_complex(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic polynomial `∏ (x − rᵢ)` in ascending order, complex coefficients.
pub(crate) fn poly_from_roots_complex(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        p = convolve_complex(&p, &[-r, Complex64::new(1.0, 0.0)]);
    }
    p
}

/// Monic polynomial `∏ (x − rᵢ)` with real coefficients (imaginary parts
/// discarded; callers pass conjugate-closed root sets).
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    poly_from_roots_complex(roots)
        .iter()
        .map(|c| c.re)
        .collect()
}

/// Roots of `Σ cₖ xᵏ` via eigenvalues of the companion matrix, followed
/// by a Newton polish on the original coefficients.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        if c.first().copied().unwrap_or(0.0) == 0.0 {
            return Err(Error::Domain("roots of the zero polynomial".into()));
        }
        return Ok(Vec::new());
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite polynomial coefficient".into()));
    }
    let lead = c[n];
    if n == 1 {
        return Ok(vec![Complex64::new(-c[0] / lead, 0.0)]);
    }
    if n == 2 {
        return Ok(quadratic_roots(c[2], c[1], c[0]));
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let dp = Polynomial::new(&c, Variable::S).derivative();
    let mut out: Vec<Complex64> = eig
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .map(|z| polish(&c, dp.coeffs(), z))
        .collect();
    out.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(out)
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        // Numerically stable form: avoid cancellation in -b ± sqrt(disc).
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
        let r1 = q / a;
        let r2 = if q != 0.0 { c / q } else { 0.0 };
        let mut v = vec![Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)];
        v.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        v
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        vec![Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

fn polish(c: &[f64], dc: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = eval_complex(c, z).norm();
    for _ in 0..4 {
        let d = eval_complex(dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - eval_complex(c, z) / d;
        let r = eval_complex(c, cand).norm();
        if r < best && cand.re.is_finite() && cand.im.is_finite() {
            best = r;
            z = cand;
        } else {
            break;
        }
    }
    z
}

/// Causal IIR filtering `y = (b/a) x` for `q⁻¹` polynomials, zero initial
/// state (transposed direct form II).
pub fn lfilter(b: &[f64], a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    lfilter_into(b, a, x, &mut y);
    y
}

pub(crate) fn lfilter_into(b: &[f64], a: &[f64], x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    let a0 = a[0];
    let n = b.len().max(a.len());
    let mut bn = vec![0.0; n];
    let mut an = vec![0.0; n];
    for (i, &v) in b.iter().enumerate() {
        bn[i] = v / a0;
    }
    for (i, &v) in a.iter().enumerate() {
        an[i] = v / a0;
    }
    if n == 1 {
        for (yo, &xi) in y.iter_mut().zip(x) {
            *yo = bn[0] * xi;
        }
        return;
    }
    let mut z = vec![0.0; n - 1];
    let last = n - 2;
    for (yo, &xi) in y.iter_mut().zip(x) {
        let yi = bn[0] * xi + z[0];
        for k in 0..last {
            z[k] = bn[k + 1] * xi - an[k + 1] * yi + z[k + 1];
        }
        z[last] = bn[n - 1] * xi - an[n - 1] * yi;
        *yo = yi;
    }
}

/// Roots in `z` of a `q⁻¹` polynomial `a0 + a1 q⁻¹ + … + an q⁻ⁿ`, i.e. the
/// roots of `a0 zⁿ + a1 zⁿ⁻¹ + … + an`.
pub fn qinv_roots(a: &[f64]) -> Result<Vec<Complex64>> {
    let mut c = a.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    c.reverse();
    roots(&c)
}

/// Builds `∏ (1 − rᵢ q⁻¹)` from a conjugate-closed root set.
pub fn qinv_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut p = poly_from_roots(roots);
    p.reverse();
    p
}

/// Reflects roots outside the unit circle to `1/conj(r)`. Returns the new
/// monic `q⁻¹` polynomial scaled to keep `a0`, and whether anything moved.
pub fn reflect_unstable(a: &[f64]) -> (Vec<f64>, bool) {
    reflect_into_radius(a, 1.0 - 1e-6)
}

/// Like [`reflect_unstable`], then pulls any root with modulus above
/// `max_radius` in to that radius.
pub fn reflect_into_radius(a: &[f64], max_radius: f64) -> (Vec<f64>, bool) {
    if a.len() <= 1 {
        return (a.to_vec(), false);
    }
    let Ok(rs) = qinv_roots(a) else {
        return (a.to_vec(), false);
    };
    if rs.iter().all(|r| r.norm() <= max_radius) {
        return (a.to_vec(), false);
    }
    let fixed: Vec<Complex64> = rs
        .iter()
        .map(|&r| {
            let m = r.norm();
            let target = if m > 1.0 + 1e-9 { 1.0 / m } else { m };
            r / m * target.min(max_radius)
        })
        .collect();
    let mut p = qinv_from_roots(&fixed);
    p.resize(a.len(), 0.0);
    let a0 = a[0];
    (p.iter().map(|v| v * a0).collect(), true)
}

/// True when every root of the `q⁻¹` polynomial lies strictly inside the
/// unit circle (a constant polynomial is stable).
pub fn qinv_is_stable(a: &[f64]) -> bool {
    match qinv_roots(a) {
        Ok(rs) => rs.iter().all(|r| r.norm() < 1.0),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn strips_trailing_zeros() {
        let p = Polynomial::new(&[1.0, 2.0, 0.0, 0.0], Variable::S);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::new(&[], Variable::S).is_zero());
    }

    #[test]
    fn cubic_roots_match_factors() {
        // (x-1)(x+2)(x-3) = x^3 -2x^2 -5x +6
        let r = roots(&[6.0, -5.0, -2.0, 1.0]).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(re[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(re[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(re[2], 3.0, epsilon = 1e-12);
        assert!(r.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn complex_pair_roots() {
        // x^2 + 2x + 5 -> -1 ± 2j, also through the companion path as a factor
        let r = roots(&[5.0, 2.0, 1.0]).unwrap();
        assert_relative_eq!(r[0].re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(r[0].im.abs(), 2.0, epsilon = 1e-14);
        let r = roots(&convolve(&[5.0, 2.0, 1.0], &[1.0, 1.0])).unwrap();
        let cplx: Vec<_> = r.iter().filter(|z| z.im.abs() > 1e-9).collect();
        assert_eq!(cplx.len(), 2);
        assert_relative_eq!(cplx[0].im, -cplx[1].im, epsilon = 1e-12);
    }

    #[test]
    fn zero_polynomial_roots_is_domain_error() {
        assert!(matches!(roots(&[0.0]), Err(Error::Domain(_))));
        assert!(roots(&[3.0]).unwrap().is_empty());
    }

    #[test]
    fn lfilter_first_order() {
        // y(t) = 0.5 y(t-1) + u(t-1), impulse
        let y = lfilter(&[0.0, 1.0], &[1.0, -0.5], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y, vec![0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn reflection_moves_roots_inside() {
        // 1 - 2 q^-1 has root 2 -> reflected to 0.5
        let (a, moved) = reflect_unstable(&[1.0, -2.0]);
        assert!(moved);
        assert_relative_eq!(a[1], -0.5, epsilon = 1e-12);
        assert!(qinv_is_stable(&a));
    }
}

//! Levenberg–Marquardt search on prediction-error residuals.

use nalgebra::{DMatrix, DVector};

use super::{EstimationOptions, ModelEstimate, ModelOrders};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::poly::{lfilter, qinv_roots, reflect_into_radius, reflect_unstable};
use crate::tf::TransferFunction;

const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;
/// Largest root modulus allowed for the noise model's C and D. Noise
/// spectra with a null or peak at the band edge otherwise drag a root onto
/// the unit circle, where the loss keeps creeping down without converging.
pub const NOISE_ROOT_RADIUS: f64 = 0.99;

pub(crate) struct Problem<'a> {
    pub inputs: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub ts: f64,
    pub n: usize,
    pub nk: usize,
    pub nc: usize,
    pub start: usize,
}

/// Polynomials unpacked from a parameter vector.
pub(crate) struct Parts {
    /// Full-lag numerators (leading `nk` zeros included).
    pub b: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

struct Evaluation {
    channel_outputs: Vec<Vec<f64>>,
    w: Vec<f64>,
    eps: Vec<f64>,
    loss: f64,
}

fn shifted(x: &[f64], k: usize, start: usize, sign: f64) -> Vec<f64> {
    (start..x.len())
        .map(|t| if t >= k { sign * x[t - k] } else { 0.0 })
        .collect()
}

impl<'a> Problem<'a> {
    pub fn new(data: &'a TimeSeriesDataset, orders: ModelOrders, start: usize) -> Self {
        Problem {
            inputs: data.inputs(),
            y: &data.outputs()[0],
            ts: data.sampling_time(),
            n: orders.process,
            nk: orders.delay,
            nc: orders.noise.unwrap_or(0),
            start,
        }
    }

    fn m(&self) -> usize {
        self.inputs.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.m() * 2 * self.n + 2 * self.nc
    }

    pub fn unpack(&self, theta: &[f64]) -> Parts {
        let n = self.n;
        let mut b = Vec::with_capacity(self.m());
        let mut f = Vec::with_capacity(self.m());
        for i in 0..self.m() {
            let block = &theta[i * 2 * n..(i + 1) * 2 * n];
            let mut bi = vec![0.0; self.nk];
            bi.extend_from_slice(&block[..n]);
            let mut fi = vec![1.0];
            fi.extend_from_slice(&block[n..]);
            b.push(bi);
            f.push(fi);
        }
        let off = self.m() * 2 * n;
        let mut c = vec![1.0];
        c.extend_from_slice(&theta[off..off + self.nc]);
        let mut d = vec![1.0];
        d.extend_from_slice(&theta[off + self.nc..off + 2 * self.nc]);
        Parts { b, f, c, d }
    }

    fn pack(&self, parts: &Parts) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.parameter_count());
        for (b, f) in parts.b.iter().zip(&parts.f) {
            theta.extend_from_slice(&b[self.nk..]);
            theta.extend_from_slice(&f[1..]);
        }
        theta.extend_from_slice(&parts.c[1..]);
        theta.extend_from_slice(&parts.d[1..]);
        theta
    }

    /// `y − Σ Bᵢ/Fᵢ uᵢ` for a process parameter vector.
    pub fn output_error(&self, theta: &[f64]) -> Vec<f64> {
        let parts = self.unpack(theta);
        let mut w = self.y.to_vec();
        for ((b, f), u) in parts.b.iter().zip(&parts.f).zip(self.inputs) {
            for (wt, v) in w.iter_mut().zip(lfilter(b, f, u)) {
                *wt -= v;
            }
        }
        w
    }

    fn evaluate(&self, theta: &[f64]) -> Evaluation {
        let parts = self.unpack(theta);
        let mut w = self.y.to_vec();
        let mut channel_outputs = Vec::with_capacity(self.m());
        for ((b, f), u) in parts.b.iter().zip(&parts.f).zip(self.inputs) {
            let yi = lfilter(b, f, u);
            for (wt, v) in w.iter_mut().zip(&yi) {
                *wt -= v;
            }
            channel_outputs.push(yi);
        }
        let eps = if self.nc > 0 {
            lfilter(&parts.d, &parts.c, &w)
        } else {
            w.clone()
        };
        let tail = &eps[self.start..];
        let mut loss = tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64;
        if !loss.is_finite() {
            loss = f64::INFINITY;
        }
        Evaluation {
            channel_outputs,
            w,
            eps,
            loss,
        }
    }

    /// Columns of `∂ε/∂θ` restricted to samples `t ≥ start`.
    fn jacobian(&self, theta: &[f64], ev: &Evaluation) -> Vec<Vec<f64>> {
        let parts = self.unpack(theta);
        let noise = |x: Vec<f64>| {
            if self.nc > 0 {
                lfilter(&parts.d, &parts.c, &x)
            } else {
                x
            }
        };
        let mut cols = Vec::with_capacity(self.parameter_count());
        for (i, u) in self.inputs.iter().enumerate() {
            let f = &parts.f[i];
            let uf = noise(lfilter(&[1.0], f, u));
            let yf = noise(lfilter(&[1.0], f, &ev.channel_outputs[i]));
            for k in 0..self.n {
                cols.push(shifted(&uf, self.nk + k, self.start, -1.0));
            }
            for k in 1..=self.n {
                cols.push(shifted(&yf, k, self.start, 1.0));
            }
        }
        if self.nc > 0 {
            let ec = lfilter(&[1.0], &parts.c, &ev.eps);
            let wc = lfilter(&[1.0], &parts.c, &ev.w);
            for k in 1..=self.nc {
                cols.push(shifted(&ec, k, self.start, -1.0));
            }
            for k in 1..=self.nc {
                cols.push(shifted(&wc, k, self.start, 1.0));
            }
        }
        cols
    }

    /// Reflects unstable roots and keeps the noise polynomials' roots within
    /// [`NOISE_ROOT_RADIUS`]; returns the flags (process, noise).
    fn project(&self, theta: &mut Vec<f64>, enforce: bool) -> (bool, bool) {
        let mut parts = self.unpack(theta);
        let mut process = false;
        if enforce {
            for f in parts.f.iter_mut() {
                let (g, moved) = reflect_unstable(f);
                *f = g;
                process |= moved;
            }
        }
        let mut noise = false;
        if self.nc > 0 {
            for p in [&mut parts.c, &mut parts.d] {
                let (g, moved) = reflect_into_radius(p, NOISE_ROOT_RADIUS);
                *p = g;
                noise |= moved;
            }
        }
        if process || noise {
            *theta = self.pack(&parts);
        }
        (process, noise)
    }

    /// Noise-parameter indices whose polynomial already sits on the root
    /// radius cap and that `step` would push further out. Holding them fixed
    /// for the step lets the remaining parameters converge.
    fn blocked(&self, theta: &[f64], step: &[f64]) -> Vec<usize> {
        if self.nc == 0 {
            return Vec::new();
        }
        let off = self.m() * 2 * self.n;
        let radius = |p: &[f64]| {
            qinv_roots(p)
                .map(|r| r.iter().map(|z| z.norm()).fold(0.0, f64::max))
                .unwrap_or(0.0)
        };
        let mut out = Vec::new();
        for block in [off..off + self.nc, off + self.nc..off + 2 * self.nc] {
            let mut now = vec![1.0];
            now.extend_from_slice(&theta[block.clone()]);
            let mut next = now.clone();
            for (k, i) in block.clone().enumerate() {
                next[k + 1] += step[i];
            }
            if radius(&now) >= NOISE_ROOT_RADIUS - 1e-9 && radius(&next) > NOISE_ROOT_RADIUS {
                out.extend(block);
            }
        }
        out
    }

    pub fn theta_from_models(
        &self,
        process: &[TransferFunction],
        noise: Option<&TransferFunction>,
    ) -> Result<Vec<f64>> {
        if process.len() != self.m() {
            return Err(Error::arg(format!(
                "{} initial models for {} inputs",
                process.len(),
                self.m()
            )));
        }
        let mut theta = Vec::with_capacity(self.parameter_count());
        for g in process {
            if g.is_continuous() {
                return Err(Error::arg("initial models must be discrete"));
            }
            let num = g.numerator().coeffs();
            let den = g.denominator().coeffs();
            if den.len() > self.n + 1
                || num.len() > self.nk + self.n
                || num[..self.nk.min(num.len())].iter().any(|v| *v != 0.0)
            {
                return Err(Error::arg(format!(
                    "initial model does not fit the structure n={} nk={}",
                    self.n, self.nk
                )));
            }
            let mut b = num.get(self.nk..).map(|s| s.to_vec()).unwrap_or_default();
            b.resize(self.n, 0.0);
            let mut f = den[1..].to_vec();
            f.resize(self.n, 0.0);
            theta.extend(b);
            theta.extend(f);
        }
        if self.nc > 0 {
            let (mut c, mut d) = match noise {
                Some(h) => (
                    h.numerator().coeffs().to_vec(),
                    h.denominator().coeffs().to_vec(),
                ),
                None => (vec![1.0], vec![1.0]),
            };
            if c.len() > self.nc + 1 || d.len() > self.nc + 1 || (c[0] - 1.0).abs() > 1e-12 {
                return Err(Error::arg(
                    "initial noise model must be monic C/D of the configured order",
                ));
            }
            c.resize(self.nc + 1, 0.0);
            d.resize(self.nc + 1, 0.0);
            theta.extend_from_slice(&c[1..]);
            theta.extend_from_slice(&d[1..]);
        }
        Ok(theta)
    }

    pub fn solve(&self, mut theta: Vec<f64>, opts: &EstimationOptions) -> Result<ModelEstimate> {
        let (_, mut noise_reflected) = self.project(&mut theta, opts.enforce_stability);
        let mut ev = self.evaluate(&theta);
        if !ev.loss.is_finite() {
            return Err(Error::Domain(
                "initial model produces a non-finite loss".into(),
            ));
        }
        let tail = &self.y[self.start..];
        let floor = 1e-30 * tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64;
        let mut history = vec![ev.loss];
        let mut lambda = LAMBDA_START;
        let mut iterations = 0;
        let mut converged = ev.loss <= floor;
        let p = theta.len();

        while !converged && iterations < opts.max_iterations {
            iterations += 1;
            let cols = self.jacobian(&theta, &ev);
            let eps = &ev.eps[self.start..];
            let mut h = DMatrix::<f64>::zeros(p, p);
            let mut g = DVector::<f64>::zeros(p);
            for a in 0..p {
                g[a] = dot(&cols[a], eps);
                for b in 0..=a {
                    let v = dot(&cols[a], &cols[b]);
                    h[(a, b)] = v;
                    h[(b, a)] = v;
                }
            }
            let diag_max = (0..p).map(|i| h[(i, i)]).fold(0.0, f64::max);
            let diag_floor = (1e-9 * diag_max).max(f64::MIN_POSITIVE);
            let mut accepted = None;
            while lambda <= LAMBDA_MAX {
                let solve = |fixed: &[usize]| {
                    let mut a = h.clone();
                    let mut rhs = -&g;
                    for i in 0..p {
                        a[(i, i)] += lambda * h[(i, i)].max(diag_floor);
                    }
                    for &i in fixed {
                        a.row_mut(i).fill(0.0);
                        a.column_mut(i).fill(0.0);
                        a[(i, i)] = 1.0;
                        rhs[i] = 0.0;
                    }
                    a.cholesky().map(|c| c.solve(&rhs))
                };
                let mut step = solve(&[]);
                if let Some(s) = &step {
                    let fixed = self.blocked(&theta, s.as_slice());
                    if !fixed.is_empty() {
                        step = solve(&fixed);
                    }
                }
                if let Some(step) = step {
                    let mut cand: Vec<f64> =
                        theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                    let (_, nr) = self.project(&mut cand, opts.enforce_stability);
                    let cev = self.evaluate(&cand);
                    if cev.loss < ev.loss {
                        accepted = Some((cand, cev, nr));
                        lambda = (lambda / 10.0).max(1e-12);
                        break;
                    }
                }
                lambda *= 10.0;
            }
            let Some((cand, cev, nr)) = accepted else {
                // No descent direction left at working precision.
                converged = true;
                break;
            };
            let rel = (ev.loss - cev.loss) / ev.loss;
            theta = cand;
            ev = cev;
            noise_reflected |= nr;
            history.push(ev.loss);
            if rel < opts.tolerance || ev.loss <= floor {
                converged = true;
            }
        }

        let parts = self.unpack(&theta);
        let process_models = parts
            .b
            .iter()
            .zip(&parts.f)
            .map(|(b, f)| TransferFunction::discrete(b, f, self.ts))
            .collect::<Result<Vec<_>>>()?;
        let noise_model = if self.nc > 0 {
            Some(TransferFunction::discrete(&parts.c, &parts.d, self.ts)?)
        } else {
            None
        };
        Ok(ModelEstimate {
            process_models,
            noise_model,
            loss: ev.loss,
            iterations,
            converged,
            noise_reflected,
            parameter_count: self.parameter_count(),
            first_sample: self.start,
            loss_history: history,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

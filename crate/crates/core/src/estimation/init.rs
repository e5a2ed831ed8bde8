//! Starting values: a high-order equation-error (ARX) fit whose channel
//! responses are reduced to the target order by Steiglitz–McBride
//! iterations, and a Hannan–Rissanen fit for the noise model.

use nalgebra::{DMatrix, DVector};

use super::pem::Problem;
use super::NOISE_ROOT_RADIUS;
use crate::poly::{lfilter, reflect_into_radius, reflect_unstable};

const REDUCTION_ITERATIONS: usize = 60;

/// Ridge-regularized least squares with column scaling.
fn least_squares(cols: &[Vec<f64>], target: &[f64]) -> Option<Vec<f64>> {
    let p = cols.len();
    if p == 0 {
        return Some(Vec::new());
    }
    let mut g = DMatrix::<f64>::zeros(p, p);
    let mut r = DVector::<f64>::zeros(p);
    for a in 0..p {
        r[a] = dot(&cols[a], target);
        for b in 0..=a {
            let v = dot(&cols[a], &cols[b]);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    let scale: Vec<f64> = (0..p)
        .map(|i| {
            if g[(i, i)] > 0.0 {
                1.0 / g[(i, i)].sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for a in 0..p {
        r[a] *= scale[a];
        for b in 0..p {
            g[(a, b)] *= scale[a] * scale[b];
        }
        g[(a, a)] += 1e-10;
    }
    let x = g.cholesky()?.solve(&r);
    let out: Vec<f64> = (0..p).map(|i| x[i] * scale[i]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lagged(x: &[f64], k: usize, from: usize) -> Vec<f64> {
    (from..x.len())
        .map(|t| if t >= k { x[t - k] } else { 0.0 })
        .collect()
}

/// Process parameters `[b, f]` per input for the problem's structure.
pub(crate) fn process_guess(problem: &Problem) -> Vec<f64> {
    let n = problem.n;
    let nk = problem.nk;
    let m = problem.inputs.len();
    let len = problem.y.len();
    let usable = len.saturating_sub(problem.start);
    let mut order = (4 * n + 4).clamp(12, 30);
    while order > n && (order * (m + 1) > 60 || 20 * order * (m + 1) > usable) {
        order -= 1;
    }
    let from = problem.start.max(order + nk);
    let mut theta = Vec::with_capacity(m * 2 * n);
    let arx = if from < len {
        let mut cols: Vec<Vec<f64>> = (1..=order)
            .map(|k| lagged(problem.y, k, from).iter().map(|v| -v).collect())
            .collect();
        for u in problem.inputs {
            cols.extend((0..order).map(|k| lagged(u, nk + k, from)));
        }
        least_squares(&cols, &problem.y[from..])
    } else {
        None
    };
    let Some(arx) = arx else {
        for _ in 0..m {
            theta.extend(std::iter::repeat_n(0.0, 2 * n));
        }
        return theta;
    };
    let mut a = vec![1.0];
    a.extend_from_slice(&arx[..order]);
    let (a, _) = reflect_unstable(&a);
    for (i, u) in problem.inputs.iter().enumerate() {
        let mut b = vec![0.0; nk];
        b.extend_from_slice(&arx[order * (i + 1)..order * (i + 2)]);
        let response = lfilter(&b, &a, u);
        let (bi, fi) = reduce(u, &response, n, nk, problem.start);
        theta.extend(bi);
        theta.extend_from_slice(&fi[1..]);
    }
    theta
}

/// Order-`n` fit `B/F` of a noise-free response by Steiglitz–McBride
/// iterations; returns the best iterate by simulation error.
fn reduce(u: &[f64], y: &[f64], n: usize, nk: usize, start: usize) -> (Vec<f64>, Vec<f64>) {
    let from = start.max(n).max(nk + n - 1);
    let sim_loss = |b: &[f64], f: &[f64]| {
        let mut full = vec![0.0; nk];
        full.extend_from_slice(b);
        let yh = lfilter(&full, f, u);
        y[from..]
            .iter()
            .zip(&yh[from..])
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
    };
    let mut f = vec![1.0];
    f.resize(n + 1, 0.0);
    let mut best: (f64, Vec<f64>, Vec<f64>) =
        (sim_loss(&vec![0.0; n], &f), vec![0.0; n], f.clone());
    if from >= y.len() {
        return (best.1, best.2);
    }
    for _ in 0..REDUCTION_ITERATIONS {
        let uf = lfilter(&[1.0], &f, u);
        let yf = lfilter(&[1.0], &f, y);
        let mut cols: Vec<Vec<f64>> = (1..=n)
            .map(|k| lagged(&yf, k, from).iter().map(|v| -v).collect())
            .collect();
        cols.extend((0..n).map(|k| lagged(&uf, nk + k, from)));
        let Some(sol) = least_squares(&cols, &yf[from..]) else {
            break;
        };
        let mut nf = vec![1.0];
        nf.extend_from_slice(&sol[..n]);
        let (nf, _) = reflect_unstable(&nf);
        let nb = sol[n..].to_vec();
        let loss = sim_loss(&nb, &nf);
        let change = nf
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = nf;
        if loss < best.0 {
            best = (loss, nb, f.clone());
        }
        if change < 1e-12 {
            break;
        }
    }
    (best.1, best.2)
}

/// Monic `(C, D)` of degrees `nc`, `nd` for `w = (C/D) e`.
pub(crate) fn arma_guess(w: &[f64], nc: usize, nd: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![1.0];
    c.resize(nc + 1, 0.0);
    let mut d = vec![1.0];
    d.resize(nd + 1, 0.0);
    if nc + nd == 0 || w.iter().all(|v| *v == 0.0) {
        return (c, d);
    }
    let ar_order = (4 * (nc + nd)).max(20).min(w.len() / 20).max(1);
    let cols: Vec<Vec<f64>> = (1..=ar_order)
        .map(|k| lagged(w, k, ar_order).iter().map(|v| -v).collect())
        .collect();
    let Some(ar) = least_squares(&cols, &w[ar_order..]) else {
        return (c, d);
    };
    let mut a = vec![1.0];
    a.extend(ar);
    let e = lfilter(&a, &[1.0], w);
    let from = ar_order + nc.max(nd);
    if from >= w.len() {
        return (c, d);
    }
    let mut cols: Vec<Vec<f64>> = (1..=nd)
        .map(|k| lagged(w, k, from).iter().map(|v| -v).collect())
        .collect();
    cols.extend((1..=nc).map(|k| lagged(&e, k, from)));
    let target: Vec<f64> = (from..w.len()).map(|t| w[t] - e[t]).collect();
    let Some(sol) = least_squares(&cols, &target) else {
        return (c, d);
    };
    d[1..].copy_from_slice(&sol[..nd]);
    c[1..].copy_from_slice(&sol[nd..]);
    (
        reflect_into_radius(&c, NOISE_ROOT_RADIUS).0,
        reflect_into_radius(&d, NOISE_ROOT_RADIUS).0,
    )
}

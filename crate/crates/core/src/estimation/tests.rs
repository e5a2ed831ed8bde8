use super::*;
use crate::poly::qinv_roots;
use crate::signals::{generate_gbn, white_noise, GbnSignalConfig};

/// Direct-form difference equation, written out independently of the
/// library filter routine.
fn diff_eq(b: &[f64], a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for t in 0..x.len() {
        let mut acc = 0.0;
        for (k, bk) in b.iter().enumerate() {
            if t >= k {
                acc += bk * x[t - k];
            }
        }
        for (k, ak) in a.iter().enumerate().skip(1) {
            if t >= k {
                acc -= ak * y[t - k];
            }
        }
        y[t] = acc / a[0];
    }
    y
}

fn gbn(len: usize, p: f64, seed: u64) -> Vec<f64> {
    generate_gbn(&GbnSignalConfig {
        switching_probability: p,
        amplitude: 1.0,
        length: len,
        sampling_time: 1.0,
        seed,
    })
    .unwrap()
}

fn dataset(u: Vec<f64>, y: Vec<f64>) -> TimeSeriesDataset {
    TimeSeriesDataset::new(1.0, vec![u], vec![y]).unwrap()
}

fn max_rel_coef_err(est: &TransferFunction, b: &[f64], a: &[f64]) -> f64 {
    let mut eb = est.numerator().coeffs().to_vec();
    eb.resize(b.len(), 0.0);
    let mut ea = est.denominator().coeffs().to_vec();
    ea.resize(a.len(), 0.0);
    eb.iter()
        .zip(b)
        .chain(ea.iter().zip(a))
        .filter(|(_, t)| **t != 0.0)
        .map(|(e, t)| ((e - t) / t).abs())
        .fold(0.0, f64::max)
}

const B2: [f64; 3] = [0.0, 0.5, 0.3];
const A2: [f64; 3] = [1.0, -1.5, 0.7];

#[test]
fn first_order_noise_free_recovery() {
    let (b, a) = ([0.0, 0.4], [1.0, -0.8]);
    let u = gbn(2000, 0.2, 1);
    let y = diff_eq(&b, &a, &u);
    let est = estimate_oe(&dataset(u, y), &EstimationOptions::new(ModelOrders::oe(1))).unwrap();
    assert!(est.converged);
    assert!(max_rel_coef_err(est.process_model(), &b, &a) < 1e-6);
}

#[test]
fn second_order_noise_free_recovery() {
    let u = gbn(3000, 0.3, 2);
    let y = diff_eq(&B2, &A2, &u);
    let est = estimate_oe(&dataset(u, y), &EstimationOptions::new(ModelOrders::oe(2))).unwrap();
    let err = max_rel_coef_err(est.process_model(), &B2, &A2);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn zero_output_gives_zero_model() {
    let u = gbn(1000, 0.2, 3);
    let est = estimate_oe(
        &dataset(u.clone(), vec![0.0; 1000]),
        &EstimationOptions::new(ModelOrders::oe(2)),
    )
    .unwrap();
    assert!(est.loss < 1e-20);
    let yh = est.simulate(&[u]).unwrap();
    assert!(yh.iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn unexcited_input_is_rejected() {
    let err = estimate_oe(
        &dataset(vec![1.0; 500], vec![0.5; 500]),
        &EstimationOptions::new(ModelOrders::oe(1)),
    );
    assert!(matches!(err, Err(Error::Identifiability(_))));
    let err = estimate_oe(
        &dataset(vec![0.0; 500], vec![0.0; 500]),
        &EstimationOptions::new(ModelOrders::oe(1)),
    );
    assert!(matches!(err, Err(Error::Identifiability(_))));
}

#[test]
fn short_record_is_rejected() {
    let u = gbn(50, 0.3, 4);
    let y = diff_eq(&B2, &A2, &u);
    let err = estimate_oe(&dataset(u, y), &EstimationOptions::new(ModelOrders::oe(2)));
    assert!(matches!(err, Err(Error::Identifiability(_))));
}

#[test]
fn bj_requires_noise_order() {
    let u = gbn(500, 0.3, 4);
    let y = diff_eq(&B2, &A2, &u);
    assert!(matches!(
        estimate_bj(&dataset(u, y), &EstimationOptions::new(ModelOrders::oe(2))),
        Err(Error::Config(_))
    ));
}

fn noisy_second_order(seed: u64, len: usize, noise: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let u = gbn(len, 0.3, seed);
    let clean = diff_eq(&B2, &A2, &u);
    let e = white_noise(len, seed + 1000);
    let y = clean.iter().zip(&e).map(|(c, v)| c + noise * v).collect();
    (u, y, clean)
}

#[test]
fn reported_loss_matches_recomputed_residuals() {
    let (u, y, _) = noisy_second_order(5, 4000, 0.5);
    let data = dataset(u.clone(), y.clone());
    let est = estimate_oe(&data, &EstimationOptions::new(ModelOrders::oe(2))).unwrap();
    let g = est.process_model();
    let yh = diff_eq(g.numerator().coeffs(), g.denominator().coeffs(), &u);
    let tail: Vec<f64> = (est.first_sample..y.len()).map(|t| y[t] - yh[t]).collect();
    let v = tail.iter().map(|r| r * r).sum::<f64>() / tail.len() as f64;
    assert!(((est.loss - v) / v).abs() < 1e-10);
    assert!(est.loss_history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*est.loss_history.last().unwrap(), est.loss);
}

#[test]
fn noisy_oe_is_close_and_stable() {
    let (u, y, clean) = noisy_second_order(6, 20000, 0.5);
    let data = dataset(u, y).with_clean_outputs(vec![clean]).unwrap();
    let est = estimate_oe(&data, &EstimationOptions::new(ModelOrders::oe(2))).unwrap();
    assert!(est.converged);
    assert!(est.process_model().is_stable());
    assert!(relative_error(&est, &data).unwrap() < 1e-3);
}

#[test]
fn bj_matches_oe_without_noise() {
    let u = gbn(3000, 0.3, 7);
    let y = diff_eq(&B2, &A2, &u);
    let data = dataset(u, y);
    let oe = estimate_oe(&data, &EstimationOptions::new(ModelOrders::oe(2))).unwrap();
    let bj = estimate_bj(&data, &EstimationOptions::new(ModelOrders::bj(2, 1))).unwrap();
    let freqs = crate::tf::logspace(1e-3, 3.0, 40);
    let e = crate::tf::max_relative_response_error(oe.process_model(), bj.process_model(), &freqs);
    assert!(e < 1e-4, "{e}");
}

/// Data with the reference disturbance `(1 − 0.62q⁻¹)/(1 − 0.92q⁻¹) e`.
fn colored_dataset(seed: u64, len: usize) -> TimeSeriesDataset {
    let u = gbn(len, 0.3, seed);
    let clean = diff_eq(&B2, &A2, &u);
    let e = white_noise(len, seed + 77);
    let v = diff_eq(&[0.3, -0.62 * 0.3], &[1.0, -0.92], &e);
    let y = clean.iter().zip(&v).map(|(c, n)| c + n).collect();
    dataset(u, y).with_clean_outputs(vec![clean]).unwrap()
}

#[test]
fn bj_recovers_reference_noise_model() {
    let data = colored_dataset(8, 100_000);
    let est = estimate_bj(&data, &EstimationOptions::new(ModelOrders::bj(2, 1))).unwrap();
    let h = est.noise_model.as_ref().unwrap();
    let pole = qinv_roots(h.denominator().coeffs()).unwrap()[0].re;
    let zero = qinv_roots(h.numerator().coeffs()).unwrap()[0].re;
    assert!((pole - 0.92).abs() < 0.05, "pole {pole}");
    assert!((zero - 0.62).abs() < 0.05, "zero {zero}");
}

#[test]
fn bj_residual_is_whitened_output_error() {
    let data = colored_dataset(9, 20_000);
    let est = estimate_bj(&data, &EstimationOptions::new(ModelOrders::bj(2, 1))).unwrap();
    let g = est.process_model();
    let h = est.noise_model.as_ref().unwrap();
    let u = &data.inputs()[0];
    let y = &data.outputs()[0];
    let yh = diff_eq(g.numerator().coeffs(), g.denominator().coeffs(), u);
    let e_oe: Vec<f64> = y.iter().zip(&yh).map(|(a, b)| a - b).collect();
    let e_pe = diff_eq(h.denominator().coeffs(), h.numerator().coeffs(), &e_oe);
    let from = est.first_sample;
    let v = e_pe[from..].iter().map(|r| r * r).sum::<f64>() / (e_pe.len() - from) as f64;
    assert!(((v - est.loss) / est.loss).abs() < 1e-8);
    assert!(qinv_is_stable(h.numerator().coeffs()) && qinv_is_stable(h.denominator().coeffs()));
}

fn qinv_is_stable(a: &[f64]) -> bool {
    crate::poly::qinv_is_stable(a)
}

#[test]
fn white_disturbance_gives_flat_noise_model() {
    let (u, y, _) = noisy_second_order(10, 40_000, 0.5);
    let est = estimate_bj(
        &dataset(u, y),
        &EstimationOptions::new(ModelOrders::bj(2, 1)),
    )
    .unwrap();
    let h = est.noise_model.unwrap();
    for w in [0.01, 0.3, 1.0, 3.0] {
        let m = h.freq_response(w).norm();
        assert!((m - 1.0).abs() < 0.1, "|H| = {m} at {w}");
    }
}

#[test]
fn miso_channels_are_separated() {
    let u1 = gbn(8000, 0.3, 11);
    let u2 = gbn(8000, 0.1, 12);
    let (b1, a1) = ([0.0, 0.4], [1.0, -0.8]);
    let (b2, a2) = ([0.0, -0.2], [1.0, -0.95]);
    let y: Vec<f64> = diff_eq(&b1, &a1, &u1)
        .iter()
        .zip(diff_eq(&b2, &a2, &u2))
        .map(|(a, b)| a + b)
        .collect();
    let data = TimeSeriesDataset::new(1.0, vec![u1, u2], vec![y]).unwrap();
    let est = estimate_oe(&data, &EstimationOptions::new(ModelOrders::oe(1))).unwrap();
    assert!(max_rel_coef_err(&est.process_models[0], &b1, &a1) < 1e-6);
    assert!(max_rel_coef_err(&est.process_models[1], &b2, &a2) < 1e-6);
}

#[test]
fn user_supplied_start_is_used() {
    let u = gbn(2000, 0.3, 13);
    let y = diff_eq(&B2, &A2, &u);
    let mut opts = EstimationOptions::new(ModelOrders::oe(2));
    let start = TransferFunction::discrete(&B2, &A2, 1.0).unwrap();
    opts.initialization = Initialization::UserSupplied {
        process: vec![start],
        noise: None,
    };
    let est = estimate_oe(&dataset(u, y), &opts).unwrap();
    assert!(est.loss_history[0] < 1e-25);
    let wrong = TransferFunction::discrete(&[0.0, 1.0, 1.0, 1.0], &[1.0, 0.5], 1.0).unwrap();
    opts.initialization = Initialization::UserSupplied {
        process: vec![wrong],
        noise: None,
    };
    assert!(estimate_oe(&dataset([1.0, -1.0].repeat(100), vec![0.0; 200]), &opts).is_err());
}

#[test]
fn relative_error_reference_values() {
    let u = gbn(5000, 0.3, 14);
    let clean = diff_eq(&B2, &A2, &u);
    let data = dataset(u.clone(), clean.clone())
        .with_clean_outputs(vec![clean.clone()])
        .unwrap();
    let model = |g: TransferFunction| ModelEstimate {
        process_models: vec![g],
        noise_model: None,
        loss: 0.0,
        iterations: 0,
        converged: true,
        noise_reflected: false,
        parameter_count: 4,
        first_sample: 2,
        loss_history: vec![],
    };
    let exact = model(TransferFunction::discrete(&B2, &A2, 1.0).unwrap());
    assert!(relative_error(&exact, &data).unwrap() < 1e-20);
    let zero = model(TransferFunction::zero(crate::tf::TimeDomain::Discrete {
        sampling_time: 1.0,
    }));
    assert!((relative_error(&zero, &data).unwrap() - 1.0).abs() < 1e-12);

    // Static gain scaled by (1 + δ): RE = δ².
    let delta = 0.1;
    let stat = dataset(u.clone(), u.iter().map(|v| 2.0 * v).collect());
    let stat = stat
        .clone()
        .with_clean_outputs(vec![stat.outputs()[0].clone()])
        .unwrap();
    let scaled = model(TransferFunction::gain(
        2.0 * (1.0 + delta),
        crate::tf::TimeDomain::Discrete { sampling_time: 1.0 },
    ));
    assert!((relative_error(&scaled, &stat).unwrap() - delta * delta).abs() < 1e-12);

    let flat = dataset(u.clone(), vec![1.0; u.len()]);
    assert!(matches!(
        relative_error(&exact, &flat),
        Err(Error::Domain(_))
    ));
}

#[test]
fn foe_reference_values() {
    let r = [1.0, -2.0, 0.5, 0.25];
    let mse = r.iter().map(|v| v * v).sum::<f64>() / 4.0;
    assert_eq!(foe_value(&r, 0).unwrap(), mse);
    assert!((foe_value(&r, 1).unwrap() - 5.0 / 3.0 * mse).abs() < 1e-15);
    assert!(foe_value(&r, 1).unwrap() >= mse);
    assert_eq!(foe_value(&[0.0; 10], 3).unwrap(), 0.0);
    assert!(matches!(foe_value(&r, 4), Err(Error::Domain(_))));
}

#[test]
fn order_scan_rows_and_tie_break() {
    let u = gbn(3000, 0.3, 15);
    let y = diff_eq(&B2, &A2, &u);
    let data = dataset(u, y);
    let scan = select_order_foe(
        &data,
        1..=3,
        Method::OutputError,
        &EstimationOptions::new(ModelOrders::oe(1)),
    )
    .unwrap();
    assert_eq!(scan.rows.len(), 3);
    assert_eq!(scan.selected, 2);
    assert_eq!(scan.to_csv_string().lines().count(), 4);
}

#[test]
fn fit_report_text_and_residual_dump() {
    let (u, y, clean) = noisy_second_order(16, 3000, 0.2);
    let data = dataset(u, y).with_clean_outputs(vec![clean]).unwrap();
    let est = estimate_oe(&data, &EstimationOptions::new(ModelOrders::oe(2))).unwrap();
    let rep = FitReport::new(&est, &data).unwrap();
    let text = rep.to_key_value();
    assert!(text.lines().any(|l| l.starts_with("relative_error=")));
    assert!(text.lines().any(|l| l.starts_with("foe=")));
    assert!(rep.foe >= rep.mse);
    let mut buf = Vec::new();
    rep.write_residuals_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3001);
}

#[test]
fn method_parsing() {
    assert_eq!("oe".parse::<Method>().unwrap(), Method::OutputError);
    assert_eq!("BJ".parse::<Method>().unwrap(), Method::BoxJenkins);
    assert!("arx".parse::<Method>().is_err());
}

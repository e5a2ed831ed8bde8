use tsid::estimation::{estimate_oe, EstimationOptions, ModelOrders};
use tsid::signals::{derive_seed, generate_gbn, variance, white_noise, GbnSignalConfig};
use tsid::tf::logspace;
use tsid::{TimeSeriesDataset, TransferFunction};

fn plant() -> TransferFunction {
    TransferFunction::discrete(&[0.0, 0.2, 0.1], &[1.0, -1.3, 0.4], 1.0).unwrap()
}

fn response_error(est: &TransferFunction) -> f64 {
    let g = plant();
    let freqs = logspace(1e-3, std::f64::consts::PI, 50);
    let num: f64 = freqs
        .iter()
        .map(|&w| (g.freq_response(w) - est.freq_response(w)).norm_sqr())
        .sum();
    let den: f64 = freqs.iter().map(|&w| g.freq_response(w).norm_sqr()).sum();
    (num / den).sqrt()
}

fn mean_error(len: usize) -> f64 {
    let opts = EstimationOptions::new(ModelOrders::oe(2));
    let mut total = 0.0;
    for seed in 1..=10u64 {
        let u = generate_gbn(&GbnSignalConfig {
            switching_probability: 0.3,
            amplitude: 1.0,
            length: len,
            sampling_time: 1.0,
            seed: derive_seed(seed, 1),
        })
        .unwrap();
        let clean = plant().simulate(&u).unwrap().output;
        let sd = (0.2 * variance(&clean)).sqrt();
        let e = white_noise(len, derive_seed(seed, 2));
        let y = clean.iter().zip(&e).map(|(c, v)| c + sd * v).collect();
        let data = TimeSeriesDataset::new(1.0, vec![u], vec![y]).unwrap();
        total += response_error(estimate_oe(&data, &opts).unwrap().process_model());
    }
    total / 10.0
}

#[test]
fn output_error_improves_with_record_length() {
    let errs: Vec<f64> = [5_000, 20_000, 80_000]
        .iter()
        .map(|&n| mean_error(n))
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    // Quadrupling N should roughly halve the error.
    assert!(errs[2] < 0.7 * errs[0] && errs[2] < 0.05, "{errs:?}");
}

//! `tsid` command-line front end.

mod model_file;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tsid::estimation::{
    estimate, select_order_foe, EstimationOptions, FitReport, Method, ModelEstimate, ModelOrders,
};
use tsid::experiments::{run_experiment, ExperimentConfig};
use tsid::filsub::{identify_filsub, FilSubConfig};
use tsid::par::Execution;
use tsid::signals::{
    derive_seed, generate_disturbance, generate_gbn, reference_disturbance_filter,
    DisturbanceConfig, GbnSignalConfig,
};
use tsid::tf::simulate_miso;
use tsid::zoh::discretize_zoh;
use tsid::{Error, Result, TimeDomain, TimeSeriesDataset, TransferFunction};

use model_file::ModelFile;

#[derive(Parser)]
#[command(name = "tsid", version, about = "Two-time-scale system identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive a model with GBN inputs and write the resulting dataset.
    Simulate {
        /// Model file describing the system (continuous or discrete).
        #[arg(long)]
        system: PathBuf,
        /// GBN signal config (TOML); input i uses a seed derived from `seed`.
        #[arg(long)]
        signal: PathBuf,
        /// Disturbance variance over clean-output variance.
        #[arg(long, default_value_t = 0.0)]
        noise_to_signal: f64,
        #[arg(long, default_value_t = 1)]
        noise_seed: u64,
        /// Shape the disturbance with the reference (1 − 0.62q⁻¹)/(1 − 0.92q⁻¹) filter.
        #[arg(long)]
        colored: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fit a model to a dataset.
    Identify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: CliMethod,
        /// Process order (oe, bj).
        #[arg(long)]
        order: Option<usize>,
        /// Noise-model order (bj, and fil-sub with the bj estimator).
        #[arg(long, default_value_t = 1)]
        noise_order: usize,
        #[arg(long, default_value_t = 1)]
        delay: usize,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Fil-sub settings as TOML; the flags below are used when absent.
        #[arg(long)]
        filsub_config: Option<PathBuf>,
        #[arg(long)]
        fast_cutoff: Option<f64>,
        #[arg(long)]
        slow_cutoff: Option<f64>,
        #[arg(long)]
        fast_order: Option<usize>,
        #[arg(long)]
        slow_order: Option<usize>,
        /// Where to write the model file.
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Where to write the fit report; printed to stdout when absent.
        #[arg(long)]
        report_out: Option<PathBuf>,
        #[arg(long)]
        residuals_out: Option<PathBuf>,
    },
    /// Scan process orders and pick the one with the smallest FOE.
    OrderScan {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = ScanMethod::Oe)]
        method: ScanMethod,
        #[arg(long, default_value_t = 1)]
        min_order: usize,
        #[arg(long)]
        max_order: usize,
        #[arg(long, default_value_t = 1)]
        noise_order: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment and write its report files.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Run seeds one after another on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Generate a GBN input signal.
    Gbn {
        /// Signal config (TOML); overrides the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.06)]
        switching_probability: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 1.0)]
        sampling_time: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMethod {
    Oe,
    Bj,
    Filsub,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanMethod {
    Oe,
    Bj,
}

impl From<ScanMethod> for Method {
    fn from(m: ScanMethod) -> Self {
        match m {
            ScanMethod::Oe => Method::OutputError,
            ScanMethod::Bj => Method::BoxJenkins,
        }
    }
}

pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::Input {
        line,
        message: e.message().to_string(),
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| toml_error(&text, e))
}

fn emit(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn simulate(
    system: &Path,
    signal: &Path,
    noise_to_signal: f64,
    noise_seed: u64,
    colored: bool,
) -> Result<TimeSeriesDataset> {
    let model = ModelFile::load(system)?;
    let sig: GbnSignalConfig = read_toml(signal)?;
    let ts = sig.sampling_time;
    let mut process = model.process_models()?;
    if model.sampling_time.is_none() {
        process = process
            .iter()
            .map(|g| discretize_zoh(g, ts))
            .collect::<Result<_>>()?;
    } else if model.sampling_time != Some(ts) {
        return Err(Error::Config(format!(
            "system sampling time {:?} differs from the signal's {ts}",
            model.sampling_time
        )));
    }
    let inputs = (0..process.len() as u64)
        .map(|i| {
            generate_gbn(&GbnSignalConfig {
                seed: derive_seed(sig.seed, i + 1),
                ..sig
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let clean = simulate_miso(&process, &inputs)?;
    let y = if noise_to_signal > 0.0 {
        let filter = if colored {
            reference_disturbance_filter(ts)
        } else {
            TransferFunction::gain(1.0, TimeDomain::Discrete { sampling_time: ts })
        };
        let v = generate_disturbance(
            &DisturbanceConfig {
                shaping_filter: filter,
                target_noise_to_signal: noise_to_signal,
                seed: noise_seed,
            },
            &clean,
        )?;
        clean.iter().zip(&v).map(|(c, n)| c + n).collect()
    } else {
        clean.clone()
    };
    TimeSeriesDataset::new(ts, inputs, vec![y])?.with_clean_outputs(vec![clean])
}

struct Fitted {
    estimate: ModelEstimate,
    file: ModelFile,
}

#[allow(clippy::too_many_arguments)]
fn identify(
    data: &TimeSeriesDataset,
    method: CliMethod,
    order: Option<usize>,
    noise_order: usize,
    delay: usize,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
    filsub: Option<FilSubConfig>,
) -> Result<Fitted> {
    match method {
        CliMethod::Oe | CliMethod::Bj => {
            let process =
                order.ok_or_else(|| Error::InvalidArgument("--order is required".into()))?;
            let (m, noise) = match method {
                CliMethod::Oe => (Method::OutputError, None),
                _ => (Method::BoxJenkins, Some(noise_order)),
            };
            let mut opts = EstimationOptions::new(ModelOrders {
                process,
                noise,
                delay,
            });
            if let Some(v) = max_iterations {
                opts.max_iterations = v;
            }
            if let Some(v) = tolerance {
                opts.tolerance = v;
            }
            let est = estimate(data, m, &opts)?;
            let file = ModelFile::from_models(&est.process_models, est.noise_model.as_ref());
            Ok(Fitted {
                estimate: est,
                file,
            })
        }
        CliMethod::Filsub => {
            let mut cfg = filsub.ok_or_else(|| {
                Error::InvalidArgument(
                    "fil-sub needs --filsub-config or --fast-cutoff/--slow-cutoff/--fast-order/--slow-order"
                        .into(),
                )
            })?;
            if let Some(v) = max_iterations {
                cfg.max_iterations = v;
            }
            if let Some(v) = tolerance {
                cfg.tolerance = v;
            }
            let m = identify_filsub(data, &cfg)?;
            let file = ModelFile::from_models(&m.combined, None)
                .with_parts(&m.fast.process_models, &m.slow_models);
            Ok(Fitted {
                estimate: m.as_estimate(),
                file,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            system,
            signal,
            noise_to_signal,
            noise_seed,
            colored,
            output,
        } => {
            let data = simulate(&system, &signal, noise_to_signal, noise_seed, colored)?;
            emit(output.as_deref(), &data.to_csv_string())
        }
        Command::Identify {
            data,
            method,
            order,
            noise_order,
            delay,
            max_iterations,
            tolerance,
            filsub_config,
            fast_cutoff,
            slow_cutoff,
            fast_order,
            slow_order,
            model_out,
            report_out,
            residuals_out,
        } => {
            let data = TimeSeriesDataset::load_csv(&data)?;
            let filsub = match (
                filsub_config,
                fast_cutoff,
                slow_cutoff,
                fast_order,
                slow_order,
            ) {
                (Some(p), ..) => Some(read_toml::<FilSubConfig>(&p)?),
                (None, Some(f), Some(s), Some(fo), Some(so)) => {
                    let mut c = FilSubConfig::new(f, s, fo, so);
                    c.noise_order = noise_order;
                    Some(c)
                }
                _ => None,
            };
            let fitted = identify(
                &data,
                method,
                order,
                noise_order,
                delay,
                max_iterations,
                tolerance,
                filsub,
            )?;
            let report = FitReport::new(&fitted.estimate, &data)?;
            if let Some(p) = model_out {
                std::fs::write(p, fitted.file.to_toml())?;
            }
            if let Some(p) = residuals_out {
                report.write_residuals_csv(std::fs::File::create(p)?)?;
            }
            let text = format!(
                "{}iterations={}\nconverged={}\n",
                report.to_key_value(),
                fitted.estimate.iterations,
                fitted.estimate.converged
            );
            emit(report_out.as_deref(), &text)
        }
        Command::OrderScan {
            data,
            method,
            min_order,
            max_order,
            noise_order,
            output,
        } => {
            if min_order == 0 || max_order < min_order {
                return Err(Error::InvalidArgument(format!(
                    "order range {min_order}..={max_order} is empty or starts at 0"
                )));
            }
            let data = TimeSeriesDataset::load_csv(&data)?;
            let m: Method = method.into();
            let noise = (m == Method::BoxJenkins).then_some(noise_order);
            let opts = EstimationOptions::new(ModelOrders {
                process: min_order,
                noise,
                delay: 1,
            });
            let scan = select_order_foe(&data, min_order..=max_order, m, &opts)?;
            emit(output.as_deref(), &scan.to_csv_string())?;
            eprintln!("selected order {}", scan.selected);
            Ok(())
        }
        Command::Experiment {
            config,
            out_dir,
            sequential,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let report = run_experiment(&cfg, exec)?;
            for path in report.write_dir(&out_dir)? {
                eprintln!("wrote {}", path.display());
            }
            emit(None, &report.summary_csv())
        }
        Command::Gbn {
            config,
            switching_probability,
            amplitude,
            length,
            sampling_time,
            seed,
            output,
        } => {
            let cfg = match config {
                Some(p) => read_toml(&p)?,
                None => GbnSignalConfig {
                    switching_probability,
                    amplitude,
                    length,
                    sampling_time,
                    seed,
                },
            };
            let u = generate_gbn(&cfg)?;
            let data = TimeSeriesDataset::new(cfg.sampling_time, vec![u], Vec::new())?;
            emit(output.as_deref(), &data.to_csv_string())
        }
    }
}

/// `error kind=<kind> line=<n> msg="<text>"` on one line.
fn error_line(kind: &str, line: usize, msg: &str) -> String {
    let clean: String = msg
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace(['\n', '\r'], " ");
    format!("error kind={kind} line={line} msg=\"{clean}\"")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            let first = e.to_string();
            let msg = first
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", 0, msg));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = match &e {
                Error::Input { line, .. } => *line,
                _ => 0,
            };
            eprintln!("{}", error_line(e.kind(), line, &e.to_string()));
            ExitCode::FAILURE
        }
    }
}

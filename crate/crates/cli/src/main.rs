//! Command-line front end: parses a TOML experiment configuration, runs
//! path simulations, convergence studies, or moment tables, and writes
//! plot-ready CSV files.
//!
//! Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O
//! error.

mod config;

use clap::{Parser, Subcommand};
use config::FileConfig;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use subdiff::harness::{run_convergence_study, StudyConfig, WeakFunction};
use subdiff::rng::RandomStream;
use subdiff::solver::simulate_time_changed;
use subdiff::timechange::{mittag_leffler, stable_inverse_moment};
use subdiff::Error as CoreError;

#[derive(Debug, Parser)]
#[command(
    name = "subdiff",
    about = "Simulation and convergence studies for SDEs driven by a time-changed Brownian motion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML experiment configuration.
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,

    /// Master seed override (defaults to `run.seed` from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path and write the time change, the approximation, and
    /// (when available) the near-exact solution as CSV series.
    SimulatePath,
    /// Run the Monte Carlo convergence study and write the report and its
    /// slope summary.
    Convergence,
    /// Tabulate analytic inverse-stable moments against Monte Carlo
    /// estimates with their discretization-bias bands.
    Moments,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(CoreError::Domain(_)) | CliError::Core(CoreError::Unsupported(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .init();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = fs::read_to_string(&cli.config).map_err(|e| {
        CliError::Config(format!(
            "cannot read config {}: {e}",
            cli.config.display()
        ))
    })?;
    let cfg = FileConfig::parse(&text)?;
    let seed = cli.seed.unwrap_or(cfg.run.seed);
    fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::SimulatePath => cmd_simulate_path(&cfg, seed, &cli.out, cli.quiet),
        Command::Convergence => cmd_convergence(&cfg, seed, &cli.out, cli.quiet),
        Command::Moments => cmd_moments(&cfg, seed, &cli.out, cli.quiet),
    }
}

fn create_csv(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, CliError> {
    let path = dir.join(name);
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes three step-function series sampled at the jump times of the
/// discretized time change plus the horizon.
fn cmd_simulate_path(
    cfg: &FileConfig,
    seed: u64,
    out: &Path,
    quiet: bool,
) -> Result<(), CliError> {
    let spec = cfg.subordinator_spec()?;
    let preset = cfg.preset()?;
    let y0 = cfg.y0();
    let delta = cfg.delta()?;
    let horizon = cfg.horizon()?;
    let coeffs = preset.coefficients()?;

    let rng = RandomStream::from_seed(seed);
    let path = simulate_time_changed(&spec, &coeffs, &y0, delta, horizon, &[], &rng)?;
    let tc = path.time_change();
    let euler = path.euler();
    let brownian = euler.brownian_component(0);

    let mut times: Vec<f64> = tc
        .jump_times()
        .iter()
        .copied()
        .filter(|&t| t <= horizon)
        .collect();
    times.push(horizon);

    let with_oracle = preset.has_exact_oracle(&y0);
    let mut tc_file = create_csv(out, "time_change.csv")?;
    let mut approx_file = create_csv(out, "approximation.csv")?;
    let mut exact_file = if with_oracle {
        Some(create_csv(out, "near_exact.csv")?)
    } else {
        None
    };

    writeln!(tc_file, "t,e_delta")?;
    writeln!(approx_file, "t,value")?;
    if let Some(f) = exact_file.as_mut() {
        writeln!(f, "t,value")?;
    }
    for &t in &times {
        let level = tc.evaluate_index(t)?;
        writeln!(tc_file, "{t},{}", level as f64 * delta)?;
        writeln!(approx_file, "{t},{}", euler.grid_values()[level][0])?;
        if let Some(f) = exact_file.as_mut() {
            let exact = preset.exact_at(&y0, &brownian, delta, level)?;
            writeln!(f, "{t},{exact}")?;
        }
    }
    tc_file.flush()?;
    approx_file.flush()?;
    if let Some(mut f) = exact_file {
        f.flush()?;
    }

    if !quiet {
        println!(
            "simulate-path: N = {}, {} sample times, outputs in {}",
            tc.stop_index(),
            times.len(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_convergence(cfg: &FileConfig, seed: u64, out: &Path, quiet: bool) -> Result<(), CliError> {
    let study = StudyConfig {
        spec: cfg.subordinator_spec()?,
        preset: cfg.preset()?,
        y0: cfg.y0(),
        horizon: cfg.horizon()?,
        deltas: cfg.deltas()?,
        n_paths: cfg.n_paths()?,
        master_seed: seed,
        weak_function: WeakFunction::Identity,
    };
    study.validate()?;
    let report = run_convergence_study(&study)?;

    let mut rows = create_csv(out, "convergence.csv")?;
    report.write_rows_csv(&mut rows)?;
    rows.flush()?;
    let mut summary = create_csv(out, "summary.csv")?;
    report.write_summary_csv(&mut summary)?;
    summary.flush()?;

    if !quiet {
        match (report.strong_fit, report.weak_fit) {
            (Some(s), Some(w)) => println!(
                "convergence: strong slope {:.4}, weak slope {:.4} ({} paths per delta, {:.2?})",
                s.slope, w.slope, study.n_paths, report.metadata.elapsed
            ),
            _ => println!("convergence: slopes undefined (degenerate errors)"),
        }
        println!("outputs in {}", out.display());
    }
    Ok(())
}

/// Tabulates `E[E_delta(t)^n]` and `E[exp(lambda E_delta(t))]` against the
/// closed forms for the inverse stable subordinator, with the bias band
/// implied by `E(t) - delta <= E_delta(t) <= E(t)`.
fn cmd_moments(cfg: &FileConfig, seed: u64, out: &Path, quiet: bool) -> Result<(), CliError> {
    let spec = cfg.subordinator_spec()?;
    if spec.family() != subdiff::subordinator::Family::Stable
        || spec.scale() != 1.0
        || spec.drift() != 0.0
    {
        return Err(CliError::Config(
            "subordinator: moments requires family = \"stable\" with scale = 1 and drift = 0 \
             (closed-form moments exist only there)"
                .into(),
        ));
    }
    let beta = spec.beta();
    let delta = cfg.delta()?;
    let horizon = cfg.horizon()?;
    let n_paths = cfg.n_paths()?;
    let times = cfg.moment_times()?;
    let orders = &cfg.moments.orders;
    if orders.contains(&0) {
        return Err(CliError::Config(
            "moments.orders: every order must be >= 1".into(),
        ));
    }
    let lambda = cfg.moments.exp_lambda;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CliError::Config(format!(
            "moments.exp_lambda: must be finite and > 0, got {lambda}"
        )));
    }

    // levels[k][i] = E_delta(times[k]) of path i
    let root = RandomStream::from_seed(seed);
    let mut levels = vec![Vec::with_capacity(n_paths); times.len()];
    for i in 0..n_paths {
        let mut rng = root
            .substream(i as u64)
            .substream(subdiff::solver::STREAM_SUBORDINATOR);
        let path = spec.simulate_path_until(delta, horizon, &mut rng)?;
        let tc = subdiff::timechange::build_time_change(path);
        for (k, &t) in times.iter().enumerate() {
            levels[k].push(tc.evaluate(t)?);
        }
    }

    let mut file = create_csv(out, "moments.csv")?;
    writeln!(
        file,
        "t,quantity,parameter,analytic,mc_estimate,mc_stderr,band_low,band_high"
    )?;
    for (k, &t) in times.iter().enumerate() {
        for &n in orders {
            let analytic = stable_inverse_moment(beta, n, t)?;
            let samples: Vec<f64> = levels[k].iter().map(|&e| e.powi(n as i32)).collect();
            let (mean, se) = mean_and_stderr(&samples);
            // E[E^n] - E[E_delta^n] <= n delta E[E^{n-1}]
            let prev = if n == 1 {
                1.0
            } else {
                stable_inverse_moment(beta, n - 1, t)?
            };
            let band_low = analytic - f64::from(n) * delta * prev - 3.0 * se;
            let band_high = analytic + 3.0 * se;
            writeln!(
                file,
                "{t},moment,{n},{analytic},{mean},{se},{band_low},{band_high}"
            )?;
        }
        let analytic = mittag_leffler(beta, lambda * t.powf(beta))?;
        let samples: Vec<f64> = levels[k].iter().map(|&e| (lambda * e).exp()).collect();
        let (mean, se) = mean_and_stderr(&samples);
        // E[exp(lambda E)] - E[exp(lambda E_delta)] <= (1 - exp(-lambda delta)) E[exp(lambda E)]
        let band_low = analytic - (1.0 - (-lambda * delta).exp()) * analytic - 3.0 * se;
        let band_high = analytic + 3.0 * se;
        writeln!(
            file,
            "{t},exp_moment,{lambda},{analytic},{mean},{se},{band_low},{band_high}"
        )?;
    }
    file.flush()?;

    if !quiet {
        println!(
            "moments: {} times x {} orders over {n_paths} paths, outputs in {}",
            times.len(),
            orders.len(),
            out.display()
        );
    }
    Ok(())
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

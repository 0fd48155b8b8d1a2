//! Command-line front end: experiment orchestration, CSV emission, and the
//! inequality verification suite.
//!
//! Exit codes: 0 success, 1 verification violation, 2 invalid configuration
//! or arguments, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spde::config::{load_config, parse_scale, scaled_figure_preset};
use spde::report::{error_table_csv, order_lines_csv, snapshot_csv};
use spde::scheme::{run_path, RecordSpec, SchemeContext, SchemeKind};
use spde::verify::{verify_inequalities, VerifyOptions};
use spde::{fit_order, strong_error_mc, Error, ErrorTable, NoiseSource};

#[derive(Parser)]
#[command(
    name = "spde",
    version,
    about = "Spectral-Galerkin simulation of stochastic reaction-diffusion equations",
    long_about = "Simulates additive space-time-white-noise reaction-diffusion equations on the \
                  unit interval with truncated explicit integrators, estimates strong errors by \
                  coupled Monte Carlo, and verifies the underlying operator inequalities."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled Monte Carlo convergence experiment from a config file.
    Convergence {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; the output is byte-identical for any value.
        #[arg(long)]
        threads: Option<usize>,
        /// Error-table CSV destination; defaults to the config's output key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one path and write spectral snapshots.
    Simulate {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Scheme name: exp_euler, lin_implicit, or crank_nicolson.
        #[arg(long)]
        scheme: String,
        /// Number of time steps; must divide the config's N_ref.
        #[arg(long = "N")]
        n: u64,
        /// Record every this many steps (the initial and final states are
        /// always recorded).
        #[arg(long = "snap-every")]
        snap_every: u64,
        /// Snapshot CSV destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the operator and drift inequalities by dense scans and
    /// sampled fields.
    Verify {
        /// Comma-separated family names; default runs all families.
        #[arg(long)]
        only: Option<String>,
        /// Overrides the resolvent power bound (default 4). Exists so tests
        /// can prove the scan detects violations.
        #[arg(long, hide = true)]
        power_bound: Option<f64>,
    },
    /// Produce the full-scale convergence figure data (hours at scale 1;
    /// use --scale to shrink).
    ReproduceFigure {
        /// Output directory for errors.csv and order_lines.csv.
        #[arg(long)]
        out: PathBuf,
        /// Proportional shrink factor: 1 or 1/D with D a power of two up
        /// to 64.
        #[arg(long, default_value = "1")]
        scale: String,
        /// Overrides the default seed 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; the output is byte-identical for any value.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convergence { config, seed, threads, out } => {
            cmd_convergence(config, seed, threads, out)
        }
        Command::Simulate { config, scheme, n, snap_every, out } => {
            cmd_simulate(config, &scheme, n, snap_every, out)
        }
        Command::Verify { only, power_bound } => cmd_verify(only, power_bound),
        Command::ReproduceFigure { out, scale, seed, threads } => {
            cmd_reproduce_figure(out, &scale, seed, threads)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                Error::InvalidConfig(_) | Error::Fit(_) => ExitCode::from(2),
            }
        }
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Prints one order-fit summary line per scheme; tables too short or flat
/// for a log-log fit get a note instead of an error.
fn print_fit_summary(table: &ErrorTable, schemes: &[SchemeKind]) {
    for &scheme in schemes {
        match fit_order(table, scheme) {
            Ok(fit) => println!(
                "{}: fitted slope {:.4} (observed order {:.4}), r^2 {:.4}",
                scheme.name(),
                fit.slope,
                -fit.slope,
                fit.r_squared
            ),
            Err(e) => println!("{}: order fit unavailable: {e}", scheme.name()),
        }
    }
}

fn cmd_convergence(
    config: PathBuf,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, Error> {
    let mut file = load_config(&config)?;
    if let Some(s) = seed {
        file.experiment.seed = s;
    }
    let out = out.unwrap_or_else(|| file.output.clone());
    let table = strong_error_mc(&file.experiment, threads.unwrap_or_else(default_threads))?;
    std::fs::write(&out, error_table_csv(&table))?;
    print_fit_summary(&table, &file.experiment.schemes);
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(
    config: PathBuf,
    scheme: &str,
    n: u64,
    snap_every: u64,
    out: PathBuf,
) -> Result<ExitCode, Error> {
    let file = load_config(&config)?;
    let cfg = file.experiment;
    cfg.validate()?;
    let kind: SchemeKind = scheme.parse()?;
    if n == 0 || cfg.n_ref % n != 0 {
        return Err(Error::InvalidConfig(format!(
            "N = {n} must divide N_ref = {} so the path couples to the fine noise",
            cfg.n_ref
        )));
    }
    let xi = cfg.initial_field()?;
    let basis = spde::ModeBasis::new(cfg.k_modes, cfg.nu)?;
    let ctx =
        SchemeContext::new(basis, cfg.drift.clone(), cfg.chi, cfg.indicator_variant, cfg.t_horizon)?;
    let src = NoiseSource::new(
        cfg.seed,
        0,
        cfg.k_modes,
        cfg.n_ref,
        cfg.t_horizon,
        cfg.noise_scale,
    )?;
    let record = run_path(&ctx, kind, n, &src, cfg.n_ref / n, &xi, RecordSpec::Every(snap_every))?;
    std::fs::write(&out, snapshot_csv(&record))?;
    println!(
        "wrote {} snapshots x {} modes to {}",
        record.states().len(),
        cfg.k_modes,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(only: Option<String>, power_bound: Option<f64>) -> Result<ExitCode, Error> {
    let opts = VerifyOptions {
        only: only.map(|s| s.split(',').map(|p| p.trim().to_string()).collect()),
        resolvent_power_bound: power_bound.unwrap_or_else(|| VerifyOptions::default().resolvent_power_bound),
    };
    let report = verify_inequalities(&opts)?;
    for e in &report.entries {
        println!(
            "{:24} {}  cases {:>9}  worst margin {:+.3e} (allowed >= {:+.0e}) at {}",
            e.family,
            if e.pass { "pass" } else { "FAIL" },
            e.cases,
            e.worst_margin,
            -e.slack,
            e.worst_case,
        );
    }
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed: at least one inequality violated beyond its slack");
        Ok(ExitCode::from(1))
    }
}

fn cmd_reproduce_figure(
    out: PathBuf,
    scale: &str,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<ExitCode, Error> {
    let f = parse_scale(scale)?;
    let mut cfg = scaled_figure_preset(f);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    std::fs::create_dir_all(&out)?;
    let table = strong_error_mc(&cfg, threads.unwrap_or_else(default_threads))?;
    let errors_path = out.join("errors.csv");
    let lines_path = out.join("order_lines.csv");
    std::fs::write(&errors_path, error_table_csv(&table))?;
    std::fs::write(&lines_path, order_lines_csv(&cfg.n_list))?;
    print_fit_summary(&table, &cfg.schemes);
    println!("wrote {} and {}", errors_path.display(), lines_path.display());
    Ok(ExitCode::SUCCESS)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sixdma::config::{ExperimentConfig, Mode};
use sixdma::experiment::{run_diagnose, run_experiment, run_sweep, DiagnoseMode, SweepParam};
use sixdma::output::num;
use sixdma::CliError;
use sixdma_core::to_db;

#[derive(Parser)]
#[command(name = "sixdma", version, about = "Wideband 6DMA beam coverage experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagMode {
    Ula2d,
    Upa1d,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme in the config and write per-scheme artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat `run` over values of one parameter and collect sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// bandwidth_hz or phi_width_deg
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 1e10,5e10,1e11.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Squint-cancellation certificates over random rotations.
    Diagnose {
        #[arg(long, value_enum)]
        mode: DiagMode,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-squint line array for a single azimuth cut.
    ClosedForm {
        #[arg(long, allow_hyphen_values = true)]
        phi0_deg: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: Option<&PathBuf>, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn print_gains(gains: &[(String, f64)]) {
    for (s, g) in gains {
        println!("{s:<16} {} dB", num(to_db(*g)));
    }
}

fn solver_status(failed: bool) -> Result<(), CliError> {
    if failed {
        Err(CliError::Solver(
            "solver failed: a subproblem solver failed in at least one scheme; see *_solution.json".into(),
        ))
    } else {
        Ok(())
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, seed, out } => {
            let cfg = load(Some(&config), seed, out)?;
            let outcome = run_experiment(&cfg)?;
            print_gains(&outcome.gains);
            solver_status(outcome.solver_failed)
        }
        Command::Sweep { config, param, values, seed, out } => {
            let param = SweepParam::from_name(&param)?;
            let cfg = load(Some(&config), seed, out)?;
            let points = run_sweep(&cfg, param, &values)?;
            for p in &points {
                println!("{} = {}", param.name(), num(p.value));
                print_gains(&p.outcome.gains);
            }
            solver_status(points.iter().any(|p| p.outcome.solver_failed))
        }
        Command::Diagnose { mode, config, count, seed, out } => {
            let cfg = load(config.as_ref(), None, out)?;
            let mode = match mode {
                DiagMode::Ula2d => DiagnoseMode::Ula2d,
                DiagMode::Upa1d => DiagnoseMode::Upa1d,
            };
            let report = run_diagnose(&cfg, mode, count, seed.unwrap_or(cfg.seed))?;
            println!("rotations: {count}");
            println!("min squint metric: {}", num(report.min_metric));
            println!("max |s1.s2|: {}", num(report.max_abs_s1_dot_s2));
            Ok(())
        }
        Command::ClosedForm { phi0_deg, config, out } => {
            let mut cfg = load(config.as_ref(), None, out)?;
            cfg.mode = Mode::ClosedForm;
            cfg.phi_deg_range = [phi0_deg, phi0_deg];
            let outcome = run_experiment(&cfg)?;
            print_gains(&outcome.gains);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sixdma: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

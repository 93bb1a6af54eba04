use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qswitch::config::Config;
use qswitch::oracle_check::{oracle_check, random_points, reference_points};
use qswitch::output::{gnuplot_script, Format, Table};
use qswitch::run::{result_table, spectra_table, trajectory_table, with_pool};
use qswitch::{diagnose, oracle_check as oc, reproduce_table1, run_point, run_sweep, CancelToken};
use qswitch_core::SimulationOptions;

/// Single-photon switch simulator: transmission, switching contrast and
/// spectral distortion of a qutrit-controlled resonator array.
#[derive(Parser)]
#[command(name = "qswitch", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single parameter point.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write the input/outgoing spectra on the standard grid.
        #[arg(long)]
        spectra: Option<PathBuf>,
        /// Debug: write the resampled amplitudes of both branches.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Evaluate a one- or two-axis parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write a gnuplot script next to the output (needs --out).
        #[arg(long)]
        emit_plot: bool,
    },
    /// Reproduce the reference parameter table.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
    /// Compare time-domain transmission with the stationary scattering oracle.
    OracleCheck {
        /// Extra point to check besides the reference rows.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of random parameter sets.
        #[arg(long, default_value_t = 25)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Print derived quantities and validity flags only.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_POINT_FAILURE: u8 = 2;

enum Failure {
    Config(String),
    Points(String),
}

fn emit(table: &Table, common: &Common) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::Config(format!("cannot write output: {e}"));
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            table.write(common.format, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => table.write(common.format, &mut io::stdout().lock()).map_err(io_err),
    }
}

fn write_csv(table: &Table, path: &Path) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::Config(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    table.write_csv(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn load(path: &Path) -> Result<Config, Failure> {
    Config::load(path).map_err(|e| Failure::Config(e.to_string()))
}

fn execute(cmd: Command, cancel: &CancelToken) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, common, spectra, trajectory } => {
            let cfg = load(&config)?;
            let p = cfg.device().map_err(|e| Failure::Config(e.to_string()))?;
            let pulse = cfg.pulse().map_err(|e| Failure::Config(e.to_string()))?;
            let opts = SimulationOptions { keep_trajectories: trajectory.is_some(), ..cfg.run_options() };
            let r = with_pool(common.jobs, || run_point(&p, &pulse, &opts, cancel))
                .map_err(|e| Failure::Points(e.to_string()))?;
            for w in &r.warnings {
                log::warn!("{w}");
            }
            emit(&result_table(&r).with_meta("config_sha256", &cfg.hash), &common)?;
            if let Some(path) = spectra {
                match &r.spectra {
                    Some(s) => write_csv(&spectra_table(s).with_meta("config_sha256", &cfg.hash), &path)?,
                    None => log::warn!("spectra are off; nothing written to {}", path.display()),
                }
            }
            if let (Some(path), Some(t)) = (trajectory, trajectory_table(&r)) {
                write_csv(&t.with_meta("config_sha256", &cfg.hash), &path)?;
            }
            Ok(())
        }
        Command::Sweep { config, common, emit_plot } => {
            let cfg = load(&config)?;
            let spec = cfg.sweep_spec().map_err(|e| Failure::Config(e.to_string()))?;
            if emit_plot && common.out.is_none() {
                return Err(Failure::Config("--emit-plot needs --out".into()));
            }
            let table = with_pool(common.jobs, || run_sweep(&spec, cancel)).map_err(Failure::Config)?;
            let failures = table.failures();
            let out = table
                .to_table()
                .with_meta("command", "sweep")
                .with_meta("config_sha256", &cfg.hash)
                .with_meta("points", spec.len().to_string());
            emit(&out, &common)?;
            if emit_plot {
                let data = common.out.as_deref().expect("checked above");
                let value = spec.outputs[0].name();
                match gnuplot_script(&out, spec.axes.len(), data, value, &data.with_extension("png")) {
                    Some(script) => std::fs::write(data.with_extension("gp"), script)
                        .map_err(|e| Failure::Config(format!("cannot write plot script: {e}")))?,
                    None => log::warn!("no plot for a sweep without axes"),
                }
                if common.format == Format::Json {
                    log::warn!("the gnuplot script expects CSV data");
                }
            }
            if failures > 0 {
                return Err(Failure::Points(format!("{failures} of {} points failed", spec.len())));
            }
            Ok(())
        }
        Command::Table1 { common } => {
            let report = with_pool(common.jobs, || reproduce_table1(&SimulationOptions::default()));
            emit(&report.to_table().with_meta("command", "table1"), &common)?;
            if !report.all_pass() {
                return Err(Failure::Points("reference table not reproduced".into()));
            }
            Ok(())
        }
        Command::OracleCheck { config, random, seed, common } => {
            let mut points = reference_points();
            let mut hash = None;
            if let Some(path) = config {
                let cfg = load(&path)?;
                cfg.device().map_err(|e| Failure::Config(e.to_string()))?;
                hash = Some(cfg.hash.clone());
                points.push(("config".into(), cfg.point));
            }
            points.extend(random_points(random, seed));
            let (rows, failures) = with_pool(common.jobs, || oracle_check(&points, &SimulationOptions::default()));
            let mut table = oc::to_table(&rows, &failures)
                .with_meta("command", "oracle-check")
                .with_meta("seed", seed.to_string());
            if let Some(h) = hash {
                table = table.with_meta("config_sha256", h);
            }
            emit(&table, &common)?;
            let bad = rows.iter().filter(|r| !(r.pass() && r.unitarity_pass() && r.parseval_pass())).count();
            if bad + failures.len() > 0 {
                return Err(Failure::Points(format!("{} checks failed", bad + failures.len())));
            }
            Ok(())
        }
        Command::Diagnose { config, common } => {
            let cfg = load(&config)?;
            let p = cfg.device().map_err(|e| Failure::Config(e.to_string()))?;
            let pulse = cfg.pulse().map_err(|e| Failure::Config(e.to_string()))?;
            let table = diagnose::diagnose(&p, &pulse).map_err(|e| Failure::Config(e.to_string()))?;
            emit(&table.with_meta("config_sha256", &cfg.hash), &common)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let cancel = CancelToken::new();
    let handler = cancel.clone();
    if let Err(e) = ctrlc::set_handler(move || handler.cancel()) {
        log::warn!("cannot install interrupt handler: {e}");
    }

    match execute(cli.command, &cancel) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Points(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_POINT_FAILURE)
        }
    }
}

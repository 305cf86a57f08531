use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use desync_core::experiment::{
    certify_spectra, compare_bounds, emit_plotdata, parse_spec, read_summary, run_sweep,
    sim_config, summary_json, write_bounds_csv, write_output, write_spectra_csv, write_sweep_csv,
    ExperimentSpec, GridPoint, Mode, SweepResult,
};
use desync_core::sim::{write_trace_csv, Simulator};
use desync_core::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_BOUND_VIOLATION: u8 = 3;
const EXIT_TRIAL_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "desync-lab", version, about = "Desynchronization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write sweep.csv and summary.json.
    Sweep(Common),
    /// Compare observed worst-case rounds with the round bounds; writes bounds.csv.
    Bounds(Common),
    /// Certify iteration-matrix spectra over the spectra grid; writes spectra.csv.
    Spectra(Common),
    /// Run one event simulation from the first grid values; writes trace.csv.
    Simulate(Common),
    /// Write gnuplot series and summary.json, from a sweep run or an existing summary.
    Plotdata {
        #[command(flatten)]
        common: Common,
        /// Re-emit from this summary instead of running the sweep.
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `seed_base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trials; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Io { .. }) | None => 1,
            Some(_) => EXIT_VALIDATION,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn load_spec(common: &Common) -> Result<ExperimentSpec, Failure> {
    let path = common.config.as_ref().ok_or_else(|| Failure {
        code: EXIT_VALIDATION,
        error: anyhow::anyhow!("--config <path> is required"),
    })?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|error| Failure {
            code: EXIT_VALIDATION,
            error,
        })?;
    let mut spec = parse_spec(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(|error| Failure {
            code: EXIT_VALIDATION,
            error,
        })?;
    if let Some(seed) = common.seed {
        spec.seed_base = seed;
    }
    if let Some(trials) = common.trials {
        spec.trials = trials;
    }
    if let Some(out) = &common.out {
        spec.output.dir = out.display().to_string();
    }
    spec.validate()?;
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(Failure {
                code: EXIT_VALIDATION,
                error: anyhow::anyhow!("--workers must be at least 1"),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(spec)
}

fn csv_to_file(
    path: &Path,
    write: impl FnOnce(&mut Vec<u8>) -> desync_core::Result<()>,
) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    write_output(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn report_failures(result: &SweepResult) -> Result<(), Failure> {
    for f in &result.failures {
        eprintln!(
            "trial {} of {} n={} C={} alpha={} eps={}: {}",
            f.trial,
            f.point.mode.name(),
            f.point.n,
            f.point.channels,
            f.point.alpha,
            f.point.epsilon,
            f.message
        );
    }
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_TRIAL_FAILURE,
            error: anyhow::anyhow!("{} trial(s) failed", result.failures.len()),
        })
    }
}

fn sweep(common: &Common) -> Result<(), Failure> {
    let spec = load_spec(common)?;
    let result = run_sweep(&spec);
    let dir = PathBuf::from(&spec.output.dir);
    csv_to_file(&dir.join("sweep.csv"), |b| write_sweep_csv(b, &result))?;
    write_output(&dir.join("summary.json"), &summary_json(&result)?)?;
    report_failures(&result)
}

fn bounds(common: &Common) -> Result<(), Failure> {
    let spec = load_spec(common)?;
    let rows = compare_bounds(&spec)?;
    let path = PathBuf::from(&spec.output.dir).join("bounds.csv");
    csv_to_file(&path, |b| write_bounds_csv(b, &rows))?;
    let violated: Vec<_> = rows.iter().filter(|r| r.violated).collect();
    for r in &violated {
        eprintln!(
            "bound violated at n={} alpha={} eps={}: observed {} / {} against {} / {}",
            r.n,
            r.alpha,
            r.epsilon,
            r.max_rounds_desync,
            r.max_rounds_fast,
            r.bound_desync,
            r.bound_fast
        );
    }
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_BOUND_VIOLATION,
            error: anyhow::anyhow!("{} row(s) violate a bound", violated.len()),
        })
    }
}

fn spectra(common: &Common) -> Result<(), Failure> {
    let spec = load_spec(common)?;
    let rows = certify_spectra(&spec)?;
    let path = PathBuf::from(&spec.output.dir).join("spectra.csv");
    csv_to_file(&path, |b| write_spectra_csv(b, &rows))?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} of {} points certified", rows.len() - failed, rows.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_TRIAL_FAILURE,
            error: anyhow::anyhow!("{failed} point(s) not certified"),
        })
    }
}

fn simulate(common: &Common) -> Result<(), Failure> {
    let spec = load_spec(common)?;
    let point = GridPoint {
        mode: Mode::EventSim,
        n: spec.n[0],
        channels: spec.channels[0],
        alpha: spec.alpha[0],
        gamma: Some(spec.gamma[0]),
        epsilon: spec.epsilon[0],
    };
    let cfg = sim_config(&point, &spec, 0);
    let channels = cfg.channels;
    let mut sim = Simulator::new(cfg)?;
    let report = sim.run_until_converged()?;
    let path = PathBuf::from(&spec.output.dir).join("trace.csv");
    csv_to_file(&path, |b| write_trace_csv(b, channels, sim.trace()))?;
    println!(
        "rounds {} objective {:e} time {:.3} s occupancy {:?}",
        report.rounds,
        report.final_objective,
        sim.now_seconds(),
        sim.occupancy()
    );
    if report.converged {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_TRIAL_FAILURE,
            error: anyhow::anyhow!("not converged within sim.max_time"),
        })
    }
}

fn plotdata(common: &Common, from: Option<&Path>) -> Result<(), Failure> {
    let (result, dir) = match from {
        Some(path) => {
            let result = read_summary(path)?;
            let dir = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(&result.spec.output.dir));
            (result, dir)
        }
        None => {
            let spec = load_spec(common)?;
            let dir = PathBuf::from(&spec.output.dir);
            (run_sweep(&spec), dir)
        }
    };
    for path in emit_plotdata(&result, &dir)? {
        println!("wrote {}", path.display());
    }
    report_failures(&result)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Bounds(c) => bounds(c),
        Command::Spectra(c) => spectra(c),
        Command::Simulate(c) => simulate(c),
        Command::Plotdata { common, from } => plotdata(common, from.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

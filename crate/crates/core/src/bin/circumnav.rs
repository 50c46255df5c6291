use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use circumnav::analysis::validate::{run_suite, SuiteConfig};
use circumnav::io::{
    event_rows, read_trajectory, trajectory_rows, write_events, write_trajectory, RunReport, ScenarioFile,
};
use circumnav::simulation::run;

/// Utility-weighted circumnavigation of a target by a team of robots.
#[derive(Debug, Parser)]
#[command(name = "circumnav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv, events.csv and report.txt.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the integrator step, seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the spectral and order certificates on random utility vectors.
    Validate {
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Recompute the run report from a saved trajectory.csv.
    Report {
        csv: PathBuf,
        /// Scenario file whose expectations the log is checked against.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn cmd_run(path: &Path, out: &Path, dt: Option<f64>, seed: Option<u64>) -> anyhow::Result<Outcome> {
    let file = ScenarioFile::load(path)?;
    let mut scenario = file.scenario;
    if let Some(dt) = dt {
        scenario.dt = dt;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let log = run(&scenario).context("simulation failed")?;

    let rows = trajectory_rows(&log);
    let report = RunReport::from_rows(&rows, &file.expectations);
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_trajectory(&out.join("trajectory.csv"), &rows)?;
    write_events(&out.join("events.csv"), &event_rows(&log))?;
    let report_path = out.join("report.txt");
    fs::write(&report_path, format!("{report}\n"))
        .with_context(|| format!("cannot write {}", report_path.display()))?;
    println!("{report}");
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_validate(config: SuiteConfig) -> anyhow::Result<Outcome> {
    let report = run_suite(&config)?;
    println!("{report}");
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_report(csv: &Path, scenario: Option<&Path>) -> anyhow::Result<Outcome> {
    let expectations = match scenario {
        Some(path) => ScenarioFile::load(path)?.expectations,
        None => Vec::new(),
    };
    let rows = read_trajectory(csv)?;
    let report = RunReport::from_rows(&rows, &expectations);
    println!("{report}");
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn dispatch(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Run { scenario, out, dt, seed } => cmd_run(&scenario, &out, dt, seed),
        Command::Validate {
            n_max,
            trials,
            seed,
            inject_fault,
        } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            cmd_validate(SuiteConfig {
                n_max,
                trials,
                seed,
                inject_fault,
                ..SuiteConfig::default()
            })
        }
        Command::Report { csv, scenario } => cmd_report(&csv, scenario.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

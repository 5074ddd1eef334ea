// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line runner. One subcommand per experiment plus `run-all`.
//!
//! Exit status: 0 ok, 1 i/o, 2 bad config or input, 3 numerical failure,
//! 4 infeasible plan. Errors are also printed to stderr as one JSON line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionmux::cli::{run, run_all, Config, Experiment, Scenario, ScenarioFile};
use ionmux::{Error, ErrorClass};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "ionmux", version, about = "Frequency-multiplexed spin control simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration (ions, hardware, cavity); built-in presets if absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for stochastic experiments.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; each scenario writes into `<out>/<name>`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Experiment parameter `key=value`; the value is read as JSON, falling back to a string.
    #[arg(long = "param", short = 'p', value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Scenario name (defaults to the experiment name).
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    StarkSweep(Common),
    LindbladLinewidth(Common),
    RotationSynthesis(Common),
    TonePlan(Common),
    InitFidelity(Common),
    SingleShotReadout(Common),
    FourIonReadout(Common),
    IonSelectiveRabi(Common),
    CoherenceSuite(Common),
    /// Runs every scenario of a scenario file.
    RunAll {
        scenarios: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scenarios run concurrently (never split within one scenario).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Io => 1,
        ErrorClass::Schema => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Infeasible => 4,
    }
}

fn class_name(c: ErrorClass) -> &'static str {
    match c {
        ErrorClass::Io => "io",
        ErrorClass::Schema => "schema",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Infeasible => "infeasible",
    }
}

fn report_error(scenario: Option<&str>, e: &Error) {
    let line = serde_json::json!({ "error_class": class_name(e.class()), "scenario": scenario, "message": e.to_string() });
    eprintln!("{line}");
}

fn load_config(path: Option<&PathBuf>) -> Result<ionmux::cli::Resolved, Error> {
    match path {
        Some(p) => Config::load(p)?.resolve(),
        None => Config::default().resolve(),
    }
}

fn parse_params(items: &[String]) -> Result<Map<String, Value>, Error> {
    let mut map = Map::new();
    for it in items {
        let (k, v) = it.split_once('=').ok_or_else(|| Error::Config(format!("--param '{it}' is not KEY=VALUE")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.to_string(), value);
    }
    Ok(map)
}

fn single(experiment: Experiment, c: &Common) -> Result<(), Error> {
    let cfg = load_config(c.config.as_ref())?;
    let scenario = Scenario {
        parameters: parse_params(&c.params)?,
        seed: c.seed,
        ..Scenario::new(c.name.as_deref().unwrap_or(experiment.name()), experiment)
    };
    let r = run(&scenario, &cfg, &c.out)?;
    for f in &r.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match &cli.command {
        Command::StarkSweep(c) => (Experiment::StarkSweep, c),
        Command::LindbladLinewidth(c) => (Experiment::LindbladLinewidth, c),
        Command::RotationSynthesis(c) => (Experiment::RotationSynthesis, c),
        Command::TonePlan(c) => (Experiment::TonePlan, c),
        Command::InitFidelity(c) => (Experiment::InitFidelity, c),
        Command::SingleShotReadout(c) => (Experiment::SingleShotReadout, c),
        Command::FourIonReadout(c) => (Experiment::FourIonReadout, c),
        Command::IonSelectiveRabi(c) => (Experiment::IonSelectiveRabi, c),
        Command::CoherenceSuite(c) => (Experiment::CoherenceSuite, c),
        Command::RunAll { scenarios, config, out, jobs } => {
            let loaded = std::fs::read_to_string(scenarios)
                .map_err(Error::from)
                .and_then(|t| ScenarioFile::from_json(&t))
                .and_then(|f| load_config(config.as_ref()).map(|c| (f, c)));
            let (file, cfg) = match loaded {
                Ok(v) => v,
                Err(e) => {
                    report_error(None, &e);
                    return ExitCode::from(exit_code(&e));
                }
            };
            let mut worst = 0u8;
            for (s, r) in file.scenarios.iter().zip(run_all(&file.scenarios, &cfg, out, *jobs)) {
                match r {
                    Ok(r) => r.files.iter().for_each(|f| println!("{}", f.display())),
                    Err(e) => {
                        report_error(Some(&s.name), &e);
                        // the first failure decides the exit code
                        if worst == 0 {
                            worst = exit_code(&e);
                        }
                    }
                }
            }
            return ExitCode::from(worst);
        }
    };
    match single(experiment, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(Some(common.name.as_deref().unwrap_or(experiment.name())), &e);
            ExitCode::from(exit_code(&e))
        }
    }
}

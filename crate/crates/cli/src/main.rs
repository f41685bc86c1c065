//! `mqc`: sweeps, ensembles, protocol simulation and validation suites.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 validation
//! failure.

mod args;
mod commands;
mod config;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use args::{Cli, Command, CommonArgs, SUBCOMMANDS};
use commands::Plan;
use output::{PointSummary, Run};

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_FAILURE: i32 = 3;

struct Resolved {
    outdir: PathBuf,
    workers: Option<usize>,
    config: Value,
    plan: Plan,
}

fn merge<T: Serialize + DeserializeOwned>(defaults: T, flags: &T, file: &Map<String, Value>, name: &str) -> Result<T> {
    let layers = [config::to_layer(&defaults), config::command_layer(file, name, SUBCOMMANDS)?, config::to_layer(flags)];
    config::layered(&layers)
}

fn plan_for<T: Serialize + DeserializeOwned>(
    defaults: T,
    flags: &T,
    file: &Map<String, Value>,
    name: &str,
    plan: fn(&T) -> Result<Plan>,
) -> Result<(Value, Plan)> {
    let args = merge(defaults, flags, file, name)?;
    Ok((config::to_layer(&args), plan(&args)?))
}

fn resolve(cli: &Cli) -> Result<Resolved> {
    let file = match &cli.common.config {
        Some(path) => config::load(path)?,
        None => Map::new(),
    };
    let common: CommonArgs =
        config::layered(&[json!({"outdir": "out"}), config::common_layer(&file), config::to_layer(&cli.common)])?;
    let workers = match common.workers {
        Some(w) => Some(w),
        None => config::env_workers()?,
    };
    if workers == Some(0) {
        anyhow::bail!("worker count must be positive");
    }
    let name = cli.command.name();
    let (sub, plan) = match &cli.command {
        Command::TwoLevel(a) => plan_for(args::TwoLevelArgs::defaults(), a, &file, name, commands::two_level)?,
        Command::IsingSweep(a) => plan_for(args::IsingSweepArgs::defaults(), a, &file, name, commands::ising_sweep)?,
        Command::IsingScaling(a) => plan_for(args::IsingScalingArgs::defaults(), a, &file, name, commands::ising_scaling)?,
        Command::HnPhase(a) => plan_for(args::HnPhaseArgs::defaults(), a, &file, name, commands::hn_phase)?,
        Command::HnObc(a) => plan_for(args::HnObcArgs::defaults(), a, &file, name, commands::hn_obc)?,
        Command::HnDisorder(a) => plan_for(args::HnDisorderArgs::defaults(), a, &file, name, commands::hn_disorder)?,
        Command::Protocol(a) => plan_for(args::ProtocolArgs::defaults(), a, &file, name, commands::protocol)?,
        Command::Validate(a) => plan_for(args::ValidateArgs::defaults(), a, &file, name, commands::validate)?,
    };
    let outdir = common.outdir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut config = Map::new();
    config.insert("outdir".into(), json!(outdir));
    if let Some(w) = common.workers {
        config.insert("workers".into(), json!(w));
    }
    config.insert(name.into(), sub);
    Ok(Resolved { outdir, workers, config: Value::Object(config), plan })
}

fn execute(cli: Cli) -> ExitCode {
    let resolved = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(resolved.workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let name = cli.command.name();
    let run = match Run::start(resolved.outdir, name, resolved.config, pool.current_num_threads(), resolved.plan.seeds) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let (code, status, finished) = match pool.install(resolved.plan.job) {
        Ok(out) => {
            if let Some(m) = &out.message {
                eprintln!("{m}");
            }
            let status = match out.code {
                0 => "complete",
                4 => "validation-failed",
                _ => "numerical-failure",
            };
            (out.code, status, run.finish(&out.artifacts, out.points, &out.summary, status, out.code))
        }
        Err(e) => {
            eprintln!("numerical failure: {e:#}");
            let summary = json!({ "error": format!("{e:#}") });
            let finished = run.finish(&[], PointSummary::default(), &summary, "failed", NUMERICAL_FAILURE);
            (NUMERICAL_FAILURE, "failed", finished)
        }
    };
    if let Err(e) = finished {
        eprintln!("writing outputs: {e:#}");
        return ExitCode::from(NUMERICAL_FAILURE as u8);
    }
    println!("{name}: {status}, outputs in {}", run.dir.display());
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { CONFIG_ERROR } else { 0 })
        }
    }
}

//! Command line front end: runs scenarios from config files or built-in
//! names, supports multi-seed batches, and maps failures to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ipsim_core::runner::{batch, run, RunError, RunOptions};
use ipsim_core::scenarios::{build, Scenario, SCENARIO_NAMES};

/// Simulate self-organizing crowds and animal groups.
#[derive(Parser, Debug)]
#[command(name = "ipsim", version, about)]
struct Args {
    /// Scenario config file (TOML), or the name of a built-in scenario.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,

    /// Output directory for frames, metrics, and the manifest.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Seed for a single run.
    #[arg(long, value_name = "N", default_value_t = 0, conflicts_with = "seeds")]
    seed: u64,

    /// Inclusive seed range `A..B` for a batch of runs.
    #[arg(long, value_name = "A..B")]
    seeds: Option<String>,

    /// Override a scenario value along a dotted path, e.g.
    /// `schedule.n_steps=200` or `populations.0.sensing.p=inf`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Write a snapshot every N steps, overriding the scenario stride.
    #[arg(long, value_name = "N")]
    stride: Option<usize>,

    /// List the built-in scenarios and exit.
    #[arg(long)]
    list_scenarios: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(args: Args) -> Result<(), RunError> {
    if args.list_scenarios {
        for name in SCENARIO_NAMES {
            println!("{name}");
        }
        return Ok(());
    }
    let source = args
        .config
        .as_deref()
        .ok_or_else(|| RunError::Config("missing --config (or --list-scenarios)".into()))?;
    let scenario = load_scenario(source)?;
    let overrides = parse_assignments(&args.set)?;

    match &args.seeds {
        Some(range) => {
            let (first, last) = parse_seed_range(range)?;
            let outcome = batch(&scenario, &args.out, first..=last, &overrides, args.stride)?;
            println!(
                "completed {} runs of `{}` under {}",
                outcome.outcomes.len(),
                scenario.name,
                args.out.display()
            );
            if let Some(path) = outcome.aggregate_path {
                println!("aggregate histogram: {}", path.display());
            }
        }
        None => {
            let opts = RunOptions {
                out_dir: args.out.clone(),
                seed: args.seed,
                overrides,
                stride: args.stride,
            };
            let outcome = run(&scenario, &opts)?;
            println!(
                "completed `{}` seed {}: {} frames, manifest {}",
                scenario.name,
                args.seed,
                outcome.manifest.frames.len(),
                outcome.manifest_path.display()
            );
        }
    }
    Ok(())
}

fn load_scenario(source: &str) -> Result<Scenario, RunError> {
    let path = PathBuf::from(source);
    if path.is_file() {
        let text = std::fs::read_to_string(&path)?;
        return Scenario::from_toml(&text).map_err(RunError::from);
    }
    if SCENARIO_NAMES.contains(&source) {
        return build(source).map_err(RunError::from);
    }
    Err(RunError::Config(format!(
        "`{source}` is neither a config file nor a built-in scenario"
    )))
}

fn parse_assignments(raw: &[String]) -> Result<Vec<(String, String)>, RunError> {
    raw.iter()
        .map(|entry| {
            entry
                .split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| RunError::Config(format!("bad --set `{entry}`, expected KEY=VALUE")))
        })
        .collect()
}

fn parse_seed_range(range: &str) -> Result<(u64, u64), RunError> {
    let bad = || RunError::Config(format!("bad --seeds `{range}`, expected A..B (inclusive)"));
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let first: u64 = a.trim().parse().map_err(|_| bad())?;
    let last: u64 = b.trim().trim_start_matches('=').trim().parse().map_err(|_| bad())?;
    if first > last {
        return Err(RunError::Config(format!(
            "empty seed range `{range}`"
        )));
    }
    Ok((first, last))
}

//! Batch runner: executes scenario files, verification suites and lists gadgets.

mod run;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use run::{run, RunContext};
use scenario::{Scenario, Task};
use transience::gadgets::list_gadgets;

#[derive(Parser)]
#[command(name = "transience", version, about = "Scenario runner for transience objectives on countable MDPs")]
struct Cli {
    /// Master seed; overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for Monte Carlo and check batches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { file: PathBuf },
    /// Run a verification suite: conditioned, multiplicative, plastering or transience.
    Verify { suite: String },
    /// List registered gadgets with their parameters.
    ListGadgets {
        #[arg(long)]
        json: bool,
    },
}

enum Status {
    Ok,
    CheckFailed,
}

fn execute(cli: &Cli) -> Result<Status> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global().context("configuring worker threads")?;
    }
    match &cli.command {
        Command::ListGadgets { json } => {
            let gadgets = list_gadgets();
            if *json {
                println!("{}", serde_json::to_string_pretty(&gadgets)?);
            } else {
                for g in gadgets {
                    println!("{:<20} {}", g.name, g.doc);
                    for p in g.params {
                        let default = p.default.map_or("required".to_string(), |d| format!("default {d}"));
                        println!("    {:<10} {:<7} {:<16} {}", p.name, p.ty, default, p.doc);
                    }
                }
            }
            Ok(Status::Ok)
        }
        Command::Verify { suite } => {
            let scenario = Scenario {
                name: format!("verify_{suite}"),
                seed: None,
                mdp: serde_json::json!({ "gadget": "acyclic_chain" }),
                initial: None,
                objective: Default::default(),
                task: Task::Verify { checks: vec![suite.clone()] },
                sweep: None,
                outputs: Default::default(),
            };
            scenario.validate()?;
            finish(&scenario, cli, Path::new("."))
        }
        Command::Run { file } => {
            let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
            let scenario = Scenario::parse(&text, file)?;
            let base = file.parent().unwrap_or(Path::new("."));
            finish(&scenario, cli, base)
        }
    }
}

fn finish(scenario: &Scenario, cli: &Cli, base: &Path) -> Result<Status> {
    let ctx = RunContext {
        seed: cli.seed.or(scenario.seed).unwrap_or(0),
        out_dir: cli.out_dir.clone(),
        base_dir: base.to_path_buf(),
    };
    let outcome = run(scenario, &ctx)?;
    println!("{}", outcome.summary.trim_end());
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(if outcome.passed { Status::Ok } else { Status::CheckFailed })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => {
            eprintln!("one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

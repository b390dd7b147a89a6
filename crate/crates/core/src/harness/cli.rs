//! Command-line front end. Exit codes: 0 success, 1 configuration error,
//! 2 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::{
    aggregate, build_suite, parse_metrics_csv, read_json, read_suite, record_exploration_trace, record_trace, render_table,
    run_suite, write_metrics_csv, write_suite, write_text, EpisodeResult, ExperimentConfig, HarnessError, MetricsTable,
};
use crate::planning::AgentKind;
use crate::scene::Catalog;

#[derive(Debug, Parser)]
#[command(name = "active-search", version, about = "Active object search benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON document with optional noise / planner / env / belief blocks.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an evaluation suite (writes suite.json).
    Suite {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        per_category: usize,
    },
    /// Run agents over a suite (writes results_<agent>.json).
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        suite: PathBuf,
        /// Agent(s): aif, greedy, greedy-infogain, random, oracle.
        #[arg(long = "agent", required = true, num_args = 1..)]
        agents: Vec<AgentKind>,
        /// Concurrent episodes; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Only run the first N records.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Aggregate result files (JSON) or metrics CSVs into metrics.csv and a table.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Extra metrics CSVs shown alongside, e.g. single-environment tables.
        #[arg(long)]
        external: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Record a per-step trace of one episode (writes trace.json).
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        suite: PathBuf,
        #[arg(long, default_value_t = 0)]
        scene_id: usize,
        #[arg(long, default_value = "aif")]
        agent: AgentKind,
        /// Goal-free exploration of the scene instead of the goal episode.
        #[arg(long)]
        explore: bool,
        /// Step budget for exploration traces.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Particles kept per belief snapshot.
        #[arg(long, default_value_t = 200)]
        particles: usize,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, HarnessError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_metrics(inputs: &[PathBuf]) -> Result<MetricsTable, HarnessError> {
    let mut results: Vec<EpisodeResult> = Vec::new();
    let mut rows = Vec::new();
    for p in inputs {
        if p.extension().is_some_and(|e| e == "csv") {
            rows.extend(parse_metrics_csv(p)?.rows);
        } else {
            results.extend(read_json::<Vec<EpisodeResult>>(p)?);
        }
    }
    if !results.is_empty() {
        rows.splice(0..0, aggregate(&results)?.rows);
    }
    if rows.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    Ok(MetricsTable { rows })
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Suite { common, per_category } => {
            let cfg = load_config(common.config.as_deref())?;
            let records = build_suite(&Catalog::default(), &cfg.env, common.seed, per_category)?;
            let path = common.out.join("suite.json");
            write_suite(&path, &records)?;
            println!("wrote {} records to {}", records.len(), path.display());
        }
        Command::Run {
            common,
            suite,
            agents,
            jobs,
            limit,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let mut records = read_suite(&suite)?;
            if let Some(n) = limit {
                records.truncate(n);
            }
            let setup = cfg.agent_setup();
            let mut all = Vec::new();
            for kind in agents {
                let results = run_suite(&records, kind, &setup, common.seed, jobs);
                let path = common.out.join(format!("results_{}.json", kind.name()));
                write_text(&path, &serde_json::to_string_pretty(&results).expect("results serialize"))?;
                println!("wrote {} results to {}", results.len(), path.display());
                all.extend(results);
            }
            print!("{}", render_table(&aggregate(&all)?));
        }
        Command::Report { inputs, external, out } => {
            let mut table = load_metrics(&inputs)?;
            let path = out.join("metrics.csv");
            write_metrics_csv(&path, &table)?;
            for p in &external {
                table.rows.extend(parse_metrics_csv(p)?.rows);
            }
            print!("{}", render_table(&table));
            println!("wrote {}", path.display());
        }
        Command::Trace {
            common,
            suite,
            scene_id,
            agent,
            explore,
            steps,
            particles,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let records = read_suite(&suite)?;
            let record = records
                .iter()
                .find(|r| r.id == scene_id)
                .ok_or_else(|| HarnessError::Config(format!("scene id {scene_id} not in suite")))?;
            let setup = cfg.agent_setup();
            let trace = if explore {
                record_exploration_trace(&record.scene, &setup, common.seed, steps, particles)
            } else {
                record_trace(record, agent, &setup, common.seed, particles)
            };
            let path = common.out.join("trace.json");
            write_text(&path, &serde_json::to_string(&trace).expect("trace serializes"))?;
            println!("wrote {} steps to {}", trace.entries.len(), path.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

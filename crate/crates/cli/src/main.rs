use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;

use cablemap::model::{PactMode, PipelineConfig};
use cablemap::pipeline::{validate_artifacts, InputSet, Pipeline, PipelineError, Stage, StageOutcome};

/// Map traceroute IP links onto submarine cables.
#[derive(Parser)]
#[command(name = "cablemap", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file. Fields left out keep their defaults.
    #[arg(long, global = true, env = "CABLEMAP_CONFIG")]
    config: Option<PathBuf>,
    /// Input file or directory, optionally as `kind=path`. Repeatable.
    #[arg(long = "input", short = 'i', global = true)]
    inputs: Vec<String>,
    /// Artifact directory.
    #[arg(long, short = 'o', global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, short = 'j', global = true, default_value_t = 0)]
    jobs: usize,
    /// Override the config's parallel-cable pruning mode.
    #[arg(long, global = true)]
    pact_mode: Option<PactMode>,
    /// Re-run stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
    /// Check every artifact against its schema after running.
    #[arg(long, global = true)]
    validate_schemas: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Extract IP links from traceroutes.
    Ingest,
    /// Cluster and validate endpoint geolocations.
    Geolocate,
    /// Label links by geolocation confidence and submarine class.
    Classify,
    /// Find candidate cables near each link's endpoints.
    MapGeo,
    /// Resolve endpoint ASNs and cable owner ASNs.
    MapOwner,
    /// Score and prune candidate cables per link.
    Aggregate,
    /// Coverage statistics, failure and operator reports.
    Analyze,
    /// Run every stage in order.
    All,
    /// Run one stage by artifact name (links, clusters, ...).
    Run {
        #[arg(long)]
        stage: Stage,
    },
    /// Score geolocation accuracy across SoL thresholds.
    SweepSol {
        /// Violation margins to try; `none` disables the check.
        #[arg(long, value_delimiter = ',', default_value = "none,0.01,0.05,0.1,0.2")]
        thresholds: Vec<String>,
    },
    /// Validate the artifacts already in the output directory.
    Check,
}

fn load_config(common: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            PipelineConfig::from_toml(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(mode) = common.pact_mode {
        cfg.pact_mode = mode;
    }
    Ok(cfg)
}

fn parse_thresholds(raw: &[String]) -> Result<Vec<Option<f64>>, PipelineError> {
    raw.iter()
        .map(|t| match t.trim() {
            "none" => Ok(None),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|x| (0.0..=1.0).contains(x))
                .map(Some)
                .ok_or_else(|| PipelineError::Usage(format!("bad threshold {v:?}"))),
        })
        .collect()
}

fn report(outcomes: &[StageOutcome]) {
    for o in outcomes {
        let state = if o.skipped { "up to date" } else { "done" };
        info!("{}: {state} ({})", o.stage, o.artifacts.join(", "));
    }
}

fn check(out: &std::path::Path) -> Result<(), PipelineError> {
    let checks = validate_artifacts(out)?;
    let mut bad = vec![];
    for c in &checks {
        if c.errors.is_empty() {
            println!("ok   {} ({} records)", c.file, c.records);
        } else {
            for e in &c.errors {
                println!("FAIL {}: {e}", c.file);
            }
            bad.push(c.file.clone());
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::Schema(bad.join(", ")))
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let common = &cli.common;
    if let Command::Check = cli.command {
        return check(&common.out);
    }
    let cfg = load_config(common)?;
    let mut inputs = InputSet::default();
    for spec in &common.inputs {
        inputs.add(spec)?;
    }
    let pipeline = Pipeline::new(cfg, inputs, &common.out)?.force(common.force);
    let one = |stage| pipeline.run(stage).map(|o| vec![o]);
    let outcomes = match &cli.command {
        Command::Ingest => one(Stage::Links)?,
        Command::Geolocate => one(Stage::Clusters)?,
        Command::Classify => one(Stage::Classes)?,
        Command::MapGeo => one(Stage::GeoCandidates)?,
        Command::MapOwner => one(Stage::OwnerMaps)?,
        Command::Aggregate => one(Stage::Mappings)?,
        Command::Analyze => one(Stage::Reports)?,
        Command::All => pipeline.run_all()?,
        Command::Run { stage } => one(*stage)?,
        Command::SweepSol { thresholds } => {
            let rows = pipeline.sweep_sol(&parse_thresholds(thresholds)?)?;
            for r in rows {
                let label = r.threshold.map_or("none".to_string(), |t| t.to_string());
                println!("{label}\t{:.4}\t{}/{}", r.accuracy, r.correct, r.total);
            }
            vec![]
        }
        Command::Check => unreachable!("handled above"),
    };
    report(&outcomes);
    if common.validate_schemas {
        check(&common.out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.jobs)
        .build_global()
        .context("starting worker pool");
    if let Err(e) = pool {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod experiment;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adm_core::optimizer::{preference_select, run_ga, GaConfig, SelectionThresholds, SimEvaluator};
use adm_core::scenarios::{Preset, PriorityMix};
use adm_core::{Behavior, KnowledgeBase, Priority, Scenario};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use experiment::{aggregate_csv, front_csv, run_cell, sweep_line, CellSpec, Topology, SWEEP_CSV_HEADER};

/// Knowledge base shipped with the binary: one row per density and priority.
const BUNDLED_KB: &str = include_str!("../data/kb-reference.txt");

#[derive(Parser)]
#[command(name = "adm", version, about = "Adaptive broadcast experiments on vehicle convoys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of one scenario and write aggregate metrics.
    Simulate(SimulateArgs),
    /// Run every preset x behavior x source count and write one long CSV.
    Sweep(SweepArgs),
    /// Tune strategies for a preset's density and merge them into a
    /// knowledge-base file.
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Named convoy: urban, suburban, highway or rural.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    preset: Option<Preset>,
    /// Scenario file in key-value format.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// adm, smart or simple.
    #[arg(long, default_value = "adm")]
    behavior: Behavior,
    #[command(flatten)]
    common: RunArgs,
    /// Number of evenly spaced sources. Presets default to 3; scenario files
    /// keep their own sources unless this is given.
    #[arg(long)]
    sources: Option<u32>,
    /// Directory for aggregate.csv (and traces). Without it the aggregate
    /// CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write each replication's trace and per-packet metrics.
    #[arg(long, requires = "out")]
    trace: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Knowledge-base file; defaults to the bundled one.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// equal, hl-only, ml-only or ll-only.
    #[arg(long, default_value = "equal")]
    mix: PriorityMix,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    replications: u32,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "preset", value_delimiter = ',', default_value = "suburban")]
    presets: Vec<Preset>,
    #[arg(long = "behaviors", value_delimiter = ',', default_value = "adm,smart,simple")]
    behaviors: Vec<Behavior>,
    #[arg(long = "sources", value_delimiter = ',', default_value = "3,10,20,30")]
    sources: Vec<u32>,
    #[command(flatten)]
    common: RunArgs,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    preset: Preset,
    /// GA configuration file (key-value format).
    #[arg(long)]
    ga: Option<PathBuf>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Knowledge-base file to merge the selected rows into (created if
    /// missing).
    #[arg(long)]
    out: PathBuf,
    /// Also write the final Pareto front as CSV.
    #[arg(long)]
    front: Option<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    hl_min_fr: f64,
    #[arg(long, default_value_t = 0.999)]
    ml_min_fr: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_kb(path: Option<&Path>) -> Result<KnowledgeBase> {
    match path {
        Some(p) => KnowledgeBase::parse(&read(p)?).with_context(|| format!("knowledge base {}", p.display())),
        None => Ok(KnowledgeBase::parse(BUNDLED_KB).expect("bundled knowledge base is valid")),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (topology, sources) = match (&args.preset, &args.scenario) {
        (Some(p), _) => (Topology::Preset(*p), Some(args.sources.unwrap_or(3))),
        (None, Some(path)) => {
            let s = Scenario::parse(&read(path)?).with_context(|| format!("scenario {}", path.display()))?;
            (Topology::File(s), args.sources)
        }
        (None, None) => bail!("one of --preset or --scenario is required"),
    };
    let kb = load_kb(args.common.kb.as_deref())?;
    let spec = CellSpec {
        topology,
        behavior: args.behavior,
        sources,
        mix: args.common.mix,
        replications: args.common.replications,
        seed: args.common.seed,
    };
    let result = run_cell(&spec, &kb, args.trace)?;
    let csv = aggregate_csv(&result.rows());
    let Some(dir) = args.out.as_deref() else {
        print!("{csv}");
        return Ok(());
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("aggregate.csv"), &csv)?;
    for (i, (trace, analysis)) in result.traces.iter().zip(&result.analyses).enumerate() {
        write(&dir.join(format!("trace-{i}.csv")), &trace.to_csv_string())?;
        let mut packets = Vec::new();
        analysis.write_packet_csv(&mut packets)?;
        write(&dir.join(format!("packets-{i}.csv")), &String::from_utf8(packets)?)?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let kb = load_kb(args.common.kb.as_deref())?;
    let mut csv = format!("{SWEEP_CSV_HEADER},{}\n", experiment::AGGREGATE_CSV_HEADER);
    for &preset in &args.presets {
        for &behavior in &args.behaviors {
            for &sources in &args.sources {
                log::info!("{preset} {behavior} {sources} sources");
                let spec = CellSpec {
                    topology: Topology::Preset(preset),
                    behavior,
                    sources: Some(sources),
                    mix: args.common.mix,
                    replications: args.common.replications,
                    seed: args.common.seed,
                };
                let rows = run_cell(&spec, &kb, false)?.rows();
                // the per-priority split only matters for the adaptive protocol
                for row in rows.iter().filter(|r| behavior == Behavior::Adm || r.priority.is_none()) {
                    csv.push_str(&sweep_line(preset.as_str(), behavior, row, sources));
                }
            }
        }
    }
    emit(args.out.as_deref(), &csv)
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let mut config = match &args.ga {
        Some(p) => GaConfig::parse(&read(p)?).with_context(|| format!("GA config {}", p.display()))?,
        None => GaConfig::default(),
    };
    config.population = args.population.unwrap_or(config.population);
    config.generations = args.generations.unwrap_or(config.generations);
    config.replications = args.replications.unwrap_or(config.replications);
    config.seed = args.seed.unwrap_or(config.seed);
    config.validate().context("GA config")?;
    let thresholds = SelectionThresholds { hl_min_fr: args.hl_min_fr, ml_min_fr: args.ml_min_fr };

    let mut kb = if args.out.exists() { load_kb(Some(&args.out))? } else { KnowledgeBase::new() };
    let front = run_ga(&SimEvaluator { preset: args.preset }, &config)?;
    if let Some(path) = &args.front {
        write(path, &front_csv(&front))?;
    }
    let density = args.preset.density();
    for p in Priority::ALL {
        let s = preference_select(&front, p, &thresholds)?;
        eprintln!("{density} {p}: {s}");
        kb.insert(density, p, s);
    }
    write(&args.out, &kb.to_text())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("ADM_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().with_context(|| format!("ADM_THREADS=`{value}` is not a thread count"))?;
    if n == 0 {
        bail!("ADM_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Optimize(a) => optimize(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

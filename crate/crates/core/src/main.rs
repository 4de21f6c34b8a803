use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sccrfmq::harness::{
    load_config, run_experiment_detailed, write_colormap_csv, write_colormap_ppm, write_outputs,
    write_snapshot_csv, ExperimentConfig, GameKind, MetricSeries,
};

#[derive(Parser)]
#[command(
    name = "sccrfmq",
    version,
    about = "Cooperative continuous-action learners and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result files.
    Run(RunArgs),
    /// Write the expected-reward map of a single-state game.
    Colormap(ColormapArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cg, pscg, boat or custom.
    #[arg(long)]
    game: Option<String>,
    /// Comma-separated learner per agent (scc_rfmq, rfmq, smc, smc_rfmq, cala).
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per state (per dimension for a joint SMC controller).
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other setting, e.g. `--param alpha=0.3`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Also dump the final learner state of run 0.
    #[arg(long)]
    snapshot: bool,
}

#[derive(clap::Args)]
struct ColormapArgs {
    #[arg(long)]
    game: String,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    /// `.ppm` writes an image, anything else CSV.
    #[arg(long)]
    out: PathBuf,
    /// Custom grid, 9 comma-separated row-major values.
    #[arg(long)]
    grid: Option<String>,
}

fn overrides(args: &RunArgs) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    };
    push("game", args.game.clone());
    push("algo", args.algo.clone());
    push("agents", args.agents.map(|v| v.to_string()));
    push("episodes", args.episodes.map(|v| v.to_string()));
    push("runs", args.runs.map(|v| v.to_string()));
    push("seed", args.seed.map(|v| v.to_string()));
    push("samples", args.samples.map(|v| v.to_string()));
    push("out", args.out.as_ref().map(|p| p.display().to_string()));
    push("threads", args.threads.map(|v| v.to_string()));
    for p in &args.params {
        let (k, v) = p
            .split_once('=')
            .with_context(|| format!("--param expects KEY=VALUE, got '{p}'"))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn summarize(cfg: &ExperimentConfig, series: &[MetricSeries]) -> anyhow::Result<()> {
    let finals = series
        .iter()
        .map(MetricSeries::final_average)
        .collect::<Result<Vec<_>, _>>()?;
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let _ = writeln!(
        std::io::stdout(),
        "{} {} runs x {} episodes: final cumulative average {mean:.4}",
        cfg.game,
        cfg.runs,
        cfg.episodes
    );
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let cfg = load_config(args.config.as_deref(), &overrides(&args)?)?;
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let outputs = run_experiment_detailed(&cfg, args.snapshot)?;
    let series: Vec<MetricSeries> = outputs.iter().map(|o| o.series.clone()).collect();
    let paths = write_outputs(&out_dir, &cfg, &series)?;
    if args.snapshot {
        for (i, rows) in outputs[0].snapshots.iter().enumerate() {
            write_snapshot_csv(&out_dir.join(format!("snapshot_agent{i}.csv")), rows)?;
        }
    }
    summarize(&cfg, &series)?;
    let _ = writeln!(
        std::io::stdout(),
        "results in {}",
        paths.aggregate.parent().unwrap_or(&out_dir).display()
    );
    Ok(())
}

fn colormap(args: ColormapArgs) -> anyhow::Result<()> {
    let game: GameKind = args.game.parse()?;
    if !game.is_matrix() {
        bail!("colormap needs a single-state game, got '{game}'");
    }
    let mut pairs = vec![("game".to_string(), game.to_string())];
    if let Some(g) = args.grid {
        pairs.push(("grid".to_string(), g));
    }
    let cfg = load_config(None, &pairs)?;
    let spec = sccrfmq::harness::matrix_spec(&cfg)?;
    let is_ppm = args
        .out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    if is_ppm {
        write_colormap_ppm(&args.out, &spec, args.resolution)?;
    } else {
        write_colormap_csv(&args.out, &spec, args.resolution)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Colormap(a) => colormap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

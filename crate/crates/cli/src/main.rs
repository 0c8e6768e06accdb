use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dscfq_cli::config::{default_config, load_config, validate_config, Experiment, ExperimentConfig};
use dscfq_cli::experiments::run_experiment;
use dscfq_cli::{CliError, Result};
use dscfq_core::analysis::NbarFormula;
use dscfq_core::engine::AlphaPolicy;
use dscfq_core::sched::SchedulerKind;
use dscfq_core::time::Tick;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Run,
    SweepAlpha,
    Adaptive,
    Compare,
    Analyze,
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::SweepAlpha => "sweep_alpha",
            Command::Adaptive => "adaptive",
            Command::Compare => "compare",
            Command::Analyze => "analyze",
            Command::Validate => "validate",
        }
    }
}

/// Distributed self-clocked fair queueing simulator.
#[derive(Debug, Parser)]
#[command(name = "dscfq", version)]
struct Args {
    command: Command,
    /// JSON experiment config; the bundled ten-agent network when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Simulated horizon in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Stop after this many departures.
    #[arg(long)]
    departures: Option<u64>,
    #[arg(long)]
    algo: Option<SchedulerKind>,
    /// Fixed scaling factor, or `adaptive`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    /// Comma-separated fairness windows (compare only).
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
    #[arg(long)]
    nbar_formula: Option<NbarFormula>,
    /// Trace CSV to check (validate only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output directory. Overrides DSCFQ_OUT_DIR and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 if a DSCFQ run violates a bound.
    #[arg(long)]
    strict: bool,
}

fn build_config(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => default_config(),
    };
    let adaptive = args.alpha.as_deref() == Some("adaptive");
    let name = match args.command {
        Command::Run if adaptive => "adaptive",
        c => c.name(),
    };
    if cfg.experiment.name() != name || args.config.is_none() {
        cfg.experiment = Experiment::default_for(name, args.trace.clone())?;
    }
    if let (Experiment::Validate { trace }, Some(t)) = (&mut cfg.experiment, &args.trace) {
        *trace = t.clone();
    }
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = s.clone();
    }
    cfg.scenario.seed = cfg.seeds.first().copied().unwrap_or_default();
    if let Some(d) = args.duration {
        if !(d.is_finite() && d > 0.0) {
            return Err(CliError::config("--duration", format!("must be positive, got {d}")));
        }
        cfg.scenario.duration = Tick::from_secs_f64(d);
        cfg.scenario.max_departures = None;
    }
    if let Some(n) = args.departures {
        cfg.scenario.max_departures = Some(n);
    }
    if let Some(k) = args.algo {
        cfg.scenario.scheduler = k;
    }
    match args.alpha.as_deref() {
        None | Some("adaptive") => {}
        Some(a) => {
            let alpha: f64 = a
                .parse()
                .map_err(|_| CliError::config("--alpha", format!("expected a number or `adaptive`, got `{a}`")))?;
            cfg.scenario.alpha_policy = AlphaPolicy::Fixed { alpha };
        }
    }
    if let Some(m) = args.m {
        cfg.scenario.m = m;
    }
    if let (Experiment::Compare { windows, .. }, Some(w)) = (&mut cfg.experiment, &args.windows) {
        *windows = w.clone();
    }
    if let Some(f) = args.nbar_formula {
        cfg.nbar_formula = f;
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn out_dir(args: &Args, cfg: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("DSCFQ_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.name()))
}

fn run(args: &Args) -> Result<()> {
    let cfg = build_config(args)?;
    let dir = out_dir(args, &cfg);
    let outcome = run_experiment(&cfg, &dir)?;
    println!(
        "{}: wrote {} files to {}",
        cfg.experiment.name(),
        outcome.manifest.files.len(),
        dir.display()
    );
    if outcome.enforced_violations > 0 {
        eprintln!("{} bound violations", outcome.enforced_violations);
        if args.strict {
            return Err(CliError::Violations(outcome.enforced_violations));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

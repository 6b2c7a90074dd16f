use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, warn};

use pizzaquad::model::ModelWeights;
use pizzaquad::pipeline::cache::{train_or_load, write_atomic, TrainedModel};
use pizzaquad::pipeline::run::{analysis_options, history_table, spectrum_table, write_seed_outputs};
use pizzaquad::pipeline::{
    analyze, bound_table, emit_plot_series, run_pipeline, AnalysisReport, Figure, PeriodSelection, PipelineConfig,
    VariantSelection,
};
use pizzaquad::{Error, Result};

#[derive(Parser)]
#[command(name = "pizzaquad", version, about = "Train modular-addition transformers and bound their MLP as a quadrature scheme")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or fetch from cache) one model per seed.
    Train,
    /// Fourier analysis and the full structured report.
    Analyze,
    /// Quadrature bound table.
    Bound,
    /// Regressions, identity and secondary fits, invariant flags.
    Validate,
    /// Plot-series files.
    Report,
    /// Every stage plus the multi-seed summary.
    All,
}

#[derive(Args)]
struct Common {
    /// JSON pipeline config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "seed", global = true)]
    seeds: Vec<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    variant: Option<VariantSelection>,
    #[arg(long, value_enum, global = true)]
    period: Option<PeriodSelection>,
    /// Analyse this weights file instead of training.
    #[arg(long, global = true)]
    load_weights: Option<PathBuf>,
    /// Restrict `report` to one figure.
    #[arg(long, global = true)]
    figure: Option<String>,
}

impl Common {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if !self.seeds.is_empty() {
            c.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            c.out_dir = out.clone();
        }
        if let Some(v) = self.variant {
            c.variant = v;
        }
        if let Some(p) = self.period {
            c.period = p;
        }
        c.validate()?;
        Ok(c)
    }
}

/// The models to work on: one loaded file, or one per configured seed.
fn models(common: &Common, config: &PipelineConfig) -> Result<Vec<TrainedModel>> {
    if let Some(path) = &common.load_weights {
        let weights = ModelWeights::load(path)?;
        return Ok(vec![TrainedModel {
            weights,
            history: None,
            trained: false,
        }]);
    }
    config
        .seeds
        .iter()
        .map(|&s| train_or_load(&config.model.with_seed(s), &config.cache_dir()))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    println!("{}", path.display());
    Ok(())
}

fn hard_failure(report: &AnalysisReport) -> bool {
    let bad = !report.flags.hard_invariants_hold();
    if bad {
        error!("seed {}: hard invariant violated: {:?}", report.config.seed, report.flags);
    } else if !report.flags.good_model() {
        warn!("seed {}: structural criteria not met: {:?}", report.config.seed, report.flags);
    }
    bad
}

fn run(cli: Cli) -> Result<bool> {
    let config = cli.common.pipeline_config()?;
    let figure: Option<Figure> = cli.common.figure.as_deref().map(str::parse).transpose()?;
    if let Command::All = cli.command {
        if cli.common.load_weights.is_some() {
            return Err(Error::InvalidConfig("--load-weights is not used by `all`".into()));
        }
        let outcome = run_pipeline(&config)?;
        for s in &outcome.seeds {
            println!("{}", s.dir.display());
        }
        for f in &outcome.hard_failures {
            error!("{f}");
        }
        return Ok(outcome.success());
    }
    let mut ok = true;
    for model in models(&cli.common, &config)? {
        let dir = config.seed_dir(model.weights.config.seed);
        if let Command::Train = cli.command {
            write(&dir.join("weights.json"), &model.weights.to_json()?)?;
            if let Some(h) = &model.history {
                write(&dir.join("history.tsv"), &history_table(h))?;
            }
            continue;
        }
        let report = analyze(&model.weights, &analysis_options(&config))?;
        ok &= !hard_failure(&report);
        match cli.command {
            Command::Analyze => {
                write_seed_outputs(&dir, &model, &report, &config.formats)?;
                println!("{}", dir.display());
            }
            Command::Bound => write(&dir.join("bounds.tsv"), &bound_table(&report))?,
            Command::Validate => {
                let v = serde_json::json!({
                    "accuracy": report.accuracy,
                    "regressions": report.regressions,
                    "identity": report.identity,
                    "identity_reconstruction_r2": report.identity_reconstruction_r2,
                    "secondary_fit": report.secondary_fit,
                    "flags": report.flags,
                    "good_model": report.flags.good_model(),
                });
                write(&dir.join("validation.json"), &serde_json::to_string_pretty(&v)?)?;
                write(&dir.join("spectrum.tsv"), &spectrum_table(&model.weights)?)?;
            }
            Command::Report => {
                let figures = figure.map_or_else(|| Figure::ALL.to_vec(), |f| vec![f]);
                for f in figures {
                    for path in emit_plot_series(&report, f, &dir.join("plots"))? {
                        println!("{}", path.display());
                    }
                }
            }
            Command::Train | Command::All => unreachable!(),
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::cache::{train_or_load, write_atomic, TrainedModel};
use super::config::{PipelineConfig, ReportFormat};
use super::plots::{bound_table, emit_plot_series, Figure};
use super::report::{analyze, AnalysisOptions, AnalysisReport};
use crate::error::{Error, Result};
use crate::fourier::{neuron_spectra, ov_token_table, write_spectrum_table};
use crate::model::{ModelWeights, TrainHistory};
use crate::validation::{multi_seed_summary, MultiSeedSummary};

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub report: AnalysisReport,
    pub trained: bool,
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub seeds: Vec<SeedOutcome>,
    pub summary: MultiSeedSummary,
    /// Violated mathematical invariants; any entry means a nonzero exit.
    pub hard_failures: Vec<String>,
    /// Statistical criteria that did not hold for some seed.
    pub warnings: Vec<String>,
}

impl PipelineOutcome {
    pub fn success(&self) -> bool {
        self.hard_failures.is_empty()
    }
}

pub fn analysis_options(config: &PipelineConfig) -> AnalysisOptions {
    AnalysisOptions {
        variants: config.variant.variants(),
        periods: config.period.periods(),
    }
}

pub fn history_table(history: &TrainHistory) -> String {
    let mut out = String::from("epoch\ttrain_loss\ttrain_acc\ttest_loss\ttest_acc\n");
    for e in &history.epochs {
        writeln!(
            out,
            "{}\t{:.9e}\t{:.6}\t{:.9e}\t{:.6}",
            e.epoch, e.train_loss, e.train_acc, e.test_loss, e.test_acc
        )
        .unwrap();
    }
    out
}

pub fn spectrum_table(weights: &ModelWeights) -> Result<String> {
    let spectra = neuron_spectra(&ov_token_table(weights), weights);
    let mut buf = Vec::new();
    write_spectrum_table(&spectra, &mut buf).map_err(|e| Error::io("<spectrum>", e))?;
    Ok(String::from_utf8(buf).expect("ascii table"))
}

/// Writes every per-seed artifact for an analysed model.
pub fn write_seed_outputs(
    dir: &Path,
    model: &TrainedModel,
    report: &AnalysisReport,
    formats: &[ReportFormat],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("weights.json"), model.weights.to_json()?.as_bytes())?;
    if let Some(h) = &model.history {
        write_atomic(&dir.join("history.tsv"), history_table(h).as_bytes())?;
    }
    if formats.contains(&ReportFormat::Structured) {
        write_atomic(&dir.join("report.json"), serde_json::to_string_pretty(report)?.as_bytes())?;
    }
    if formats.contains(&ReportFormat::Tabular) {
        write_atomic(&dir.join("bounds.tsv"), bound_table(report).as_bytes())?;
        write_atomic(&dir.join("spectrum.tsv"), spectrum_table(&model.weights)?.as_bytes())?;
        let plots = dir.join("plots");
        for figure in Figure::ALL {
            match emit_plot_series(report, figure, &plots) {
                Ok(_) => {}
                Err(Error::MissingData(what)) => warn!("no data for {what}"),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn process_seed(config: &PipelineConfig, seed: u64) -> Result<SeedOutcome> {
    let model_config = config.model.with_seed(seed);
    let model = train_or_load(&model_config, &config.cache_dir())?;
    let report = analyze(&model.weights, &analysis_options(config))?;
    let dir = config.seed_dir(seed);
    write_seed_outputs(&dir, &model, &report, &config.formats)?;
    info!(
        "seed {seed}: accuracy {:.4}, key frequencies {:?}",
        report.accuracy, report.key_freqs
    );
    Ok(SeedOutcome {
        seed,
        report,
        trained: model.trained,
        dir,
    })
}

pub fn summary_table(summary: &MultiSeedSummary) -> String {
    let mut out = String::from(
        "seed\taccuracy\tkey_freqs\tgood\tfreq_match\tphase_r2\tuniform\tcomponent_errors\tmedian_rel_bound\tfrac_below_baseline\n",
    );
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    for s in &summary.seeds {
        writeln!(
            out,
            "{}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.seed,
            s.accuracy,
            s.key_freq_count,
            s.good_model as u8,
            s.frequencies_match as u8,
            s.phase_r2 as u8,
            s.uniformity as u8,
            s.component_errors as u8,
            opt(s.median_relative_bound),
            opt(s.fraction_below_baseline),
        )
        .unwrap();
    }
    out
}

fn check(outcome: &SeedOutcome, hard: &mut Vec<String>, warnings: &mut Vec<String>) {
    let (seed, r) = (outcome.seed, &outcome.report);
    if !r.flags.soundness {
        hard.push(format!("seed {seed}: a brute-force error exceeds its bound"));
    }
    if r.flags.decomposition_max_dev > super::report::DECOMPOSITION_TOL {
        hard.push(format!(
            "seed {seed}: logit decomposition off by {:.3e}",
            r.flags.decomposition_max_dev
        ));
    }
    if r.accuracy < 1.0 {
        warnings.push(format!("seed {seed}: accuracy {:.4} below 1", r.accuracy));
    }
    if !r.flags.good_model() {
        warnings.push(format!("seed {seed}: not a good model ({:?})", r.flags));
    }
}

/// Train (or load), analyse and report every seed, then summarize.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut seeds = Vec::with_capacity(config.seeds.len());
    for chunk in config.seeds.chunks(workers) {
        let results: Vec<Result<SeedOutcome>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| scope.spawn(move || process_seed(config, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("seed worker panicked"))
                .collect()
        });
        for r in results {
            seeds.push(r?);
        }
    }
    let (mut hard_failures, mut warnings) = (Vec::new(), Vec::new());
    for s in &seeds {
        check(s, &mut hard_failures, &mut warnings);
    }
    for w in &warnings {
        warn!("{w}");
    }
    let reports: Vec<AnalysisReport> = seeds.iter().map(|s| s.report.clone()).collect();
    let summary = multi_seed_summary(&reports)?;
    if config.formats.contains(&ReportFormat::Structured) {
        write_atomic(
            &config.out_dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?.as_bytes(),
        )?;
    }
    if config.formats.contains(&ReportFormat::Tabular) {
        write_atomic(&config.out_dir.join("summary.tsv"), summary_table(&summary).as_bytes())?;
    }
    Ok(PipelineOutcome {
        seeds,
        summary,
        hard_failures,
        warnings,
    })
}

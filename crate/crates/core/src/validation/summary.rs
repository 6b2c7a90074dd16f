use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::report::{AnalysisReport, COMPONENT_ERROR};
use crate::quadrature::{Period, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub accuracy: f64,
    pub key_freq_count: usize,
    pub good_model: bool,
    pub frequencies_match: bool,
    pub phase_r2: bool,
    pub uniformity: bool,
    pub component_errors: bool,
    /// Median abs full-period relative bound over this seed's passing frequencies.
    pub median_relative_bound: Option<f64>,
    /// Share of those bounds below the naive baseline (relative bound < 1).
    pub fraction_below_baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedSummary {
    pub seeds: Vec<SeedSummary>,
    pub fraction_perfect_accuracy: f64,
    pub fraction_good: f64,
    pub fraction_frequencies_match: f64,
    pub fraction_phase_r2: f64,
    pub fraction_uniformity: f64,
    pub fraction_component_errors: f64,
    /// Number of seeds per key-frequency count.
    pub key_count_histogram: BTreeMap<usize, usize>,
    /// Over all (model, frequency) pairs whose four component errors pass.
    pub median_relative_bound: Option<f64>,
    pub fraction_below_baseline: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

fn below_one(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().filter(|&&x| x < 1.0).count() as f64 / xs.len() as f64)
}

/// Relative abs full-period bounds of the frequencies whose component errors pass.
fn passing_bounds(report: &AnalysisReport) -> Vec<f64> {
    report
        .frequencies
        .iter()
        .filter(|f| f.component_errors.is_some_and(|e| e.iter().all(|&x| x < COMPONENT_ERROR)))
        .filter_map(|f| f.bound(Variant::Abs, Period::Full)?.relative_total)
        .collect()
}

pub fn seed_summary(report: &AnalysisReport) -> SeedSummary {
    let bounds = passing_bounds(report);
    SeedSummary {
        seed: report.config.seed,
        accuracy: report.accuracy,
        key_freq_count: report.key_freqs.len(),
        good_model: report.flags.good_model(),
        frequencies_match: report.flags.frequencies_match,
        phase_r2: report.flags.phase_r2,
        uniformity: report.flags.uniformity,
        component_errors: report.flags.component_errors,
        median_relative_bound: median(bounds.clone()),
        fraction_below_baseline: below_one(&bounds),
    }
}

pub fn multi_seed_summary(reports: &[AnalysisReport]) -> Result<MultiSeedSummary> {
    if reports.is_empty() {
        return Err(Error::MissingData("multi-seed summary of zero reports".into()));
    }
    let seeds: Vec<SeedSummary> = reports.iter().map(seed_summary).collect();
    let n = seeds.len() as f64;
    let frac = |f: fn(&SeedSummary) -> bool| seeds.iter().filter(|s| f(s)).count() as f64 / n;
    let mut key_count_histogram = BTreeMap::new();
    for s in &seeds {
        *key_count_histogram.entry(s.key_freq_count).or_insert(0) += 1;
    }
    let all_bounds: Vec<f64> = reports.iter().flat_map(passing_bounds).collect();
    Ok(MultiSeedSummary {
        fraction_perfect_accuracy: frac(|s| s.accuracy >= 1.0),
        fraction_good: frac(|s| s.good_model),
        fraction_frequencies_match: frac(|s| s.frequencies_match),
        fraction_phase_r2: frac(|s| s.phase_r2),
        fraction_uniformity: frac(|s| s.uniformity),
        fraction_component_errors: frac(|s| s.component_errors),
        key_count_histogram,
        median_relative_bound: median(all_bounds.clone()),
        fraction_below_baseline: below_one(&all_bounds),
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
        assert_eq!(below_one(&[0.5, 1.5]), Some(0.5));
    }

    #[test]
    fn zero_reports_is_an_error() {
        assert!(matches!(multi_seed_summary(&[]), Err(Error::MissingData(_))));
    }
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::cache::write_atomic;
use super::report::AnalysisReport;
use crate::error::{Error, Result};
use crate::quadrature::{rectangles, IntegrandSpec, Period, Variant};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Boxes under the abs integrand at `s = t = 0`, per key frequency.
    Rectangles,
    /// `(2φ, ψ)` per cluster member.
    PhaseScatter,
    /// Histogram of primary-frequency variance explained over all neurons.
    VarianceHistogram,
    /// Brute-force error per `a + b` next to the bounds.
    ErrorBand,
    /// Neurons per primary frequency.
    FrequencyCount,
    /// Expected against measured second-harmonic phase.
    SecondaryPhase,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Rectangles,
        Figure::PhaseScatter,
        Figure::VarianceHistogram,
        Figure::ErrorBand,
        Figure::FrequencyCount,
        Figure::SecondaryPhase,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Rectangles => "rectangles",
            Figure::PhaseScatter => "phase-scatter",
            Figure::VarianceHistogram => "variance-histogram",
            Figure::ErrorBand => "error-band",
            Figure::FrequencyCount => "frequency-count",
            Figure::SecondaryPhase => "secondary-phase",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Tab-separated series for one figure as `(file name, contents)` pairs.
pub fn plot_series(report: &AnalysisReport, figure: Figure) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    match figure {
        Figure::Rectangles => {
            for f in &report.frequencies {
                let Some(scheme) = &f.scheme else { continue };
                let spec = IntegrandSpec::new(Variant::Abs, 0.0, 0.0, 0.0);
                let mut out = String::from("lo\thi\tphi\theight\n");
                for r in rectangles(scheme, &spec) {
                    writeln!(out, "{:.12}\t{:.12}\t{:.12}\t{:.12}", r.lo, r.hi, r.phi, r.height).unwrap();
                }
                files.push((format!("rectangles-k{}.tsv", f.k), out));
            }
        }
        Figure::PhaseScatter => {
            for f in &report.frequencies {
                let mut out = String::from("neuron\ttwo_phi\tpsi\tmass\n");
                for m in &f.members {
                    let x = crate::fourier::wrap_angle(2.0 * m.phi);
                    let y = crate::fourier::nearest_representative(m.psi, x);
                    writeln!(out, "{}\t{x:.12}\t{y:.12}\t{:.6e}", m.neuron, m.mass).unwrap();
                }
                files.push((format!("phase-scatter-k{}.tsv", f.k), out));
            }
        }
        Figure::VarianceHistogram => {
            let mut counts = [0usize; HISTOGRAM_BINS];
            for n in &report.neurons {
                let bin = ((n.variance_explained * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
                counts[bin] += 1;
            }
            let mut out = String::from("bin_lo\tbin_hi\tcount\n");
            for (i, c) in counts.iter().enumerate() {
                let lo = i as f64 / HISTOGRAM_BINS as f64;
                writeln!(out, "{lo:.3}\t{:.3}\t{c}", lo + 1.0 / HISTOGRAM_BINS as f64).unwrap();
            }
            files.push(("variance-histogram.tsv".into(), out));
        }
        Figure::ErrorBand => {
            for f in &report.frequencies {
                let Some(actual) = f.actual(Variant::Abs) else { continue };
                let bound = |period| {
                    f.bound(Variant::Abs, period)
                        .and_then(|b| b.relative_total)
                        .map_or("-".to_string(), |x| format!("{x:.9}"))
                };
                let (full, half) = (bound(Period::Full), bound(Period::Half));
                let mut out = String::from("a_plus_b\tactual_rel\tbound_full\tbound_half\n");
                for (m, e) in actual.per_sum.iter().enumerate() {
                    writeln!(out, "{m}\t{e:.9}\t{full}\t{half}").unwrap();
                }
                files.push((format!("error-band-k{}.tsv", f.k), out));
            }
        }
        Figure::FrequencyCount => {
            let mut out = String::from("k\tneurons\tkey\n");
            for &(k, n) in &report.cluster_sizes {
                writeln!(out, "{k}\t{n}\t{}", report.key_freqs.contains(&k) as u8).unwrap();
            }
            files.push(("frequency-count.tsv".into(), out));
        }
        Figure::SecondaryPhase => {
            let mut out = String::from("neuron\tprimary\texpected\tobserved\tamp\texpected_phase\tphase\n");
            for n in &report.secondary_neurons {
                let obs = n.observed.map_or("-".to_string(), |k| k.to_string());
                writeln!(
                    out,
                    "{}\t{}\t{}\t{obs}\t{:.6e}\t{:.12}\t{:.12}",
                    n.neuron, n.primary, n.expected, n.amp, n.expected_phase, n.phase
                )
                .unwrap();
            }
            files.push(("secondary-phase.tsv".into(), out));
        }
    }
    if files.is_empty() {
        return Err(Error::MissingData(format!("figure `{}`", figure.id())));
    }
    Ok(files)
}

/// Writes the series for `figure` into `dir`.
pub fn emit_plot_series(report: &AnalysisReport, figure: Figure, dir: &Path) -> Result<Vec<PathBuf>> {
    plot_series(report, figure)?
        .into_iter()
        .map(|(name, contents)| {
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes())?;
            Ok(path)
        })
        .collect()
}

/// One row per (frequency, variant, period) with every bound component.
pub fn bound_table(report: &AnalysisReport) -> String {
    let mut out = String::from(
        "k\tvariant\tperiod\tn_boxes\teps_approx_int\teps_phi\teps_0\trel_approx_int\trel_phi\trel_total\tactual_max_rel\tactual_mean_rel\n",
    );
    for f in &report.frequencies {
        for b in &f.bounds {
            let actual = f.actual(b.variant);
            let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}",
                b.k,
                b.variant,
                b.period,
                b.n_boxes,
                b.eps_approx_int,
                b.eps_phi,
                b.eps_0,
                opt(b.relative_quadrature()),
                opt(b.relative_angle()),
                opt(b.relative_total),
                opt(actual.map(|a| a.max_rel)),
                opt(actual.map(|a| a.mean_rel)),
            )
            .unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        assert!(matches!("fig7".parse::<Figure>(), Err(Error::UnknownFigure(_))));
    }

    fn report() -> AnalysisReport {
        let config = crate::model::ModelConfig {
            p: 13,
            d_model: 16,
            d_mlp: 64,
            d_head: 4,
            n_heads: 4,
            ..Default::default()
        };
        let w = crate::model::ModelWeights::init(&config);
        crate::pipeline::analyze(&w, &Default::default()).unwrap()
    }

    #[test]
    fn series_match_report_contents() {
        let r = report();
        let scatter = plot_series(&r, Figure::PhaseScatter).unwrap();
        for f in &r.frequencies {
            let (_, text) = scatter.iter().find(|(n, _)| *n == format!("phase-scatter-k{}.tsv", f.k)).unwrap();
            assert_eq!(text.lines().count() - 1, f.members.len());
        }
        for (_, text) in plot_series(&r, Figure::Rectangles).unwrap() {
            let width: f64 = text
                .lines()
                .skip(1)
                .map(|l| {
                    let v: Vec<f64> = l.split('\t').map(|x| x.parse().unwrap()).collect();
                    v[1] - v[0]
                })
                .sum();
            assert!((width - 2.0 * std::f64::consts::PI).abs() < 1e-9, "{width}");
        }
    }
}

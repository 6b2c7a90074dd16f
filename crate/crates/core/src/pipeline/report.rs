use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourier::{
    cluster_by_frequency, detect_secondary, neuron_spectra, ov_token_table, phase_regression, ClusterMember,
    FrequencyCluster, NeuronSpectrum, PhaseRegression,
};
use crate::fourier::secondary::{SecondaryCluster, SecondaryNeuron};
use crate::model::{accuracy, forward, Dataset, ModelConfig, ModelWeights};
use crate::quadrature::{bound_report, build_boxes, BoundComponents, BoxScheme, Period, Variant};
use crate::validation::{
    actual_quadrature_error, component_errors, identity_component, logit_parts, regress_logits,
    secondary_contribution, ActualError, IdentityCoefficients, RegressionResult, Scope, SecondaryFit, Target,
};

/// Thresholds of the per-seed structural checks.
pub const VARIANCE_EXPLAINED: f64 = 0.9;
pub const PHASE_R2: f64 = 0.9;
pub const COMPONENT_ERROR: f64 = 0.1;
/// Tolerance of the exact decomposition identity.
pub const DECOMPOSITION_TOL: f64 = 1e-9;
/// Slack allowed when comparing a brute-force error with its bound.
pub const SOUNDNESS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSummary {
    pub neuron: usize,
    pub primary_freq: Option<usize>,
    pub secondary_freq: Option<usize>,
    pub output_freq: Option<usize>,
    pub r: f64,
    pub phi: f64,
    pub r_out: f64,
    pub psi: f64,
    pub variance_explained: f64,
}

impl NeuronSummary {
    fn from_spectrum(s: &NeuronSpectrum) -> Self {
        let (r, phi, r_out, psi) = match s.primary_freq {
            Some(k) => (s.input[k].amp, s.input[k].phase, s.output[k].amp, s.output[k].phase),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        NeuronSummary {
            neuron: s.neuron,
            primary_freq: s.primary_freq,
            secondary_freq: s.secondary_freq,
            output_freq: s.output_primary_freq,
            r,
            phi,
            r_out,
            psi,
            variance_explained: s.primary_variance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub k: usize,
    pub members: Vec<ClusterMember>,
    pub regression: Option<PhaseRegression>,
    pub scheme: Option<BoxScheme>,
    pub bounds: Vec<BoundComponents>,
    pub actual: Vec<ActualError>,
    /// Normalized worst-case errors of the four component integrals.
    pub component_errors: Option<[f64; 4]>,
    pub secondary: Option<SecondaryCluster>,
    /// Why a stage was skipped for this frequency.
    pub notes: Vec<String>,
}

impl FrequencyReport {
    pub fn bound(&self, variant: Variant, period: Period) -> Option<&BoundComponents> {
        self.bounds.iter().find(|b| b.variant == variant && b.period == period)
    }

    pub fn actual(&self, variant: Variant) -> Option<&ActualError> {
        self.actual.iter().find(|a| a.variant == variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Every clustered neuron has the same input and output primary frequency.
    pub frequencies_match: bool,
    pub phase_r2: bool,
    pub uniformity: bool,
    pub component_errors: bool,
    /// Every brute-force error is within its bound.
    pub soundness: bool,
    /// Largest deviation of skip + identity + abs from the model logits.
    pub decomposition_max_dev: f64,
}

impl Flags {
    pub fn good_model(&self) -> bool {
        self.frequencies_match && self.phase_r2 && self.uniformity
    }

    /// Mathematical invariants whose failure is an error, not a warning.
    pub fn hard_invariants_hold(&self) -> bool {
        self.soundness && self.decomposition_max_dev <= DECOMPOSITION_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: ModelConfig,
    pub accuracy: f64,
    pub key_freqs: Vec<usize>,
    pub key_threshold: usize,
    /// Cluster sizes for every primary frequency, key or not.
    pub cluster_sizes: Vec<(usize, usize)>,
    pub unclustered: Vec<usize>,
    pub mismatched: Vec<usize>,
    pub neurons: Vec<NeuronSummary>,
    /// Share of clustered neurons whose primary frequency explains more than
    /// [`VARIANCE_EXPLAINED`] of their input variance.
    pub variance_explained_fraction: f64,
    pub frequencies: Vec<FrequencyReport>,
    pub secondary_match_fraction: f64,
    pub secondary_neurons: Vec<SecondaryNeuron>,
    pub regressions: Vec<RegressionResult>,
    pub identity: Vec<IdentityCoefficients>,
    pub identity_reconstruction_r2: f64,
    pub secondary_fit: Option<SecondaryFit>,
    pub flags: Flags,
}

impl AnalysisReport {
    pub fn frequency(&self, k: usize) -> Option<&FrequencyReport> {
        self.frequencies.iter().find(|f| f.k == k)
    }

    pub fn regression(&self, target: Target, scope: Scope) -> Option<&RegressionResult> {
        self.regressions.iter().find(|r| r.target == target && r.scope == scope)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub variants: Vec<Variant>,
    pub periods: Vec<Period>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            variants: vec![Variant::Abs, Variant::Relu],
            periods: vec![Period::Full, Period::Half],
        }
    }
}

fn analyze_frequency(cluster: &FrequencyCluster, p: usize, options: &AnalysisOptions) -> FrequencyReport {
    let mut notes = Vec::new();
    let regression = phase_regression(cluster).map_err(|e| notes.push(e.to_string())).ok();
    let scheme = build_boxes(cluster).map_err(|e| notes.push(e.to_string())).ok();
    let (mut bounds, mut actual, mut comps) = (Vec::new(), Vec::new(), None);
    if let Some(scheme) = &scheme {
        for &variant in &options.variants {
            for &period in &options.periods {
                match bound_report(scheme, variant, period, p) {
                    Ok(b) => bounds.push(b),
                    Err(e) => notes.push(e.to_string()),
                }
            }
            match actual_quadrature_error(scheme, variant, p) {
                Ok(a) => actual.push(a),
                Err(e) => notes.push(e.to_string()),
            }
        }
        comps = component_errors(scheme, p).ok();
    }
    FrequencyReport {
        k: cluster.k,
        members: cluster.members.clone(),
        regression,
        scheme,
        bounds,
        actual,
        component_errors: comps,
        secondary: None,
        notes,
    }
}

/// Every analysis stage on one trained model.
pub fn analyze(weights: &ModelWeights, options: &AnalysisOptions) -> Result<AnalysisReport> {
    weights.check_finite()?;
    let p = weights.config.p;
    let pairs = Dataset::all_pairs(p);
    let acc = accuracy(weights, &pairs)?;

    let table = ov_token_table(weights);
    let spectra = neuron_spectra(&table, weights);
    let clustering = cluster_by_frequency(&spectra);
    let secondary = detect_secondary(&spectra, &clustering, p);

    let mut frequencies: Vec<FrequencyReport> = clustering
        .key_clusters()
        .map(|c| analyze_frequency(c, p, options))
        .collect();
    for f in &mut frequencies {
        f.secondary = secondary.clusters.iter().find(|s| s.k == f.k).cloned();
        for note in &f.notes {
            warn!("frequency {}: {note}", f.k);
        }
    }

    let clustered: Vec<&NeuronSpectrum> = spectra.iter().filter(|s| s.primary_freq.is_some()).collect();
    let explained = clustered
        .iter()
        .filter(|s| s.primary_variance() > VARIANCE_EXPLAINED)
        .count();
    let variance_explained_fraction = if clustered.is_empty() {
        0.0
    } else {
        explained as f64 / clustered.len() as f64
    };

    let parts = logit_parts(weights, &pairs);
    let total = parts.total();
    let mut decomposition_max_dev = 0.0f64;
    for (i, &(a, b)) in pairs.iter().enumerate().step_by(pairs.len().div_ceil(100).max(1)) {
        let (want, _) = forward(weights, a, b, false)?;
        for c in 0..p {
            decomposition_max_dev = decomposition_max_dev.max((total[[i, c]] - want[c]).abs());
        }
    }

    let keys = &clustering.key_freqs;
    let regressions = regress_logits(&parts, &pairs, p, keys);
    let identity = identity_component(weights, &parts, &pairs, keys);
    let secondary_fit = secondary_contribution(&parts.mlp(), &pairs, p, keys);

    let nonempty = !frequencies.is_empty();
    let flags = Flags {
        frequencies_match: clustering.frequencies_match(),
        phase_r2: nonempty
            && frequencies
                .iter()
                .all(|f| f.regression.as_ref().is_some_and(|r| r.fit.r_squared > PHASE_R2)),
        uniformity: nonempty
            && frequencies
                .iter()
                .all(|f| f.regression.as_ref().is_some_and(|r| r.uniform_enough())),
        component_errors: nonempty
            && frequencies
                .iter()
                .all(|f| f.component_errors.is_some_and(|e| e.iter().all(|&x| x < COMPONENT_ERROR))),
        soundness: frequencies.iter().all(frequency_is_sound),
        decomposition_max_dev,
    };

    Ok(AnalysisReport {
        config: weights.config.clone(),
        accuracy: acc,
        key_freqs: keys.clone(),
        key_threshold: clustering.key_threshold,
        cluster_sizes: clustering.clusters.iter().map(|c| (c.k, c.len())).collect(),
        unclustered: clustering.unclustered.clone(),
        mismatched: clustering.mismatched.clone(),
        neurons: spectra.iter().map(NeuronSummary::from_spectrum).collect(),
        variance_explained_fraction,
        frequencies,
        secondary_match_fraction: secondary.match_fraction,
        secondary_neurons: secondary.neurons.clone(),
        regressions,
        identity: identity.coefficients,
        identity_reconstruction_r2: identity.reconstruction_r2,
        secondary_fit,
        flags,
    })
}

/// Brute-force errors never exceed the matching bounds.
pub fn frequency_is_sound(f: &FrequencyReport) -> bool {
    f.bounds.iter().all(|b| {
        let Some(actual) = f.actual(b.variant) else {
            return true;
        };
        let quad_ok = actual.max_rel_ideal * b.eps_0 <= b.eps_approx_int + SOUNDNESS_SLACK;
        let total_ok = actual.max_rel * b.eps_0 <= b.eps_approx_int + b.eps_phi + SOUNDNESS_SLACK;
        quad_ok && total_ok
    })
}

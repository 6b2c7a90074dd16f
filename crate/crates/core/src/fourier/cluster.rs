use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::basis::{nearest_representative, wrap_angle};
use super::spectrum::NeuronSpectrum;
use crate::error::{Error, Result};

/// A frequency is key when its cluster holds at least this share of neurons.
pub const KEY_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub neuron: usize,
    /// Input phase at the cluster frequency.
    pub phi: f64,
    /// Output phase at the cluster frequency.
    pub psi: f64,
    pub r_in: f64,
    pub r_out: f64,
    /// `r_out · r_in`.
    pub mass: f64,
}

/// Neurons sharing a primary input frequency, sorted by input phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCluster {
    pub k: usize,
    pub members: Vec<ClusterMember>,
}

impl FrequencyCluster {
    /// Builds a cluster, sorting members by (phase, neuron index).
    pub fn new(k: usize, mut members: Vec<ClusterMember>) -> Self {
        members.sort_by(|x, y| x.phi.total_cmp(&y.phi).then(x.neuron.cmp(&y.neuron)));
        FrequencyCluster { k, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.members.iter().map(|m| m.mass).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// All non-empty clusters, ascending in k.
    pub clusters: Vec<FrequencyCluster>,
    pub key_freqs: Vec<usize>,
    /// Neurons with a constant token function.
    pub unclustered: Vec<usize>,
    /// Neurons whose input and output primary frequencies differ.
    pub mismatched: Vec<usize>,
    /// Neurons whose primary frequency was decided by a tie.
    pub tied: Vec<usize>,
    pub key_threshold: usize,
}

impl Clustering {
    pub fn cluster(&self, k: usize) -> Option<&FrequencyCluster> {
        self.clusters.iter().find(|c| c.k == k)
    }

    pub fn key_clusters(&self) -> impl Iterator<Item = &FrequencyCluster> {
        self.clusters.iter().filter(|c| self.key_freqs.contains(&c.k))
    }

    /// Every clustered neuron has matching input and output frequencies.
    pub fn frequencies_match(&self) -> bool {
        self.mismatched.is_empty()
    }
}

pub fn cluster_by_frequency(spectra: &[NeuronSpectrum]) -> Clustering {
    let mut groups: BTreeMap<usize, Vec<ClusterMember>> = BTreeMap::new();
    let mut unclustered = Vec::new();
    let mut mismatched = Vec::new();
    let mut tied = Vec::new();
    for s in spectra {
        let Some(k) = s.primary_freq else {
            unclustered.push(s.neuron);
            continue;
        };
        if s.primary_tied {
            tied.push(s.neuron);
        }
        if s.output_primary_freq != Some(k) {
            mismatched.push(s.neuron);
        }
        let (inp, out) = (s.input[k], s.output[k]);
        groups.entry(k).or_default().push(ClusterMember {
            neuron: s.neuron,
            phi: inp.phase,
            psi: out.phase,
            r_in: inp.amp,
            r_out: out.amp,
            mass: inp.amp * out.amp,
        });
    }
    let key_threshold = ((KEY_FRACTION * spectra.len() as f64).ceil() as usize).max(1);
    let clusters: Vec<FrequencyCluster> = groups
        .into_iter()
        .map(|(k, members)| FrequencyCluster::new(k, members))
        .collect();
    let key_freqs = clusters
        .iter()
        .filter(|c| c.len() >= key_threshold)
        .map(|c| c.k)
        .collect();
    Clustering {
        clusters,
        key_freqs,
        unclustered,
        mismatched,
        tied,
        key_threshold,
    }
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a);
    let (ss_res, max_residual) = residuals.fold((0.0, 0.0f64), |(s, m), r| (s + r * r, m.max(r.abs())));
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRegression {
    pub k: usize,
    pub n: usize,
    pub fit: LineFit,
    /// Largest |ψ − 2φ| after unwrapping.
    pub max_deviation: f64,
    /// Mean and standard deviation of the gaps between sorted input phases,
    /// including the gap that wraps around the circle.
    pub gap_mean: f64,
    pub gap_std: f64,
}

impl PhaseRegression {
    pub fn uniform_enough(&self) -> bool {
        self.gap_mean > self.gap_std
    }
}

/// Unwrapped `(2φ, ψ)` pairs: 2φ in (−π, π], ψ moved to its representative
/// nearest 2φ.
pub fn unwrapped_phase_pairs(cluster: &FrequencyCluster) -> (Vec<f64>, Vec<f64>) {
    cluster
        .members
        .iter()
        .map(|m| {
            let x = wrap_angle(2.0 * m.phi);
            (x, nearest_representative(m.psi, x))
        })
        .unzip()
}

pub fn phase_regression(cluster: &FrequencyCluster) -> Result<PhaseRegression> {
    let n = cluster.len();
    if n < 3 {
        return Err(Error::ClusterTooSmall {
            k: cluster.k,
            survivors: n,
            needed: 3,
        });
    }
    let (x, y) = unwrapped_phase_pairs(cluster);
    let fit = fit_line(&x, &y).ok_or(Error::DegenerateCluster(cluster.k))?;
    let max_deviation = x.iter().zip(&y).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
    let gaps = phase_gaps(cluster.members.iter().map(|m| m.phi));
    let gap_mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let gap_std = (gaps.iter().map(|g| (g - gap_mean).powi(2)).sum::<f64>() / gaps.len() as f64).sqrt();
    Ok(PhaseRegression {
        k: cluster.k,
        n,
        fit,
        max_deviation,
        gap_mean,
        gap_std,
    })
}

/// Gaps between consecutive sorted angles around the circle; sums to 2π.
pub fn phase_gaps(angles: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut sorted: Vec<f64> = angles.collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Vec::new();
    }
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(sorted[0] + 2.0 * PI - sorted[sorted.len() - 1]);
    gaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::basis::Component;

    fn neuron(i: usize, k_in: usize, k_out: usize, phi: f64, psi: f64) -> NeuronSpectrum {
        let n = 8;
        let mut input = vec![Component { amp: 0.0, phase: 0.0 }; n];
        let mut output = input.clone();
        input[k_in] = Component { amp: 2.0, phase: phi };
        output[k_out] = Component { amp: 3.0, phase: psi };
        output[k_in].phase = psi;
        output[k_in].amp = output[k_in].amp.max(0.5);
        let mut var = vec![0.0; n];
        var[k_in] = 1.0;
        NeuronSpectrum {
            neuron: i,
            input_mean: 0.0,
            input,
            input_variance: var.clone(),
            output_mean: 0.0,
            output,
            output_variance: var,
            primary_freq: Some(k_in),
            secondary_freq: Some(if k_in == 1 { 2 } else { 1 }),
            output_primary_freq: Some(k_out),
            primary_tied: false,
        }
    }

    fn cluster_of(phis: &[f64], psi: impl Fn(f64) -> f64) -> FrequencyCluster {
        let members = phis
            .iter()
            .enumerate()
            .map(|(i, &phi)| ClusterMember {
                neuron: i,
                phi,
                psi: wrap_angle(psi(phi)),
                r_in: 1.0,
                r_out: 1.0,
                mass: 1.0,
            })
            .collect();
        FrequencyCluster::new(3, members)
    }

    #[test]
    fn single_frequency_model_forms_one_cluster() {
        let spectra: Vec<_> = (0..40).map(|i| neuron(i, 3, 3, 0.1 * i as f64 - 2.0, 0.0)).collect();
        let c = cluster_by_frequency(&spectra);
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].len(), 40);
        assert_eq!(c.key_freqs, vec![3]);
        assert!(c.frequencies_match());
        let phis: Vec<f64> = c.clusters[0].members.iter().map(|m| m.phi).collect();
        assert!(phis.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mismatches_are_reported_exactly() {
        let mut spectra: Vec<_> = (0..40).map(|i| neuron(i, 3, 3, 0.0, 0.0)).collect();
        for i in [2, 9, 17, 23, 31] {
            spectra[i] = neuron(i, 3, 5, 0.0, 0.0);
        }
        let c = cluster_by_frequency(&spectra);
        assert_eq!(c.mismatched, vec![2, 9, 17, 23, 31]);
        assert!(!c.frequencies_match());
    }

    #[test]
    fn partition_covers_every_neuron_once() {
        let mut spectra: Vec<_> = (0..60).map(|i| neuron(i, 1 + i % 5, 1 + i % 5, 0.0, 0.0)).collect();
        spectra[7].primary_freq = None;
        let c = cluster_by_frequency(&spectra);
        let mut seen: Vec<usize> = c.clusters.iter().flat_map(|c| c.members.iter().map(|m| m.neuron)).collect();
        seen.extend(&c.unclustered);
        seen.sort();
        assert_eq!(seen, (0..60).collect::<Vec<_>>());
        assert_eq!(c.key_threshold, 3);
    }

    #[test]
    fn exact_double_phase_regresses_perfectly() {
        let phis: Vec<f64> = (0..20).map(|i| -3.0 + 0.3 * i as f64).collect();
        let r = phase_regression(&cluster_of(&phis, |phi| 2.0 * phi)).unwrap();
        assert!((r.fit.r_squared - 1.0).abs() < 1e-12);
        assert!(r.max_deviation < 1e-12);
        assert!((r.fit.slope - 1.0).abs() < 1e-12);
        assert!(r.uniform_enough());
    }

    #[test]
    fn degenerate_and_small_clusters_are_rejected() {
        assert!(matches!(
            phase_regression(&cluster_of(&[0.4; 5], |phi| 2.0 * phi)),
            Err(Error::DegenerateCluster(3))
        ));
        assert!(matches!(
            phase_regression(&cluster_of(&[0.1, 0.2], |phi| 2.0 * phi)),
            Err(Error::ClusterTooSmall { .. })
        ));
    }

    #[test]
    fn gaps_wrap_and_sum_to_full_turn() {
        let gaps = phase_gaps([-3.0, 0.0, 3.0].into_iter());
        assert_eq!(gaps.len(), 3);
        assert!((gaps.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        assert!((gaps[2] - (2.0 * PI - 6.0)).abs() < 1e-12);
    }
}

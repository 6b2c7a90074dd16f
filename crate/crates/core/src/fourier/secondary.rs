use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::basis::{fold_frequency, folding_reflects, nearest_representative, wrap_angle};
use super::cluster::{fit_line, Clustering, LineFit};
use super::spectrum::NeuronSpectrum;

/// Frequency at which a neuron with primary `k` should carry its second
/// harmonic, after identifying `j` with `p − j`.
pub fn expected_secondary(k: usize, p: usize) -> usize {
    fold_frequency(2 * k, p)
}

/// Phase the second harmonic should have, `2φ + π`, reflected when folding
/// sends `2k` to `p − 2k`.
pub fn expected_secondary_phase(k: usize, p: usize, phi: f64) -> f64 {
    let phase = 2.0 * phi + PI;
    wrap_angle(if folding_reflects(2 * k, p) { -phase } else { phase })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryNeuron {
    pub neuron: usize,
    pub primary: usize,
    pub expected: usize,
    pub observed: Option<usize>,
    pub matches: bool,
    /// Input amplitude at the expected frequency.
    pub amp: f64,
    pub expected_phase: f64,
    /// Input phase at the expected frequency, unwrapped towards the expectation.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryCluster {
    pub k: usize,
    pub expected: usize,
    pub n: usize,
    pub match_fraction: f64,
    pub phase_fit: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryReport {
    pub neurons: Vec<SecondaryNeuron>,
    pub clusters: Vec<SecondaryCluster>,
    pub match_fraction: f64,
}

/// Checks the doubled-frequency rule on every neuron of every key cluster.
pub fn detect_secondary(spectra: &[NeuronSpectrum], clustering: &Clustering, p: usize) -> SecondaryReport {
    let mut neurons = Vec::new();
    let mut clusters = Vec::new();
    for cluster in clustering.key_clusters() {
        let k = cluster.k;
        let expected = expected_secondary(k, p);
        let rows: Vec<SecondaryNeuron> = cluster
            .members
            .iter()
            .map(|m| {
                let s = &spectra[m.neuron];
                let comp = s.input.get(expected).copied().unwrap_or_default();
                let expected_phase = expected_secondary_phase(k, p, m.phi);
                SecondaryNeuron {
                    neuron: m.neuron,
                    primary: k,
                    expected,
                    observed: s.secondary_freq,
                    matches: s.secondary_freq == Some(expected),
                    amp: comp.amp,
                    expected_phase,
                    phase: nearest_representative(comp.phase, expected_phase),
                }
            })
            .collect();
        let n = rows.len();
        let matched = rows.iter().filter(|r| r.matches).count();
        let x: Vec<f64> = rows.iter().map(|r| r.expected_phase).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.phase).collect();
        clusters.push(SecondaryCluster {
            k,
            expected,
            n,
            match_fraction: if n > 0 { matched as f64 / n as f64 } else { 0.0 },
            phase_fit: fit_line(&x, &y),
        });
        neurons.extend(rows);
    }
    let matched = neurons.iter().filter(|r| r.matches).count();
    let match_fraction = if neurons.is_empty() {
        0.0
    } else {
        matched as f64 / neurons.len() as f64
    };
    SecondaryReport {
        neurons,
        clusters,
        match_fraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::basis::FourierBasis;
    use crate::fourier::cluster::cluster_by_frequency;
    use crate::fourier::spectrum::spectra_from_functions;
    use ndarray::Array2;

    #[test]
    fn doubled_frequencies_fold() {
        assert_eq!(expected_secondary(22, 59), 15);
        assert_eq!(expected_secondary(12, 59), 24);
        assert_eq!(expected_secondary(21, 59), 17);
    }

    #[test]
    fn synthetic_harmonics_are_detected() {
        let p = 59;
        let d = 40;
        for k in [12, 22] {
            let phis: Vec<f64> = (0..d).map(|i| -3.0 + 0.15 * i as f64).collect();
            let inputs = Array2::from_shape_fn((p, d), |(t, i)| {
                let x = 2.0 * PI * (k * t % p) as f64 / p as f64;
                (x + phis[i]).cos() + 0.3 * (2.0 * x + 2.0 * phis[i] + PI).cos()
            });
            let outputs = Array2::from_shape_fn((p, d), |(c, i)| {
                (2.0 * PI * (k * c % p) as f64 / p as f64 + 2.0 * phis[i]).cos()
            });
            let spectra = spectra_from_functions(&FourierBasis::new(p), &inputs, &outputs);
            let clustering = cluster_by_frequency(&spectra);
            let report = detect_secondary(&spectra, &clustering, p);
            assert_eq!(report.match_fraction, 1.0, "k={k}");
            let fit = report.clusters[0].phase_fit.unwrap();
            assert!(fit.r_squared > 1.0 - 1e-9, "k={k} R²={}", fit.r_squared);
            assert!(report.neurons.iter().all(|n| (n.phase - n.expected_phase).abs() < 1e-9));
        }
    }
}

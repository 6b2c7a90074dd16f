use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FrequencyCluster;

/// Members whose mass is below this fraction of the cluster maximum get no box.
pub const NEGLIGIBLE_MASS_RATIO: f64 = 1e-3;

/// `x` moved by a multiple of `period` to lie as close as possible to `target`.
pub fn nearest_mod(x: f64, target: f64, period: f64) -> f64 {
    let d = (x - target).rem_euclid(period);
    if d > period / 2.0 {
        target + d - period
    } else {
        target + d
    }
}

/// Rectangle scheme for one frequency: box i spans
/// `[boundaries[i], boundaries[i + 1]]` and is evaluated at `phases[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxScheme {
    pub k: usize,
    /// 2π for the full scheme, π once folded.
    pub period: f64,
    pub neurons: Vec<usize>,
    /// Input phases, each the representative closest to its box.
    pub phases: Vec<f64>,
    /// Output phases in the same order.
    pub psi: Vec<f64>,
    pub widths: Vec<f64>,
    pub boundaries: Vec<f64>,
    /// `Σ m_i / period`: weight mass per unit of angle.
    pub z: f64,
    pub excluded: Vec<usize>,
    pub excluded_mass: f64,
}

impl BoxScheme {
    /// Scheme from phases and masses; members are sorted by phase.
    pub fn from_parts(k: usize, period: f64, neurons: Vec<usize>, phases: &[f64], psi: &[f64], masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass(k));
        }
        let mut order: Vec<usize> = (0..phases.len()).collect();
        let reduced: Vec<f64> = phases.iter().map(|&x| x.rem_euclid(period)).collect();
        order.sort_by(|&i, &j| reduced[i].total_cmp(&reduced[j]).then(neurons[i].cmp(&neurons[j])));
        let widths: Vec<f64> = order.iter().map(|&i| period * masses[i] / total).collect();
        let raw: Vec<f64> = order.iter().map(|&i| reduced[i]).collect();

        // Offsets of box centres from the start of the first box.
        let mut centers = Vec::with_capacity(widths.len());
        let mut acc = 0.0;
        for w in &widths {
            centers.push(acc + w / 2.0);
            acc += w;
        }
        // Anchor so that the width-weighted mean offset from centre to phase is zero.
        let v0 = raw
            .iter()
            .zip(&widths)
            .zip(&centers)
            .map(|((phi, w), c)| w * (phi - c))
            .sum::<f64>()
            / period;
        let mut boundaries = vec![v0];
        for w in &widths {
            let last = *boundaries.last().unwrap();
            boundaries.push(last + w);
        }
        // Close the loop exactly.
        *boundaries.last_mut().unwrap() = v0 + period;
        let phases = raw
            .iter()
            .zip(&centers)
            .map(|(&phi, c)| nearest_mod(phi, v0 + c, period))
            .collect();
        Ok(BoxScheme {
            k,
            period,
            neurons: order.iter().map(|&i| neurons[i]).collect(),
            phases,
            psi: order.iter().map(|&i| psi[i]).collect(),
            widths,
            boundaries,
            z: total / period,
            excluded: Vec::new(),
            excluded_mass: 0.0,
        })
    }

    /// `n` equal boxes with phases at their centres and `ψ = 2φ`.
    pub fn uniform(k: usize, n: usize) -> Self {
        let phases: Vec<f64> = (0..n).map(|i| -PI + (i as f64 + 0.5) * 2.0 * PI / n as f64).collect();
        let psi: Vec<f64> = phases.iter().map(|x| 2.0 * x).collect();
        Self::from_parts(k, 2.0 * PI, (0..n).collect(), &phases, &psi, &vec![1.0; n]).expect("positive mass")
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn total_width(&self) -> f64 {
        self.widths.iter().sum()
    }

    /// Half-period scheme: phases reduced modulo π, widths halved.
    pub fn fold(&self) -> Result<Self> {
        let masses: Vec<f64> = self.widths.clone();
        let mut folded = Self::from_parts(self.k, PI, self.neurons.clone(), &self.phases, &self.psi, &masses)?;
        folded.excluded = self.excluded.clone();
        folded.excluded_mass = self.excluded_mass;
        Ok(folded)
    }
}

/// Builds the rectangle scheme of a cluster: widths proportional to
/// `m_i = r'_i·r_i`, normalized to 2π.
pub fn build_boxes(cluster: &FrequencyCluster) -> Result<BoxScheme> {
    let max = cluster.members.iter().map(|m| m.mass).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::ZeroMass(cluster.k));
    }
    let (kept, dropped): (Vec<_>, Vec<_>) = cluster
        .members
        .iter()
        .partition(|m| m.mass >= NEGLIGIBLE_MASS_RATIO * max);
    if kept.len() < 2 {
        return Err(Error::ClusterTooSmall {
            k: cluster.k,
            survivors: kept.len(),
            needed: 2,
        });
    }
    let neurons = kept.iter().map(|m| m.neuron).collect();
    let phases: Vec<f64> = kept.iter().map(|m| m.phi).collect();
    let psi: Vec<f64> = kept.iter().map(|m| m.psi).collect();
    let masses: Vec<f64> = kept.iter().map(|m| m.mass).collect();
    let mut scheme = BoxScheme::from_parts(cluster.k, 2.0 * PI, neurons, &phases, &psi, &masses)?;
    scheme.excluded = dropped.iter().map(|m| m.neuron).collect();
    scheme.excluded_mass = dropped.iter().map(|m| m.mass).sum();
    Ok(scheme)
}

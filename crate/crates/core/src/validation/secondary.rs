use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::regression::{fit_features, pizza_feature, secondary_feature, Feature};
use crate::model::Pair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryTerm {
    pub k: usize,
    pub pizza_coefficient: f64,
    /// Coefficient G_k of `cos(k(a−b))·cos(k(a+b−c))`.
    pub coefficient: f64,
    /// Fitted contribution at `k(a−b) = π`, `c = a + b`, which is `−G_k`.
    pub compensation: f64,
    /// Average doubled-frequency strength implied by `G_k = −(π/2)·β̄_k`.
    pub beta_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryFit {
    pub terms: Vec<SecondaryTerm>,
    /// R² of the pizza features alone.
    pub pizza_r2: f64,
    /// R² once the doubled-frequency features are added.
    pub joint_r2: f64,
}

impl SecondaryFit {
    pub fn compensates(&self) -> bool {
        !self.terms.is_empty() && self.terms.iter().all(|t| t.compensation > 0.0)
    }
}

/// Fits `logits` jointly against the pizza features and the doubled-frequency
/// features of every key frequency.
pub fn secondary_contribution(logits: &Array2<f64>, pairs: &[Pair], p: usize, freqs: &[usize]) -> Option<SecondaryFit> {
    if freqs.is_empty() {
        return None;
    }
    let pizza_only: [Feature; 1] = [pizza_feature];
    let joint: [Feature; 2] = [pizza_feature, secondary_feature];
    let (_, pizza_r2) = fit_features(logits, pairs, p, freqs, &pizza_only);
    let (coef, joint_r2) = fit_features(logits, pairs, p, freqs, &joint);
    let n = freqs.len();
    let terms = freqs
        .iter()
        .enumerate()
        .map(|(i, &k)| SecondaryTerm {
            k,
            pizza_coefficient: coef[i],
            coefficient: coef[n + i],
            compensation: -coef[n + i],
            beta_bar: -2.0 * coef[n + i] / PI,
        })
        .collect();
    Some(SecondaryFit {
        terms,
        pizza_r2,
        joint_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;

    fn logits(p: usize, k: usize, beta: f64) -> (Array2<f64>, Vec<Pair>) {
        let pairs = Dataset::all_pairs(p);
        let l = Array2::from_shape_fn((pairs.len(), p), |(r, c)| {
            let (a, b) = pairs[r];
            2.0 * pizza_feature(k, p, a, b, c) - PI / 2.0 * beta * secondary_feature(k, p, a, b, c)
        });
        (l, pairs)
    }

    #[test]
    fn synthetic_secondary_is_recovered() {
        let p = 29;
        let (l, pairs) = logits(p, 4, 0.3);
        let fit = secondary_contribution(&l, &pairs, p, &[4]).unwrap();
        assert!(fit.joint_r2 > 0.99);
        assert!(fit.joint_r2 > fit.pizza_r2);
        assert!((fit.terms[0].beta_bar - 0.3).abs() < 1e-9);
        assert!(fit.compensates());
    }

    #[test]
    fn absent_secondary_contributes_nothing() {
        let p = 29;
        let (l, pairs) = logits(p, 4, 0.0);
        let fit = secondary_contribution(&l, &pairs, p, &[4]).unwrap();
        assert!(fit.terms[0].coefficient.abs() < 1e-9);
        assert!(secondary_contribution(&l, &pairs, p, &[]).is_none());
    }
}

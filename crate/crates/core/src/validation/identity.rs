use std::f64::consts::PI;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::decomposition::LogitParts;
use super::regression::{fit_features, pizza_feature, secondary_feature, Feature};
use crate::fourier::ov_token_table;
use crate::model::{ModelWeights, Pair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCoefficients {
    pub k: usize,
    /// Abs-component coefficient on `|cos(k(b−a)/2)|·cos(k(a+b−c))`.
    pub c_k: f64,
    /// Cosine coefficient of `logit_id1` on `cos(k(c − 2a))`.
    pub d_k: f64,
    /// Matching sine coefficient.
    pub e_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityComponentFit {
    /// `¼·(W_L T[a])_c`: the identity-part logit contributed by token a, p × p indexed `[c, a]`.
    pub logit_id1: Array2<f64>,
    /// `½·(W_U OV W_E[:, a])_c`: the skip-path logit of token a.
    pub logit_id2: Array2<f64>,
    pub coefficients: Vec<IdentityCoefficients>,
    /// R² of `Σ_k (C_k|cos(k(b−a)/2)| + 2D_k cos(k(b−a)))·cos(k(a+b−c))`
    /// against the row-centered model logits.
    pub reconstruction_r2: f64,
}

/// `(2/p²)·Σ_{c,a} m[c,a]·(cos, sin)(2πk(c − 2a)/p)`.
pub fn diagonal_coefficients(m: &Array2<f64>, k: usize) -> (f64, f64) {
    let p = m.nrows();
    let w = 2.0 * PI * k as f64 / p as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for c in 0..p {
        for a in 0..p {
            let x = w * ((c + 2 * p - 2 * a) % p) as f64;
            re += m[[c, a]] * x.cos();
            im += m[[c, a]] * x.sin();
        }
    }
    let norm = 2.0 / (p * p) as f64;
    (re * norm, im * norm)
}

/// Identity-part analysis for the key frequencies.
///
/// `parts` and `pairs` must cover all `p²` inputs. C_k comes from a joint fit
/// of the abs-component logits, D_k and E_k from the 2D Fourier coefficient
/// of `logit_id1` along `kc − 2ka`.
pub fn identity_component(weights: &ModelWeights, parts: &LogitParts, pairs: &[Pair], freqs: &[usize]) -> IdentityComponentFit {
    let p = weights.config.p;
    let table = ov_token_table(weights);
    let w_l = weights.neuron_logit_map();
    let logit_id1 = w_l.dot(&table.table.t()) * 0.25;
    let unembed = weights.w_u.slice(s![..p, ..]);
    let logit_id2 = unembed.dot(&weights.ov_circuit()).dot(&weights.w_e.slice(s![.., ..p])) * 0.5;

    let pizza: [Feature; 1] = [pizza_feature];
    let (c, _) = fit_features(&parts.abs, pairs, p, freqs, &pizza);
    let coefficients: Vec<IdentityCoefficients> = freqs
        .iter()
        .zip(&c)
        .map(|(&k, &c_k)| {
            let (d_k, e_k) = diagonal_coefficients(&logit_id1, k);
            IdentityCoefficients { k, c_k, d_k, e_k }
        })
        .collect();

    let total = super::decomposition::center_rows(parts.total());
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (row, &(a, b)) in total.rows().into_iter().zip(pairs) {
        for cc in 0..p {
            let model: f64 = coefficients
                .iter()
                .map(|co| co.c_k * pizza_feature(co.k, p, a, b, cc) + 2.0 * co.d_k * secondary_feature(co.k, p, a, b, cc))
                .sum();
            ss_res += (row[cc] - model).powi(2);
            ss_tot += row[cc] * row[cc];
        }
    }
    IdentityComponentFit {
        logit_id1,
        logit_id2,
        coefficients,
        reconstruction_r2: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    }
}

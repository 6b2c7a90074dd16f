use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::decomposition::{center_rows, LogitParts};
use crate::model::Pair;

/// Streaming least squares without intercept: accumulates `XᵀX`, `Xᵀy`, `yᵀy`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    n: usize,
    xtx: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
}

impl LeastSquares {
    pub fn new(n_features: usize) -> Self {
        LeastSquares {
            n: n_features,
            xtx: vec![0.0; n_features * n_features],
            xty: vec![0.0; n_features],
            yty: 0.0,
        }
    }

    pub fn add(&mut self, x: &[f64], y: f64) {
        for i in 0..self.n {
            self.xty[i] += x[i] * y;
            for j in 0..self.n {
                self.xtx[i * self.n + j] += x[i] * x[j];
            }
        }
        self.yty += y * y;
    }

    /// Coefficients and `R² = 1 − SS_res/SS_tot`, with the (already centered)
    /// targets' sum of squares as SS_tot.
    pub fn solve(&self) -> (Vec<f64>, f64) {
        let beta = solve_symmetric(&self.xtx, &self.xty, self.n);
        // SS_res = yᵀy − 2βᵀXᵀy + βᵀXᵀXβ.
        let mut quad = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                quad += beta[i] * self.xtx[i * self.n + j] * beta[j];
            }
        }
        let cross: f64 = beta.iter().zip(&self.xty).map(|(b, v)| b * v).sum();
        let ss_res = (self.yty - 2.0 * cross + quad).max(0.0);
        let r2 = if self.yty > 0.0 { 1.0 - ss_res / self.yty } else { 1.0 };
        (beta, r2)
    }
}

/// Gaussian elimination with partial pivoting; singular directions get zero.
fn solve_symmetric(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i * n..(i + 1) * n].to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut pivots = vec![None; n];
    let mut row = 0;
    for col in 0..n {
        let Some(best) = (row..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())) else {
            break;
        };
        if m[best][col].abs() <= 1e-12 * scale {
            continue;
        }
        m.swap(row, best);
        for r in 0..n {
            if r != row {
                let f = m[r][col] / m[row][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[row][c];
                    }
                }
            }
        }
        pivots[col] = Some(row);
        row += 1;
    }
    (0..n)
        .map(|col| pivots[col].map_or(0.0, |r| m[r][n] / m[r][col]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `cos(k(a+b−c))`.
    Clock,
    /// `|cos(k(a−b)/2)|·cos(k(a+b−c))`.
    Pizza,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    FullLogits,
    AbsOnly,
    MlpOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub target: Target,
    pub scope: Scope,
    pub r_squared: f64,
    pub freqs: Vec<usize>,
    pub coefficients: Vec<f64>,
}

/// Feature functions of `(a, b, c)` for one frequency.
pub fn clock_feature(k: usize, p: usize, a: usize, b: usize, c: usize) -> f64 {
    let w = 2.0 * PI * k as f64 / p as f64;
    (w * (a as f64 + b as f64 - c as f64)).cos()
}

pub fn pizza_feature(k: usize, p: usize, a: usize, b: usize, c: usize) -> f64 {
    let w = 2.0 * PI * k as f64 / p as f64;
    (w * (a as f64 - b as f64) / 2.0).cos().abs() * clock_feature(k, p, a, b, c)
}

/// `cos(k(a−b))·cos(k(a+b−c))`, the shape of the doubled-frequency term.
pub fn secondary_feature(k: usize, p: usize, a: usize, b: usize, c: usize) -> f64 {
    let w = 2.0 * PI * k as f64 / p as f64;
    (w * (a as f64 - b as f64)).cos() * clock_feature(k, p, a, b, c)
}

pub type Feature = fn(usize, usize, usize, usize, usize) -> f64;

/// Fits row-centered logits (rows aligned with `pairs`) against the given
/// features for every frequency in `freqs`, streaming over all triples.
pub fn fit_features(logits: &Array2<f64>, pairs: &[Pair], p: usize, freqs: &[usize], features: &[Feature]) -> (Vec<f64>, f64) {
    let centered = center_rows(logits.clone());
    let n = freqs.len() * features.len();
    let mut ls = LeastSquares::new(n);
    let mut x = vec![0.0; n];
    for (row, &(a, b)) in centered.rows().into_iter().zip(pairs) {
        for c in 0..p {
            for (fi, f) in features.iter().enumerate() {
                for (ki, &k) in freqs.iter().enumerate() {
                    x[fi * freqs.len() + ki] = f(k, p, a, b, c);
                }
            }
            ls.add(&x, row[c]);
        }
    }
    ls.solve()
}

pub fn regress(logits: &Array2<f64>, pairs: &[Pair], p: usize, freqs: &[usize], target: Target, scope: Scope) -> RegressionResult {
    let feature: Feature = match target {
        Target::Clock => clock_feature,
        Target::Pizza => pizza_feature,
    };
    let (coefficients, r_squared) = fit_features(logits, pairs, p, freqs, &[feature]);
    RegressionResult {
        target,
        scope,
        r_squared,
        freqs: freqs.to_vec(),
        coefficients,
    }
}

/// Clock and pizza fits for every scope, over all `p²` pairs in `pairs`.
pub fn regress_logits(parts: &LogitParts, pairs: &[Pair], p: usize, freqs: &[usize]) -> Vec<RegressionResult> {
    let scopes = [
        (Scope::FullLogits, parts.total()),
        (Scope::AbsOnly, parts.abs.clone()),
        (Scope::MlpOnly, parts.mlp()),
    ];
    let mut out = Vec::new();
    for (scope, logits) in &scopes {
        for target in [Target::Clock, Target::Pizza] {
            out.push(regress(logits, pairs, p, freqs, target, *scope));
        }
    }
    out
}

pub fn find(results: &[RegressionResult], target: Target, scope: Scope) -> Option<&RegressionResult> {
    results.iter().find(|r| r.target == target && r.scope == scope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;

    fn synthetic(p: usize, freqs: &[(usize, f64)], f: Feature) -> (Array2<f64>, Vec<Pair>) {
        let pairs = Dataset::all_pairs(p);
        let logits = Array2::from_shape_fn((pairs.len(), p), |(r, c)| {
            let (a, b) = pairs[r];
            freqs.iter().map(|&(k, w)| w * f(k, p, a, b, c)).sum::<f64>() + 3.0 + a as f64
        });
        (logits, pairs)
    }

    #[test]
    fn pizza_logits_fit_pizza_exactly() {
        let p = 23;
        let (logits, pairs) = synthetic(p, &[(3, 2.0), (7, 1.5)], pizza_feature);
        let r = regress(&logits, &pairs, p, &[3, 7], Target::Pizza, Scope::FullLogits);
        assert!((r.r_squared - 1.0).abs() < 1e-9);
        assert!((r.coefficients[0] - 2.0).abs() < 1e-9 && (r.coefficients[1] - 1.5).abs() < 1e-9);
        let clock = regress(&logits, &pairs, p, &[3, 7], Target::Clock, Scope::FullLogits);
        assert!(clock.r_squared < r.r_squared);
    }

    #[test]
    fn clock_logits_prefer_clock() {
        let p = 23;
        let (logits, pairs) = synthetic(p, &[(5, 1.0)], clock_feature);
        let clock = regress(&logits, &pairs, p, &[5], Target::Clock, Scope::FullLogits);
        let pizza = regress(&logits, &pairs, p, &[5], Target::Pizza, Scope::FullLogits);
        assert!((clock.r_squared - 1.0).abs() < 1e-9);
        assert!(pizza.r_squared < clock.r_squared);
    }

    #[test]
    fn singular_features_do_not_blow_up() {
        let mut ls = LeastSquares::new(2);
        for i in 0..10 {
            let x = i as f64;
            ls.add(&[x, 2.0 * x], 3.0 * x);
        }
        let (beta, r2) = ls.solve();
        assert!((beta[0] + 2.0 * beta[1] - 3.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-9);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the constant-attention transformer and its training run.
///
/// `d_vocab` is always `p + 1` (the residues plus the `=` token) and the
/// context is always `a b =`, so neither is stored independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub p: usize,
    pub d_model: usize,
    pub d_mlp: usize,
    pub d_head: usize,
    pub n_heads: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub train_frac: f64,
    /// Pairs per optimizer step; 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
}

pub const N_CTX: usize = 3;

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            p: 59,
            d_model: 128,
            d_mlp: 512,
            d_head: 32,
            n_heads: 4,
            epochs: 10_000,
            weight_decay: 0.01,
            learning_rate: 1e-3,
            train_frac: 0.8,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn d_vocab(&self) -> usize {
        self.p + 1
    }

    pub fn n_ctx(&self) -> usize {
        N_CTX
    }

    /// Token id of `=`.
    pub fn eq_token(&self) -> usize {
        self.p
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if self.d_model == 0 || self.d_mlp == 0 || self.d_head == 0 || self.n_heads == 0 {
            return bad("all widths must be positive".into());
        }
        if self.d_head * self.n_heads > self.d_model {
            return bad(format!(
                "d_head * n_heads = {} exceeds d_model = {}",
                self.d_head * self.n_heads,
                self.d_model
            ));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!("train_frac must lie in (0, 1), got {}", self.train_frac));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        Ok(())
    }

    /// Same model, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        ModelConfig {
            seed,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = ModelConfig::default();
        assert_eq!(c.p, 59);
        assert_eq!(c.d_vocab(), 60);
        assert_eq!(c.n_ctx(), 3);
        assert_eq!((c.d_model, c.d_mlp, c.d_head, c.n_heads), (128, 512, 32, 4));
        assert_eq!(c.epochs, 10_000);
        assert_eq!(c.weight_decay, 0.01);
        assert_eq!(c.train_frac, 0.8);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_oversized_heads_and_bad_fraction() {
        let c = ModelConfig {
            d_head: 64,
            ..ModelConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        for frac in [0.0, 1.0, -0.1, f64::NAN] {
            let c = ModelConfig {
                train_frac: frac,
                ..ModelConfig::default()
            };
            assert!(c.validate().is_err(), "train_frac {frac} accepted");
        }
    }
}

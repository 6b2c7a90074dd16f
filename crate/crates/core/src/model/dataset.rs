use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;

pub type Pair = (usize, usize);

/// Train/test split of all `p²` input pairs. Labels are implicit: `(a + b) mod p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub p: usize,
    pub train_pairs: Vec<Pair>,
    pub test_pairs: Vec<Pair>,
}

// Keeps the split stream independent of the initialization stream.
const SPLIT_STREAM: u64 = 0x5711;

impl Dataset {
    pub fn label(&self, (a, b): Pair) -> usize {
        (a + b) % self.p
    }

    pub fn all_pairs(p: usize) -> Vec<Pair> {
        (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).collect()
    }
}

pub fn generate_dataset(config: &ModelConfig) -> Dataset {
    let p = config.p;
    let mut pairs = Dataset::all_pairs(p);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SPLIT_STREAM);
    pairs.shuffle(&mut rng);
    let n_train = (config.train_frac * (p * p) as f64).round() as usize;
    let test_pairs = pairs.split_off(n_train);
    Dataset {
        p,
        train_pairs: pairs,
        test_pairs,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn default_split_sizes() {
        let d = generate_dataset(&ModelConfig::default());
        // round(0.8 * 3481) = round(2784.8)
        assert_eq!(d.train_pairs.len(), 2785);
        assert_eq!(d.test_pairs.len(), 696);
    }

    #[test]
    fn tiny_modulus_halves() {
        let c = ModelConfig {
            p: 2,
            train_frac: 0.5,
            ..ModelConfig::default()
        };
        let d = generate_dataset(&c);
        assert_eq!(d.train_pairs.len(), 2);
        assert_eq!(d.test_pairs.len(), 2);
    }

    #[test]
    fn partition_and_determinism() {
        let c = ModelConfig::default().with_seed(17);
        let d1 = generate_dataset(&c);
        let d2 = generate_dataset(&c);
        assert_eq!(d1, d2);
        let train: HashSet<_> = d1.train_pairs.iter().copied().collect();
        let test: HashSet<_> = d1.test_pairs.iter().copied().collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.len() + test.len(), 59 * 59);
        let other = generate_dataset(&c.with_seed(18));
        assert_ne!(d1.train_pairs, other.train_pairs);
    }
}

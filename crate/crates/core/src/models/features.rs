//! Deterministic hashed text features.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{fnv1a64, fnv1a64_from, mix64};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMethod {
    HashedBagOfWords,
    AveragedHashedEmbedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub method: FeatureMethod,
    pub dim: usize,
    pub hash_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            method: FeatureMethod::HashedBagOfWords,
            dim: 32,
            hash_seed: 0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!(
                "feature dim must be at least 2, got {}",
                self.dim
            )));
        }
        Ok(())
    }

    fn token_hash(&self, token: &str) -> u64 {
        let h = fnv1a64_from(fnv1a64(&self.hash_seed.to_le_bytes()), token.as_bytes());
        mix64(h)
    }
}

/// Lowercased word tokens, the unit every featurizer hashes.
pub fn feature_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| t.text.to_lowercase())
        .collect()
}

pub fn featurize(text: &str, cfg: &FeatureConfig) -> Vec<f64> {
    let tokens = feature_tokens(text);
    let mut v = vec![0.0; cfg.dim];
    if tokens.is_empty() {
        return v;
    }
    match cfg.method {
        FeatureMethod::HashedBagOfWords => {
            for tok in &tokens {
                let h = cfg.token_hash(tok);
                let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
                v[(h % cfg.dim as u64) as usize] += sign;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
        }
        FeatureMethod::AveragedHashedEmbedding => {
            for tok in &tokens {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.token_hash(tok));
                let e: Vec<f64> = (0..cfg.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                for (acc, x) in v.iter_mut().zip(&e) {
                    *acc += x / norm;
                }
            }
            let n = tokens.len() as f64;
            v.iter_mut().for_each(|x| *x /= n);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_zero() {
        for method in [FeatureMethod::HashedBagOfWords, FeatureMethod::AveragedHashedEmbedding] {
            let cfg = FeatureConfig {
                method,
                ..Default::default()
            };
            assert_eq!(featurize("", &cfg), vec![0.0; 32]);
            assert_eq!(featurize(" ... ", &cfg), vec![0.0; 32]);
        }
    }

    #[test]
    fn bag_of_words_ignores_order() {
        let cfg = FeatureConfig::default();
        let a = featurize("the quick brown fox jumps", &cfg);
        let b = featurize("jumps fox brown quick the", &cfg);
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embeddings_are_unit_for_single_tokens() {
        let cfg = FeatureConfig {
            method: FeatureMethod::AveragedHashedEmbedding,
            dim: 16,
            hash_seed: 3,
        };
        let v = featurize("Hello", &cfg);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(v, featurize("hello", &cfg));
        assert_ne!(v, featurize("hello", &FeatureConfig { hash_seed: 4, ..cfg }));
    }

    #[test]
    fn dim_validation() {
        let cfg = FeatureConfig {
            dim: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}

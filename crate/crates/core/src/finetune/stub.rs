//! Deterministic hashed-token encoder.
//!
//! Serves two roles: the `stub` backend that makes the fine-tuning path
//! testable offline, and the in-process representation of any locally
//! installed checkpoint blob loaded through the registry. Architecture:
//! hashed token embeddings (vocabulary-free, 2^15 buckets) -> mean pooling
//! -> one dense tanh layer. All weights live in a single flat vector so the
//! training loop can address them sparsely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EncoderBackend;
use crate::features::DenseVector;

/// Hash bucket count for token embeddings.
pub const BUCKETS: usize = 1 << 15;

/// FNV-1a 64-bit; stable across platforms and runs.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub(crate) fn bucket_of(token: &str) -> usize {
    (fnv1a64(token.as_bytes()) % BUCKETS as u64) as usize
}

/// Trainable hashed-token encoder. Flat parameter layout:
/// `[embedding table (BUCKETS x dim), dense weights (dim x dim), bias (dim)]`.
#[derive(Debug, Clone)]
pub struct HashedEncoder {
    name: String,
    dim: usize,
    seed: u64,
    params: Vec<f64>,
}

impl HashedEncoder {
    /// Builds the deterministic stub backend (`dim >= 8`).
    pub fn stub(dim: usize, seed: u64) -> Self {
        HashedEncoder::with_name("stub", dim, seed)
    }

    pub fn with_name(name: impl Into<String>, dim: usize, seed: u64) -> Self {
        assert!(dim >= 8, "encoder dimension must be at least 8");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; BUCKETS * dim + dim * dim + dim];
        for p in params.iter_mut().take(BUCKETS * dim) {
            *p = rng.gen_range(-0.5..0.5);
        }
        let scale = 1.0 / (dim as f64).sqrt();
        for p in params
            .iter_mut()
            .skip(BUCKETS * dim)
            .take(dim * dim)
        {
            *p = rng.gen_range(-scale..scale);
        }
        // Bias starts at zero.
        HashedEncoder {
            name: name.into(),
            dim,
            seed,
            params,
        }
    }

    /// Rebuilds an encoder from serialized parts (checkpoint blobs).
    pub fn from_parts(name: String, dim: usize, seed: u64, params: Vec<f64>) -> Self {
        assert_eq!(params.len(), BUCKETS * dim + dim * dim + dim);
        HashedEncoder {
            name,
            dim,
            seed,
            params,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn dense_w(&self) -> &[f64] {
        &self.params[BUCKETS * self.dim..BUCKETS * self.dim + self.dim * self.dim]
    }

    fn dense_b(&self) -> &[f64] {
        &self.params[BUCKETS * self.dim + self.dim * self.dim..]
    }

    fn tokens_of<'a>(&self, text: &'a str) -> (Vec<&'a str>, bool) {
        let all: Vec<&str> = text.split_whitespace().collect();
        let truncated = all.len() > self.max_sequence_length();
        let kept = all
            .into_iter()
            .take(self.max_sequence_length())
            .collect();
        (kept, truncated)
    }

    /// Mean of the hashed token embeddings (position-free).
    fn pool(&self, tokens: &[&str]) -> Vec<f64> {
        let mut pooled = vec![0.0; self.dim];
        for tok in tokens {
            let base = bucket_of(tok) * self.dim;
            for (p, e) in pooled.iter_mut().zip(&self.params[base..base + self.dim]) {
                *p += e;
            }
        }
        let n = tokens.len() as f64;
        for p in pooled.iter_mut() {
            *p /= n;
        }
        pooled
    }

    fn dense_forward(&self, pooled: &[f64]) -> Vec<f64> {
        let w = self.dense_w();
        let b = self.dense_b();
        (0..self.dim)
            .map(|r| {
                let row = &w[r * self.dim..(r + 1) * self.dim];
                (b[r] + row.iter().zip(pooled).map(|(wv, pv)| wv * pv).sum::<f64>()).tanh()
            })
            .collect()
    }
}

impl EncoderBackend for HashedEncoder {
    fn name(&self) -> &str {
        &self.name
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }

    fn trainable(&self) -> bool {
        true
    }

    fn encode_detailed(&self, text: &str) -> (DenseVector, bool) {
        let (tokens, truncated) = self.tokens_of(text);
        if tokens.is_empty() {
            // Stub contract: empty input encodes to the zero vector.
            return (DenseVector::zeros(self.dim), truncated);
        }
        let pooled = self.pool(&tokens);
        (DenseVector::new(self.dense_forward(&pooled)), truncated)
    }

    fn param_len(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> Vec<f64> {
        self.params.clone()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.params.len());
        self.params.copy_from_slice(p);
    }

    fn backward(&self, texts: &[&str], grad_rows: &[Vec<f64>]) -> Vec<(usize, f64)> {
        let d = self.dim;
        let dense_base = BUCKETS * d;
        let bias_base = dense_base + d * d;
        let mut grads: Vec<(usize, f64)> = Vec::new();
        let w = self.dense_w();
        for (text, grad_out) in texts.iter().zip(grad_rows) {
            let (tokens, _) = self.tokens_of(text);
            if tokens.is_empty() {
                continue; // zero vector output carries no gradient
            }
            let pooled = self.pool(&tokens);
            let out = self.dense_forward(&pooled);
            // Through tanh.
            let dz: Vec<f64> = grad_out
                .iter()
                .zip(&out)
                .map(|(g, o)| g * (1.0 - o * o))
                .collect();
            // Dense weights and bias.
            for r in 0..d {
                if dz[r] == 0.0 {
                    continue;
                }
                grads.push((bias_base + r, dz[r]));
                for (j, pv) in pooled.iter().enumerate() {
                    if *pv != 0.0 {
                        grads.push((dense_base + r * d + j, dz[r] * pv));
                    }
                }
            }
            // Back to pooled, then to the touched embedding rows.
            let mut dpooled = vec![0.0; d];
            for r in 0..d {
                if dz[r] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    dpooled[j] += w[r * d + j] * dz[r];
                }
            }
            let inv_n = 1.0 / tokens.len() as f64;
            for tok in &tokens {
                let base = bucket_of(tok) * d;
                for (j, dp) in dpooled.iter().enumerate() {
                    if *dp != 0.0 {
                        grads.push((base + j, dp * inv_n));
                    }
                }
            }
        }
        grads
    }
}

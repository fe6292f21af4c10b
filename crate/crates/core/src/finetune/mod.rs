//! Sentence-encoder fine-tuning: a pluggable encoder backend plus a dense
//! softmax classification head, trained end-to-end with Adam.
//!
//! Any [`EncoderBackend`] runs the identical fine-tuning and prediction code
//! path. The shipped `stub` backend (hashed token embeddings, mean pooling,
//! one tanh layer) keeps the whole path verifiable offline; real pretrained
//! checkpoints are adapters loaded by name through the [`registry`].
//!
//! Backend weights update through a sparse-aware Adam: only parameters that
//! have ever received gradient are touched, which is numerically identical
//! to dense Adam because untouched entries keep zero moments.

pub mod registry;
mod stub;

pub use registry::{create_backend, KNOWN_CHECKPOINTS};
pub use stub::{HashedEncoder, BUCKETS};

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::DenseVector;
use crate::neural::{Adam, SparseAdam};

/// A sentence encoder the fine-tuning loop can drive.
///
/// `encode` is deterministic at inference; `backward` recomputes whatever it
/// needs internally and returns sparse (flat parameter index, gradient)
/// pairs for the batch.
pub trait EncoderBackend: Send + std::fmt::Debug {
    fn name(&self) -> &str;
    fn embedding_dim(&self) -> usize;
    /// Token cap; longer inputs are truncated and flagged.
    fn max_sequence_length(&self) -> usize {
        64
    }
    fn trainable(&self) -> bool;

    /// Deterministic sentence embedding.
    fn encode(&self, text: &str) -> DenseVector {
        self.encode_detailed(text).0
    }

    /// Embedding plus a truncation flag.
    fn encode_detailed(&self, text: &str) -> (DenseVector, bool);

    /// Batch of sentence embeddings, one row per text.
    fn forward(&self, texts: &[&str]) -> Vec<Vec<f64>> {
        texts
            .iter()
            .map(|t| self.encode(t).into_values())
            .collect()
    }

    /// Gradient of the batch loss w.r.t. the flat parameters, given the
    /// gradient w.r.t. each output row. Pairs may repeat; they accumulate.
    fn backward(&self, texts: &[&str], grad_rows: &[Vec<f64>]) -> Vec<(usize, f64)>;

    fn param_len(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn params_mut(&mut self) -> &mut [f64];
    fn set_params(&mut self, p: &[f64]);
}

/// Fine-tuning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            epochs: 5,
            batch_size: 8,
            learning_rate: 2e-5,
            seed: 0,
        }
    }
}

impl FinetuneConfig {
    /// SHA-256 of the serialized config; embedded in backend blobs.
    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(serde_json::to_string(self).expect("config serializes"));
        h.finalize().into()
    }
}

/// Per-epoch losses recorded during fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// A fine-tuned encoder plus classification head.
#[derive(Debug)]
pub struct StfModel {
    pub backend: Box<dyn EncoderBackend>,
    /// Head weights, n_classes x embedding_dim row-major.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
    pub n_classes: usize,
    pub config: FinetuneConfig,
    pub history: Vec<EpochLoss>,
    /// Inputs that hit the token cap during training.
    pub truncated_inputs: usize,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / s).collect()
}

fn argmax_lowest(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

fn head_logits(head_w: &[f64], head_b: &[f64], dim: usize, row: &[f64]) -> Vec<f64> {
    head_b
        .iter()
        .enumerate()
        .map(|(c, b)| {
            b + head_w[c * dim..(c + 1) * dim]
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
        })
        .collect()
}

/// Deterministic small-magnitude head initialization. Non-zero so the very
/// first step already sends gradient into the backend.
pub fn initial_head(dim: usize, n_classes: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x4845_4144));
    let w = (0..n_classes * dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let b = vec![0.0; n_classes];
    (w, b)
}

/// Mean cross-entropy of head(encode(text)) over a labeled set.
pub fn head_loss(
    backend: &dyn EncoderBackend,
    head_w: &[f64],
    head_b: &[f64],
    texts: &[&str],
    labels: &[usize],
) -> f64 {
    let dim = backend.embedding_dim();
    let mut total = 0.0;
    for (t, y) in texts.iter().zip(labels) {
        let row = backend.encode(t).into_values();
        let p = softmax(&head_logits(head_w, head_b, dim, &row));
        total -= p[*y].max(1e-300).ln();
    }
    total / texts.len() as f64
}

/// Analytic gradient of [`head_loss`] w.r.t. the head weights and bias.
pub fn head_gradient(
    backend: &dyn EncoderBackend,
    head_w: &[f64],
    head_b: &[f64],
    texts: &[&str],
    labels: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let dim = backend.embedding_dim();
    let k = head_b.len();
    let mut gw = vec![0.0; head_w.len()];
    let mut gb = vec![0.0; k];
    for (t, y) in texts.iter().zip(labels) {
        let row = backend.encode(t).into_values();
        let mut dz = softmax(&head_logits(head_w, head_b, dim, &row));
        dz[*y] -= 1.0;
        for c in 0..k {
            gb[c] += dz[c];
            for (j, x) in row.iter().enumerate() {
                gw[c * dim + j] += dz[c] * x;
            }
        }
    }
    let n = texts.len() as f64;
    for g in gw.iter_mut().chain(gb.iter_mut()) {
        *g /= n;
    }
    (gw, gb)
}

/// Fine-tunes the backend and a fresh zero-initialized head end-to-end,
/// minimizing cross-entropy with Adam for `config.epochs` epochs. Per-epoch
/// train/validation losses are recorded; everything derives from the seed.
pub fn finetune(
    mut backend: Box<dyn EncoderBackend>,
    train_texts: &[String],
    train_labels: &[usize],
    val_texts: &[String],
    val_labels: &[usize],
    n_classes: usize,
    config: FinetuneConfig,
) -> Result<StfModel> {
    if !backend.trainable() {
        return Err(Error::Config(format!(
            "backend {:?} is frozen (trainable = false); fine-tuning requires a trainable backend",
            backend.name()
        )));
    }
    if n_classes < 2 {
        return Err(Error::invalid("n_classes", "need at least 2 classes"));
    }
    if train_texts.is_empty() || train_texts.len() != train_labels.len() {
        return Err(Error::Evaluation(format!(
            "finetune: {} train texts vs {} labels",
            train_texts.len(),
            train_labels.len()
        )));
    }
    for l in train_labels.iter().chain(val_labels) {
        if *l >= n_classes {
            return Err(Error::invalid("labels", "label outside n_classes"));
        }
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be positive"));
    }

    let dim = backend.embedding_dim();
    let (mut head_w, mut head_b) = initial_head(dim, n_classes, config.seed);
    let mut head_opt = Adam::new(config.learning_rate);
    let mut backend_opt = SparseAdam::new(config.learning_rate, backend.param_len());

    let divergence = || Error::Divergence {
        config: serde_json::to_string(&config).unwrap_or_default(),
    };

    let mut history = Vec::with_capacity(config.epochs);
    let mut truncated_inputs = 0usize;
    for t in train_texts {
        if backend.encode_detailed(t).1 {
            truncated_inputs += 1;
        }
    }

    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, epoch as u64));
        let mut order: Vec<usize> = (0..train_texts.len()).collect();
        order.shuffle(&mut rng);

        // Summed in sample order at the end so the reported loss does not
        // depend on the shuffle.
        let mut sample_losses = vec![0.0; train_texts.len()];
        for batch in order.chunks(config.batch_size) {
            let texts: Vec<&str> = batch.iter().map(|i| train_texts[*i].as_str()).collect();
            let rows = backend.forward(&texts);

            let mut gw = vec![0.0; head_w.len()];
            let mut gb = vec![0.0; n_classes];
            let mut grad_rows = Vec::with_capacity(rows.len());
            for (row, idx) in rows.iter().zip(batch) {
                let y = train_labels[*idx];
                let p = softmax(&head_logits(&head_w, &head_b, dim, row));
                let loss = -p[y].max(1e-300).ln();
                if !loss.is_finite() {
                    return Err(divergence());
                }
                sample_losses[*idx] = loss;
                let mut dz = p;
                dz[y] -= 1.0;
                let scale = 1.0 / batch.len() as f64;
                let mut drow = vec![0.0; dim];
                for c in 0..n_classes {
                    let d = dz[c] * scale;
                    gb[c] += d;
                    for (j, x) in row.iter().enumerate() {
                        gw[c * dim + j] += d * x;
                        drow[j] += head_w[c * dim + j] * d;
                    }
                }
                grad_rows.push(drow);
            }

            let backend_grads = backend.backward(&texts, &grad_rows);
            backend_opt.step(backend.params_mut(), &backend_grads);
            head_opt.step(&mut [&mut head_w, &mut head_b], &[&gw, &gb]);
        }

        let train_loss = sample_losses.iter().sum::<f64>() / train_texts.len() as f64;
        let val_loss = if val_texts.is_empty() {
            f64::NAN
        } else {
            let refs: Vec<&str> = val_texts.iter().map(|s| s.as_str()).collect();
            head_loss(backend.as_ref(), &head_w, &head_b, &refs, val_labels)
        };
        if !train_loss.is_finite() {
            return Err(divergence());
        }
        history.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
    }

    Ok(StfModel {
        backend,
        head_w,
        head_b,
        n_classes,
        config,
        history,
        truncated_inputs,
    })
}

/// Predicted classes and probability rows for a batch of texts.
pub fn stf_predict(model: &StfModel, texts: &[&str]) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let dim = model.backend.embedding_dim();
    if model.head_w.len() != model.n_classes * dim {
        return Err(Error::DimensionMismatch {
            expected: model.n_classes * dim,
            found: model.head_w.len(),
        });
    }
    let mut classes = Vec::with_capacity(texts.len());
    let mut rows = Vec::with_capacity(texts.len());
    for t in texts {
        let row = model.backend.encode(t).into_values();
        let p = softmax(&head_logits(&model.head_w, &model.head_b, dim, &row));
        classes.push(argmax_lowest(&p));
        rows.push(p);
    }
    Ok((classes, rows))
}

const BLOB_MAGIC: &[u8; 4] = b"STFB";
const BLOB_VERSION: u32 = 1;

impl StfModel {
    /// Writes `head.json` (head weights + config + provenance) and
    /// `backend.stfb` (opaque versioned binary with the config hash) into
    /// `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let head = serde_json::json!({
            "format_version": 1,
            "backend": self.backend.name(),
            "embedding_dim": self.backend.embedding_dim(),
            "n_classes": self.n_classes,
            "config": self.config,
            "head_w": self.head_w,
            "head_b": self.head_b,
            "history": self.history,
            "truncated_inputs": self.truncated_inputs,
        });
        let head_path = dir.join("head.json");
        std::fs::write(&head_path, serde_json::to_string_pretty(&head).expect("serializes"))
            .map_err(|e| Error::io(&head_path, e))?;
        let blob_path = dir.join("backend.stfb");
        write_backend_blob(self.backend.as_ref(), &self.config.hash(), &blob_path)
    }
}

/// Serializes a backend into the versioned binary blob format:
/// magic, version, config hash, name, dimension, seed hint, parameters.
pub fn write_backend_blob(
    backend: &dyn EncoderBackend,
    config_hash: &[u8; 32],
    path: &Path,
) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let io = |e: std::io::Error| Error::io(path, e);
    f.write_all(BLOB_MAGIC).map_err(io)?;
    f.write_all(&BLOB_VERSION.to_le_bytes()).map_err(io)?;
    f.write_all(config_hash).map_err(io)?;
    let name = backend.name().as_bytes();
    f.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
    f.write_all(name).map_err(io)?;
    f.write_all(&(backend.embedding_dim() as u64).to_le_bytes())
        .map_err(io)?;
    let params = backend.params();
    f.write_all(&(params.len() as u64).to_le_bytes()).map_err(io)?;
    for p in &params {
        f.write_all(&p.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

/// Reads a backend blob back into a hashed encoder.
pub fn read_backend_blob(path: &Path) -> Result<(HashedEncoder, [u8; 32])> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let io = |e: std::io::Error| Error::io(path, e);
    let bad = |msg: &str| Error::Backend {
        name: path.display().to_string(),
        message: msg.to_string(),
    };
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic).map_err(io)?;
    if &magic != BLOB_MAGIC {
        return Err(bad("not a backend blob (bad magic)"));
    }
    let mut u32buf = [0u8; 4];
    f.read_exact(&mut u32buf).map_err(io)?;
    if u32::from_le_bytes(u32buf) != BLOB_VERSION {
        return Err(bad("unsupported blob version"));
    }
    let mut config_hash = [0u8; 32];
    f.read_exact(&mut config_hash).map_err(io)?;
    f.read_exact(&mut u32buf).map_err(io)?;
    let name_len = u32::from_le_bytes(u32buf) as usize;
    let mut name = vec![0u8; name_len];
    f.read_exact(&mut name).map_err(io)?;
    let name = String::from_utf8(name).map_err(|_| bad("blob name is not UTF-8"))?;
    let mut u64buf = [0u8; 8];
    f.read_exact(&mut u64buf).map_err(io)?;
    let dim = u64::from_le_bytes(u64buf) as usize;
    f.read_exact(&mut u64buf).map_err(io)?;
    let n_params = u64::from_le_bytes(u64buf) as usize;
    if n_params != BUCKETS * dim + dim * dim + dim {
        return Err(bad("parameter count does not match the declared dimension"));
    }
    let mut params = vec![0.0f64; n_params];
    let mut fbuf = [0u8; 8];
    for p in params.iter_mut() {
        f.read_exact(&mut fbuf).map_err(io)?;
        *p = f64::from_le_bytes(fbuf);
    }
    Ok((HashedEncoder::from_parts(name, dim, 0, params), config_hash))
}

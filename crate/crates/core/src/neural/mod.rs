//! Desk-scale neural text classifiers over frozen pre-trained embeddings.
//!
//! Three architectures share one training loop:
//!
//! - CNN: embedding lookup -> 1-D convolutions (filter widths 3/4/5, `size`
//!   filters each, configured activation) -> global max pooling over valid
//!   positions -> dropout -> dense softmax.
//! - LSTM: embedding -> recurrent layer of `size` units -> last hidden state
//!   -> dropout -> dense softmax.
//! - BiLSTM: forward and backward LSTMs, concatenated last states, then as
//!   LSTM.
//!
//! Sequences are truncated at `max_len` and never padded: the recurrent
//! layers stop at the real length and max pooling only sees windows inside
//! the real sequence, so short documents produce identical outputs no matter
//! the configured maximum. Training minimizes cross-entropy with Adam or SGD
//! and early-stops on validation loss, restoring the best weights. Weight
//! init, batch order, and dropout masks all derive from the config seed.

mod lstm;
pub(crate) mod optim;

pub use optim::{Adam, Optimizer, Sgd, SparseAdam};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::preprocess::TokenizedTweet;
use lstm::LstmCell;

/// CNN filter widths; `size` filters of each width.
pub const CNN_FILTER_WIDTHS: [usize; 3] = [3, 4, 5];
/// Default sequence cap, matching the sentence-encoder setting.
pub const DEFAULT_MAX_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Cnn,
    Lstm,
    Bilstm,
}

impl Arch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::Cnn => "cnn",
            Arch::Lstm => "lstm",
            Arch::Bilstm => "bilstm",
        }
    }

    pub fn from_name(name: &str) -> Option<Arch> {
        match name {
            "cnn" => Some(Arch::Cnn),
            "lstm" => Some(Arch::Lstm),
            "bilstm" => Some(Arch::Bilstm),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    fn derivative_at_output(&self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Hyperparameters for one neural classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub arch: Arch,
    /// Hidden units (LSTM) or filters per width (CNN).
    pub size: usize,
    pub dropout: f64,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_len: usize,
    pub seed: u64,
}

impl NeuralConfig {
    pub fn new(arch: Arch) -> Self {
        NeuralConfig {
            arch,
            size: 50,
            dropout: 0.25,
            activation: Activation::Relu,
            optimizer: OptimizerKind::Adam,
            batch_size: 32,
            learning_rate: 0.01,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
        }
    }
}

/// One epoch of training bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub best_val_loss: f64,
    pub patience_left: usize,
}

#[derive(Debug, Clone)]
struct Dense {
    w: Vec<f64>, // out x in, row-major
    b: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
}

impl Dense {
    fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / (in_dim as f64).sqrt();
        Dense {
            w: (0..out_dim * in_dim)
                .map(|_| rng.gen_range(-scale..scale))
                .collect(),
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.b.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &self.w[r * self.in_dim..(r + 1) * self.in_dim];
            *zr += row.iter().zip(x).map(|(w, xv)| w * xv).sum::<f64>();
        }
        z
    }

    fn backward(&self, x: &[f64], dz: &[f64], gw: &mut [f64], gb: &mut [f64], dx: &mut [f64]) {
        for r in 0..self.out_dim {
            let d = dz[r];
            gb[r] += d;
            if d == 0.0 {
                continue;
            }
            for (j, xv) in x.iter().enumerate() {
                gw[r * self.in_dim + j] += d * xv;
                dx[j] += self.w[r * self.in_dim + j] * d;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Conv1d {
    w: Vec<f64>, // filters x (width * in_dim), row-major
    b: Vec<f64>,
    width: usize,
    filters: usize,
    in_dim: usize,
}

impl Conv1d {
    fn new(width: usize, filters: usize, in_dim: usize, rng: &mut impl Rng) -> Self {
        let fan_in = (width * in_dim) as f64;
        let scale = 1.0 / fan_in.sqrt();
        Conv1d {
            w: (0..filters * width * in_dim)
                .map(|_| rng.gen_range(-scale..scale))
                .collect(),
            b: vec![0.0; filters],
            width,
            filters,
            in_dim,
        }
    }

    fn positions(&self, len: usize) -> usize {
        if len >= self.width {
            len - self.width + 1
        } else {
            1
        }
    }

    /// Window values at position t (zero beyond the sequence end).
    fn window_dot(&self, xs: &[&[f64]], t: usize, filter: usize) -> f64 {
        let row = &self.w[filter * self.width * self.in_dim..(filter + 1) * self.width * self.in_dim];
        let mut acc = self.b[filter];
        for k in 0..self.width {
            if let Some(x) = xs.get(t + k) {
                let block = &row[k * self.in_dim..(k + 1) * self.in_dim];
                acc += block.iter().zip(*x).map(|(w, xv)| w * xv).sum::<f64>();
            }
        }
        acc
    }

    /// Activated global max per filter plus the argmax position and the
    /// pre-activation output there.
    fn forward_pooled(&self, xs: &[&[f64]], act: Activation) -> (Vec<f64>, Vec<(usize, f64)>) {
        let positions = self.positions(xs.len());
        let mut pooled = vec![f64::NEG_INFINITY; self.filters];
        let mut arg = vec![(0usize, 0.0f64); self.filters];
        for t in 0..positions {
            for f in 0..self.filters {
                let z = self.window_dot(xs, t, f);
                let a = act.apply(z);
                if a > pooled[f] {
                    pooled[f] = a;
                    arg[f] = (t, a);
                }
            }
        }
        (pooled, arg)
    }

    /// Routes pooled gradients back to the argmax windows.
    fn backward_pooled(
        &self,
        xs: &[&[f64]],
        arg: &[(usize, f64)],
        dpooled: &[f64],
        act: Activation,
        gw: &mut [f64],
        gb: &mut [f64],
    ) {
        for f in 0..self.filters {
            let (t, a) = arg[f];
            let dz = dpooled[f] * act.derivative_at_output(a);
            if dz == 0.0 {
                continue;
            }
            gb[f] += dz;
            let base = f * self.width * self.in_dim;
            for k in 0..self.width {
                if let Some(x) = xs.get(t + k) {
                    for (j, xv) in x.iter().enumerate() {
                        gw[base + k * self.in_dim + j] += dz * xv;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Net {
    Cnn(Vec<Conv1d>),
    Lstm(LstmCell),
    Bilstm(LstmCell, LstmCell),
}

/// A neural classifier handle; `train` fits it, `predict` runs inference.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub config: NeuralConfig,
    n_classes: usize,
    embed_dim: usize,
    net: Net,
    dense: Dense,
    trained: bool,
}

/// Builds an untrained model for the given embedding table and class count.
pub fn build_model(
    config: NeuralConfig,
    embeddings: &EmbeddingTable,
    n_classes: usize,
) -> Result<NeuralModel> {
    if n_classes < 2 {
        return Err(Error::invalid("n_classes", "need at least 2 classes"));
    }
    if config.size == 0 || config.batch_size == 0 || config.max_len == 0 {
        return Err(Error::invalid("config", "size, batch_size, max_len must be positive"));
    }
    let dim = embeddings.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (net, feat_dim) = match config.arch {
        Arch::Cnn => {
            let convs = CNN_FILTER_WIDTHS
                .iter()
                .map(|w| Conv1d::new(*w, config.size, dim, &mut rng))
                .collect::<Vec<_>>();
            (Net::Cnn(convs), CNN_FILTER_WIDTHS.len() * config.size)
        }
        Arch::Lstm => (Net::Lstm(LstmCell::new(dim, config.size, &mut rng)), config.size),
        Arch::Bilstm => (
            Net::Bilstm(
                LstmCell::new(dim, config.size, &mut rng),
                LstmCell::new(dim, config.size, &mut rng),
            ),
            // Forward and backward states concatenate.
            2 * config.size,
        ),
    };
    let dense = Dense::new(feat_dim, n_classes, &mut rng);
    Ok(NeuralModel {
        config,
        n_classes,
        embed_dim: dim,
        net,
        dense,
        trained: false,
    })
}

/// Embedded token sequence, truncated at max_len (no padding).
fn encode_doc(doc: &TokenizedTweet, table: &EmbeddingTable, max_len: usize) -> Vec<Vec<f64>> {
    doc.tokens
        .iter()
        .take(max_len)
        .map(|t| {
            table
                .get(t)
                .map(|v| v.to_vec())
                .unwrap_or_else(|| vec![0.0; table.dimension()])
        })
        .collect()
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

struct SampleGrads {
    blocks: Vec<Vec<f64>>,
}

impl NeuralModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Convolution parameters: sum over widths of (width*dim + 1) * filters.
    pub fn conv_param_count(&self) -> usize {
        match &self.net {
            Net::Cnn(convs) => convs.iter().map(|c| c.w.len() + c.b.len()).sum(),
            _ => 0,
        }
    }

    /// Recurrent parameters: 4 * (H*(D+H) + H) per direction.
    pub fn recurrent_param_count(&self) -> usize {
        match &self.net {
            Net::Cnn(_) => 0,
            Net::Lstm(cell) => cell.param_count(),
            Net::Bilstm(f, b) => f.param_count() + b.param_count(),
        }
    }

    /// Total trainable parameters (the embedding table is frozen).
    pub fn param_count(&self) -> usize {
        let net = match &self.net {
            Net::Cnn(convs) => convs.iter().map(|c| c.w.len() + c.b.len()).sum::<usize>(),
            Net::Lstm(cell) => cell.param_count(),
            Net::Bilstm(f, b) => f.param_count() + b.param_count(),
        };
        net + self.dense.w.len() + self.dense.b.len()
    }

    /// Width of the pooled feature vector fed to the dense layer.
    pub fn feature_dim(&self) -> usize {
        self.dense.in_dim
    }

    /// Flat parameter vector (documented block order: conv/lstm blocks, then
    /// dense weights and bias).
    pub fn get_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.net {
            Net::Cnn(convs) => {
                for c in convs {
                    out.extend_from_slice(&c.w);
                    out.extend_from_slice(&c.b);
                }
            }
            Net::Lstm(c) => {
                out.extend_from_slice(&c.wx);
                out.extend_from_slice(&c.wh);
                out.extend_from_slice(&c.b);
            }
            Net::Bilstm(f, b) => {
                for c in [f, b] {
                    out.extend_from_slice(&c.wx);
                    out.extend_from_slice(&c.wh);
                    out.extend_from_slice(&c.b);
                }
            }
        }
        out.extend_from_slice(&self.dense.w);
        out.extend_from_slice(&self.dense.b);
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut pos = 0;
        let mut take = |dst: &mut Vec<f64>| {
            let len = dst.len();
            dst.copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        };
        match &mut self.net {
            Net::Cnn(convs) => {
                for c in convs {
                    take(&mut c.w);
                    take(&mut c.b);
                }
            }
            Net::Lstm(c) => {
                take(&mut c.wx);
                take(&mut c.wh);
                take(&mut c.b);
            }
            Net::Bilstm(f, b) => {
                for c in [f, b] {
                    take(&mut c.wx);
                    take(&mut c.wh);
                    take(&mut c.b);
                }
            }
        }
        take(&mut self.dense.w);
        take(&mut self.dense.b);
        debug_assert_eq!(pos, flat.len());
    }

    fn zero_grads(&self) -> SampleGrads {
        let mut blocks = Vec::new();
        match &self.net {
            Net::Cnn(convs) => {
                for c in convs {
                    blocks.push(vec![0.0; c.w.len()]);
                    blocks.push(vec![0.0; c.b.len()]);
                }
            }
            Net::Lstm(c) => {
                blocks.push(vec![0.0; c.wx.len()]);
                blocks.push(vec![0.0; c.wh.len()]);
                blocks.push(vec![0.0; c.b.len()]);
            }
            Net::Bilstm(f, b) => {
                for c in [f, b] {
                    blocks.push(vec![0.0; c.wx.len()]);
                    blocks.push(vec![0.0; c.wh.len()]);
                    blocks.push(vec![0.0; c.b.len()]);
                }
            }
        }
        blocks.push(vec![0.0; self.dense.w.len()]);
        blocks.push(vec![0.0; self.dense.b.len()]);
        SampleGrads { blocks }
    }

    /// Pooled feature vector for one encoded doc.
    fn features(&self, xs: &[&[f64]]) -> Vec<f64> {
        match &self.net {
            Net::Cnn(convs) => {
                let mut feat = Vec::with_capacity(self.dense.in_dim);
                for c in convs {
                    let (pooled, _) = c.forward_pooled(xs, self.config.activation);
                    feat.extend(pooled);
                }
                feat
            }
            Net::Lstm(cell) => cell.forward(xs).last_hidden(cell.hidden),
            Net::Bilstm(fwd, bwd) => {
                let mut feat = fwd.forward(xs).last_hidden(fwd.hidden);
                let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
                feat.extend(bwd.forward(&rev).last_hidden(bwd.hidden));
                feat
            }
        }
    }

    /// Cross-entropy loss plus gradient accumulation for one sample.
    /// `dropout_mask` is `None` at evaluation time.
    fn sample_loss_grad(
        &self,
        xs: &[&[f64]],
        label: usize,
        dropout_mask: Option<&[f64]>,
        grads: Option<&mut SampleGrads>,
    ) -> f64 {
        // Forward.
        let raw_feat = self.features(xs);
        let feat: Vec<f64> = match dropout_mask {
            Some(mask) => raw_feat.iter().zip(mask).map(|(f, m)| f * m).collect(),
            None => raw_feat.clone(),
        };
        let logits = self.dense.forward(&feat);
        let p = softmax(&logits);
        let loss = -p[label].max(1e-300).ln();

        let Some(grads) = grads else {
            return loss;
        };

        // Backward.
        let mut dz: Vec<f64> = p;
        dz[label] -= 1.0;
        let n_blocks = grads.blocks.len();
        let mut dfeat = vec![0.0; feat.len()];
        {
            let (gw, gb) = {
                let (a, b) = grads.blocks.split_at_mut(n_blocks - 1);
                (&mut a[n_blocks - 2], &mut b[0])
            };
            self.dense.backward(&feat, &dz, gw, gb, &mut dfeat);
        }
        if let Some(mask) = dropout_mask {
            for (d, m) in dfeat.iter_mut().zip(mask) {
                *d *= m;
            }
        }

        match &self.net {
            Net::Cnn(convs) => {
                let mut offset = 0;
                for (ci, c) in convs.iter().enumerate() {
                    let (_, arg) = c.forward_pooled(xs, self.config.activation);
                    let dpooled = &dfeat[offset..offset + c.filters];
                    let (gw, gb) = {
                        let (a, b) = grads.blocks.split_at_mut(2 * ci + 1);
                        (&mut a[2 * ci], &mut b[0])
                    };
                    c.backward_pooled(xs, &arg, dpooled, self.config.activation, gw, gb);
                    offset += c.filters;
                }
            }
            Net::Lstm(cell) => {
                let trace = cell.forward(xs);
                let (gwx, rest) = grads.blocks.split_at_mut(1);
                let (gwh, gb) = rest.split_at_mut(1);
                cell.backward(xs, &trace, &dfeat, &mut gwx[0], &mut gwh[0], &mut gb[0][0..]);
            }
            Net::Bilstm(fwd, bwd) => {
                let h = fwd.hidden;
                let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
                let trace_f = fwd.forward(xs);
                let trace_b = bwd.forward(&rev);
                let (gf, gbk) = grads.blocks.split_at_mut(3);
                let (gfx, rest) = gf.split_at_mut(1);
                let (gfh, gfb) = rest.split_at_mut(1);
                fwd.backward(xs, &trace_f, &dfeat[..h], &mut gfx[0], &mut gfh[0], &mut gfb[0]);
                let (gbx, rest) = gbk.split_at_mut(1);
                let (gbh, gbb) = rest.split_at_mut(1);
                bwd.backward(&rev, &trace_b, &dfeat[h..], &mut gbx[0], &mut gbh[0], &mut gbb[0]);
            }
        }
        loss
    }

    fn apply_step(&mut self, optimizer: &mut Optimizer, grads: &SampleGrads, scale: f64) {
        let scaled: Vec<Vec<f64>> = grads
            .blocks
            .iter()
            .map(|b| b.iter().map(|g| g * scale).collect())
            .collect();
        let grad_refs: Vec<&[f64]> = scaled.iter().map(|b| b.as_slice()).collect();
        let mut params: Vec<&mut [f64]> = Vec::new();
        match &mut self.net {
            Net::Cnn(convs) => {
                for c in convs {
                    params.push(&mut c.w);
                    params.push(&mut c.b);
                }
            }
            Net::Lstm(c) => {
                params.push(&mut c.wx);
                params.push(&mut c.wh);
                params.push(&mut c.b);
            }
            Net::Bilstm(f, b) => {
                for c in [f, b] {
                    params.push(&mut c.wx);
                    params.push(&mut c.wh);
                    params.push(&mut c.b);
                }
            }
        }
        params.push(&mut self.dense.w);
        params.push(&mut self.dense.b);
        optimizer.step(&mut params, &grad_refs);
    }

    /// Mean cross-entropy over encoded docs, dropout off.
    pub fn loss(
        &self,
        embeddings: &EmbeddingTable,
        docs: &[&TokenizedTweet],
        labels: &[usize],
    ) -> Result<f64> {
        if docs.is_empty() {
            return Err(Error::Evaluation("loss over empty set".to_string()));
        }
        let mut total = 0.0;
        for (doc, label) in docs.iter().zip(labels) {
            let enc = encode_doc(doc, embeddings, self.config.max_len);
            let xs: Vec<&[f64]> = enc.iter().map(|v| v.as_slice()).collect();
            total += self.sample_loss_grad(&xs, *label, None, None);
        }
        Ok(total / docs.len() as f64)
    }

    /// Mean loss and flat analytic gradient (dropout off); block order
    /// matches `get_params`.
    pub fn loss_and_gradient(
        &self,
        embeddings: &EmbeddingTable,
        docs: &[&TokenizedTweet],
        labels: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        if docs.is_empty() {
            return Err(Error::Evaluation("gradient over empty set".to_string()));
        }
        let mut grads = self.zero_grads();
        let mut total = 0.0;
        for (doc, label) in docs.iter().zip(labels) {
            let enc = encode_doc(doc, embeddings, self.config.max_len);
            let xs: Vec<&[f64]> = enc.iter().map(|v| v.as_slice()).collect();
            total += self.sample_loss_grad(&xs, *label, None, Some(&mut grads));
        }
        let n = docs.len() as f64;
        let flat: Vec<f64> = grads
            .blocks
            .iter()
            .flat_map(|b| b.iter().map(|g| g / n))
            .collect();
        Ok((total / n, flat))
    }

    /// Trains with mini-batch gradient descent and early stopping on the
    /// validation loss (`patience` epochs without improvement; best weights
    /// restored). Returns the per-epoch history.
    pub fn train(
        &mut self,
        embeddings: &EmbeddingTable,
        train_docs: &[&TokenizedTweet],
        train_labels: &[usize],
        val_docs: &[&TokenizedTweet],
        val_labels: &[usize],
        patience: usize,
        max_epochs: usize,
    ) -> Result<Vec<TrainState>> {
        if train_docs.is_empty() || val_docs.is_empty() {
            return Err(Error::Evaluation("train/validation splits must be non-empty".into()));
        }
        if embeddings.dimension() != self.embed_dim {
            return Err(Error::DimensionMismatch {
                expected: self.embed_dim,
                found: embeddings.dimension(),
            });
        }
        for l in train_labels.iter().chain(val_labels) {
            if *l >= self.n_classes {
                return Err(Error::invalid("labels", "label outside n_classes"));
            }
        }

        let encoded: Vec<Vec<Vec<f64>>> = train_docs
            .iter()
            .map(|d| encode_doc(d, embeddings, self.config.max_len))
            .collect();

        let mut optimizer = match self.config.optimizer {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(self.config.learning_rate)),
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd::new(self.config.learning_rate)),
        };

        let config_echo = serde_json::to_string(&self.config).unwrap_or_default();
        let divergence = move || Error::Divergence {
            config: config_echo.clone(),
        };

        let mut history: Vec<TrainState> = Vec::new();
        let mut best_val = f64::INFINITY;
        let mut best_params: Option<Vec<f64>> = None;
        let mut patience_left = patience;

        let feat_dim = self.dense.in_dim;
        let keep = 1.0 - self.config.dropout;

        for epoch in 0..max_epochs {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, epoch as u64));
            let mut order: Vec<usize> = (0..train_docs.len()).collect();
            order.shuffle(&mut rng);

            let mut epoch_loss = 0.0;
            for batch in order.chunks(self.config.batch_size) {
                let mut grads = self.zero_grads();
                for idx in batch {
                    let xs: Vec<&[f64]> = encoded[*idx].iter().map(|v| v.as_slice()).collect();
                    let mask: Vec<f64> = if self.config.dropout > 0.0 {
                        (0..feat_dim)
                            .map(|_| {
                                if rng.gen::<f64>() < keep {
                                    1.0 / keep
                                } else {
                                    0.0
                                }
                            })
                            .collect()
                    } else {
                        vec![1.0; feat_dim]
                    };
                    let loss = self.sample_loss_grad(
                        &xs,
                        train_labels[*idx],
                        Some(&mask),
                        Some(&mut grads),
                    );
                    if !loss.is_finite() {
                        return Err(divergence());
                    }
                    epoch_loss += loss;
                }
                self.apply_step(&mut optimizer, &grads, 1.0 / batch.len() as f64);
            }
            let train_loss = epoch_loss / train_docs.len() as f64;
            let val_loss = self.loss(embeddings, val_docs, val_labels)?;
            if !val_loss.is_finite() || !train_loss.is_finite() {
                return Err(divergence());
            }

            // patience_left counts the non-improving epochs still tolerated
            // before the next one ends training; with patience = 0 the first
            // non-improving epoch is the last.
            let improved = val_loss < best_val;
            let mut stop = false;
            if improved {
                best_val = val_loss;
                best_params = Some(self.get_params());
                patience_left = patience;
            } else if patience_left == 0 {
                stop = true;
            } else {
                patience_left -= 1;
            }
            history.push(TrainState {
                epoch,
                train_loss,
                val_loss,
                best_val_loss: best_val,
                patience_left,
            });
            if stop {
                break;
            }
        }

        if let Some(p) = best_params {
            self.set_params(&p);
        }
        self.trained = true;
        Ok(history)
    }

    /// Predicted classes and probability rows (each summing to one).
    pub fn predict(
        &self,
        embeddings: &EmbeddingTable,
        docs: &[&TokenizedTweet],
    ) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        if embeddings.dimension() != self.embed_dim {
            return Err(Error::DimensionMismatch {
                expected: self.embed_dim,
                found: embeddings.dimension(),
            });
        }
        let mut classes = Vec::with_capacity(docs.len());
        let mut rows = Vec::with_capacity(docs.len());
        for doc in docs {
            let enc = encode_doc(doc, embeddings, self.config.max_len);
            let xs: Vec<&[f64]> = enc.iter().map(|v| v.as_slice()).collect();
            let feat = self.features(&xs);
            let p = softmax(&self.dense.forward(&feat));
            classes.push(argmax_lowest(&p));
            rows.push(p);
        }
        Ok((classes, rows))
    }

    /// Per-epoch history as a JSON document.
    pub fn history_json(history: &[TrainState]) -> String {
        serde_json::to_string_pretty(history).expect("history serializes")
    }

    /// Serializes weights with config and seed for provenance.
    pub fn weights_json(&self) -> String {
        serde_json::json!({
            "format_version": 1,
            "config": self.config,
            "n_classes": self.n_classes,
            "embed_dim": self.embed_dim,
            "params": self.get_params(),
        })
        .to_string()
    }
}

#[cfg(test)]
mod tests;

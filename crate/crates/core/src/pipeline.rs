//! Ready-made classifier wirings: a model family plus a feature plan,
//! implementing [`Classifier`] so the cross-validation harness can fit all
//! fold-dependent statistics (vocabulary, IDF, encoder weights) on training
//! folds only.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::{
    lr_fit, lr_predict, mnb_fit, mnb_predict, ClassWeight, LrConfig, LrModel, MnbModel, Penalty,
};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::evaluate::{Classifier, GridPoint, HyperGrid};
use crate::features::{
    build_vocabulary, bow_vector, embed_document, DenseVector, EmbeddingTable, Pooling,
    SparseVector, TfidfModel, Vocabulary,
};
use crate::finetune::{create_backend, finetune, stf_predict, FinetuneConfig, StfModel};
use crate::neural::{build_model, Arch, NeuralConfig, NeuralModel};
use crate::preprocess::TokenizedTweet;

/// Feature plans for the classical models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Bow,
    Tfidf,
    Embedding,
}

impl FeatureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Embedding => "embedding",
        }
    }

    pub fn from_name(name: &str) -> Result<FeatureKind> {
        match name {
            "bow" => Ok(FeatureKind::Bow),
            "tfidf" => Ok(FeatureKind::Tfidf),
            "embedding" => Ok(FeatureKind::Embedding),
            other => Err(Error::Config(format!("unknown feature kind {other:?}"))),
        }
    }
}

/// A fully specified, runnable model: family, hyperparameters, feature plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Mnb {
        alpha: f64,
        fit_prior: bool,
        features: FeatureKind,
    },
    Lr {
        config: LrConfig,
        features: FeatureKind,
    },
    Neural {
        config: NeuralConfig,
        patience: usize,
        max_epochs: usize,
    },
    Stf {
        backend: String,
        dim: usize,
        config: FinetuneConfig,
    },
}

impl ModelSpec {
    /// Report name, e.g. `mnb-bow`, `lr-tfidf`, `cnn`, `stf:stub`.
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Mnb { features, .. } => format!("mnb-{}", features.as_str()),
            ModelSpec::Lr { features, .. } => format!("lr-{}", features.as_str()),
            ModelSpec::Neural { config, .. } => config.arch.as_str().to_string(),
            ModelSpec::Stf { backend, .. } => format!("stf:{backend}"),
        }
    }

    /// Whether this spec needs a word-embedding table.
    pub fn needs_embeddings(&self) -> bool {
        matches!(
            self,
            ModelSpec::Mnb {
                features: FeatureKind::Embedding,
                ..
            } | ModelSpec::Lr {
                features: FeatureKind::Embedding,
                ..
            } | ModelSpec::Neural { .. }
        )
    }

    /// Serialized hyperparameters for provenance.
    pub fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")
    }

    /// Default hyperparameters per family (`alpha = 1`, `fit_prior = true`,
    /// `C = 1`, `penalty = l2`).
    pub fn default_for(family: &str, features: FeatureKind) -> Result<ModelSpec> {
        match family {
            "mnb" => Ok(ModelSpec::Mnb {
                alpha: 1.0,
                fit_prior: true,
                features,
            }),
            "lr" => Ok(ModelSpec::Lr {
                config: LrConfig::default(),
                features,
            }),
            "cnn" | "lstm" | "bilstm" => Ok(ModelSpec::Neural {
                config: NeuralConfig::new(Arch::from_name(family).expect("matched above")),
                patience: 3,
                max_epochs: 50,
            }),
            other => match other.strip_prefix("stf:") {
                Some(backend) => Ok(ModelSpec::Stf {
                    backend: backend.to_string(),
                    dim: 32,
                    config: FinetuneConfig::default(),
                }),
                None => Err(Error::Config(format!(
                    "unknown model {other:?} (expected mnb, lr, cnn, lstm, bilstm, or stf:<backend>)"
                ))),
            },
        }
    }

    /// Applies one grid point's values onto a copy of this spec.
    pub fn with_grid_point(&self, point: &GridPoint) -> Result<ModelSpec> {
        let mut spec = self.clone();
        for (key, value) in point {
            spec.apply_param(key, value)?;
        }
        Ok(spec)
    }

    fn apply_param(&mut self, key: &str, value: &serde_json::Value) -> Result<()> {
        let bad = |k: &str, v: &serde_json::Value| {
            Error::Config(format!("bad grid value {v} for parameter {k:?}"))
        };
        let as_f64 = |v: &serde_json::Value| v.as_f64().ok_or_else(|| bad(key, v));
        let as_usize = |v: &serde_json::Value| {
            v.as_u64().map(|u| u as usize).ok_or_else(|| bad(key, v))
        };
        let as_bool = |v: &serde_json::Value| v.as_bool().ok_or_else(|| bad(key, v));
        let as_str = |v: &serde_json::Value| {
            v.as_str().map(str::to_string).ok_or_else(|| bad(key, v))
        };
        match self {
            ModelSpec::Mnb { alpha, fit_prior, .. } => match key {
                "alpha" => *alpha = as_f64(value)?,
                "fit_prior" => *fit_prior = as_bool(value)?,
                _ => return Err(Error::Config(format!("mnb has no parameter {key:?}"))),
            },
            ModelSpec::Lr { config, .. } => match key {
                "c" | "C" => config.c = as_f64(value)?,
                "penalty" => {
                    config.penalty = match as_str(value)?.as_str() {
                        "l1" => Penalty::L1,
                        "l2" => Penalty::L2,
                        _ => return Err(bad(key, value)),
                    }
                }
                "class_weight" => {
                    config.class_weight = match as_str(value)?.as_str() {
                        "none" => ClassWeight::None,
                        "balanced" => ClassWeight::Balanced,
                        _ => return Err(bad(key, value)),
                    }
                }
                "max_iter" => config.max_iter = as_usize(value)?,
                "tol" => config.tol = as_f64(value)?,
                _ => return Err(Error::Config(format!("lr has no parameter {key:?}"))),
            },
            ModelSpec::Neural { config, .. } => match key {
                "size" => config.size = as_usize(value)?,
                "dropout" => config.dropout = as_f64(value)?,
                "activation" => {
                    config.activation = match as_str(value)?.as_str() {
                        "tanh" => crate::neural::Activation::Tanh,
                        "relu" => crate::neural::Activation::Relu,
                        _ => return Err(bad(key, value)),
                    }
                }
                "optimizer" => {
                    config.optimizer = match as_str(value)?.as_str() {
                        "adam" => crate::neural::OptimizerKind::Adam,
                        "sgd" => crate::neural::OptimizerKind::Sgd,
                        _ => return Err(bad(key, value)),
                    }
                }
                "batch_size" => config.batch_size = as_usize(value)?,
                "learning_rate" => config.learning_rate = as_f64(value)?,
                "max_len" => config.max_len = as_usize(value)?,
                _ => return Err(Error::Config(format!("neural has no parameter {key:?}"))),
            },
            ModelSpec::Stf { config, dim, .. } => match key {
                "epochs" => config.epochs = as_usize(value)?,
                "batch_size" => config.batch_size = as_usize(value)?,
                "learning_rate" => config.learning_rate = as_f64(value)?,
                "dim" => *dim = as_usize(value)?,
                _ => return Err(Error::Config(format!("stf has no parameter {key:?}"))),
            },
        }
        Ok(())
    }

    /// Instantiates a fresh classifier for one fold.
    pub fn make_classifier(
        &self,
        embeddings: Option<&Arc<EmbeddingTable>>,
        fold_seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        if self.needs_embeddings() && embeddings.is_none() {
            return Err(Error::Config(format!(
                "model {} requires a word-embedding table (--embeddings)",
                self.name()
            )));
        }
        Ok(match self.clone() {
            ModelSpec::Mnb {
                alpha,
                fit_prior,
                features,
            } => Box::new(ClassicalPipeline {
                kind: ClassicalKind::Mnb { alpha, fit_prior },
                features,
                embeddings: embeddings.cloned(),
                min_frequency: 1,
                fitted: None,
            }),
            ModelSpec::Lr { config, features } => Box::new(ClassicalPipeline {
                kind: ClassicalKind::Lr(config),
                features,
                embeddings: embeddings.cloned(),
                min_frequency: 1,
                fitted: None,
            }),
            ModelSpec::Neural {
                mut config,
                patience,
                max_epochs,
            } => {
                config.seed = fold_seed;
                Box::new(NeuralPipeline {
                    config,
                    patience,
                    max_epochs,
                    embeddings: embeddings.cloned().expect("checked above"),
                    model: None,
                })
            }
            ModelSpec::Stf {
                backend,
                dim,
                mut config,
            } => {
                config.seed = fold_seed;
                Box::new(StfPipeline {
                    backend_name: backend,
                    dim,
                    config,
                    model: None,
                })
            }
        })
    }
}

/// The shipped hyperparameter grids, keyed by model family.
pub fn default_grid(family: &str) -> Option<HyperGrid> {
    match family {
        "mnb" => Some(
            HyperGrid::new("mnb")
                .axis(
                    "alpha",
                    vec![0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
                )
                .axis("fit_prior", vec![true, false]),
        ),
        "lr" => Some(
            HyperGrid::new("lr")
                .axis("c", vec![0.01, 0.1, 1.0, 10.0])
                .axis("penalty", vec!["l1", "l2"])
                .axis("class_weight", vec!["none", "balanced"]),
        ),
        "cnn" | "lstm" | "bilstm" => Some(
            HyperGrid::new(family)
                .axis("size", vec![50, 75, 100])
                .axis("dropout", vec![0.25, 0.5])
                .axis("activation", vec!["tanh", "relu"])
                .axis("optimizer", vec!["adam", "sgd"])
                .axis("batch_size", vec![8, 16, 32, 64])
                .axis("learning_rate", vec![0.001, 0.002, 0.01, 0.02]),
        ),
        name if name.starts_with("stf") => Some(
            HyperGrid::new(name)
                .axis("epochs", vec![2, 3, 4, 5, 10, 20])
                .axis("batch_size", vec![8, 16, 32])
                .axis("learning_rate", vec![1e-5, 2e-5, 3e-5, 4e-5, 5e-5]),
        ),
        _ => None,
    }
}

#[derive(Debug, Clone)]
enum ClassicalKind {
    Mnb { alpha: f64, fit_prior: bool },
    Lr(LrConfig),
}

#[derive(Debug)]
enum FittedClassical {
    Mnb(MnbModel),
    Lr(LrModel),
}

#[derive(Debug)]
struct FittedFeatures {
    vocab: Option<Vocabulary>,
    tfidf: Option<TfidfModel>,
}

/// MNB or LR over BoW, TF-IDF, or mean-pooled embeddings.
struct ClassicalPipeline {
    kind: ClassicalKind,
    features: FeatureKind,
    embeddings: Option<Arc<EmbeddingTable>>,
    min_frequency: usize,
    fitted: Option<(FittedFeatures, FittedClassical)>,
}

enum FeatureRows {
    Sparse(Vec<SparseVector>),
    Dense(Vec<DenseVector>),
}

impl ClassicalPipeline {
    fn rows(&self, feats: &FittedFeatures, docs: &[&TokenizedTweet]) -> Result<FeatureRows> {
        Ok(match self.features {
            FeatureKind::Bow => {
                let vocab = feats.vocab.as_ref().expect("bow keeps a vocabulary");
                FeatureRows::Sparse(docs.iter().map(|d| bow_vector(d, vocab)).collect())
            }
            FeatureKind::Tfidf => {
                let vocab = feats.vocab.as_ref().expect("tfidf keeps a vocabulary");
                let tfidf = feats.tfidf.as_ref().expect("tfidf keeps idf stats");
                FeatureRows::Sparse(docs.iter().map(|d| tfidf.transform(d, vocab)).collect())
            }
            FeatureKind::Embedding => {
                let table = self
                    .embeddings
                    .as_ref()
                    .ok_or_else(|| Error::Config("embedding features need a table".into()))?;
                FeatureRows::Dense(
                    docs.iter()
                        .map(|d| embed_document(d, table, Pooling::Mean))
                        .collect(),
                )
            }
        })
    }
}

impl Classifier for ClassicalPipeline {
    fn fit(&mut self, docs: &[&TokenizedTweet], labels: &[usize], n_classes: usize) -> Result<()> {
        let owned: Vec<TokenizedTweet> = docs.iter().map(|d| (*d).clone()).collect();
        let feats = match self.features {
            FeatureKind::Bow => FittedFeatures {
                vocab: Some(build_vocabulary(&owned, self.min_frequency)?),
                tfidf: None,
            },
            FeatureKind::Tfidf => {
                let vocab = build_vocabulary(&owned, self.min_frequency)?;
                let tfidf = TfidfModel::fit(&owned, &vocab)?;
                FittedFeatures {
                    vocab: Some(vocab),
                    tfidf: Some(tfidf),
                }
            }
            FeatureKind::Embedding => FittedFeatures {
                vocab: None,
                tfidf: None,
            },
        };
        let model = match (&self.kind, self.rows(&feats, docs)?) {
            (ClassicalKind::Mnb { alpha, fit_prior }, FeatureRows::Sparse(x)) => {
                FittedClassical::Mnb(mnb_fit(&x, labels, n_classes, *alpha, *fit_prior)?)
            }
            (ClassicalKind::Mnb { alpha, fit_prior }, FeatureRows::Dense(x)) => {
                FittedClassical::Mnb(mnb_fit(&x, labels, n_classes, *alpha, *fit_prior)?)
            }
            (ClassicalKind::Lr(config), FeatureRows::Sparse(x)) => {
                FittedClassical::Lr(lr_fit(&x, labels, n_classes, config)?)
            }
            (ClassicalKind::Lr(config), FeatureRows::Dense(x)) => {
                FittedClassical::Lr(lr_fit(&x, labels, n_classes, config)?)
            }
        };
        self.fitted = Some((feats, model));
        Ok(())
    }

    fn predict(&self, docs: &[&TokenizedTweet]) -> Result<Vec<usize>> {
        let (feats, model) = self.fitted.as_ref().ok_or(Error::Untrained)?;
        let rows = self.rows(feats, docs)?;
        let mut out = Vec::with_capacity(docs.len());
        match (model, rows) {
            (FittedClassical::Mnb(m), FeatureRows::Sparse(x)) => {
                for xi in &x {
                    out.push(mnb_predict(m, xi)?.0);
                }
            }
            (FittedClassical::Mnb(m), FeatureRows::Dense(x)) => {
                for xi in &x {
                    out.push(mnb_predict(m, xi)?.0);
                }
            }
            (FittedClassical::Lr(m), FeatureRows::Sparse(x)) => {
                for xi in &x {
                    out.push(lr_predict(m, xi)?.0);
                }
            }
            (FittedClassical::Lr(m), FeatureRows::Dense(x)) => {
                for xi in &x {
                    out.push(lr_predict(m, xi)?.0);
                }
            }
        }
        Ok(out)
    }

    fn fitted_hash(&self) -> Option<String> {
        let (feats, _) = self.fitted.as_ref()?;
        let mut h = Sha256::new();
        if let Some(vocab) = &feats.vocab {
            for t in vocab.terms() {
                h.update(t.as_bytes());
                h.update(b"\n");
            }
        }
        if let Some(tfidf) = &feats.tfidf {
            for v in tfidf.idf() {
                h.update(v.to_le_bytes());
            }
        }
        h.update(self.features.as_str().as_bytes());
        Some(hex::encode(h.finalize()))
    }
}

/// Deterministic stratified holdout of roughly `fraction` per class (at
/// least one member when the class has two or more). Returns (train, val)
/// index lists.
pub fn stratified_holdout(
    labels: &[usize],
    n_classes: usize,
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, l) in labels.iter().enumerate() {
        by_class[*l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let take = if members.len() < 2 {
            0
        } else {
            ((members.len() as f64 * fraction).round() as usize).clamp(1, members.len() - 1)
        };
        val.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// CNN / LSTM / BiLSTM over a frozen embedding table, early stopping on an
/// inner stratified holdout of the training fold.
struct NeuralPipeline {
    config: NeuralConfig,
    patience: usize,
    max_epochs: usize,
    embeddings: Arc<EmbeddingTable>,
    model: Option<NeuralModel>,
}

impl Classifier for NeuralPipeline {
    fn fit(&mut self, docs: &[&TokenizedTweet], labels: &[usize], n_classes: usize) -> Result<()> {
        let (train_idx, val_idx) =
            stratified_holdout(labels, n_classes, 0.1, derive_seed(self.config.seed, 0x5641));
        let (train_idx, val_idx) = if val_idx.is_empty() {
            // Degenerate split: validate on the training data.
            (train_idx.clone(), train_idx)
        } else {
            (train_idx, val_idx)
        };
        let t_docs: Vec<&TokenizedTweet> = train_idx.iter().map(|i| docs[*i]).collect();
        let t_labels: Vec<usize> = train_idx.iter().map(|i| labels[*i]).collect();
        let v_docs: Vec<&TokenizedTweet> = val_idx.iter().map(|i| docs[*i]).collect();
        let v_labels: Vec<usize> = val_idx.iter().map(|i| labels[*i]).collect();

        let mut model = build_model(self.config.clone(), &self.embeddings, n_classes)?;
        model.train(
            &self.embeddings,
            &t_docs,
            &t_labels,
            &v_docs,
            &v_labels,
            self.patience,
            self.max_epochs,
        )?;
        self.model = Some(model);
        Ok(())
    }

    fn predict(&self, docs: &[&TokenizedTweet]) -> Result<Vec<usize>> {
        let model = self.model.as_ref().ok_or(Error::Untrained)?;
        Ok(model.predict(&self.embeddings, docs)?.0)
    }
}

/// Sentence-encoder fine-tuning over rendered token streams.
struct StfPipeline {
    backend_name: String,
    dim: usize,
    config: FinetuneConfig,
    model: Option<StfModel>,
}

impl Classifier for StfPipeline {
    fn fit(&mut self, docs: &[&TokenizedTweet], labels: &[usize], n_classes: usize) -> Result<()> {
        let backend = create_backend(&self.backend_name, self.dim, self.config.seed)?;
        let texts: Vec<String> = docs.iter().map(|d| d.render()).collect();
        let (train_idx, val_idx) =
            stratified_holdout(labels, n_classes, 0.1, derive_seed(self.config.seed, 0x5642));
        let t_texts: Vec<String> = train_idx.iter().map(|i| texts[*i].clone()).collect();
        let t_labels: Vec<usize> = train_idx.iter().map(|i| labels[*i]).collect();
        let v_texts: Vec<String> = val_idx.iter().map(|i| texts[*i].clone()).collect();
        let v_labels: Vec<usize> = val_idx.iter().map(|i| labels[*i]).collect();
        self.model = Some(finetune(
            backend,
            &t_texts,
            &t_labels,
            &v_texts,
            &v_labels,
            n_classes,
            self.config.clone(),
        )?);
        Ok(())
    }

    fn predict(&self, docs: &[&TokenizedTweet]) -> Result<Vec<usize>> {
        let model = self.model.as_ref().ok_or(Error::Untrained)?;
        let texts: Vec<String> = docs.iter().map(|d| d.render()).collect();
        let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
        Ok(stf_predict(model, &refs)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            annotations: Vec::new(),
        }
    }

    fn toy_docs() -> (Vec<TokenizedTweet>, Vec<usize>) {
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..12 {
            let filler = ["on", "it", "up"][i % 3];
            docs.push(doc(&["alpha", filler, "x"]));
            labels.push(0);
            docs.push(doc(&["bravo", filler, "y"]));
            labels.push(1);
        }
        (docs, labels)
    }

    #[test]
    fn model_names() {
        assert_eq!(
            ModelSpec::default_for("mnb", FeatureKind::Bow).unwrap().name(),
            "mnb-bow"
        );
        assert_eq!(
            ModelSpec::default_for("lr", FeatureKind::Tfidf).unwrap().name(),
            "lr-tfidf"
        );
        assert_eq!(
            ModelSpec::default_for("cnn", FeatureKind::Bow).unwrap().name(),
            "cnn"
        );
        assert_eq!(
            ModelSpec::default_for("stf:stub", FeatureKind::Bow).unwrap().name(),
            "stf:stub"
        );
        assert!(ModelSpec::default_for("svm", FeatureKind::Bow).is_err());
    }

    #[test]
    fn grid_points_apply_onto_specs() {
        let base = ModelSpec::default_for("mnb", FeatureKind::Bow).unwrap();
        let grid = default_grid("mnb").unwrap();
        assert_eq!(grid.cartesian_size(), 22);
        let p = &grid.points()[0];
        let spec = base.with_grid_point(p).unwrap();
        match spec {
            ModelSpec::Mnb { alpha, fit_prior, .. } => {
                assert!((alpha - 0.01).abs() < 1e-12);
                assert!(fit_prior);
            }
            _ => panic!("family must be preserved"),
        }
        // Unknown parameters are rejected.
        let mut bogus = GridPoint::new();
        bogus.insert("nope".into(), serde_json::json!(1));
        assert!(base.with_grid_point(&bogus).is_err());
    }

    #[test]
    fn default_grid_sizes() {
        assert_eq!(default_grid("lr").unwrap().cartesian_size(), 16);
        assert_eq!(default_grid("cnn").unwrap().cartesian_size(), 384);
        assert_eq!(default_grid("stf:stub").unwrap().cartesian_size(), 90);
        assert!(default_grid("nope").is_none());
    }

    #[test]
    fn classical_pipelines_fit_and_predict() {
        let (docs, labels) = toy_docs();
        let refs: Vec<&TokenizedTweet> = docs.iter().collect();
        for features in [FeatureKind::Bow, FeatureKind::Tfidf] {
            for family in ["mnb", "lr"] {
                let spec = ModelSpec::default_for(family, features).unwrap();
                let mut clf = spec.make_classifier(None, 1).unwrap();
                clf.fit(&refs, &labels, 2).unwrap();
                let preds = clf.predict(&refs).unwrap();
                assert_eq!(preds, labels, "{family}-{features:?} must fit the toy");
                assert!(clf.fitted_hash().is_some());
            }
        }
    }

    #[test]
    fn fitted_hash_ignores_validation_docs() {
        // The hash depends only on what fit() saw.
        let (docs, labels) = toy_docs();
        let refs: Vec<&TokenizedTweet> = docs.iter().collect();
        let spec = ModelSpec::default_for("mnb", FeatureKind::Tfidf).unwrap();
        let mut a = spec.make_classifier(None, 1).unwrap();
        a.fit(&refs[..20], &labels[..20], 2).unwrap();
        let mut b = spec.make_classifier(None, 1).unwrap();
        b.fit(&refs[..20], &labels[..20], 2).unwrap();
        assert_eq!(a.fitted_hash(), b.fitted_hash());
    }

    #[test]
    fn mnb_on_embeddings_rejects_negative_features() {
        use crate::features::parse_embeddings;
        let table = Arc::new(
            parse_embeddings("alpha 1 -1\nbravo 0 1", std::path::Path::new("<t>")).unwrap(),
        );
        let (docs, labels) = toy_docs();
        let refs: Vec<&TokenizedTweet> = docs.iter().collect();
        let spec = ModelSpec::default_for("mnb", FeatureKind::Embedding).unwrap();
        let mut clf = spec.make_classifier(Some(&table), 1).unwrap();
        let err = clf.fit(&refs, &labels, 2).unwrap_err();
        assert!(matches!(err, Error::NegativeFeature { .. }));
    }

    #[test]
    fn embeddings_required_when_missing() {
        let spec = ModelSpec::default_for("cnn", FeatureKind::Bow).unwrap();
        assert!(spec.make_classifier(None, 1).is_err());
    }

    #[test]
    fn holdout_is_stratified_and_deterministic() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let (t1, v1) = stratified_holdout(&labels, 3, 0.2, 9);
        let (t2, v2) = stratified_holdout(&labels, 3, 0.2, 9);
        assert_eq!((t1.clone(), v1.clone()), (t2, v2));
        assert_eq!(t1.len() + v1.len(), 30);
        for class in 0..3 {
            let n = v1.iter().filter(|i| labels[**i] == class).count();
            assert_eq!(n, 2, "20% of 10 members");
        }
        // Singleton classes stay in training.
        let (t, v) = stratified_holdout(&[0, 1, 1, 1, 1], 2, 0.25, 1);
        assert!(t.contains(&0));
        assert_eq!(v.iter().filter(|i| **i == 0).count(), 0);
        let _ = v;
    }

    #[test]
    fn stf_pipeline_runs_on_stub() {
        let (docs, labels) = toy_docs();
        let refs: Vec<&TokenizedTweet> = docs.iter().collect();
        let spec = ModelSpec::Stf {
            backend: "stub".into(),
            dim: 16,
            config: FinetuneConfig {
                epochs: 10,
                batch_size: 8,
                learning_rate: 1e-2,
                seed: 0,
            },
        };
        let mut clf = spec.make_classifier(None, 3).unwrap();
        clf.fit(&refs, &labels, 2).unwrap();
        let preds = clf.predict(&refs).unwrap();
        let correct = preds.iter().zip(&labels).filter(|(a, b)| a == b).count();
        assert!(correct >= 22, "stub fine-tuning should fit the toy, got {correct}/24");
    }
}

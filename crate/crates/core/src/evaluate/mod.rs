//! Evaluation harness: accuracy, stratified cross-validation, grid search,
//! paired significance tests, and report emission.

pub mod report;
pub mod ttest;

pub use report::{emit_report, ModelComparison, ReportDoc, ReportInput, ReportLayout};
pub use ttest::{paired_ttest, regularized_incomplete_beta, student_t_two_tailed_p, TTestResult};

use serde::{Deserialize, Serialize};

use crate::corpus::FoldAssignment;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

/// Fraction of correct predictions. For two classes this is exactly
/// (TP + TN) / (TP + FP + TN + FN) on the binary confusion table.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Evaluation(format!(
            "accuracy needs equal non-empty label vectors, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let correct = y_true
        .iter()
        .zip(y_pred)
        .filter(|(t, p)| t == p)
        .count();
    Ok(correct as f64 / y_true.len() as f64)
}

/// One-vs-rest confusion counts per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub n: usize,
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    pub fn_: Vec<usize>,
    pub tn: Vec<usize>,
}

impl ConfusionCounts {
    pub fn n_classes(&self) -> usize {
        self.tp.len()
    }

    /// Total correct predictions (= sum of per-class true positives).
    pub fn correct(&self) -> usize {
        self.tp.iter().sum()
    }

    /// Micro-averaged one-vs-rest accuracy: pooled TP / (TP + FP). Because
    /// every wrong prediction is exactly one false positive, this equals the
    /// plain fraction of correct predictions for any class count.
    pub fn micro_accuracy(&self) -> f64 {
        let tp: usize = self.tp.iter().sum();
        let fp: usize = self.fp.iter().sum();
        tp as f64 / (tp + fp) as f64
    }
}

/// Builds one-vs-rest confusion counts.
pub fn confusion_counts(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<ConfusionCounts> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Evaluation(
            "confusion counts need equal non-empty label vectors".to_string(),
        ));
    }
    let mut c = ConfusionCounts {
        n: y_true.len(),
        tp: vec![0; n_classes],
        fp: vec![0; n_classes],
        fn_: vec![0; n_classes],
        tn: vec![0; n_classes],
    };
    for (t, p) in y_true.iter().zip(y_pred) {
        for class in 0..n_classes {
            match (*t == class, *p == class) {
                (true, true) => c.tp[class] += 1,
                (false, true) => c.fp[class] += 1,
                (true, false) => c.fn_[class] += 1,
                (false, false) => c.tn[class] += 1,
            }
        }
    }
    Ok(c)
}

/// Result of one cross-validated evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub model_name: String,
    pub config: serde_json::Value,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub seed: u64,
    pub fold_assignment_hash: String,
}

impl EvaluationResult {
    pub fn new(
        model_name: impl Into<String>,
        config: serde_json::Value,
        fold_accuracies: Vec<f64>,
        seed: u64,
        fold_assignment_hash: String,
    ) -> Self {
        let mean = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
        EvaluationResult {
            model_name: model_name.into(),
            config,
            fold_accuracies,
            mean_accuracy: mean,
            seed,
            fold_assignment_hash,
        }
    }
}

/// Anything trainable under the cross-validation harness. Implementations
/// wire a feature plan (vocabulary, TF-IDF, embeddings, encoders) to a
/// classifier; all fold-dependent statistics must be fit inside `fit`.
pub trait Classifier {
    fn fit(&mut self, docs: &[&TokenizedTweet], labels: &[usize], n_classes: usize) -> Result<()>;

    fn predict(&self, docs: &[&TokenizedTweet]) -> Result<Vec<usize>>;

    /// Digest of the statistics fitted from training data (vocabulary, IDF,
    /// ...); used to verify that validation folds never leak into fitting.
    fn fitted_hash(&self) -> Option<String> {
        None
    }
}

/// Runs k-fold cross-validation: for every fold, a fresh classifier from
/// `factory` is fit on the other folds and scored on the held-out fold.
/// Deterministic for a fixed seed (each fold trains under a derived seed).
pub fn cross_validate<F>(
    model_name: &str,
    config: serde_json::Value,
    factory: F,
    docs: &[TokenizedTweet],
    labels: &[usize],
    n_classes: usize,
    folds: &FoldAssignment,
    seed: u64,
) -> Result<EvaluationResult>
where
    F: Fn(usize, u64) -> Box<dyn Classifier>,
{
    if docs.len() != labels.len() || docs.len() != folds.folds.len() {
        return Err(Error::Evaluation(format!(
            "cross_validate: {} docs, {} labels, {} fold entries",
            docs.len(),
            labels.len(),
            folds.folds.len()
        )));
    }
    let mut fold_accuracies = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let (train_idx, val_idx) = folds.split(fold);
        let train_docs: Vec<&TokenizedTweet> = train_idx.iter().map(|i| &docs[*i]).collect();
        let train_labels: Vec<usize> = train_idx.iter().map(|i| labels[*i]).collect();
        let val_docs: Vec<&TokenizedTweet> = val_idx.iter().map(|i| &docs[*i]).collect();
        let val_labels: Vec<usize> = val_idx.iter().map(|i| labels[*i]).collect();

        let mut model = factory(fold, derive_seed(seed, fold as u64));
        let with_context = |e: Error| {
            Error::Evaluation(format!("fold {fold} failed: {e}; config: {config}"))
        };
        model
            .fit(&train_docs, &train_labels, n_classes)
            .map_err(with_context)?;
        let preds = model.predict(&val_docs).map_err(with_context)?;
        fold_accuracies.push(accuracy(&val_labels, &preds)?);
    }
    Ok(EvaluationResult::new(
        model_name,
        config,
        fold_accuracies,
        seed,
        folds.hash(),
    ))
}

/// A hyperparameter search space: named axes with candidate values, in
/// declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub model_name: String,
    pub axes: Vec<(String, Vec<serde_json::Value>)>,
}

pub type GridPoint = serde_json::Map<String, serde_json::Value>;

impl HyperGrid {
    pub fn new(model_name: impl Into<String>) -> Self {
        HyperGrid {
            model_name: model_name.into(),
            axes: Vec::new(),
        }
    }

    pub fn axis<V: Into<serde_json::Value>>(
        mut self,
        name: impl Into<String>,
        values: impl IntoIterator<Item = V>,
    ) -> Self {
        self.axes
            .push((name.into(), values.into_iter().map(Into::into).collect()));
        self
    }

    pub fn cartesian_size(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// Every grid point in deterministic Cartesian order: the first declared
    /// axis varies slowest, the last fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = vec![GridPoint::new()];
        for (name, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for partial in &out {
                for v in values {
                    let mut p = partial.clone();
                    p.insert(name.clone(), v.clone());
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

/// Exhaustive grid search. Every Cartesian point is evaluated; the best
/// config is the one with maximal mean accuracy, ties broken by earlier
/// enumeration order. With `jobs > 1` the points run on a local thread pool;
/// results are keyed by grid position, so aggregation is order-independent.
pub fn grid_search<E>(
    grid: &HyperGrid,
    evaluator: E,
    jobs: usize,
) -> Result<(GridPoint, Vec<EvaluationResult>)>
where
    E: Fn(&GridPoint) -> Result<EvaluationResult> + Sync,
{
    if grid.cartesian_size() == 0 {
        return Err(Error::Config(format!(
            "grid for {} has an empty axis",
            grid.model_name
        )));
    }
    let points = grid.points();
    let with_point = |point: &GridPoint, e: Error| {
        Error::Evaluation(format!(
            "grid point {} failed: {e}",
            serde_json::Value::Object(point.clone())
        ))
    };
    let results: Result<Vec<EvaluationResult>> = if jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            points
                .par_iter()
                .map(|p| evaluator(p).map_err(|e| with_point(p, e)))
                .collect()
        })
    } else {
        points
            .iter()
            .map(|p| evaluator(p).map_err(|e| with_point(p, e)))
            .collect()
    };
    let results = results?;

    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        if r.mean_accuracy > results[best].mean_accuracy {
            best = i;
        }
    }
    Ok((points[best].clone(), results))
}

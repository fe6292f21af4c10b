//! Multinomial naive Bayes over nonnegative count/weight features.
//!
//! feature_log_prob[c][t] = ln((count(t,c) + alpha) / (sum_t count(t,c) + alpha * V))
//! with additive smoothing alpha > 0. Class priors are empirical when
//! `fit_prior` is set, uniform otherwise.

use serde::{Deserialize, Serialize};

use super::argmax_lowest;
use crate::error::{Error, Result};
use crate::features::FeatureRow;

/// A fitted multinomial naive Bayes model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub alpha: f64,
    pub fit_prior: bool,
    pub class_log_prior: Vec<f64>,
    /// Per-class log term probabilities over the vocabulary.
    pub feature_log_prob: Vec<Vec<f64>>,
    pub n_features: usize,
    format_version: u32,
}

impl MnbModel {
    pub fn n_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    /// Versioned JSON document (hyperparameters + weights).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<MnbModel> {
        serde_json::from_str(json).map_err(|e| Error::Config(format!("bad model JSON: {e}")))
    }
}

/// Fits multinomial naive Bayes.
pub fn mnb_fit<F: FeatureRow>(
    x: &[F],
    y: &[usize],
    n_classes: usize,
    alpha: f64,
    fit_prior: bool,
) -> Result<MnbModel> {
    if alpha <= 0.0 {
        return Err(Error::invalid("alpha", "smoothing constant must be positive"));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Evaluation(format!(
            "mnb_fit: {} rows vs {} labels",
            x.len(),
            y.len()
        )));
    }
    let n_features = x[0].dimension();
    let mut class_counts = vec![0usize; n_classes];
    let mut term_counts = vec![vec![0.0f64; n_features]; n_classes];
    for (row, (xi, yi)) in x.iter().zip(y).enumerate() {
        if xi.dimension() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                found: xi.dimension(),
            });
        }
        class_counts[*yi] += 1;
        for (t, v) in xi.nonzero() {
            if v < 0.0 {
                return Err(Error::NegativeFeature {
                    row,
                    index: t,
                    value: v,
                });
            }
            term_counts[*yi][t] += v;
        }
    }
    if class_counts.iter().any(|c| *c == 0) {
        return Err(Error::Evaluation(
            "mnb_fit: every class needs at least one example".to_string(),
        ));
    }

    let n = x.len() as f64;
    let class_log_prior = if fit_prior {
        class_counts
            .iter()
            .map(|c| (*c as f64 / n).ln())
            .collect()
    } else {
        vec![(1.0 / n_classes as f64).ln(); n_classes]
    };

    let v = n_features as f64;
    let feature_log_prob = term_counts
        .iter()
        .map(|counts| {
            let total: f64 = counts.iter().sum();
            counts
                .iter()
                .map(|c| ((c + alpha) / (total + alpha * v)).ln())
                .collect()
        })
        .collect();

    Ok(MnbModel {
        alpha,
        fit_prior,
        class_log_prior,
        feature_log_prob,
        n_features,
        format_version: 1,
    })
}

/// Per-class joint log scores for one row.
pub fn mnb_log_scores<F: FeatureRow>(model: &MnbModel, x: &F) -> Result<Vec<f64>> {
    if x.dimension() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            found: x.dimension(),
        });
    }
    Ok((0..model.n_classes())
        .map(|c| {
            let mut s = model.class_log_prior[c];
            for (t, v) in x.nonzero() {
                s += v * model.feature_log_prob[c][t];
            }
            s
        })
        .collect())
}

/// Predicted class (lowest index on ties) plus per-class log scores.
pub fn mnb_predict<F: FeatureRow>(model: &MnbModel, x: &F) -> Result<(usize, Vec<f64>)> {
    let scores = mnb_log_scores(model, x)?;
    Ok((argmax_lowest(&scores), scores))
}

//! Smoothed TF-IDF weighting.
//!
//! weight(t, d) = tf(t, d) * idf(t), with raw-count tf and
//! idf(t) = ln((1 + N) / (1 + df(t))) + 1; rows are then L2-normalized.
//! IDF statistics are fit on training documents only and reused when
//! transforming validation documents.

use serde::{Deserialize, Serialize};

use super::{bow_vector, SparseVector, Vocabulary};
use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

/// Fitted IDF statistics over a training document set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    idf: Vec<f64>,
    n_docs: usize,
}

impl TfidfModel {
    /// Computes document frequencies and IDF over `docs`.
    pub fn fit(docs: &[TokenizedTweet], vocab: &Vocabulary) -> Result<TfidfModel> {
        if docs.is_empty() {
            return Err(Error::invalid("docs", "TF-IDF requires at least one document"));
        }
        let n = docs.len();
        let mut df = vec![0usize; vocab.len()];
        for doc in docs {
            let counts = bow_vector(doc, vocab);
            for (i, _) in counts.entries() {
                df[*i] += 1;
            }
        }
        let idf = df
            .iter()
            .map(|d| ((1.0 + n as f64) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        Ok(TfidfModel { idf, n_docs: n })
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// TF-IDF row for one document, L2-normalized (empty docs yield the zero
    /// row).
    pub fn transform(&self, doc: &TokenizedTweet, vocab: &Vocabulary) -> SparseVector {
        let counts = bow_vector(doc, vocab);
        counts.map(|i, tf| tf * self.idf[i]).l2_normalized()
    }

    pub fn transform_all(&self, docs: &[TokenizedTweet], vocab: &Vocabulary) -> Vec<SparseVector> {
        docs.iter().map(|d| self.transform(d, vocab)).collect()
    }
}

/// Fits IDF on `docs` and transforms the same documents.
pub fn tfidf_matrix(docs: &[TokenizedTweet], vocab: &Vocabulary) -> Result<Vec<SparseVector>> {
    let model = TfidfModel::fit(docs, vocab)?;
    Ok(model.transform_all(docs, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_vocabulary;

    fn doc(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            annotations: Vec::new(),
        }
    }

    #[test]
    fn idf_of_everywhere_term_is_one() {
        let docs = vec![doc(&["a"]), doc(&["a", "b"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let m = TfidfModel::fit(&docs, &v).unwrap();
        let ai = v.index_of("a").unwrap();
        assert!((m.idf()[ai] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn idf_matches_hand_computation() {
        // 2 docs [a], [a b]: idf(b) = ln(3/2) + 1.
        let docs = vec![doc(&["a"]), doc(&["a", "b"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let m = TfidfModel::fit(&docs, &v).unwrap();
        let bi = v.index_of("b").unwrap();
        let expected = (1.5f64).ln() + 1.0;
        assert!((m.idf()[bi] - expected).abs() < 1e-12);
        assert!((expected - 1.4054651081081644).abs() < 1e-12);
    }

    #[test]
    fn rows_are_unit_norm_or_zero() {
        let docs = vec![doc(&["a", "b", "b"]), doc(&["a"]), doc(&[])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let rows = tfidf_matrix(&docs, &v).unwrap();
        assert!((rows[0].l2_norm() - 1.0).abs() < 1e-12);
        assert!((rows[1].l2_norm() - 1.0).abs() < 1e-12);
        assert!(rows[2].is_empty());
    }

    #[test]
    fn validation_rows_reuse_training_idf() {
        let train = vec![doc(&["a", "b"]), doc(&["a"])];
        let val = vec![doc(&["a", "b", "c"])];
        let v = build_vocabulary(&train, 1).unwrap();
        let m = TfidfModel::fit(&train, &v).unwrap();
        let row = m.transform(&val[0], &v);
        // "c" is out of vocabulary; weights use train-fold IDF only.
        let m2 = TfidfModel::fit(&train, &v).unwrap();
        assert_eq!(row, m2.transform(&val[0], &v));
        assert_eq!(row.dimension(), v.len());
        assert_eq!(row.nnz(), 2);
    }
}

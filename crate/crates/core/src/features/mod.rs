//! Feature representations: vocabularies, bag-of-words, TF-IDF, embeddings.

mod embeddings;
mod tfidf;
mod vectors;

pub use embeddings::{embed_document, load_embeddings, parse_embeddings, EmbeddingTable, Pooling};
pub use tfidf::{tfidf_matrix, TfidfModel};
pub use vectors::{DenseVector, FeatureRow, SparseVector};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

/// Term index over a corpus: lexicographically ordered unique tokens with
/// corpus frequency at or above `min_frequency`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    min_frequency: usize,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Builds the vocabulary of tokens whose total corpus frequency is at least
/// `min_frequency`, ordered lexicographically.
pub fn build_vocabulary(docs: &[TokenizedTweet], min_frequency: usize) -> Result<Vocabulary> {
    if min_frequency < 1 {
        return Err(Error::invalid("min_frequency", "must be at least 1"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let mut terms: Vec<String> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_frequency)
        .map(|(t, _)| t.to_string())
        .collect();
    terms.sort();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_frequency,
        });
    }
    let mut v = Vocabulary {
        terms,
        index: HashMap::new(),
        min_frequency,
    };
    v.rebuild_index();
    Ok(v)
}

/// Bag-of-words vector: per-term counts; out-of-vocabulary tokens are
/// ignored.
pub fn bow_vector(doc: &TokenizedTweet, vocab: &Vocabulary) -> SparseVector {
    SparseVector::from_entries(
        vocab.len(),
        doc.tokens
            .iter()
            .filter_map(|t| vocab.index_of(t))
            .map(|i| (i, 1.0)),
    )
}

/// Serializes feature rows as JSONL, one vector per line (debug export).
pub fn vectors_to_jsonl<T: serde::Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("vector serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn doc(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            annotations: Vec::new(),
        }
    }

    #[test]
    fn vocabulary_orders_and_filters() {
        let docs = vec![doc(&["a", "b", "a"]), doc(&["b", "c"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(v.terms(), &["a", "b", "c"]);
        let v2 = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(v2.terms(), &["a", "b"]);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let docs = vec![doc(&["x"]), doc(&["y"])];
        assert!(matches!(
            build_vocabulary(&docs, 2),
            Err(Error::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn bow_counts_by_hand() {
        let docs = vec![doc(&["a", "b", "a"]), doc(&["b", "c"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let x = bow_vector(&doc(&["a", "b", "a"]), &v);
        assert_eq!(x.entries(), &[(0, 2.0), (1, 1.0)]);
        assert!(bow_vector(&doc(&[]), &v).is_empty());
        assert!(bow_vector(&doc(&["z"]), &v).is_empty());
    }

    #[test]
    fn bow_is_additive_over_concatenation() {
        let docs = vec![doc(&["a", "b", "c"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let d1 = doc(&["a", "b"]);
        let d2 = doc(&["b", "c", "c"]);
        let mut joined = d1.tokens.clone();
        joined.extend(d2.tokens.clone());
        let sum = bow_vector(&d1, &v).add(&bow_vector(&d2, &v));
        let direct = bow_vector(&doc(&joined.iter().map(|s| s.as_str()).collect::<Vec<_>>()), &v);
        assert_eq!(sum, direct);
    }
}

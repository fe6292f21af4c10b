//! Pre-trained word embedding tables in the textual word-vector format:
//! one token followed by D whitespace-separated decimals per line.

use std::collections::HashMap;
use std::path::Path;

use super::DenseVector;
use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

/// Document pooling strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Mean,
}

/// token -> vector map with a uniform dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Inserts a vector; rejects dimension mismatches.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: vector.len(),
            });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(|v| v.as_slice())
    }
}

/// Parses word-vector text. Duplicate tokens keep the first occurrence (a
/// warning is logged); a line whose vector width differs from the first
/// line's is a format error carrying the line number.
pub fn parse_embeddings(body: &str, origin: &Path) -> Result<EmbeddingTable> {
    let mut dimension: Option<usize> = None;
    let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
    for (i, raw) in body.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut parts = raw.split_whitespace();
        let token = parts.next().expect("non-empty line");
        let values: std::result::Result<Vec<f64>, _> =
            parts.map(|p| p.parse::<f64>()).collect();
        let values = values.map_err(|e| Error::Record {
            path: origin.to_path_buf(),
            line,
            message: format!("bad number: {e}"),
        })?;
        let dim = *dimension.get_or_insert(values.len());
        if values.len() != dim {
            return Err(Error::RaggedEmbedding {
                path: origin.to_path_buf(),
                line,
                expected: dim,
                found: values.len(),
            });
        }
        if vectors.contains_key(token) {
            log::warn!("{}:{line}: duplicate token {token:?}; keeping first", origin.display());
            continue;
        }
        vectors.insert(token.to_string(), values);
    }
    let dimension = dimension.ok_or_else(|| Error::EmptyCorpus {
        path: origin.to_path_buf(),
    })?;
    Ok(EmbeddingTable { dimension, vectors })
}

/// Loads an embedding table from a word-vector file.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&body, path)
}

/// Pools token vectors into one document vector. Out-of-vocabulary tokens
/// contribute the zero vector and still count in the mean's denominator;
/// empty or all-OOV documents yield the zero vector.
pub fn embed_document(doc: &TokenizedTweet, table: &EmbeddingTable, pooling: Pooling) -> DenseVector {
    let Pooling::Mean = pooling;
    let dim = table.dimension();
    if doc.tokens.is_empty() {
        return DenseVector::zeros(dim);
    }
    let mut sum = vec![0.0; dim];
    for tok in &doc.tokens {
        if let Some(v) = table.get(tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    let n = doc.tokens.len() as f64;
    DenseVector::new(sum.into_iter().map(|s| s / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn doc(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            annotations: Vec::new(),
        }
    }

    fn origin() -> PathBuf {
        PathBuf::from("<test>")
    }

    #[test]
    fn parses_simple_table() {
        let t = parse_embeddings("a 1 0\nb 0 1", &origin()).unwrap();
        assert_eq!(t.dimension(), 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn ragged_line_reports_position() {
        let err = parse_embeddings("a 1 0\nb 0 1\nc 1", &origin()).unwrap_err();
        match err {
            Error::RaggedEmbedding { line, expected, found, .. } => {
                assert_eq!((line, expected, found), (3, 2, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicates_keep_first() {
        let t = parse_embeddings("a 1 0\na 9 9", &origin()).unwrap();
        assert_eq!(t.get("a"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn mean_pooling_arithmetic() {
        let t = parse_embeddings("a 1 0\nb 0 1", &origin()).unwrap();
        let v = embed_document(&doc(&["a", "b"]), &t, Pooling::Mean);
        assert_eq!(v.values(), &[0.5, 0.5]);
        let single = embed_document(&doc(&["a"]), &t, Pooling::Mean);
        assert_eq!(single.values(), &[1.0, 0.0]);
    }

    #[test]
    fn oov_counts_in_denominator_and_all_oov_is_zero() {
        let t = parse_embeddings("a 1 0", &origin()).unwrap();
        let v = embed_document(&doc(&["a", "zzz"]), &t, Pooling::Mean);
        assert_eq!(v.values(), &[0.5, 0.0]);
        let z = embed_document(&doc(&["x", "y"]), &t, Pooling::Mean);
        assert_eq!(z.values(), &[0.0, 0.0]);
        let e = embed_document(&doc(&[]), &t, Pooling::Mean);
        assert_eq!(e.values(), &[0.0, 0.0]);
    }

    #[test]
    fn pooling_is_permutation_invariant() {
        let t = parse_embeddings("a 1 2\nb 3 4\nc -1 0", &origin()).unwrap();
        let v1 = embed_document(&doc(&["a", "b", "c"]), &t, Pooling::Mean);
        let v2 = embed_document(&doc(&["c", "a", "b"]), &t, Pooling::Mean);
        assert_eq!(v1, v2);
    }
}

//! Sparse and dense feature vectors.

use serde::{Deserialize, Serialize};

/// Sparse real vector: sorted (index, value) entries, no explicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dimension: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dimension: usize) -> Self {
        SparseVector {
            dimension,
            entries: Vec::new(),
        }
    }

    /// Builds from (index, value) pairs; zero values are dropped, duplicate
    /// indices are summed, entries end up sorted by index.
    pub fn from_entries(dimension: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut v: Vec<(usize, f64)> = entries.into_iter().collect();
        v.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (i, x) in v {
            debug_assert!(i < dimension, "index {i} out of dimension {dimension}");
            match merged.last_mut() {
                Some((j, y)) if *j == i => *y += x,
                _ => merged.push((i, x)),
            }
        }
        merged.retain(|(_, x)| *x != 0.0);
        SparseVector {
            dimension,
            entries: merged,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    /// Elementwise sum; dimensions must agree.
    pub fn add(&self, other: &SparseVector) -> SparseVector {
        assert_eq!(self.dimension, other.dimension);
        SparseVector::from_entries(
            self.dimension,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    /// Applies `f` to every stored value, dropping entries that become zero.
    pub fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> SparseVector {
        SparseVector::from_entries(
            self.dimension,
            self.entries.iter().map(|(i, x)| (*i, f(*i, *x))),
        )
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, x)| x * x).sum::<f64>().sqrt()
    }

    /// Row-normalizes to unit L2 norm; the zero vector stays zero.
    pub fn l2_normalized(&self) -> SparseVector {
        let norm = self.l2_norm();
        if norm == 0.0 {
            return self.clone();
        }
        self.map(|_, x| x / norm)
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|(i, x)| x * dense[*i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for (i, x) in &self.entries {
            out[*i] = *x;
        }
        out
    }
}

/// Dense real vector with all values finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        DenseVector { values }
    }

    pub fn zeros(dimension: usize) -> Self {
        DenseVector {
            values: vec![0.0; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.dimension(), other.dimension());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cosine similarity; zero when either vector is zero.
    pub fn cosine(&self, other: &DenseVector) -> f64 {
        let d = self.l2_norm() * other.l2_norm();
        if d == 0.0 {
            0.0
        } else {
            self.dot(other) / d
        }
    }
}

/// Feature rows a linear classifier can consume: sparse counts/weights or
/// dense embeddings.
pub trait FeatureRow {
    fn dimension(&self) -> usize;
    /// Nonzero (index, value) pairs, ascending index.
    fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_>;
}

impl FeatureRow for SparseVector {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        Box::new(self.entries.iter().copied())
    }
}

impl FeatureRow for DenseVector {
    fn dimension(&self) -> usize {
        self.values.len()
    }

    fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        Box::new(
            self.values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v)),
        )
    }
}

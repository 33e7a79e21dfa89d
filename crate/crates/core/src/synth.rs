//! Seeded synthetic graphs with a power-law degree distribution.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub nodes: usize,
    pub avg_degree: f64,
    /// Degree exponent; vertex `i` gets expected degree proportional to
    /// `(i + 1)^(-1 / (alpha - 1))`.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for PowerLawSpec {
    fn default() -> Self {
        Self {
            nodes: 4096,
            avg_degree: 8.0,
            alpha: 2.2,
            seed: 0,
        }
    }
}

/// Undirected graph (both directions stored, no self loops) whose endpoints
/// are drawn proportionally to power-law vertex weights; vertex ids are
/// shuffled so hubs are spread over the id range. Values are all one.
pub fn power_law_graph<T: Scalar>(spec: &PowerLawSpec) -> Result<SparseMatrix<T>> {
    if spec.nodes < 2 || !(spec.alpha > 1.0) || !(spec.avg_degree >= 0.0) {
        return Err(Error::InvalidMatrix(format!(
            "power-law graph needs nodes >= 2, alpha > 1 and avg_degree >= 0, got {spec:?}"
        )));
    }
    let n = spec.nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exponent = -1.0 / (spec.alpha - 1.0);
    let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(exponent)).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::InvalidMatrix(e.to_string()))?;
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let edges = (n as f64 * spec.avg_degree / 2.0).round() as usize;
    let mut t = Vec::with_capacity(2 * edges);
    for _ in 0..edges {
        let (u, v) = (ids[pick.sample(&mut rng)], ids[pick.sample(&mut rng)]);
        if u != v {
            t.push((u, v, T::one()));
            t.push((v, u, T::one()));
        }
    }
    // repeated pairs collapse to a single unit edge
    t.sort_unstable_by_key(|&(r, c, _)| (r, c));
    t.dedup_by_key(|&mut (r, c, _)| (r, c));
    SparseMatrix::from_triplets(n, n, t)
}

/// Deterministic features in `-range..=range`.
pub fn seeded_features<T: Scalar>(n: usize, k: usize, range: i32, seed: u64) -> Result<DenseMatrix<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * k);
    for _ in 0..n * k {
        let v = rng.gen_range(-range..=range);
        values.push(T::from_f64_exact(v as f64).ok_or(Error::Overflow("seeded_features"))?);
    }
    DenseMatrix::new(n, k, values)
}

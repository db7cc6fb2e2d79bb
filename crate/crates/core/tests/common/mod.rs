#![allow(dead_code)]

use graphsmooth::knn_graph::{self, KnnConfig, SparseGraph, Symmetrize};
use graphsmooth::EmbeddingMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub mod oracles;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingMatrix {
    let data = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
    EmbeddingMatrix::new(n, d, data).unwrap()
}

/// Random k-NN graph with `n` in `[lo, hi]`, `k < n`.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    lo: usize,
    hi: usize,
    k_max: usize,
    symmetrize: Symmetrize,
) -> SparseGraph {
    let n = rng.random_range(lo..=hi);
    let k = rng.random_range(1..=k_max.min(n - 1));
    let lambda = [0.5, 1.0, 2.0][rng.random_range(0..3)];
    let d = rng.random_range(2..=6);
    let x = gaussian_matrix(rng, n, d);
    knn_graph::build_graph(
        &x,
        &KnnConfig {
            k,
            lambda,
            symmetrize,
        },
    )
    .unwrap()
}

pub fn operator_dense(g: &SparseGraph) -> Dense {
    g.normalized().unwrap().matrix.to_dense()
}

pub fn to_dense(m: &EmbeddingMatrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for t in 0..k {
            for j in 0..m {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dense Laplacian quadratic form `f^T (D - A) f` of the un-augmented graph.
pub fn dense_quadratic_form(g: &SparseGraph, f: &[f64]) -> f64 {
    let a = g.adjacency().to_dense();
    let n = a.len();
    let mut total = 0.0;
    for i in 0..n {
        let deg: f64 = a[i].iter().sum();
        let mut lf = deg * f[i];
        for j in 0..n {
            lf -= a[i][j] * f[j];
        }
        total += f[i] * lf;
    }
    total
}

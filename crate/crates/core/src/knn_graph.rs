//! Cosine k-nearest-neighbour graph, self-loop augmentation and symmetric
//! normalization.
//!
//! The adjacency `A` is stored in CSR form with unit weights and no
//! diagonal. [`normalize`] adds `lambda` self-loops and stores
//! `S = D^{-1/2} (A + lambda I) D^{-1/2}` on the augmented pattern, which is
//! the operator every propagation rule multiplies by.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::embedding_io::EmbeddingMatrix;
use crate::exec;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("row {0} has zero norm; cosine similarity is undefined")]
    ZeroNorm(usize),
    #[error("k must satisfy 1 <= k < n (k = {k}, n = {n})")]
    BadK { k: usize, n: usize },
    #[error("self-loop weight must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("node {0} is isolated and lambda = 0; normalization would divide by zero")]
    Isolated(usize),
    #[error("graph has not been normalized")]
    NotNormalized,
    #[error("dimension mismatch: graph has {graph} nodes, input has {input}")]
    Dimension { graph: usize, input: usize },
    #[error("edge ({0}, {1}) is out of range or a self-loop")]
    BadEdge(usize, usize),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Symmetrize {
    /// Keep an edge if either endpoint lists the other: `max(A, A^T)`.
    #[default]
    Union,
    /// Keep an edge only if both endpoints list each other: `min(A, A^T)`.
    Mutual,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    pub lambda: f64,
    pub symmetrize: Symmetrize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 10,
            lambda: 1.0,
            symmetrize: Symmetrize::Union,
        }
    }
}

/// Compressed sparse row matrix with sorted column indices in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn transpose(&self) -> Csr {
        let n = self.rows();
        let mut counts = vec![0usize; n + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Csr {
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        out
    }

    fn from_sorted_rows(rows: &[Vec<usize>], value: impl Fn(usize, usize) -> f64) -> Csr {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (i, cols) in rows.iter().enumerate() {
            for &j in cols {
                col_idx.push(j);
                values.push(value(i, j));
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// The normalized operator `S` together with the self-loop weight used.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedOperator {
    pub lambda: f64,
    /// Augmented degrees `deg(i) + lambda`.
    pub degrees: Vec<f64>,
    pub matrix: Csr,
}

/// Undirected unit-weight graph over `n` nodes, optionally normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    n: usize,
    adjacency: Csr,
    normalized: Option<NormalizedOperator>,
}

impl SparseGraph {
    /// Builds a graph from an undirected edge list. Duplicates are merged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(GraphError::BadEdge(i, j));
            }
            rows[i].push(j);
            rows[j].push(i);
        }
        Ok(Self::from_neighbor_lists(rows))
    }

    fn from_neighbor_lists(mut rows: Vec<Vec<usize>>) -> Self {
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        Self {
            n: rows.len(),
            adjacency: Csr::from_sorted_rows(&rows, |_, _| 1.0),
            normalized: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn normalized(&self) -> Option<&NormalizedOperator> {
        self.normalized.as_ref()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row_ptr[i + 1] - self.adjacency.row_ptr[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.row(i).0
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Row sums of `S`. Not bounded by one in general: a node whose
    /// neighbours have smaller degree than itself sums above one.
    pub fn operator_row_sums(&self) -> Result<Vec<f64>> {
        let op = self.normalized.as_ref().ok_or(GraphError::NotNormalized)?;
        Ok((0..self.n)
            .map(|i| op.matrix.row(i).1.iter().sum())
            .collect())
    }

    /// Random-walk operator `D^{-1} (A + lambda I)` on the same pattern.
    /// Rows sum to one, so constant signals are fixed points.
    pub fn random_walk_operator(&self) -> Result<Csr> {
        let op = self.normalized.as_ref().ok_or(GraphError::NotNormalized)?;
        let mut out = op.matrix.clone();
        for i in 0..self.n {
            for p in out.row_ptr[i]..out.row_ptr[i + 1] {
                let j = out.col_idx[p];
                let a = if i == j { op.lambda } else { 1.0 };
                out.values[p] = a / op.degrees[i];
            }
        }
        Ok(out)
    }

    /// Writes `A` (pattern) or `S` (real) as a symmetric Matrix Market file,
    /// listing the lower triangle with 1-based indices.
    pub fn to_matrix_market(&self, normalized: bool) -> Result<String> {
        let csr = if normalized {
            &self
                .normalized
                .as_ref()
                .ok_or(GraphError::NotNormalized)?
                .matrix
        } else {
            &self.adjacency
        };
        let mut entries = Vec::new();
        for i in 0..self.n {
            let (cols, vals) = csr.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    entries.push((i, j, v));
                }
            }
        }
        let kind = if normalized { "real" } else { "pattern" };
        let mut out = format!("%%MatrixMarket matrix coordinate {kind} symmetric\n");
        writeln!(out, "{} {} {}", self.n, self.n, entries.len()).unwrap();
        for (i, j, v) in entries {
            if normalized {
                writeln!(out, "{} {} {v:e}", i + 1, j + 1).unwrap();
            } else {
                writeln!(out, "{} {}", i + 1, j + 1).unwrap();
            }
        }
        Ok(out)
    }

    pub fn write_matrix_market(&self, path: &Path, normalized: bool) -> Result<()> {
        fs::write(path, self.to_matrix_market(normalized)?).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Directed k-NN lists by exact cosine similarity, self excluded, ties to
/// the lower index. Row `i` of the result is sorted by rank.
pub fn knn_lists(x: &EmbeddingMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let (n, d) = (x.rows(), x.cols());
    if k == 0 || k >= n {
        return Err(GraphError::BadK { k, n });
    }
    let mut unit = x.clone();
    for i in 0..n {
        let norm = x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GraphError::ZeroNorm(i));
        }
        unit.as_mut_slice()[i * d..(i + 1) * d]
            .iter_mut()
            .for_each(|v| *v /= norm);
    }
    let unit = &unit;
    Ok(exec::map_indices(n, |i| {
        let query = unit.row(i);
        let mut scored: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let sim = query
                    .iter()
                    .zip(unit.row(j))
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                (sim, j)
            })
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        scored.into_iter().map(|(_, j)| j).collect()
    }))
}

/// Builds the symmetrized unit-weight k-NN graph (not yet normalized).
pub fn cosine_knn(x: &EmbeddingMatrix, config: &KnnConfig) -> Result<SparseGraph> {
    let directed = knn_lists(x, config.k)?;
    let n = directed.len();
    let rows = match config.symmetrize {
        Symmetrize::Union => {
            let mut rows = directed.clone();
            for (i, list) in directed.iter().enumerate() {
                for &j in list {
                    rows[j].push(i);
                }
            }
            rows
        }
        Symmetrize::Mutual => {
            let sorted: Vec<Vec<usize>> = directed
                .iter()
                .map(|l| {
                    let mut s = l.clone();
                    s.sort_unstable();
                    s
                })
                .collect();
            (0..n)
                .map(|i| {
                    sorted[i]
                        .iter()
                        .copied()
                        .filter(|&j| sorted[j].binary_search(&i).is_ok())
                        .collect()
                })
                .collect()
        }
    };
    Ok(SparseGraph::from_neighbor_lists(rows))
}

/// Attaches `S = D^{-1/2} (A + lambda I) D^{-1/2}` to the graph.
pub fn normalize(graph: &SparseGraph, lambda: f64) -> Result<SparseGraph> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(GraphError::BadLambda(lambda));
    }
    let n = graph.n;
    let degrees: Vec<f64> = (0..n).map(|i| graph.degree(i) as f64 + lambda).collect();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(GraphError::Isolated(i));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut cols = graph.neighbors(i).to_vec();
            let at = cols.partition_point(|&j| j < i);
            cols.insert(at, i);
            cols
        })
        .collect();
    let matrix = Csr::from_sorted_rows(&rows, |i, j| {
        if i == j {
            lambda / degrees[i]
        } else {
            inv_sqrt[i] * inv_sqrt[j]
        }
    });
    Ok(SparseGraph {
        n,
        adjacency: graph.adjacency.clone(),
        normalized: Some(NormalizedOperator {
            lambda,
            degrees,
            matrix,
        }),
    })
}

/// Builds and normalizes in one step.
pub fn build_graph(x: &EmbeddingMatrix, config: &KnnConfig) -> Result<SparseGraph> {
    normalize(&cosine_knn(x, config)?, config.lambda)
}

/// Laplacian quadratic form `f^T (D - A) f = 1/2 sum_ij a_ij (f_i - f_j)^2`
/// over the un-augmented adjacency.
pub fn smoothness(graph: &SparseGraph, f: &[f64]) -> Result<f64> {
    if f.len() != graph.n {
        return Err(GraphError::Dimension {
            graph: graph.n,
            input: f.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..graph.n {
        for &j in graph.neighbors(i) {
            let diff = f[i] - f[j];
            total += diff * diff;
        }
    }
    Ok(0.5 * total)
}

/// Sum of [`smoothness`] over the columns of a signal matrix, i.e.
/// `trace(H^T L H)`.
pub fn total_smoothness(graph: &SparseGraph, h: &EmbeddingMatrix) -> Result<f64> {
    if h.rows() != graph.n {
        return Err(GraphError::Dimension {
            graph: graph.n,
            input: h.rows(),
        });
    }
    let mut total = 0.0;
    for i in 0..graph.n {
        for &j in graph.neighbors(i) {
            total += h
                .row(i)
                .iter()
                .zip(h.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    Ok(0.5 * total)
}

/// `out = M * H` for any square CSR operator `M`.
pub fn csr_mul(matrix: &Csr, h: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let n = matrix.rows();
    if h.rows() != n {
        return Err(GraphError::Dimension {
            graph: n,
            input: h.rows(),
        });
    }
    let d = h.cols();
    let mut out = EmbeddingMatrix::zeros(n, d);
    exec::for_each_row_mut(out.as_mut_slice(), d, |i, row| {
        let (cols, vals) = matrix.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            for (o, &v) in row.iter_mut().zip(h.row(j)) {
                *o += w * v;
            }
        }
    });
    Ok(out)
}

/// `S * H` with the normalized operator.
pub fn spmm(graph: &SparseGraph, h: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let op = graph.normalized.as_ref().ok_or(GraphError::NotNormalized)?;
    csr_mul(&op.matrix, h)
}

/// Hop distances from `source` by breadth-first search (`usize::MAX` when
/// unreachable).
pub fn hop_distances(graph: &SparseGraph, source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.n];
    let mut queue = std::collections::VecDeque::from([source]);
    dist[source] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

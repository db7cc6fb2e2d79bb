//! Graph smoothing of sentence embeddings.
//!
//! Builds a cosine k-NN graph over precomputed embeddings, smooths them with
//! polynomial graph filters and evaluates the result with k-means,
//! logistic regression, partition/classification metrics and rank tests.

pub mod embedding_io;
pub mod eval_metrics;
pub mod exec;
pub mod graph_filters;
pub mod kmeans;
pub mod knn_graph;
pub mod logreg;
pub mod pipeline;
pub mod special;
pub mod synthetic;

pub use embedding_io::{EmbeddingMatrix, LabelVector, SplitIndex};
pub use graph_filters::{apply_filter, FilterKind, FilterSpec};
pub use knn_graph::{KnnConfig, SparseGraph, Symmetrize};

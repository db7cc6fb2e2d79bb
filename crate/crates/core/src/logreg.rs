//! Multinomial logistic regression with an L2 penalty, fitted by full-batch
//! L-BFGS with a backtracking Armijo line search.
//!
//! Objective: `mean_i [logsumexp(z_i) - z_{i,y_i}] + (l2 / 2) ||W||^2` with
//! `z_i = W x_i + b`. The bias is not penalized. Parameters are packed as
//! `[W (C x d, row-major), b (C)]`.

use std::collections::VecDeque;
use std::path::Path;

use crate::embedding_io::{self, EmbeddingIoError, EmbeddingMatrix, MatrixFormat};
use crate::exec;

/// Rows per block in the gradient reduction. Block partials are summed in
/// block order, so results do not depend on the thread count.
const BLOCK_ROWS: usize = 256;
const HISTORY: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum LogRegError {
    #[error("training labels contain a single class; need at least two")]
    SingleClass,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("model expects {expected} features, input has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("features contain non-finite values")]
    NonFinite,
    #[error("l2 strength must be finite and non-negative, got {0}")]
    BadL2(f64),
    #[error("model file must have at least two rows and two columns")]
    BadModel,
    #[error(transparent)]
    Io(#[from] EmbeddingIoError),
}

pub type Result<T> = std::result::Result<T, LogRegError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRegConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop when the largest absolute gradient component is below this.
    pub grad_tol: f64,
    /// Unused: initialization is all zeros.
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 500,
            grad_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRegModel {
    /// `C x d`
    pub weights: EmbeddingMatrix,
    pub bias: Vec<f64>,
}

/// Optimizer bookkeeping, kept for diagnostics and tests.
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub iterations: usize,
    /// Objective after every accepted step, starting with the initial value.
    pub objective_trace: Vec<f64>,
    pub final_grad_norm: f64,
}

/// Numerically stable softmax, in place.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Mean cross-entropy plus penalty, and its gradient, at packed `params`.
pub fn objective_and_gradient(
    params: &[f64],
    x: &EmbeddingMatrix,
    y: &[usize],
    n_classes: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    let c = n_classes;
    let (w, b) = params.split_at(c * d);
    let blocks = n.div_ceil(BLOCK_ROWS);
    let partials = exec::map_indices(blocks, |blk| {
        let mut grad = vec![0.0; c * d + c];
        let mut loss = 0.0;
        let mut z = vec![0.0; c];
        for i in blk * BLOCK_ROWS..((blk + 1) * BLOCK_ROWS).min(n) {
            let xi = x.row(i);
            for k in 0..c {
                z[k] = b[k]
                    + w[k * d..(k + 1) * d]
                        .iter()
                        .zip(xi)
                        .map(|(a, v)| a * v)
                        .sum::<f64>();
            }
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - z[y[i]];
            for k in 0..c {
                let residual = (z[k] - lse).exp() - if k == y[i] { 1.0 } else { 0.0 };
                grad[k * d..(k + 1) * d]
                    .iter_mut()
                    .zip(xi)
                    .for_each(|(g, v)| *g += residual * v);
                grad[c * d + k] += residual;
            }
        }
        (loss, grad)
    });
    let mut loss = 0.0;
    let mut grad = vec![0.0; c * d + c];
    for (l, g) in partials {
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, v)| *a += v);
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    grad.iter_mut().for_each(|g| *g *= inv_n);
    let penalty: f64 = w.iter().map(|v| v * v).sum();
    loss += 0.5 * l2 * penalty;
    grad[..c * d]
        .iter_mut()
        .zip(w)
        .for_each(|(g, v)| *g += l2 * v);
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn fit(x: &EmbeddingMatrix, y: &[usize], config: &LogRegConfig) -> Result<LogRegModel> {
    fit_with_report(x, y, config).map(|(m, _)| m)
}

/// Fits the model. The class count is `max(y) + 1`; classes absent from `y`
/// are driven towards zero probability.
pub fn fit_with_report(
    x: &EmbeddingMatrix,
    y: &[usize],
    config: &LogRegConfig,
) -> Result<(LogRegModel, FitReport)> {
    if x.rows() != y.len() {
        return Err(LogRegError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if !config.l2.is_finite() || config.l2 < 0.0 {
        return Err(LogRegError::BadL2(config.l2));
    }
    if !x.is_finite() {
        return Err(LogRegError::NonFinite);
    }
    let first = y.first().copied().unwrap_or(0);
    if y.iter().all(|&l| l == first) {
        return Err(LogRegError::SingleClass);
    }
    let c = y.iter().max().map_or(0, |m| m + 1);
    let d = x.cols();
    let eval = |p: &[f64]| objective_and_gradient(p, x, y, c, config.l2);

    let mut params = vec![0.0; c * d + c];
    let (mut f, mut g) = eval(&params);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    while iterations < config.max_iter && inf_norm(&g) > config.grad_tol {
        iterations += 1;
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, s)| p + step * s).collect();
            let (ft, gt) = eval(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else {
            break;
        };
        let s: Vec<f64> = trial.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        let improved = ft < f;
        params = trial;
        f = ft;
        g = gt;
        trace.push(f);
        if !improved {
            break;
        }
    }
    let (w, b) = params.split_at(c * d);
    Ok((
        LogRegModel {
            weights: EmbeddingMatrix::from_raw(c, d, w.to_vec()),
            bias: b.to_vec(),
        },
        FitReport {
            iterations,
            objective_trace: trace,
            final_grad_norm: inf_norm(&g),
        },
    ))
}

/// L-BFGS two-loop recursion: returns `-H g`.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        q.iter_mut()
            .zip(s)
            .for_each(|(qi, si)| *qi += (a - beta) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

impl LogRegModel {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn n_features(&self) -> usize {
        self.weights.cols()
    }

    fn check(&self, x: &EmbeddingMatrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(LogRegError::Dimension {
                expected: self.n_features(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Class probabilities, `n x C`.
    pub fn predict_proba(&self, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        self.check(x)?;
        let c = self.n_classes();
        let mut out = EmbeddingMatrix::zeros(x.rows(), c);
        exec::for_each_row_mut(out.as_mut_slice(), c, |i, row| {
            for (k, z) in row.iter_mut().enumerate() {
                *z = self.bias[k] + dot(self.weights.row(k), x.row(i));
            }
            softmax_in_place(row);
        });
        Ok(out)
    }

    /// Arg-max class per row; ties go to the lower class id.
    pub fn predict(&self, x: &EmbeddingMatrix) -> Result<Vec<usize>> {
        let proba = self.predict_proba(x)?;
        Ok((0..proba.rows())
            .map(|i| {
                proba
                    .row(i)
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &p)| {
                        if p > best.1 {
                            (k, p)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect())
    }

    /// Packs the model as a `C x (d + 1)` matrix: each row is `W_c` then `b_c`.
    pub fn to_matrix(&self) -> EmbeddingMatrix {
        let (c, d) = (self.n_classes(), self.n_features());
        let mut data = Vec::with_capacity(c * (d + 1));
        for k in 0..c {
            data.extend_from_slice(self.weights.row(k));
            data.push(self.bias[k]);
        }
        EmbeddingMatrix::from_raw(c, d + 1, data)
    }

    pub fn from_matrix(m: &EmbeddingMatrix) -> Result<Self> {
        let (c, cols) = (m.rows(), m.cols());
        if c < 2 || cols < 2 {
            return Err(LogRegError::BadModel);
        }
        let d = cols - 1;
        let mut w = Vec::with_capacity(c * d);
        let mut bias = Vec::with_capacity(c);
        for k in 0..c {
            w.extend_from_slice(&m.row(k)[..d]);
            bias.push(m.get(k, d));
        }
        Ok(Self {
            weights: EmbeddingMatrix::from_raw(c, d, w),
            bias,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(embedding_io::save_embeddings(
            &self.to_matrix(),
            path,
            MatrixFormat::Binary,
        )?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_matrix(&embedding_io::load_embeddings(path, MatrixFormat::Binary)?)
    }
}

//! Lloyd's k-means with k-means++ seeding and best-of-`n_init` restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding_io::EmbeddingMatrix;
use crate::exec;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KMeansError {
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("number of clusters must be positive")]
    ZeroClusters,
    #[error("tolerance must be finite and non-negative, got {0}")]
    Tolerance(f64),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("initial centroids have shape {rows}x{cols}, expected {k}x{d}")]
    CentroidShape {
        rows: usize,
        cols: usize,
        k: usize,
        d: usize,
    },
}

pub type Result<T> = std::result::Result<T, KMeansError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansConfig {
    pub k_clusters: usize,
    pub max_iter: usize,
    /// Stop when the relative inertia decrease falls below this.
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k_clusters: usize, seed: u64) -> Self {
        Self {
            k_clusters,
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
            seed,
        }
    }

    fn validate(&self, x: &EmbeddingMatrix) -> Result<()> {
        if self.k_clusters == 0 {
            return Err(KMeansError::ZeroClusters);
        }
        if self.k_clusters > x.rows() {
            return Err(KMeansError::TooManyClusters {
                k: self.k_clusters,
                n: x.rows(),
            });
        }
        if !self.tol.is_finite() || self.tol < 0.0 {
            return Err(KMeansError::Tolerance(self.tol));
        }
        if !x.is_finite() {
            return Err(KMeansError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub assignments: Vec<usize>,
    /// `k x d` row-major.
    pub centroids: EmbeddingMatrix,
    pub inertia: f64,
    pub iterations: usize,
}

/// One Lloyd run with the inertia after every assignment step.
#[derive(Clone, Debug)]
pub struct LloydRun {
    pub partition: Partition,
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_dist(point, centroid);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then each next centre drawn with
/// probability proportional to squared distance to the closest chosen one.
/// If every remaining point coincides with a chosen centre the draw falls
/// back to a uniform row.
pub fn kmeanspp_init(x: &EmbeddingMatrix, k: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeanspp_with_rng(x, k, &mut rng)
}

fn kmeanspp_with_rng(
    x: &EmbeddingMatrix,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingMatrix> {
    let (n, d) = (x.rows(), x.cols());
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if k > n {
        return Err(KMeansError::TooManyClusters { k, n });
    }
    let mut centroids = Vec::with_capacity(k * d);
    centroids.extend_from_slice(x.row(rng.random_range(0..n)));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), &centroids[..d])).collect();
    while centroids.len() < k * d {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in closest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the final sum
            chosen.unwrap_or_else(|| {
                closest
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("positive mass")
            })
        } else {
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(x.row(pick));
        let newest = &centroids[start..];
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(sq_dist(x.row(i), newest));
        }
    }
    Ok(EmbeddingMatrix::from_raw(k, d, centroids))
}

fn assign(
    x: &EmbeddingMatrix,
    centroids: &[f64],
    assignments: &mut [usize],
    dists: &mut [f64],
) -> f64 {
    let d = x.cols();
    for i in 0..x.rows() {
        let (c, dist) = nearest(x.row(i), centroids, d);
        assignments[i] = c;
        dists[i] = dist;
    }
    dists.iter().sum()
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(
    x: &EmbeddingMatrix,
    k: usize,
    centroids: &mut [f64],
    assignments: &mut [usize],
    dists: &mut [f64],
) -> bool {
    let d = x.cols();
    let mut changed = false;
    loop {
        let mut sizes = vec![0usize; k];
        assignments.iter().for_each(|&a| sizes[a] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return changed;
        };
        let donor = (0..x.rows())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .expect("n >= k guarantees a cluster with two members");
        assignments[donor] = empty;
        dists[donor] = 0.0;
        centroids[empty * d..(empty + 1) * d].copy_from_slice(x.row(donor));
        changed = true;
    }
}

fn update_centroids(x: &EmbeddingMatrix, k: usize, assignments: &[usize]) -> Vec<f64> {
    let d = x.cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        sums[c * d..(c + 1) * d]
            .iter_mut()
            .zip(x.row(i))
            .for_each(|(s, v)| *s += v);
    }
    for c in 0..k {
        let inv = 1.0 / counts[c] as f64;
        sums[c * d..(c + 1) * d].iter_mut().for_each(|s| *s *= inv);
    }
    sums
}

/// Lloyd iterations from the given centroids. Clusters are never left empty.
pub fn lloyd(
    x: &EmbeddingMatrix,
    init: &EmbeddingMatrix,
    max_iter: usize,
    tol: f64,
) -> Result<LloydRun> {
    let (n, d, k) = (x.rows(), x.cols(), init.rows());
    if init.cols() != d || k == 0 || k > n {
        return Err(KMeansError::CentroidShape {
            rows: k,
            cols: init.cols(),
            k: k.clamp(1, n),
            d,
        });
    }
    let mut centroids = init.as_slice().to_vec();
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut inertia = assign(x, &centroids, &mut assignments, &mut dists);
    let mut trace = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        repair_empty(x, k, &mut centroids, &mut assignments, &mut dists);
        centroids = update_centroids(x, k, &assignments);
        let next = assign(x, &centroids, &mut assignments, &mut dists);
        trace.push(next);
        let converged = inertia - next <= tol * inertia;
        inertia = next;
        if converged {
            break;
        }
    }
    if repair_empty(x, k, &mut centroids, &mut assignments, &mut dists) {
        centroids = update_centroids(x, k, &assignments);
        inertia = (0..n)
            .map(|i| {
                sq_dist(
                    x.row(i),
                    &centroids[assignments[i] * d..(assignments[i] + 1) * d],
                )
            })
            .sum();
        trace.push(inertia);
    }
    Ok(LloydRun {
        partition: Partition {
            assignments,
            centroids: EmbeddingMatrix::from_raw(k, d, centroids),
            inertia,
            iterations,
        },
        inertia_trace: trace,
    })
}

/// Best-inertia partition over `n_init` seeded restarts. Restart `r` uses
/// seed `config.seed + r`; ties go to the earliest restart.
pub fn fit(x: &EmbeddingMatrix, config: &KMeansConfig) -> Result<Partition> {
    config.validate(x)?;
    let restarts = config.n_init.max(1);
    let runs = exec::map_indices(restarts, |r| {
        let init = kmeanspp_init(x, config.k_clusters, config.seed.wrapping_add(r as u64))?;
        lloyd(x, &init, config.max_iter, config.tol)
    });
    let mut best: Option<Partition> = None;
    for run in runs {
        let p = run?.partition;
        if best.as_ref().is_none_or(|b| p.inertia < b.inertia) {
            best = Some(p);
        }
    }
    Ok(best.expect("at least one restart"))
}

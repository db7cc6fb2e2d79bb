//! Gaussian mixture generator for tests, benches and demos.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding_io::{EmbeddingMatrix, LabelVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// Norm of every component mean.
    pub separation: f64,
    /// Per-coordinate standard deviation of component 0.
    pub spread: f64,
    /// Component `c` has standard deviation `spread * spread_growth^c`.
    pub spread_growth: f64,
    /// When set, each component varies only inside its own random subspace
    /// of this dimension (same total variance as the spherical case).
    pub latent_dim: Option<usize>,
    /// Per-coordinate standard deviation of isotropic noise added to every
    /// point on top of the component spread.
    pub ambient: f64,
    pub seed: u64,
}

impl MixtureConfig {
    pub fn new(n: usize, d: usize, k: usize, separation: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            k,
            separation,
            spread: 1.0,
            spread_growth: 1.0,
            latent_dim: None,
            ambient: 0.0,
            seed,
        }
    }
}

/// Draws `n` points from `k` Gaussians whose means lie on a sphere of radius
/// `separation`. Point `i` belongs to component `i % k`.
///
/// # Panics
/// If `n < k`, `k == 0`, `d == 0` or `latent_dim == Some(0)`.
pub fn gaussian_mixture(config: &MixtureConfig) -> (EmbeddingMatrix, LabelVector) {
    let MixtureConfig {
        n,
        d,
        k,
        separation,
        spread,
        spread_growth,
        latent_dim,
        ambient,
        seed,
    } = *config;
    assert!(k >= 1 && d >= 1 && n >= k, "need n >= k >= 1 and d >= 1");
    assert!(latent_dim != Some(0), "latent dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = vec![0.0; k * d];
    for c in 0..k {
        let row = &mut means[c * d..(c + 1) * d];
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let norm = row
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        for v in row.iter_mut() {
            *v *= separation / norm;
        }
    }
    // d x r loadings per component, entries N(0, 1/r).
    let bases: Vec<Vec<f64>> = match latent_dim {
        Some(r) => (0..k)
            .map(|_| {
                let scale = (r as f64).sqrt().recip();
                (0..d * r)
                    .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect(),
        None => Vec::new(),
    };
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut z = Vec::new();
    for i in 0..n {
        let c = i % k;
        let sigma = spread * spread_growth.powi(c as i32);
        match latent_dim {
            Some(r) => {
                z.clear();
                z.extend((0..r).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng)));
                let basis = &bases[c];
                for j in 0..d {
                    let offset: f64 = basis[j * r..(j + 1) * r]
                        .iter()
                        .zip(&z)
                        .map(|(b, v)| b * v)
                        .sum();
                    data.push(means[c * d + j] + sigma * offset);
                }
            }
            None => {
                for j in 0..d {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    data.push(means[c * d + j] + sigma * noise);
                }
            }
        }
        if ambient > 0.0 {
            for v in &mut data[i * d..] {
                let noise: f64 = StandardNormal.sample(&mut rng);
                *v += ambient * noise;
            }
        }
        labels.push(c);
    }
    let x = EmbeddingMatrix::new(n, d, data).expect("mixture values are finite");
    let y = LabelVector::from_contiguous(labels).expect("every component is populated");
    (x, y)
}

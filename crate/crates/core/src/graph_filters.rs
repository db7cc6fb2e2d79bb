//! Polynomial graph filters applied by repeated sparse propagation.
//!
//! | kind   | step                                   |
//! |--------|----------------------------------------|
//! | SGC    | `H <- S H`                             |
//! | S2GC   | `H <- H + S H`                         |
//! | APPNP  | `H <- (1 - alpha) S H + alpha X`       |
//! | DGC    | `H <- (1 - T/P) H + (T/P) S H`         |
//!
//! Each starts from `H = X` and runs exactly `P` steps, so the output row of
//! a node depends only on input rows within `P` hops of it.

use std::fmt;
use std::str::FromStr;

use crate::embedding_io::EmbeddingMatrix;
use crate::knn_graph::{self, GraphError, SparseGraph};

/// Largest operator size accepted by [`filter_closed_form`].
pub const DENSE_ORACLE_LIMIT: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("DGC needs a finite T > 0, got {0}")]
    Tee(f64),
    #[error("DGC with order 0 is undefined (T/P divides by zero)")]
    DgcZeroOrder,
    #[error("DGC step T/P = {tee}/{order} exceeds 1; set allow_large_step to accept it")]
    DgcStep { tee: f64, order: usize },
    #[error("dense closed form is limited to n <= {DENSE_ORACLE_LIMIT}, got {0}")]
    TooLarge(usize),
    #[error("unknown filter {0:?} (expected none, sgc, s2gc, s2gc-avg, appnp or dgc)")]
    UnknownKind(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, FilterError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    Sgc,
    S2gc,
    /// `(1/(P+1)) sum_{p=0}^{P} S^p X`, the averaged S2GC formulation.
    S2gcAveraged,
    Appnp,
    Dgc,
}

impl FilterKind {
    pub const PROTOCOL_KINDS: [FilterKind; 4] = [Self::Sgc, Self::S2gc, Self::Appnp, Self::Dgc];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sgc => "sgc",
            Self::S2gc => "s2gc",
            Self::S2gcAveraged => "s2gc-avg",
            Self::Appnp => "appnp",
            Self::Dgc => "dgc",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgc" => Ok(Self::Sgc),
            "s2gc" => Ok(Self::S2gc),
            "s2gc-avg" | "s2gc_avg" | "s2gc-averaged" => Ok(Self::S2gcAveraged),
            "appnp" => Ok(Self::Appnp),
            "dgc" => Ok(Self::Dgc),
            other => Err(FilterError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Propagation order `P`.
    pub order: usize,
    /// Teleport weight for APPNP.
    pub alpha: f64,
    /// Diffusion time `T` for DGC.
    pub tee: f64,
    /// Accept DGC with `T > P`, which extrapolates past `S H`.
    pub allow_large_step: bool,
}

impl FilterSpec {
    /// Clustering defaults: `P = 2`, `alpha = 0.1`, `T = 5`. DGC with these
    /// values has `T/P = 2.5`, so the large-step override is switched on.
    pub fn clustering_default(kind: FilterKind) -> Self {
        Self {
            kind,
            order: 2,
            alpha: 0.1,
            tee: 5.0,
            allow_large_step: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FilterKind::Appnp if !(0.0..=1.0).contains(&self.alpha) => {
                Err(FilterError::Alpha(self.alpha))
            }
            FilterKind::Dgc => {
                if !self.tee.is_finite() || self.tee <= 0.0 {
                    Err(FilterError::Tee(self.tee))
                } else if self.order == 0 {
                    Err(FilterError::DgcZeroOrder)
                } else if self.tee > self.order as f64 && !self.allow_large_step {
                    Err(FilterError::DgcStep {
                        tee: self.tee,
                        order: self.order,
                    })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Hyperparameters that affect this kind, for report records.
    pub fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("order", self.order as f64)];
        match self.kind {
            FilterKind::Appnp => out.push(("alpha", self.alpha)),
            FilterKind::Dgc => out.push(("tee", self.tee)),
            _ => {}
        }
        out
    }
}

fn axpby(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
}

/// Runs the propagation rule `P` times starting from `X`.
pub fn apply_filter(
    spec: &FilterSpec,
    graph: &SparseGraph,
    x: &EmbeddingMatrix,
) -> Result<EmbeddingMatrix> {
    spec.validate()?;
    if graph.normalized().is_none() {
        return Err(GraphError::NotNormalized.into());
    }
    if x.rows() != graph.n() {
        return Err(GraphError::Dimension {
            graph: graph.n(),
            input: x.rows(),
        }
        .into());
    }
    let (n, d) = (x.rows(), x.cols());
    let p = spec.order;
    let mut h = x.clone();
    let mut running_sum = (spec.kind == FilterKind::S2gcAveraged).then(|| x.as_slice().to_vec());
    for _ in 0..p {
        let sh = knn_graph::spmm(graph, &h)?;
        let next = match spec.kind {
            FilterKind::Sgc | FilterKind::S2gcAveraged => sh.into_vec(),
            FilterKind::S2gc => axpby(1.0, h.as_slice(), 1.0, sh.as_slice()),
            FilterKind::Appnp => axpby(1.0 - spec.alpha, sh.as_slice(), spec.alpha, x.as_slice()),
            FilterKind::Dgc => {
                let step = spec.tee / p as f64;
                axpby(1.0 - step, h.as_slice(), step, sh.as_slice())
            }
        };
        if let Some(sum) = running_sum.as_mut() {
            sum.iter_mut().zip(&next).for_each(|(s, v)| *s += v);
        }
        h = EmbeddingMatrix::from_raw(n, d, next);
    }
    if let Some(sum) = running_sum {
        let scale = 1.0 / (p as f64 + 1.0);
        h = EmbeddingMatrix::from_raw(n, d, sum.into_iter().map(|v| v * scale).collect());
    }
    Ok(h)
}

/// Small dense square matrices for the closed-form operators.
pub mod dense {
    pub type Dense = Vec<Vec<f64>>;

    pub fn identity(n: usize) -> Dense {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    pub fn matmul(a: &Dense, b: &Dense) -> Dense {
        let (n, m) = (a.len(), b.first().map_or(0, Vec::len));
        let mut out = vec![vec![0.0; m]; n];
        for i in 0..n {
            for (k, &aik) in a[i].iter().enumerate() {
                for j in 0..m {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
        out
    }

    /// `a * A + b * B`
    pub fn lincomb(a: f64, x: &Dense, b: f64, y: &Dense) -> Dense {
        x.iter()
            .zip(y)
            .map(|(rx, ry)| rx.iter().zip(ry).map(|(u, v)| a * u + b * v).collect())
            .collect()
    }

    pub fn power(m: &Dense, p: usize) -> Dense {
        (0..p).fold(identity(m.len()), |acc, _| matmul(&acc, m))
    }
}

/// Dense `n x n` operator equivalent to `P` propagation steps.
pub fn filter_closed_form(spec: &FilterSpec, s: &dense::Dense) -> Result<dense::Dense> {
    use dense::*;
    spec.validate()?;
    let n = s.len();
    if n > DENSE_ORACLE_LIMIT {
        return Err(FilterError::TooLarge(n));
    }
    let p = spec.order;
    let eye = identity(n);
    Ok(match spec.kind {
        FilterKind::Sgc => power(s, p),
        FilterKind::S2gc => power(&lincomb(1.0, &eye, 1.0, s), p),
        FilterKind::S2gcAveraged => {
            let sum = (0..=p).fold(vec![vec![0.0; n]; n], |acc, j| {
                lincomb(1.0, &acc, 1.0, &power(s, j))
            });
            lincomb(1.0 / (p as f64 + 1.0), &sum, 0.0, &eye)
        }
        FilterKind::Appnp => {
            let a = spec.alpha;
            let head = lincomb((1.0 - a).powi(p as i32), &power(s, p), 0.0, &eye);
            (0..p).fold(head, |acc, j| {
                lincomb(1.0, &acc, a * (1.0 - a).powi(j as i32), &power(s, j))
            })
        }
        FilterKind::Dgc => {
            let step = spec.tee / p as f64;
            power(&lincomb(1.0 - step, &eye, step, s), p)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn_graph::normalize;

    fn path_graph() -> SparseGraph {
        normalize(&SparseGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap(), 1.0).unwrap()
    }

    fn signal() -> EmbeddingMatrix {
        EmbeddingMatrix::new(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.5, 0.25]).unwrap()
    }

    fn spec(kind: FilterKind, order: usize) -> FilterSpec {
        FilterSpec {
            kind,
            order,
            alpha: 0.1,
            tee: 1.0,
            allow_large_step: false,
        }
    }

    #[test]
    fn zero_order_is_identity() {
        for kind in [
            FilterKind::Sgc,
            FilterKind::S2gc,
            FilterKind::S2gcAveraged,
            FilterKind::Appnp,
        ] {
            assert_eq!(
                apply_filter(&spec(kind, 0), &path_graph(), &signal()).unwrap(),
                signal()
            );
        }
        assert!(matches!(
            apply_filter(&spec(FilterKind::Dgc, 0), &path_graph(), &signal()),
            Err(FilterError::DgcZeroOrder)
        ));
    }

    #[test]
    fn appnp_alpha_one_returns_input() {
        let s = FilterSpec {
            alpha: 1.0,
            ..spec(FilterKind::Appnp, 4)
        };
        assert_eq!(
            apply_filter(&s, &path_graph(), &signal()).unwrap(),
            signal()
        );
    }

    #[test]
    fn coefficient_identities_with_sgc() {
        let sgc = apply_filter(&spec(FilterKind::Sgc, 3), &path_graph(), &signal()).unwrap();
        let dgc = FilterSpec {
            tee: 3.0,
            ..spec(FilterKind::Dgc, 3)
        };
        assert_eq!(apply_filter(&dgc, &path_graph(), &signal()).unwrap(), sgc);
        let appnp = FilterSpec {
            alpha: 0.0,
            ..spec(FilterKind::Appnp, 3)
        };
        assert_eq!(apply_filter(&appnp, &path_graph(), &signal()).unwrap(), sgc);
    }

    #[test]
    fn sgc_order_two_on_path_graph() {
        // S^2 by hand with r = 1/sqrt(6):
        //   row 0: [1/4 + 1/6, r/2 + r/3, 1/6]
        //   row 1: [r/2 + r/3, 1/6 + 1/9 + 1/6, r/3 + r/2]
        //   row 2: [1/6, r/3 + r/2, 1/6 + 1/4]
        let r = 1.0 / 6f64.sqrt();
        let s2 = [
            [5.0 / 12.0, 5.0 * r / 6.0, 1.0 / 6.0],
            [5.0 * r / 6.0, 4.0 / 9.0, 5.0 * r / 6.0],
            [1.0 / 6.0, 5.0 * r / 6.0, 5.0 / 12.0],
        ];
        let x = EmbeddingMatrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let out = apply_filter(&spec(FilterKind::Sgc, 2), &path_graph(), &x).unwrap();
        for (i, row) in s2.iter().enumerate() {
            let expected: f64 = (0..3).map(|j| row[j] * x.get(j, 0)).sum();
            assert!((out.get(i, 0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn dgc_order_two_closed_form() {
        let g = path_graph();
        let s = g.normalized().unwrap().matrix.to_dense();
        let half = dense::lincomb(0.5, &dense::identity(3), 0.5, &s);
        let expected = dense::matmul(&half, &half);
        let got = filter_closed_form(
            &FilterSpec {
                tee: 1.0,
                ..spec(FilterKind::Dgc, 2)
            },
            &s,
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((got[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
        let sgc1 = filter_closed_form(&spec(FilterKind::Sgc, 1), &s).unwrap();
        assert_eq!(sgc1, dense::matmul(&dense::identity(3), &s));
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            FilterSpec {
                alpha: 1.5,
                ..spec(FilterKind::Appnp, 2)
            }
            .validate(),
            Err(FilterError::Alpha(_))
        ));
        assert!(matches!(
            FilterSpec {
                tee: 5.0,
                ..spec(FilterKind::Dgc, 2)
            }
            .validate(),
            Err(FilterError::DgcStep { .. })
        ));
        assert!(FilterSpec {
            tee: 5.0,
            allow_large_step: true,
            ..spec(FilterKind::Dgc, 2)
        }
        .validate()
        .is_ok());
        assert!(matches!(
            FilterSpec {
                tee: 0.0,
                ..spec(FilterKind::Dgc, 2)
            }
            .validate(),
            Err(FilterError::Tee(_))
        ));
        assert!(FilterSpec::clustering_default(FilterKind::Dgc)
            .validate()
            .is_ok());
        assert!(matches!(
            filter_closed_form(&spec(FilterKind::Sgc, 1), &dense::identity(201)),
            Err(FilterError::TooLarge(201))
        ));
    }

    #[test]
    fn kind_parsing() {
        for kind in [
            FilterKind::Sgc,
            FilterKind::S2gc,
            FilterKind::S2gcAveraged,
            FilterKind::Appnp,
            FilterKind::Dgc,
        ] {
            assert_eq!(kind.name().parse::<FilterKind>().unwrap(), kind);
        }
        assert!("gcn".parse::<FilterKind>().is_err());
    }

    #[test]
    fn unnormalized_graph_rejected() {
        let g = SparseGraph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            apply_filter(&spec(FilterKind::Sgc, 1), &g, &signal()),
            Err(FilterError::Graph(GraphError::NotNormalized))
        ));
    }
}

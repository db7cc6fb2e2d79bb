//! Partition agreement (ARI, AMI) and classification F1.
//!
//! Labels are plain `usize` ids and need not be contiguous; both functions
//! only look at the contingency table. AMI uses natural-log mutual
//! information, the arithmetic mean of the two entropies as normalizer and
//! the exact expected mutual information under the permutation model.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::special::ln_factorial;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("label vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("label vectors are empty")]
    Empty,
    #[error("unknown averaging mode {0:?} (expected macro, micro or weighted)")]
    Averaging(String),
}

pub type Result<T> = std::result::Result<T, MetricError>;

/// Dense `R x C` count table between two labelings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub total: usize,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

impl ContingencyTable {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(MetricError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        if a.is_empty() {
            return Err(MetricError::Empty);
        }
        let (ra, r) = dense_ids(a);
        let (rb, c) = dense_ids(b);
        let mut counts = vec![vec![0usize; c]; r];
        for (&i, &j) in ra.iter().zip(&rb) {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
        let col_sums = (0..c)
            .map(|j| counts.iter().map(|row| row[j]).sum())
            .collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: a.len(),
        })
    }

    /// True when the table is a permutation matrix, i.e. the labelings are
    /// identical up to renaming.
    pub fn is_bijection(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|row| row.iter().filter(|&&v| v > 0).count() == 1)
    }
}

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index. Both-trivial partitions (all singletons or a single
/// cluster on both sides) score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    if table.is_bijection() {
        return Ok(1.0);
    }
    let index: f64 = table.counts.iter().flatten().map(|&v| comb2(v)).sum();
    let sum_a: f64 = table.row_sums.iter().map(|&v| comb2(v)).sum();
    let sum_b: f64 = table.col_sums.iter().map(|&v| comb2(v)).sum();
    let pairs = comb2(table.total);
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / pairs;
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

fn entropy(marginals: &[usize], n: usize) -> f64 {
    let n = n as f64;
    marginals
        .iter()
        .filter(|&&v| v > 0)
        .map(|&v| {
            let p = v as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information in nats.
pub fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total as f64;
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n
                    * (n * nij / (table.row_sums[i] as f64 * table.col_sums[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric permutation model,
/// summed cell by cell over every feasible count.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total;
    let nf = n as f64;
    let ln_n_fact = ln_factorial(n);
    let mut emi = 0.0;
    for &a in &table.row_sums {
        for &b in &table.col_sums {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed =
                ln_factorial(a) + ln_factorial(b) + ln_factorial(n - a) + ln_factorial(n - b)
                    - ln_n_fact;
            for nij in lo..=hi {
                let ln_p = fixed
                    - ln_factorial(nij)
                    - ln_factorial(a - nij)
                    - ln_factorial(b - nij)
                    - ln_factorial(n + nij - a - b);
                let x = nij as f64;
                emi += x / nf * (nf * x / (a as f64 * b as f64)).ln() * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with the arithmetic-mean normalizer.
pub fn ami(a: &[usize], b: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let (ha, hb) = (
        entropy(&table.row_sums, table.total),
        entropy(&table.col_sums, table.total),
    );
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    if table.is_bijection() {
        return Ok(1.0);
    }
    let mi = mutual_information(&table);
    let emi = expected_mutual_information(&table);
    let mut denom = 0.5 * (ha + hb) - emi;
    if denom.abs() < f64::EPSILON {
        denom = f64::EPSILON.copysign(denom);
    }
    Ok((mi - emi) / denom)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
    Weighted,
}

impl Averaging {
    pub fn name(self) -> &'static str {
        match self {
            Self::Macro => "macro",
            Self::Micro => "micro",
            Self::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Averaging {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(Self::Macro),
            "micro" => Ok(Self::Micro),
            "weighted" => Ok(Self::Weighted),
            other => Err(MetricError::Averaging(other.to_string())),
        }
    }
}

/// F1 over the classes present in `y_true`. Predicted ids outside that set
/// are plain errors: they miss the true class and are false positives in the
/// micro pool, so micro-F1 is always accuracy.
pub fn f1(y_true: &[usize], y_pred: &[usize], averaging: Averaging) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = y_true.len() as f64;
    if averaging == Averaging::Micro {
        let correct = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
        return Ok(correct as f64 / n);
    }
    // class -> (tp, fp, fn)
    let mut stats: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for &t in y_true {
        stats.entry(t).or_default();
    }
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            stats.get_mut(&t).expect("true class").0 += 1;
        } else {
            stats.get_mut(&t).expect("true class").2 += 1;
            if let Some(s) = stats.get_mut(&p) {
                s.1 += 1;
            }
        }
    }
    let per_class = stats.values().map(|&(tp, fp, fn_)| {
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let score = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        (score, (tp + fn_) as f64)
    });
    Ok(match averaging {
        Averaging::Macro => {
            let k = stats.len() as f64;
            per_class.map(|(s, _)| s).sum::<f64>() / k
        }
        Averaging::Weighted => per_class.map(|(s, support)| s * support).sum::<f64>() / n,
        Averaging::Micro => unreachable!(),
    })
}

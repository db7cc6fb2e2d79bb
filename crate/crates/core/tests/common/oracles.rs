//! Independent reference implementations used as test oracles.

/// Hubert-Arabie ARI from literal agreement counts over all pairs.
pub fn pair_count_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if denom == 0.0 {
        return 1.0;
    }
    2.0 * (n00 * n11 - n01 * n10) / denom
}

pub fn margins(labels: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; labels.iter().max().map_or(0, |m| m + 1)];
    labels.iter().for_each(|&l| counts[l] += 1);
    counts.retain(|&c| c > 0);
    counts
}

pub fn table(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    let (ra, rb) = (a.iter().max().unwrap() + 1, b.iter().max().unwrap() + 1);
    let mut t = vec![vec![0; rb]; ra];
    a.iter().zip(b).for_each(|(&i, &j)| t[i][j] += 1);
    t.retain(|row| row.iter().any(|&v| v > 0));
    let keep: Vec<usize> = (0..rb)
        .filter(|&j| t.iter().any(|row| row[j] > 0))
        .collect();
    t.into_iter()
        .map(|row| keep.iter().map(|&j| row[j]).collect())
        .collect()
}

pub fn ln_fact(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn entropy(m: &[usize], n: usize) -> f64 {
    m.iter()
        .map(|&v| v as f64 / n as f64)
        .map(|p| -p * p.ln())
        .sum()
}

pub fn mi_of(t: &[Vec<usize>], ra: &[usize], cb: &[usize], n: usize) -> f64 {
    let nf = n as f64;
    let mut mi = 0.0;
    for (i, row) in t.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0 {
                let v = v as f64;
                mi += v / nf * (nf * v / (ra[i] as f64 * cb[j] as f64)).ln();
            }
        }
    }
    mi
}

/// Calls `visit` with every non-negative integer table with the given margins.
pub fn enumerate_tables(rows: &[usize], cols: &[usize], visit: &mut dyn FnMut(&[Vec<usize>])) {
    fn fill_row(
        rows: &[usize],
        remaining: &mut Vec<usize>,
        current: &mut Vec<Vec<usize>>,
        visit: &mut dyn FnMut(&[Vec<usize>]),
    ) {
        let r = current.len();
        if r + 1 == rows.len() {
            current.push(remaining.clone());
            visit(current);
            current.pop();
            return;
        }
        let mut row = vec![0; remaining.len()];
        compose(rows, remaining, current, &mut row, 0, rows[r], visit);
    }
    fn compose(
        rows: &[usize],
        remaining: &mut Vec<usize>,
        current: &mut Vec<Vec<usize>>,
        row: &mut Vec<usize>,
        j: usize,
        left: usize,
        visit: &mut dyn FnMut(&[Vec<usize>]),
    ) {
        if j + 1 == row.len() {
            if left > remaining[j] {
                return;
            }
            row[j] = left;
            for (rem, v) in remaining.iter_mut().zip(row.iter()) {
                *rem -= v;
            }
            current.push(row.clone());
            fill_row(rows, remaining, current, visit);
            current.pop();
            for (rem, v) in remaining.iter_mut().zip(row.iter()) {
                *rem += v;
            }
            return;
        }
        for v in 0..=left.min(remaining[j]) {
            row[j] = v;
            compose(rows, remaining, current, row, j + 1, left - v, visit);
        }
    }
    let mut remaining = cols.to_vec();
    fill_row(rows, &mut remaining, &mut Vec::new(), visit);
}

/// `E[MI]` as the probability-weighted sum over all tables with fixed margins.
pub fn exhaustive_emi(ra: &[usize], cb: &[usize], n: usize) -> f64 {
    let fixed: f64 = ra.iter().chain(cb).map(|&v| ln_fact(v)).sum::<f64>() - ln_fact(n);
    let mut emi = 0.0;
    enumerate_tables(ra, cb, &mut |t| {
        let ln_p = fixed - t.iter().flatten().map(|&v| ln_fact(v)).sum::<f64>();
        emi += ln_p.exp() * mi_of(t, ra, cb, n);
    });
    emi
}

pub fn oracle_ami(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (ra, cb) = (margins(a), margins(b));
    let (ha, hb) = (entropy(&ra, n), entropy(&cb, n));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    // Identical partitions score 1; all-singleton cases would otherwise be 0/0.
    if same_up_to_permutation(a, b) {
        return 1.0;
    }
    let t = table(a, b);
    let mi = mi_of(&t, &ra, &cb, n);
    let emi = exhaustive_emi(&ra, &cb, n);
    (mi - emi) / (0.5 * (ha + hb) - emi)
}

pub fn same_up_to_permutation(a: &[usize], b: &[usize]) -> bool {
    table(a, b)
        .iter()
        .all(|row| row.iter().filter(|&&v| v > 0).count() == 1)
        && margins(a).len() == margins(b).len()
}

/// Composite Simpson rule with `steps` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `ln Gamma(k / 2)` for a positive integer `k`, from factorials and `Gamma(1/2) = sqrt(pi)`.
pub fn ln_gamma_half(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| (i as f64).ln()).sum()
    } else {
        // Gamma(j + 1/2) = prod_{i=0}^{j-1} (i + 1/2) * sqrt(pi)
        let j = k / 2;
        (0..j).map(|i| (i as f64 + 0.5).ln()).sum::<f64>() + 0.5 * std::f64::consts::PI.ln()
    }
}

pub fn t_cdf_oracle(t: f64, df: usize) -> f64 {
    let nu = df as f64;
    let ln_c = ln_gamma_half(df + 1) - ln_gamma_half(df) - 0.5 * (nu * std::f64::consts::PI).ln();
    let density = |x: f64| (ln_c - 0.5 * (nu + 1.0) * (1.0 + x * x / nu).ln()).exp();
    0.5 + simpson(density, 0.0, t, 20_000)
}

pub fn normal_cdf_oracle(z: f64) -> f64 {
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + simpson(density, 0.0, z, 20_000)
}

pub fn bisect(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

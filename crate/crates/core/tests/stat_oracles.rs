mod common;

use common::oracles::{bisect, normal_cdf_oracle, t_cdf_oracle};
use graphsmooth::special::{normal_cdf, normal_quantile, student_t_cdf, student_t_two_sided};
use graphsmooth::stat_tests::{
    bonferroni_dunn, critical_difference, rank_row, rank_scores, t_test, RankMatrix, ScoreCell,
    StatError,
};
use proptest::prelude::*;

#[test]
fn t_cdf_spot_value() {
    let oracle = t_cdf_oracle(2.228, 10);
    assert!((oracle - 0.975).abs() <= 1e-4, "oracle {oracle}");
    assert!((student_t_cdf(2.228, 10.0) - 0.975).abs() <= 1e-4);
    assert!((student_t_cdf(2.228, 10.0) - oracle).abs() <= 1e-9);
}

#[test]
fn t_cdf_matches_integrated_density() {
    for df in [1, 2, 3, 4, 5, 7, 10, 15, 22, 30, 60] {
        for t in [-6.0, -2.5, -1.0, -0.3, 0.0, 0.4, 1.0, 1.7, 2.228, 3.5, 8.0] {
            let (fast, oracle) = (student_t_cdf(t, df as f64), t_cdf_oracle(t, df));
            assert!(
                (fast - oracle).abs() <= 1e-6,
                "df {df} t {t}: {fast} vs {oracle}"
            );
            let two_sided = student_t_two_sided(t, df as f64);
            assert!((two_sided - 2.0 * (1.0 - t_cdf_oracle(f64::abs(t), df))).abs() <= 1e-6);
        }
    }
}

#[test]
fn normal_quantile_matches_integration() {
    for p in [
        1e-4, 0.001, 0.01, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.99, 0.99375, 0.999, 0.9999,
    ] {
        let oracle = bisect(p, normal_cdf_oracle);
        let fast = normal_quantile(p);
        assert!((fast - oracle).abs() <= 1e-6, "p {p}: {fast} vs {oracle}");
        assert!((normal_cdf(fast) - p).abs() <= 1e-9);
    }
    assert!((normal_quantile(0.99375) - 2.498).abs() <= 1e-3);
}

#[test]
fn critical_difference_example_and_monotonicity() {
    let cd = critical_difference(5, 8, 0.05);
    assert!((cd - 1.975).abs() <= 1e-3, "{cd}");
    let z = bisect(1.0 - 0.05 / 8.0, normal_cdf_oracle);
    assert!((cd - z * (30.0f64 / 48.0).sqrt()).abs() <= 1e-6);
    for m in 2..12 {
        for n in 2..30 {
            assert!(critical_difference(m, n + 1, 0.05) < critical_difference(m, n, 0.05));
            assert!(critical_difference(m + 1, n, 0.05) > critical_difference(m, n, 0.05));
        }
    }
}

#[test]
fn welch_matches_hand_formula() {
    let a = [71.2, 69.8, 70.5, 72.0, 70.9, 71.4];
    let b = [69.0, 70.1, 68.4, 69.7, 68.8, 70.3, 69.5, 69.9];
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    };
    let (sa, sb) = (var(&a) / 6.0, var(&b) / 8.0);
    let t = (mean(&a) - mean(&b)) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / 5.0 + sb * sb / 7.0);
    let out = t_test(&a, &b, 0.05).unwrap();
    assert!((out.t - t).abs() <= 1e-12 && (out.df - df).abs() <= 1e-9);
    assert!((out.p - student_t_two_sided(t, df)).abs() <= 1e-15);
    assert!(out.significant);
}

#[test]
fn welch_p_value_against_integration_at_integer_df() {
    // Equal sizes and variances make the Welch df exactly 2(n - 1).
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.5, 3.5, 4.5, 5.5, 6.5];
    let out = t_test(&a, &b, 0.05).unwrap();
    assert!((out.df - 8.0).abs() <= 1e-12);
    let oracle = 2.0 * (1.0 - t_cdf_oracle(out.t.abs(), 8));
    assert!((out.p - oracle).abs() <= 1e-6, "{} vs {oracle}", out.p);
}

#[test]
fn t_test_examples() {
    let same = [0.3, 0.5, 0.1, 0.9];
    let out = t_test(&same, &same, 0.05).unwrap();
    assert_eq!((out.t, out.p, out.significant), (0.0, 1.0, false));

    let jitter = [
        -0.01, 0.004, 0.01, -0.006, 0.0, 0.008, -0.003, 0.002, -0.009, 0.005,
    ];
    let a: Vec<f64> = jitter.iter().map(|j| j + 0.0).collect();
    let b: Vec<f64> = jitter.iter().rev().map(|j| j + 1.0).collect();
    let out = t_test(&a, &b, 0.05).unwrap();
    assert!(out.significant && out.p < 1e-10, "{out:?}");

    let flat = t_test(&[2.0, 2.0], &[3.0, 3.0], 0.05).unwrap();
    assert_eq!((flat.p, flat.significant), (0.0, true));
    assert_eq!(
        t_test(&[1.0], &[1.0, 2.0], 0.05),
        Err(StatError::SampleTooSmall(1, 2))
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn t_test_is_antisymmetric(
        a in proptest::collection::vec(-50.0f64..50.0, 2..15),
        b in proptest::collection::vec(-50.0f64..50.0, 2..15),
    ) {
        let (ab, ba) = (t_test(&a, &b, 0.05).unwrap(), t_test(&b, &a, 0.05).unwrap());
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn rank_rows_sum_to_triangular_number(
        row in proptest::collection::vec(prop_oneof![Just(0.5), Just(1.0), -10.0f64..10.0], 1..12),
    ) {
        let ranks = rank_row(&row);
        let m = row.len() as f64;
        prop_assert!((ranks.iter().sum::<f64>() - m * (m + 1.0) / 2.0).abs() <= 1e-9);
        for i in 0..row.len() {
            let better = row.iter().filter(|&&s| s > row[i]).count() as f64;
            let tied = row.iter().filter(|&&s| s == row[i]).count() as f64;
            prop_assert_eq!(ranks[i], better + (tied + 1.0) / 2.0);
        }
    }
}

#[test]
fn rank_examples() {
    assert_eq!(rank_row(&[3.0, 1.0, 2.0]), vec![1.0, 3.0, 2.0]);
    assert_eq!(rank_row(&[5.0, 5.0, 1.0]), vec![1.5, 1.5, 3.0]);

    let methods = ["appnp", "dgc", "none", "s2gc", "sgc"];
    let mut cells = Vec::new();
    for dataset in 0..8 {
        for metric in ["ami", "ari"] {
            for (j, m) in methods.iter().enumerate() {
                cells.push(ScoreCell {
                    method: m.to_string(),
                    condition: format!("d{dataset}/cluster/{metric}"),
                    value: ((dataset * 7 + j * 3) % 5) as f64
                        + if m == &"sgc" { 10.0 } else { 0.0 },
                });
            }
        }
    }
    let matrix = rank_scores(&cells).unwrap();
    assert_eq!(matrix.ranks.len(), 16);
    assert!(matrix
        .ranks
        .iter()
        .all(|r| (r.iter().sum::<f64>() - 15.0).abs() < 1e-12));
    let test = bonferroni_dunn(&matrix, 0.05, "none").unwrap();
    assert_eq!(test.avg_rank["sgc"], 1.0);
    assert!((test.critical_difference - critical_difference(5, 16, 0.05)).abs() < 1e-15);

    cells.pop();
    match rank_scores(&cells) {
        Err(StatError::Incomplete(holes)) => {
            assert_eq!(holes, vec![("sgc".into(), "d7/cluster/ari".into())])
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn bonferroni_dunn_edge_cases() {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let tied = RankMatrix::from_scores(
        names(&["a", "b", "c"]),
        names(&["x", "y"]),
        vec![vec![1.0; 3]; 2],
    )
    .unwrap();
    let out = bonferroni_dunn(&tied, 0.05, "a").unwrap();
    assert!(out.avg_rank.values().all(|&r| r == 2.0));
    assert!(out.worse_than_control.is_empty() && out.better_than_control.is_empty());
    assert_eq!(
        bonferroni_dunn(&tied, 0.05, "zzz"),
        Err(StatError::UnknownControl("zzz".into()))
    );

    let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![3.0, 2.0, 1.0]).collect();
    let conds: Vec<String> = (0..30).map(|i| format!("c{i}")).collect();
    let spread = RankMatrix::from_scores(names(&["best", "mid", "worst"]), conds, rows).unwrap();
    let out = bonferroni_dunn(&spread, 0.05, "mid").unwrap();
    assert_eq!(
        (out.better_than_control, out.worse_than_control),
        (names(&["best"]), names(&["worst"]))
    );

    let one =
        RankMatrix::from_scores(names(&["a", "b"]), names(&["x"]), vec![vec![1.0, 2.0]]).unwrap();
    assert_eq!(
        bonferroni_dunn(&one, 0.05, "a"),
        Err(StatError::TooSmall {
            methods: 2,
            conditions: 1
        })
    );
}

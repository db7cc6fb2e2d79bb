//! Welch tests against the baseline and the Bonferroni-Dunn rank test over
//! an [`EvalReport`].

use serde::Serialize;

use super::report::{mean_std, CellKey, EvalReport, Metric, TaskKind};
use super::Result;
use crate::stat_tests::{self, BonferroniDunn, RankMatrix, ScoreCell, TTest};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WelchEntry {
    pub task: TaskKind,
    pub metric: Metric,
    pub dataset: String,
    pub method: String,
    pub method_mean: f64,
    pub control_mean: f64,
    /// Absent when either side has fewer than two runs.
    pub test: Option<TTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignificanceReport {
    pub control: String,
    pub alpha: f64,
    pub metrics: Vec<Metric>,
    pub welch: Vec<WelchEntry>,
    pub rank_test: Option<BonferroniDunn>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_test_skipped: Option<String>,
}

fn keep(metric: Metric, metrics: Option<&[Metric]>) -> bool {
    metrics.is_none_or(|ms| ms.contains(&metric))
}

/// Rank matrix with one row per dataset x task x metric cell, scores being
/// the means over seeds.
pub fn rank_matrix(report: &EvalReport, metrics: Option<&[Metric]>) -> Result<RankMatrix> {
    let cells: Vec<ScoreCell> = report
        .records
        .iter()
        .filter(|r| keep(r.metric, metrics))
        .map(|r| ScoreCell {
            method: r.method.clone(),
            condition: format!("{}/{}/{}", r.dataset, r.task.name(), r.metric.name()),
            value: r.value,
        })
        .collect();
    Ok(stat_tests::rank_scores(&cells)?)
}

pub fn significance(
    report: &EvalReport,
    control: &str,
    alpha: f64,
    metrics: Option<&[Metric]>,
) -> Result<SignificanceReport> {
    let values = report.values();
    let mut welch = Vec::new();
    for (key, sample) in values.iter().filter(|(k, _)| keep(k.metric, metrics)) {
        if key.method == control {
            continue;
        }
        let control_key = CellKey {
            method: control.to_string(),
            ..key.clone()
        };
        let Some(base) = values.get(&control_key) else {
            continue;
        };
        let test = if sample.len() >= 2 && base.len() >= 2 {
            Some(stat_tests::t_test(sample, base, alpha)?)
        } else {
            None
        };
        welch.push(WelchEntry {
            task: key.task,
            metric: key.metric,
            dataset: key.dataset.clone(),
            method: key.method.clone(),
            method_mean: mean_std(sample).0,
            control_mean: mean_std(base).0,
            test,
        });
    }
    let ranks = rank_matrix(report, metrics)?;
    let (rank_test, rank_test_skipped) = if ranks.methods.len() < 2 || ranks.conditions.len() < 2 {
        (
            None,
            Some(format!(
                "needs at least 2 methods and 2 dataset/metric rows, have {} and {}",
                ranks.methods.len(),
                ranks.conditions.len()
            )),
        )
    } else {
        (
            Some(stat_tests::bonferroni_dunn(&ranks, alpha, control)?),
            None,
        )
    };
    let mut used: Vec<Metric> = values
        .keys()
        .map(|k| k.metric)
        .filter(|m| keep(*m, metrics))
        .collect();
    used.sort();
    used.dedup();
    Ok(SignificanceReport {
        control: control.to_string(),
        alpha,
        metrics: used,
        welch,
        rank_test,
        rank_test_skipped,
    })
}

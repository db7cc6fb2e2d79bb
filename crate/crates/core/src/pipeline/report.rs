//! Evaluation records and their JSON, CSV and markdown renderings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Cluster,
    Classify,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Cluster => "cluster",
            TaskKind::Classify => "classify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ami,
    Ari,
    F1Macro,
    F1Micro,
    F1Weighted,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Ami,
        Metric::Ari,
        Metric::F1Macro,
        Metric::F1Micro,
        Metric::F1Weighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ami => "ami",
            Metric::Ari => "ari",
            Metric::F1Macro => "f1_macro",
            Metric::F1Micro => "f1_micro",
            Metric::F1Weighted => "f1_weighted",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown metric {s:?}")))
    }
}

/// One metric value from one run, in percent (ARI of 1 is stored as 100).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub dataset: String,
    pub task: TaskKind,
    pub metric: Metric,
    pub seed: u64,
    pub value: f64,
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Serialized as a bare JSON array of [`RunRecord`]s.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvalReport {
    pub records: Vec<RunRecord>,
}

impl EvalReport {
    pub fn new(records: Vec<RunRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn extend(&mut self, other: EvalReport) {
        self.records.extend(other.records);
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if !r.value.is_finite() {
                return Err(PipelineError::Config(format!(
                    "record {i} has non-finite value {}",
                    r.value
                )));
            }
        }
        Ok(())
    }

    /// Values grouped by cell, in seed order of appearance.
    pub fn values(&self) -> BTreeMap<CellKey, Vec<f64>> {
        let mut cells: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            cells.entry(CellKey::of(r)).or_default().push(r.value);
        }
        cells
    }

    pub fn summarize(&self) -> Vec<CellSummary> {
        self.values()
            .into_iter()
            .map(|(key, values)| {
                let (mean, std) = mean_std(&values);
                CellSummary {
                    key,
                    mean,
                    std,
                    count: values.len(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub task: TaskKind,
    pub metric: Metric,
    pub method: String,
    pub dataset: String,
}

impl CellKey {
    fn of(r: &RunRecord) -> Self {
        Self {
            task: r.task,
            metric: r.metric,
            method: r.method.clone(),
            dataset: r.dataset.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub key: CellKey,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(PipelineError::Config(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    if report.is_empty() {
        return Err(PipelineError::Config("report has no records".into()));
    }
    report.validate()?;
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => Ok(render_markdown(report)),
    }
}

pub fn emit_report(report: &EvalReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    fs::write(path, text).map_err(|source| PipelineError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let report: EvalReport = serde_json::from_str(&text)?;
    report.validate()?;
    Ok(report)
}

fn render_csv(report: &EvalReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "dataset",
        "task",
        "metric",
        "seed",
        "value",
        "hyperparameters",
        "wall_time",
    ])?;
    for r in &report.records {
        let hyper = r
            .hyperparameters
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.method.clone(),
            r.dataset.clone(),
            r.task.name().to_string(),
            r.metric.name().to_string(),
            r.seed.to_string(),
            r.value.to_string(),
            hyper,
            r.wall_time.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One table per (task, metric): methods as rows, datasets as columns,
/// cells `mean±std` with one decimal.
fn render_markdown(report: &EvalReport) -> String {
    let summary = report.summarize();
    let mut groups: BTreeMap<(TaskKind, Metric), Vec<&CellSummary>> = BTreeMap::new();
    for cell in &summary {
        groups
            .entry((cell.key.task, cell.key.metric))
            .or_default()
            .push(cell);
    }
    let mut out = String::new();
    for ((task, metric), cells) in groups {
        let methods: BTreeSet<&str> = cells.iter().map(|c| c.key.method.as_str()).collect();
        let datasets: BTreeSet<&str> = cells.iter().map(|c| c.key.dataset.as_str()).collect();
        let lookup: BTreeMap<(&str, &str), &CellSummary> = cells
            .iter()
            .map(|c| ((c.key.method.as_str(), c.key.dataset.as_str()), *c))
            .collect();
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "### {} / {}\n", task.name(), metric.name());
        let _ = write!(out, "| method |");
        for d in &datasets {
            let _ = write!(out, " {d} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(datasets.len()));
        out.push('\n');
        for m in &methods {
            let _ = write!(out, "| {m} |");
            for d in &datasets {
                match lookup.get(&(*m, *d)) {
                    Some(c) => {
                        let _ = write!(out, " {:.1}±{:.1} |", c.mean, c.std);
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    out
}

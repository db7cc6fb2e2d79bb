//! End-to-end evaluation: graph, filters, k-means or logistic regression over
//! several seeds, then metric records, summaries and significance tests.

pub mod cd_diagram;
pub mod report;
pub mod significance;
pub mod trace;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::embedding_io::{
    self, EmbeddingIoError, EmbeddingMatrix, LabelVector, MatrixFormat, SplitIndex,
};
use crate::eval_metrics::{self, Averaging, MetricError};
use crate::exec;
use crate::graph_filters::{apply_filter, FilterError, FilterKind, FilterSpec};
use crate::kmeans::{self, KMeansConfig, KMeansError};
use crate::knn_graph::{self, GraphError, KnnConfig, SparseGraph, Symmetrize};
use crate::logreg::{self, LogRegConfig, LogRegError};
use crate::stat_tests::StatError;

pub use cd_diagram::{emit_cd_diagram, render_cd_diagram};
pub use report::{
    emit_report, load_report, render_report, EvalReport, Metric, ReportFormat, RunRecord, TaskKind,
};
pub use significance::{significance, SignificanceReport};
pub use trace::{GuardedLabels, Stage, Trace, TraceEvent};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] EmbeddingIoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    LogReg(#[from] LogRegError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot access {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("labels have a single class; nothing to cluster or classify")]
    SingleClass,
    #[error("{embeddings} embedding rows but {labels} labels")]
    LengthMismatch { embeddings: usize, labels: usize },
    #[error("hyperparameter grid for {0} is empty")]
    EmptyGrid(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Cluster,
    Classify,
    Both,
}

impl FromStr for Task {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(Task::Cluster),
            "classify" => Ok(Task::Classify),
            "both" => Ok(Task::Both),
            other => Err(PipelineError::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// A smoothing method under evaluation; `None` is the unfiltered baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    None,
    Filter(FilterKind),
}

impl Method {
    pub const DEFAULTS: [Method; 5] = [
        Method::None,
        Method::Filter(FilterKind::Sgc),
        Method::Filter(FilterKind::S2gc),
        Method::Filter(FilterKind::Appnp),
        Method::Filter(FilterKind::Dgc),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Filter(kind) => kind.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Method::None);
        }
        s.parse::<FilterKind>()
            .map(Method::Filter)
            .map_err(|_| PipelineError::Config(format!("unknown method {s:?}")))
    }
}

/// Classification search space. Lists irrelevant to a method are ignored
/// for it (`alpha` outside APPNP, graph settings for `none`, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub knn: Vec<usize>,
    pub order: Vec<usize>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub tee: Vec<f64>,
    pub l2: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            knn: vec![5, 10, 15, 20],
            order: vec![1, 2, 4, 8],
            lambda: vec![0.5, 1.0, 2.0],
            alpha: vec![0.05, 0.1, 0.2],
            tee: vec![2.0, 5.0, 10.0],
            l2: vec![1e-6, 1e-4, 1e-2, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub dataset: String,
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub task: Task,
    /// `none` is added in front when missing.
    pub methods: Vec<Method>,
    pub knn: usize,
    pub lambda: f64,
    pub order: usize,
    pub alpha: f64,
    pub tee: f64,
    pub symmetrize: Symmetrize,
    pub runs: usize,
    pub seed: u64,
    /// Classification search space; `None` means [`Grid::default`].
    pub grid: Option<Grid>,
    pub resplit_per_run: bool,
    /// Reject DGC settings with `T > P` instead of running them.
    pub strict_dgc: bool,
    pub record_timings: bool,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    /// Clustering protocol defaults: k = 10, P = 2, lambda = 1, alpha = 0.1,
    /// T = 5, 10 runs, seed 42.
    pub fn new(dataset: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            embeddings: PathBuf::new(),
            labels: PathBuf::new(),
            task: Task::Cluster,
            methods: Method::DEFAULTS.to_vec(),
            knn: 10,
            lambda: 1.0,
            order: 2,
            alpha: 0.1,
            tee: 5.0,
            symmetrize: Symmetrize::Union,
            runs: 10,
            seed: 42,
            grid: None,
            resplit_per_run: false,
            strict_dgc: false,
            record_timings: false,
            out_dir: PathBuf::from("."),
        }
    }

    pub fn filter_spec(&self, kind: FilterKind) -> FilterSpec {
        FilterSpec {
            kind,
            order: self.order,
            alpha: self.alpha,
            tee: self.tee,
            allow_large_step: !self.strict_dgc,
        }
    }

    fn knn_config(&self) -> KnnConfig {
        KnnConfig {
            k: self.knn,
            lambda: self.lambda,
            symmetrize: self.symmetrize,
        }
    }

    /// Method list with the baseline first and duplicates removed.
    pub fn effective_methods(&self) -> Vec<Method> {
        let mut out = vec![Method::None];
        for &m in &self.methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(PipelineError::Config("runs must be at least 1".into()));
        }
        if self.knn == 0 {
            return Err(PipelineError::Config("knn must be at least 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(GraphError::BadLambda(self.lambda).into());
        }
        if self.grid.is_some() && self.task == Task::Cluster {
            return Err(PipelineError::Config(
                "a hyperparameter grid applies to classification only".into(),
            ));
        }
        if matches!(self.task, Task::Cluster | Task::Both) {
            for m in self.effective_methods() {
                if let Method::Filter(kind) = m {
                    self.filter_spec(kind).validate()?;
                }
            }
        }
        Ok(())
    }
}

/// Decorrelates the seed streams of consecutive runs (SplitMix64 finalizer).
pub fn derive_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_lengths(x: &EmbeddingMatrix, n_labels: usize) -> Result<()> {
    if x.rows() != n_labels {
        return Err(PipelineError::LengthMismatch {
            embeddings: x.rows(),
            labels: n_labels,
        });
    }
    Ok(())
}

fn smooth(
    method: Method,
    config: &PipelineConfig,
    graph: &SparseGraph,
    x: &EmbeddingMatrix,
) -> Result<EmbeddingMatrix> {
    match method {
        Method::None => Ok(x.clone()),
        Method::Filter(kind) => Ok(apply_filter(&config.filter_spec(kind), graph, x)?),
    }
}

fn clustering_hyperparameters(
    method: Method,
    config: &PipelineConfig,
    k_clusters: usize,
) -> BTreeMap<String, f64> {
    let mut h = BTreeMap::from([("k_clusters".to_string(), k_clusters as f64)]);
    if let Method::Filter(kind) = method {
        h.insert("knn".into(), config.knn as f64);
        h.insert("lambda".into(), config.lambda);
        for (name, value) in config.filter_spec(kind).hyperparameters() {
            h.insert(name.into(), value);
        }
    }
    h
}

/// Clustering protocol. Labels only supply the class count (used as the
/// number of clusters) until the metrics stage.
pub fn run_clustering(
    config: &PipelineConfig,
    x: &EmbeddingMatrix,
    labels: &LabelVector,
) -> Result<EvalReport> {
    let trace = Trace::new();
    run_clustering_traced(config, x, &GuardedLabels::new(labels, &trace), &trace)
}

pub fn run_clustering_traced(
    config: &PipelineConfig,
    x: &EmbeddingMatrix,
    labels: &GuardedLabels<'_>,
    trace: &Trace,
) -> Result<EvalReport> {
    config.validate()?;
    check_lengths(x, labels.len())?;
    let k_clusters = labels.n_classes();
    if k_clusters < 2 {
        return Err(PipelineError::SingleClass);
    }
    let methods = config.effective_methods();

    trace.enter(Stage::Graph);
    let graph = if methods.iter().any(|m| *m != Method::None) {
        Some(knn_graph::build_graph(x, &config.knn_config())?)
    } else {
        None
    };

    trace.enter(Stage::Filter);
    let smoothed: Vec<Result<EmbeddingMatrix>> =
        exec::map_indices(methods.len(), |i| match &graph {
            Some(g) => smooth(methods[i], config, g, x),
            None => Ok(x.clone()),
        });
    let smoothed: Vec<EmbeddingMatrix> = smoothed.into_iter().collect::<Result<_>>()?;

    trace.enter(Stage::Cluster);
    let runs = config.runs;
    let jobs: Vec<Result<(Vec<usize>, f64)>> = exec::map_indices(methods.len() * runs, |job| {
        let (m, r) = (job / runs, job % runs);
        let start = Instant::now();
        let kc = KMeansConfig::new(k_clusters, derive_seed(config.seed.wrapping_add(r as u64)));
        let part = kmeans::fit(&smoothed[m], &kc)?;
        Ok((part.assignments, start.elapsed().as_secs_f64()))
    });
    let jobs: Vec<(Vec<usize>, f64)> = jobs.into_iter().collect::<Result<_>>()?;

    trace.enter(Stage::Metrics);
    let truth = labels.read().as_slice();
    let mut records = Vec::with_capacity(jobs.len() * 2);
    for (job, (assignments, seconds)) in jobs.iter().enumerate() {
        let (m, r) = (job / runs, job % runs);
        let hyper = clustering_hyperparameters(methods[m], config, k_clusters);
        let wall_time = config.record_timings.then_some(*seconds);
        for (metric, value) in [
            (Metric::Ami, 100.0 * eval_metrics::ami(truth, assignments)?),
            (Metric::Ari, 100.0 * eval_metrics::ari(truth, assignments)?),
        ] {
            records.push(RunRecord {
                method: methods[m].name().to_string(),
                dataset: config.dataset.clone(),
                task: TaskKind::Cluster,
                metric,
                seed: config.seed.wrapping_add(r as u64),
                value,
                hyperparameters: hyper.clone(),
                wall_time,
            });
        }
    }
    Ok(EvalReport::new(records))
}

/// One point of the classification search, minus the `l2` axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub knn: usize,
    pub lambda: f64,
    pub filter: Option<FilterSpec>,
}

impl Candidate {
    fn hyperparameters(&self, l2: f64) -> BTreeMap<String, f64> {
        let mut h = BTreeMap::from([("l2".to_string(), l2)]);
        if let Some(spec) = &self.filter {
            h.insert("knn".into(), self.knn as f64);
            h.insert("lambda".into(), self.lambda);
            for (name, value) in spec.hyperparameters() {
                h.insert(name.into(), value);
            }
        }
        h
    }
}

/// Enumerates the graph/filter settings searched for `method`, in grid order.
/// Under `strict_dgc`, DGC points with `T > P` are skipped.
pub fn candidates(method: Method, grid: &Grid, strict_dgc: bool) -> Vec<Candidate> {
    let kind = match method {
        Method::None => {
            return vec![Candidate {
                knn: 0,
                lambda: 0.0,
                filter: None,
            }]
        }
        Method::Filter(kind) => kind,
    };
    let alphas: &[f64] = if kind == FilterKind::Appnp {
        &grid.alpha
    } else {
        &[0.1]
    };
    let tees: &[f64] = if kind == FilterKind::Dgc {
        &grid.tee
    } else {
        &[5.0]
    };
    let mut out = Vec::new();
    for &knn in &grid.knn {
        for &lambda in &grid.lambda {
            for &order in &grid.order {
                for &alpha in alphas {
                    for &tee in tees {
                        let spec = FilterSpec {
                            kind,
                            order,
                            alpha,
                            tee,
                            allow_large_step: !strict_dgc,
                        };
                        if spec.validate().is_ok() {
                            out.push(Candidate {
                                knn,
                                lambda,
                                filter: Some(spec),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Selected settings and scores of one method on one split.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationOutcome {
    pub method: Method,
    pub hyperparameters: BTreeMap<String, f64>,
    /// Best macro F1 on the validation part, in `[0, 1]`.
    pub validation_f1: f64,
    /// Number of (candidate, l2) pairs scored on the validation part.
    pub validation_evaluations: usize,
    pub test_evaluations: usize,
    /// Test scores in percent.
    pub test_f1: [(Metric, f64); 3],
    pub wall_time: f64,
}

struct GraphCache {
    graphs: HashMap<(usize, u64), SparseGraph>,
}

impl GraphCache {
    fn build(x: &EmbeddingMatrix, grid: &Grid, symmetrize: Symmetrize) -> Result<Self> {
        let base: Vec<Result<SparseGraph>> = exec::map_indices(grid.knn.len(), |i| {
            let cfg = KnnConfig {
                k: grid.knn[i],
                lambda: 1.0,
                symmetrize,
            };
            Ok(knn_graph::cosine_knn(x, &cfg)?)
        });
        let base: Vec<SparseGraph> = base.into_iter().collect::<Result<_>>()?;
        let mut graphs = HashMap::new();
        for (i, g) in base.iter().enumerate() {
            for &lambda in &grid.lambda {
                graphs.insert(
                    (grid.knn[i], lambda.to_bits()),
                    knn_graph::normalize(g, lambda)?,
                );
            }
        }
        Ok(Self { graphs })
    }

    fn get(&self, knn: usize, lambda: f64) -> &SparseGraph {
        &self.graphs[&(knn, lambda.to_bits())]
    }
}

fn features(
    candidate: &Candidate,
    cache: Option<&GraphCache>,
    x: &EmbeddingMatrix,
) -> Result<EmbeddingMatrix> {
    match (&candidate.filter, cache) {
        (Some(spec), Some(cache)) => Ok(apply_filter(
            spec,
            cache.get(candidate.knn, candidate.lambda),
            x,
        )?),
        _ => Ok(x.clone()),
    }
}

fn fit_predict(
    h: &EmbeddingMatrix,
    labels: &LabelVector,
    train: &[usize],
    eval: &[usize],
    l2: f64,
) -> Result<Vec<usize>> {
    let cfg = LogRegConfig {
        l2,
        ..LogRegConfig::default()
    };
    let model = logreg::fit(&h.select_rows(train), &labels.select(train), &cfg)?;
    Ok(model.predict(&h.select_rows(eval))?)
}

/// Grid search on the validation part, then one fit on train scored on test.
pub fn classify_split(
    config: &PipelineConfig,
    x: &EmbeddingMatrix,
    labels: &LabelVector,
    split: &SplitIndex,
    grid: &Grid,
) -> Result<Vec<ClassificationOutcome>> {
    for (name, empty) in [
        ("knn", grid.knn.is_empty()),
        ("order", grid.order.is_empty()),
        ("lambda", grid.lambda.is_empty()),
        ("alpha", grid.alpha.is_empty()),
        ("tee", grid.tee.is_empty()),
        ("l2", grid.l2.is_empty()),
    ] {
        if empty {
            return Err(PipelineError::EmptyGrid(name.into()));
        }
    }
    let methods = config.effective_methods();
    let cache = if methods.iter().any(|m| *m != Method::None) {
        Some(GraphCache::build(x, grid, config.symmetrize)?)
    } else {
        None
    };
    let per_method: Vec<Vec<Candidate>> = methods
        .iter()
        .map(|&m| candidates(m, grid, config.strict_dgc))
        .collect();
    if let Some(i) = per_method.iter().position(Vec::is_empty) {
        return Err(PipelineError::EmptyGrid(methods[i].name().into()));
    }
    let jobs: Vec<(usize, Candidate)> = per_method
        .iter()
        .enumerate()
        .flat_map(|(m, cs)| cs.iter().map(move |c| (m, *c)))
        .collect();
    let started = Instant::now();
    let scores: Vec<Result<Vec<f64>>> = exec::map_indices(jobs.len(), |j| {
        let h = features(&jobs[j].1, cache.as_ref(), x)?;
        let truth = labels.select(&split.val);
        grid.l2
            .iter()
            .map(|&l2| {
                let pred = fit_predict(&h, labels, &split.train, &split.val, l2)?;
                Ok(eval_metrics::f1(&truth, &pred, Averaging::Macro)?)
            })
            .collect()
    });
    let scores: Vec<Vec<f64>> = scores.into_iter().collect::<Result<_>>()?;
    let search_seconds = started.elapsed().as_secs_f64();

    let mut best: Vec<Option<(f64, Candidate, f64)>> = vec![None; methods.len()];
    let mut evaluations = vec![0usize; methods.len()];
    for ((m, candidate), row) in jobs.iter().zip(&scores) {
        for (&score, &l2) in row.iter().zip(&grid.l2) {
            evaluations[*m] += 1;
            if best[*m].is_none_or(|(s, _, _)| score > s) {
                best[*m] = Some((score, *candidate, l2));
            }
        }
    }

    let outcomes: Vec<Result<ClassificationOutcome>> = exec::map_indices(methods.len(), |m| {
        let (val_score, candidate, l2) = best[m].expect("every method has candidates");
        let start = Instant::now();
        let h = features(&candidate, cache.as_ref(), x)?;
        let pred = fit_predict(&h, labels, &split.train, &split.test, l2)?;
        let truth = labels.select(&split.test);
        let test_f1 = [
            (
                Metric::F1Macro,
                100.0 * eval_metrics::f1(&truth, &pred, Averaging::Macro)?,
            ),
            (
                Metric::F1Micro,
                100.0 * eval_metrics::f1(&truth, &pred, Averaging::Micro)?,
            ),
            (
                Metric::F1Weighted,
                100.0 * eval_metrics::f1(&truth, &pred, Averaging::Weighted)?,
            ),
        ];
        Ok(ClassificationOutcome {
            method: methods[m],
            hyperparameters: candidate.hyperparameters(l2),
            validation_f1: val_score,
            validation_evaluations: evaluations[m],
            test_evaluations: 1,
            test_f1,
            wall_time: start.elapsed().as_secs_f64() + search_seconds,
        })
    });
    outcomes.into_iter().collect()
}

/// Classification protocol on a stratified 64/16/20 split. The split is
/// drawn once from `seed` unless `resplit_per_run` asks for one per run;
/// logistic regression is deterministic, so a fixed split is scored once.
pub fn run_classification(
    config: &PipelineConfig,
    x: &EmbeddingMatrix,
    labels: &LabelVector,
) -> Result<EvalReport> {
    config.validate()?;
    check_lengths(x, labels.len())?;
    if labels.n_classes() < 2 {
        return Err(PipelineError::SingleClass);
    }
    let grid = config.grid.clone().unwrap_or_default();
    let split_seeds: Vec<u64> = if config.resplit_per_run {
        (0..config.runs as u64)
            .map(|r| config.seed.wrapping_add(r))
            .collect()
    } else {
        vec![config.seed]
    };
    let mut records = Vec::new();
    for seed in split_seeds {
        let split = embedding_io::stratified_split(labels, embedding_io::DEFAULT_RATIOS, seed)?;
        for outcome in classify_split(config, x, labels, &split, &grid)? {
            for (metric, value) in outcome.test_f1 {
                records.push(RunRecord {
                    method: outcome.method.name().to_string(),
                    dataset: config.dataset.clone(),
                    task: TaskKind::Classify,
                    metric,
                    seed,
                    value,
                    hyperparameters: outcome.hyperparameters.clone(),
                    wall_time: config.record_timings.then_some(outcome.wall_time),
                });
            }
        }
    }
    Ok(EvalReport::new(records))
}

/// Loads the configured files and runs the requested task(s).
pub fn run_pipeline(config: &PipelineConfig) -> Result<EvalReport> {
    config.validate()?;
    let x = embedding_io::load_embeddings(
        &config.embeddings,
        MatrixFormat::from_path(&config.embeddings),
    )?;
    let (labels, _) = embedding_io::load_labels(&config.labels)?;
    let mut report = EvalReport::default();
    if matches!(config.task, Task::Cluster | Task::Both) {
        report.extend(run_clustering(config, &x, &labels)?);
    }
    if matches!(config.task, Task::Classify | Task::Both) {
        report.extend(run_classification(config, &x, &labels)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::DEFAULTS {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn baseline_is_always_first() {
        let mut cfg = PipelineConfig::new("d");
        cfg.methods = vec![Method::Filter(FilterKind::Sgc), Method::None];
        assert_eq!(
            cfg.effective_methods(),
            vec![Method::None, Method::Filter(FilterKind::Sgc)]
        );
    }

    #[test]
    fn grid_rejected_for_clustering() {
        let mut cfg = PipelineConfig::new("d");
        cfg.grid = Some(Grid::default());
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        cfg.task = Task::Classify;
        cfg.validate().unwrap();
    }

    #[test]
    fn strict_dgc_rejects_clustering_defaults() {
        let mut cfg = PipelineConfig::new("d");
        cfg.strict_dgc = true;
        assert!(matches!(
            cfg.validate(),
            Err(PipelineError::Filter(FilterError::DgcStep { .. }))
        ));
    }

    #[test]
    fn candidate_counts() {
        let g = Grid::default();
        assert_eq!(candidates(Method::None, &g, false).len(), 1);
        assert_eq!(
            candidates(Method::Filter(FilterKind::Sgc), &g, false).len(),
            4 * 3 * 4
        );
        assert_eq!(
            candidates(Method::Filter(FilterKind::Appnp), &g, false).len(),
            4 * 3 * 4 * 3
        );
        assert_eq!(
            candidates(Method::Filter(FilterKind::Dgc), &g, false).len(),
            4 * 3 * 4 * 3
        );
        // T <= P holds for (P, T) in {(2,2), (4,2), (8,2), (8,5)}.
        assert_eq!(
            candidates(Method::Filter(FilterKind::Dgc), &g, true).len(),
            4 * 3 * 4
        );
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0), derive_seed(1));
        assert_eq!(derive_seed(7), derive_seed(7));
    }
}

//! `graphsmooth` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use graphsmooth::embedding_io::{self, LabelVector, MatrixFormat};
use graphsmooth::eval_metrics::{self, Averaging};
use graphsmooth::graph_filters::{apply_filter, FilterKind, FilterSpec};
use graphsmooth::kmeans::{self, KMeansConfig};
use graphsmooth::knn_graph::{self, KnnConfig, Symmetrize};
use graphsmooth::logreg::{self, LogRegConfig};
use graphsmooth::pipeline::{
    self, cd_diagram, report, significance::rank_matrix, EvalReport, Grid, Method, Metric,
    PipelineConfig, ReportFormat, Task,
};
use graphsmooth::synthetic::{gaussian_mixture, MixtureConfig};

#[derive(Parser)]
#[command(
    name = "graphsmooth",
    version,
    about = "Graph smoothing of sentence embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full clustering and/or classification protocol.
    Pipeline(PipelineArgs),
    /// Build the k-NN graph and write filtered embeddings.
    Smooth(SmoothArgs),
    /// k-means on an embedding matrix.
    Cluster(ClusterArgs),
    /// Logistic regression on a stratified split.
    Classify(ClassifyArgs),
    /// Score predicted labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Welch tests and the Bonferroni-Dunn rank test over report files.
    RankTest(RankTestArgs),
    /// Merge report files and render them as json, csv or markdown.
    Report(ReportArgs),
    /// Write a Gaussian mixture and its labels, for demos and smoke tests.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SymArg {
    Union,
    Mutual,
}

impl From<SymArg> for Symmetrize {
    fn from(s: SymArg) -> Self {
        match s {
            SymArg::Union => Symmetrize::Union,
            SymArg::Mutual => Symmetrize::Mutual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Cluster,
    Classify,
    Both,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value_t = 10)]
    knn: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = SymArg::Union)]
    symmetrize: SymArg,
}

#[derive(Args)]
struct FilterArgs {
    /// Propagation order P.
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// DGC diffusion time T.
    #[arg(long, default_value_t = 5.0)]
    tee: f64,
    /// Reject DGC with T > P instead of running the extrapolating step.
    #[arg(long)]
    strict_dgc: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Dataset name for the report; defaults to the embeddings file stem.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, value_enum, default_value_t = TaskArg::Cluster)]
    task: TaskArg,
    #[arg(long, value_delimiter = ',', default_value = "none,sgc,s2gc,appnp,dgc")]
    filters: Vec<String>,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also evaluate the averaged S2GC operator.
    #[arg(long)]
    s2gc_averaged: bool,
    /// Draw a new stratified split for every classification run.
    #[arg(long)]
    resplit_per_run: bool,
    /// Record per-run wall-clock time (makes the report non-reproducible).
    #[arg(long)]
    timings: bool,
    /// Write the k-NN graph (adjacency and normalized operator) as Matrix Market.
    #[arg(long)]
    dump_graph: bool,
    #[arg(long, value_delimiter = ',')]
    grid_knn: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    grid_order: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    grid_lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    grid_alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    grid_tee: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    grid_l2: Option<Vec<f64>>,
    /// Significance level for the tests in significance.json.
    #[arg(long, default_value_t = 0.05)]
    test_alpha: f64,
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value = "sgc")]
    filter: String,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    params: FilterArgs,
    /// Output matrix; `.csv` selects csv, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
    /// Matrix Market file for the adjacency (`pattern symmetric`).
    #[arg(long)]
    dump_adjacency: Option<PathBuf>,
    /// Matrix Market file for the normalized operator (`real symmetric`).
    #[arg(long)]
    dump_operator: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n_init: usize,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// One cluster id per line. With several runs, run `r` goes to
    /// `<stem>.<r>.<ext>`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV of `index,true,predicted` for the test part.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Binary model file (`C x (d + 1)` matrix).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MetricArg {
    Ami,
    Ari,
    F1,
}

#[derive(Clone, Copy, ValueEnum)]
enum AvgArg {
    Macro,
    Micro,
    Weighted,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(
        long = "metric",
        value_enum,
        value_delimiter = ',',
        default_value = "ami,ari,f1"
    )]
    metrics: Vec<MetricArg>,
    /// F1 averaging mode.
    #[arg(long, value_enum, default_value_t = AvgArg::Macro)]
    avg: AvgArg,
}

#[derive(Args)]
struct RankTestArgs {
    #[arg(long = "report", required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, default_value = "none")]
    control: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Restrict the rank rows to these metrics.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.28)]
    spread: f64,
    #[arg(long, default_value_t = 1.0)]
    spread_growth: f64,
    /// Dimension of each component's random subspace; 0 draws spherical components.
    #[arg(long, default_value_t = 8)]
    latent_dim: usize,
    /// Standard deviation of isotropic noise added to every coordinate.
    #[arg(long, default_value_t = 0.02)]
    ambient: f64,
    #[arg(long, default_value_t = 4)]
    seed: u64,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("GRAPHSMOOTH_THREADS") {
        let n: usize = value.parse().with_context(|| {
            format!("GRAPHSMOOTH_THREADS must be a positive integer, got {value:?}")
        })?;
        if n == 0 {
            bail!("GRAPHSMOOTH_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn load_matrix(path: &Path) -> Result<graphsmooth::EmbeddingMatrix> {
    Ok(embedding_io::load_embeddings(
        path,
        MatrixFormat::from_path(path),
    )?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn parse_metrics(names: &[String]) -> Result<Vec<Metric>> {
    Ok(names.iter().map(|s| s.parse()).collect::<Result<_, _>>()?)
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let mut methods: Vec<Method> = args
        .filters
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    if args.s2gc_averaged {
        methods.push(Method::Filter(FilterKind::S2gcAveraged));
    }
    let task = match args.task {
        TaskArg::Cluster => Task::Cluster,
        TaskArg::Classify => Task::Classify,
        TaskArg::Both => Task::Both,
    };
    let any_grid = args.grid_knn.is_some()
        || args.grid_order.is_some()
        || args.grid_lambda.is_some()
        || args.grid_alpha.is_some()
        || args.grid_tee.is_some()
        || args.grid_l2.is_some();
    let grid = any_grid.then(|| {
        let d = Grid::default();
        Grid {
            knn: args.grid_knn.unwrap_or(d.knn),
            order: args.grid_order.unwrap_or(d.order),
            lambda: args.grid_lambda.unwrap_or(d.lambda),
            alpha: args.grid_alpha.unwrap_or(d.alpha),
            tee: args.grid_tee.unwrap_or(d.tee),
            l2: args.grid_l2.unwrap_or(d.l2),
        }
    });
    let dataset = args.dataset.clone().unwrap_or_else(|| {
        args.embeddings.file_stem().map_or_else(
            || "dataset".to_string(),
            |s| s.to_string_lossy().into_owned(),
        )
    });
    let config = PipelineConfig {
        dataset,
        embeddings: args.embeddings.clone(),
        labels: args.labels.clone(),
        task,
        methods,
        knn: args.graph.knn,
        lambda: args.graph.lambda,
        order: args.filter.order,
        alpha: args.filter.alpha,
        tee: args.filter.tee,
        symmetrize: args.graph.symmetrize.into(),
        runs: args.runs,
        seed: args.seed,
        grid,
        resplit_per_run: args.resplit_per_run,
        strict_dgc: args.filter.strict_dgc,
        record_timings: args.timings,
        out_dir: args.out.clone(),
    };
    for path in [&config.embeddings, &config.labels] {
        if !path.exists() {
            bail!("{} does not exist", path.display());
        }
    }
    config.validate()?;
    let clusters = matches!(config.task, Task::Cluster | Task::Both);
    let dgc = config.methods.contains(&Method::Filter(FilterKind::Dgc));
    if clusters && dgc && !config.strict_dgc && config.tee > config.order as f64 {
        eprintln!(
            "note: DGC runs with T/P = {} > 1; pass --strict-dgc to reject such settings",
            config.tee / config.order as f64
        );
    }
    let report = pipeline::run_pipeline(&config)?;
    create_dir(&config.out_dir)?;
    for format in [
        ReportFormat::Json,
        ReportFormat::Csv,
        ReportFormat::Markdown,
    ] {
        let path = config
            .out_dir
            .join(format!("report.{}", format.extension()));
        pipeline::emit_report(&report, format, &path)?;
    }
    let metadata = json!({
        "dataset": config.dataset,
        "task": format!("{:?}", config.task).to_lowercase(),
        "methods": config.effective_methods().iter().map(|m| m.name()).collect::<Vec<_>>(),
        "knn": config.knn,
        "lambda": config.lambda,
        "order": config.order,
        "alpha": config.alpha,
        "tee": config.tee,
        "symmetrize": format!("{:?}", config.symmetrize).to_lowercase(),
        "runs": config.runs,
        "seed": config.seed,
        "kmeans_clusters": "class count",
        "split_ratios": embedding_io::DEFAULT_RATIOS,
        "resplit_per_run": config.resplit_per_run,
        "validation_metric": "f1_macro",
        "t_test": "welch, two-sided",
        "rank_test": "bonferroni-dunn vs none",
        "ami_normalizer": "arithmetic",
        "std": "population",
        "strict_dgc": config.strict_dgc,
    });
    write(
        &config.out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata)? + "\n",
    )?;
    write_significance(&report, "none", args.test_alpha, None, &config.out_dir)?;
    if args.dump_graph {
        let g = knn_graph::build_graph(&load_matrix(&config.embeddings)?, &config_knn(&config))?;
        g.write_matrix_market(&config.out_dir.join("adjacency.mtx"), false)?;
        g.write_matrix_market(&config.out_dir.join("operator.mtx"), true)?;
    }
    println!(
        "wrote {} records to {}",
        report.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn config_knn(config: &PipelineConfig) -> KnnConfig {
    KnnConfig {
        k: config.knn,
        lambda: config.lambda,
        symmetrize: config.symmetrize,
    }
}

fn write_significance(
    report: &EvalReport,
    control: &str,
    alpha: f64,
    metrics: Option<&[Metric]>,
    out: &Path,
) -> Result<()> {
    let sig = pipeline::significance(report, control, alpha, metrics)?;
    write(
        &out.join("significance.json"),
        serde_json::to_string_pretty(&sig)? + "\n",
    )?;
    if let Some(bd) = &sig.rank_test {
        let ranks = rank_matrix(report, metrics)?;
        cd_diagram::emit_cd_diagram(
            &ranks,
            bd.critical_difference,
            control,
            &out.join("cd_diagram.svg"),
        )?;
    }
    Ok(())
}

fn run_smooth(args: SmoothArgs) -> Result<()> {
    let x = load_matrix(&args.embeddings)?;
    let kind: FilterKind = args.filter.parse()?;
    let graph = knn_graph::build_graph(
        &x,
        &KnnConfig {
            k: args.graph.knn,
            lambda: args.graph.lambda,
            symmetrize: args.graph.symmetrize.into(),
        },
    )?;
    let spec = FilterSpec {
        kind,
        order: args.params.order,
        alpha: args.params.alpha,
        tee: args.params.tee,
        allow_large_step: !args.params.strict_dgc,
    };
    let h = apply_filter(&spec, &graph, &x)?;
    embedding_io::save_embeddings(&h, &args.out, MatrixFormat::from_path(&args.out))?;
    if let Some(p) = &args.dump_adjacency {
        graph.write_matrix_market(p, false)?;
    }
    if let Some(p) = &args.dump_operator {
        graph.write_matrix_market(p, true)?;
    }
    println!(
        "{}: {} x {} smoothed over {} edges",
        kind,
        h.rows(),
        h.cols(),
        graph.edge_count()
    );
    Ok(())
}

fn run_cluster(args: ClusterArgs) -> Result<()> {
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let x = load_matrix(&args.embeddings)?;
    for r in 0..args.runs {
        let seed = args.seed.wrapping_add(r as u64);
        let config = KMeansConfig {
            k_clusters: args.k,
            max_iter: args.max_iter,
            tol: 1e-6,
            n_init: args.n_init,
            seed,
        };
        let p = kmeans::fit(&x, &config)?;
        let path = if args.runs == 1 {
            args.out.clone()
        } else {
            run_path(&args.out, r)
        };
        embedding_io::save_integers(&p.assignments, &path)?;
        println!(
            "{}",
            json!({ "seed": seed, "inertia": p.inertia, "iterations": p.iterations, "out": path })
        );
    }
    Ok(())
}

fn run_path(out: &Path, run: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{run}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{run}"),
    };
    out.with_file_name(name)
}

fn run_classify(args: ClassifyArgs) -> Result<()> {
    let x = load_matrix(&args.embeddings)?;
    let (labels, originals) = embedding_io::load_labels(&args.labels)?;
    if x.rows() != labels.len() {
        bail!("{} embedding rows but {} labels", x.rows(), labels.len());
    }
    let split = embedding_io::stratified_split(&labels, embedding_io::DEFAULT_RATIOS, args.seed)?;
    let config = LogRegConfig {
        l2: args.l2,
        ..LogRegConfig::default()
    };
    let model = logreg::fit(
        &x.select_rows(&split.train),
        &labels.select(&split.train),
        &config,
    )?;
    let pred = model.predict(&x.select_rows(&split.test))?;
    let truth = labels.select(&split.test);
    let scores = json!({
        "train": split.train.len(),
        "val": split.val.len(),
        "test": split.test.len(),
        "f1_macro": eval_metrics::f1(&truth, &pred, Averaging::Macro)?,
        "f1_micro": eval_metrics::f1(&truth, &pred, Averaging::Micro)?,
        "f1_weighted": eval_metrics::f1(&truth, &pred, Averaging::Weighted)?,
    });
    if let Some(path) = &args.predictions {
        let mut text = String::from("index,true,predicted\n");
        for ((&i, &t), &p) in split.test.iter().zip(&truth).zip(&pred) {
            text.push_str(&format!("{i},{},{}\n", originals[t], originals[p]));
        }
        write(path, text)?;
    }
    if let Some(path) = &args.model {
        model.save(path)?;
    }
    println!("{scores}");
    Ok(())
}

/// Maps both label files into one id space so F1 compares like with like.
fn joint_labels(truth: &Path, pred: &Path) -> Result<(Vec<usize>, Vec<usize>)> {
    let raw = |path: &Path| -> Result<Vec<u64>> {
        let (lv, originals) = embedding_io::load_labels(path)?;
        Ok(lv.as_slice().iter().map(|&l| originals[l]).collect())
    };
    let (t, p) = (raw(truth)?, raw(pred)?);
    if t.len() != p.len() {
        bail!("{} true labels but {} predictions", t.len(), p.len());
    }
    let joined: Vec<u64> = t.iter().chain(&p).copied().collect();
    let (lv, _) = LabelVector::remap(&joined);
    let ids = lv.as_slice();
    Ok((ids[..t.len()].to_vec(), ids[t.len()..].to_vec()))
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let (truth, pred) = joint_labels(&args.labels, &args.predictions)?;
    let avg = match args.avg {
        AvgArg::Macro => Averaging::Macro,
        AvgArg::Micro => Averaging::Micro,
        AvgArg::Weighted => Averaging::Weighted,
    };
    let mut out = serde_json::Map::new();
    for metric in args.metrics {
        let (name, value) = match metric {
            MetricArg::Ami => ("ami".to_string(), eval_metrics::ami(&truth, &pred)?),
            MetricArg::Ari => ("ari".to_string(), eval_metrics::ari(&truth, &pred)?),
            MetricArg::F1 => (
                format!("f1_{}", avg.name()),
                eval_metrics::f1(&truth, &pred, avg)?,
            ),
        };
        out.insert(name, json!(value));
    }
    println!("{}", serde_json::Value::Object(out));
    Ok(())
}

fn merged(paths: &[PathBuf]) -> Result<EvalReport> {
    let mut all = EvalReport::default();
    for p in paths {
        all.extend(report::load_report(p).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(all)
}

fn run_rank_test(args: RankTestArgs) -> Result<()> {
    let report = merged(&args.reports)?;
    let metrics = args.metrics.as_deref().map(parse_metrics).transpose()?;
    let sig = pipeline::significance(&report, &args.control, args.alpha, metrics.as_deref())?;
    let Some(bd) = &sig.rank_test else {
        bail!(
            "rank test not possible: {}",
            sig.rank_test_skipped.as_deref().unwrap_or("too few rows")
        );
    };
    create_dir(&args.out)?;
    write_significance(
        &report,
        &args.control,
        args.alpha,
        metrics.as_deref(),
        &args.out,
    )?;
    println!(
        "CD = {:.3}; worse than {}: {:?}",
        bd.critical_difference, args.control, bd.worse_than_control
    );
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<()> {
    let report = merged(&args.inputs)?;
    let format: ReportFormat = args.format.parse()?;
    pipeline::emit_report(&report, format, &args.out)?;
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    if args.k == 0 || args.d == 0 || args.n < args.k {
        bail!("need n >= k >= 1 and d >= 1");
    }
    let config = MixtureConfig {
        n: args.n,
        d: args.d,
        k: args.k,
        separation: args.separation,
        spread: args.spread,
        spread_growth: args.spread_growth,
        latent_dim: (args.latent_dim > 0).then_some(args.latent_dim),
        ambient: args.ambient,
        seed: args.seed,
    };
    let (x, y) = gaussian_mixture(&config);
    embedding_io::save_embeddings(
        &x,
        &args.embeddings,
        MatrixFormat::from_path(&args.embeddings),
    )?;
    embedding_io::save_integers(y.as_slice(), &args.labels)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Pipeline(a) => run_pipeline(a),
        Command::Smooth(a) => run_smooth(a),
        Command::Cluster(a) => run_cluster(a),
        Command::Classify(a) => run_classify(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::RankTest(a) => run_rank_test(a),
        Command::Report(a) => run_report(a),
        Command::Synth(a) => run_synth(a),
    }
}

//! Library behind the `tweetopic` binary: experiment orchestration,
//! declarative config files, run manifests, and the stable exit-code
//! contract (0 success, 2 data error, 3 backend/model error, 4 config
//! error).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tweetopic_core::corpus::{
    compute_stats, load_corpus, stratified_folds, Corpus, DataFormat, FoldAssignment,
};
use tweetopic_core::error::{Error, Result};
use tweetopic_core::evaluate::{
    cross_validate, emit_report, grid_search, paired_ttest, EvaluationResult, GridPoint,
    HyperGrid, ModelComparison, ReportDoc, ReportInput, ReportLayout,
};
use tweetopic_core::features::{load_embeddings, EmbeddingTable};
use tweetopic_core::finetune::create_backend;
use tweetopic_core::pipeline::{default_grid, FeatureKind, ModelSpec};
use tweetopic_core::preprocess::{
    parse_word_list, Pipeline, PipelineConfig, Rule, TokenizedTweet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Maps an error onto the stable exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Record { .. }
        | Error::EmptyCorpus { .. }
        | Error::DuplicateId { .. }
        | Error::Stratification { .. }
        | Error::RaggedEmbedding { .. } => EXIT_DATA,
        Error::UnknownFormat(_) | Error::Config(_) | Error::InvalidParameter { .. } => EXIT_CONFIG,
        Error::Backend { .. }
        | Error::Divergence { .. }
        | Error::Untrained
        | Error::DimensionMismatch { .. }
        | Error::NegativeFeature { .. }
        | Error::EmptyVocabulary { .. }
        | Error::Evaluation(_) => EXIT_BACKEND,
    }
}

/// Declarative preprocessing config file (TOML): ordered rule list plus
/// word-list paths. Missing fields fall back to the shipped defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PreprocessConfigFile {
    pub rules: Option<Vec<String>>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

/// Loads a pipeline config from an optional TOML file.
pub fn load_pipeline_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PreprocessConfigFile =
        toml::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut config = PipelineConfig::default();
    if let Some(names) = file.rules {
        let mut rules = Vec::with_capacity(names.len());
        for name in &names {
            rules.push(
                Rule::from_name(name)
                    .ok_or_else(|| Error::Config(format!("unknown pipeline rule {name:?}")))?,
            );
        }
        config.rules = rules;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(p) = file.lexicon {
        let p = base.join(p);
        let body = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        config.lexicon = parse_word_list(&body);
    }
    if let Some(p) = file.stopwords {
        let p = base.join(p);
        let body = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        config.stopwords = parse_word_list(&body);
    }
    Ok(config)
}

/// Grid file (TOML): ordered `[[axis]]` tables.
#[derive(Debug, Deserialize)]
struct GridFile {
    model: Option<String>,
    #[serde(default, rename = "axis")]
    axes: Vec<GridAxisFile>,
}

#[derive(Debug, Deserialize)]
struct GridAxisFile {
    name: String,
    values: Vec<toml::Value>,
}

fn toml_to_json(v: &toml::Value) -> Result<serde_json::Value> {
    Ok(match v {
        toml::Value::String(s) => serde_json::Value::String(s.clone()),
        toml::Value::Integer(i) => serde_json::Value::from(*i),
        toml::Value::Float(f) => serde_json::Value::from(*f),
        toml::Value::Boolean(b) => serde_json::Value::from(*b),
        other => {
            return Err(Error::Config(format!(
                "unsupported grid value {other} (expected string, number, or bool)"
            )))
        }
    })
}

/// Loads a hyperparameter grid from a TOML file.
pub fn load_grid_file(path: &Path, model: &str) -> Result<HyperGrid> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: GridFile =
        toml::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut grid = HyperGrid::new(file.model.unwrap_or_else(|| model.to_string()));
    for axis in file.axes {
        let values: Result<Vec<serde_json::Value>> =
            axis.values.iter().map(toml_to_json).collect();
        grid = grid.axis(axis.name, values?);
    }
    if grid.axes.is_empty() {
        return Err(Error::Config(format!(
            "{}: grid file declares no axes",
            path.display()
        )));
    }
    Ok(grid)
}

/// Which hyperparameters to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridChoice {
    /// Single run with the model's default (or overridden) config.
    None,
    /// The shipped grid for the model family.
    Default,
    /// A TOML grid file.
    File(PathBuf),
}

impl GridChoice {
    pub fn parse(raw: &str) -> GridChoice {
        match raw {
            "none" => GridChoice::None,
            "default" => GridChoice::Default,
            other => GridChoice::File(PathBuf::from(other)),
        }
    }
}

/// A fully specified experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: PathBuf,
    pub format: Option<String>,
    pub model: String,
    pub features: FeatureKind,
    pub grid: GridChoice,
    pub k: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub preprocess_config: Option<PathBuf>,
    pub jobs: usize,
    pub stub_dim: usize,
    /// Fine-tuning overrides (stf models).
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    /// Early-stopping settings (neural models).
    pub patience: usize,
    pub max_epochs: usize,
}

impl RunSpec {
    pub fn new(dataset: impl Into<PathBuf>, model: impl Into<String>, output_dir: impl Into<PathBuf>) -> Self {
        RunSpec {
            dataset: dataset.into(),
            format: None,
            model: model.into(),
            features: FeatureKind::Bow,
            grid: GridChoice::None,
            k: 5,
            seed: 42,
            output_dir: output_dir.into(),
            embeddings: None,
            preprocess_config: None,
            jobs: 1,
            stub_dim: 32,
            epochs: None,
            batch_size: None,
            learning_rate: None,
            patience: 3,
            max_epochs: 50,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("k", "fold count must be at least 2"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs", "must be at least 1"));
        }
        Ok(())
    }

    /// Base model spec with overrides applied.
    fn model_spec(&self) -> Result<ModelSpec> {
        let mut spec = ModelSpec::default_for(&self.model, self.features)?;
        match &mut spec {
            ModelSpec::Stf { dim, config, .. } => {
                *dim = self.stub_dim;
                if let Some(e) = self.epochs {
                    config.epochs = e;
                }
                if let Some(b) = self.batch_size {
                    config.batch_size = b;
                }
                if let Some(lr) = self.learning_rate {
                    config.learning_rate = lr;
                }
            }
            ModelSpec::Neural {
                config,
                patience,
                max_epochs,
            } => {
                *patience = self.patience;
                *max_epochs = self.max_epochs;
                if let Some(b) = self.batch_size {
                    config.batch_size = b;
                }
                if let Some(lr) = self.learning_rate {
                    config.learning_rate = lr;
                }
            }
            _ => {}
        }
        Ok(spec)
    }
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub best: EvaluationResult,
    pub best_point: Option<GridPoint>,
    pub results: Vec<EvaluationResult>,
    pub manifest: serde_json::Value,
    pub report: ReportDoc,
    pub output_dir: PathBuf,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Atomic file write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn resolve_format(path: &Path, name: Option<&str>) -> Result<DataFormat> {
    match name {
        Some(n) => DataFormat::from_name(n),
        None => Ok(DataFormat::from_path(path)),
    }
}

/// `stats`: Table-1-shaped corpus statistics.
///
/// Statistics use the counting profile (tokenize + lowercase, no removals)
/// unless a pipeline config is given, so word counts are not skewed by
/// stopword removal.
pub fn cmd_stats(
    dataset: &Path,
    format: Option<&str>,
    config: Option<&Path>,
    per_class: bool,
    json: bool,
) -> Result<String> {
    let corpus = load_corpus(dataset, resolve_format(dataset, format)?)?;
    let pipeline_config = match config {
        Some(p) => load_pipeline_config(Some(p))?,
        None => PipelineConfig::counting(),
    };
    let pipeline = Pipeline::new(pipeline_config)?;
    let stats = compute_stats(&corpus, &pipeline)?;
    if json {
        return Ok(serde_json::to_string_pretty(&stats).expect("stats serialize"));
    }
    let doc = emit_report(ReportInput::Stats(&stats), ReportLayout::Table1)?;
    let mut out = doc.markdown;
    if per_class {
        out.push('\n');
        out.push_str(&stats.to_markdown_per_class());
    }
    Ok(out)
}

/// JSONL record emitted by `preprocess`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PreprocessedRecord {
    pub id: String,
    pub label: String,
    pub tokens: Vec<String>,
    pub annotations: Vec<tweetopic_core::preprocess::Annotation>,
    pub empty: bool,
}

/// `preprocess`: normalize a dataset into JSONL token streams.
pub fn cmd_preprocess(
    input: &Path,
    output: &Path,
    format: Option<&str>,
    config: Option<&Path>,
) -> Result<usize> {
    let corpus = load_corpus(input, resolve_format(input, format)?)?;
    let pipeline = Pipeline::new(load_pipeline_config(config)?)?;
    let mut body = String::new();
    for tweet in corpus.tweets() {
        let toks = pipeline.preprocess(&tweet.text);
        let record = PreprocessedRecord {
            id: tweet.id.clone(),
            label: tweet.label.clone(),
            empty: toks.is_empty(),
            tokens: toks.tokens,
            annotations: toks.annotations,
        };
        body.push_str(&serde_json::to_string(&record).expect("record serializes"));
        body.push('\n');
    }
    write_atomic(output, body.as_bytes())?;
    Ok(corpus.len())
}

struct PreparedData {
    corpus: Corpus,
    docs: Vec<TokenizedTweet>,
    labels: Vec<usize>,
    folds: FoldAssignment,
    embeddings: Option<std::sync::Arc<EmbeddingTable>>,
    pipeline_hash: String,
    dataset_sha256: String,
    format: DataFormat,
}

fn prepare(spec: &RunSpec) -> Result<PreparedData> {
    let format = resolve_format(&spec.dataset, spec.format.as_deref())?;
    let corpus = load_corpus(&spec.dataset, format)?;
    let pipeline = Pipeline::new(load_pipeline_config(spec.preprocess_config.as_deref())?)?;
    let docs: Vec<TokenizedTweet> = corpus
        .tweets()
        .iter()
        .map(|t| pipeline.preprocess(&t.text))
        .collect();
    let labels = corpus.class_indices();
    let folds = stratified_folds(&corpus, spec.k, spec.seed)?;
    let embeddings = match &spec.embeddings {
        Some(p) => Some(std::sync::Arc::new(load_embeddings(p)?)),
        None => None,
    };
    Ok(PreparedData {
        dataset_sha256: sha256_file(&spec.dataset)?,
        pipeline_hash: pipeline.config_hash().to_string(),
        corpus,
        docs,
        labels,
        folds,
        embeddings,
        format,
    })
}

/// `run`: preprocess, evaluate (optionally over a grid), and write the
/// manifest, results, and report into the output directory.
pub fn cmd_run(spec: &RunSpec) -> Result<RunSummary> {
    spec.validate()?;
    let base_spec = spec.model_spec()?;

    // Surface backend problems before any training.
    if let ModelSpec::Stf { backend, dim, config } = &base_spec {
        create_backend(backend, *dim, config.seed)?;
    }

    let data = prepare(spec)?;
    let n_classes = data.corpus.n_classes();

    let grid = match &spec.grid {
        GridChoice::None => None,
        GridChoice::Default => Some(default_grid(&spec.model).ok_or_else(|| {
            Error::Config(format!("no default grid for model {:?}", spec.model))
        })?),
        GridChoice::File(path) => Some(load_grid_file(path, &spec.model)?),
    };

    let evaluate_point = |point: &GridPoint| -> Result<EvaluationResult> {
        let resolved = base_spec.with_grid_point(point)?;
        cross_validate(
            &resolved.name(),
            resolved.config_json(),
            |_, fold_seed| {
                resolved
                    .make_classifier(data.embeddings.as_ref(), fold_seed)
                    .expect("spec validated before evaluation")
            },
            &data.docs,
            &data.labels,
            n_classes,
            &data.folds,
            spec.seed,
        )
    };

    // make_classifier can fail on missing embeddings; check once upfront so
    // the expect above cannot trip.
    base_spec.make_classifier(data.embeddings.as_ref(), 0)?;

    let (best_point, results) = match grid.as_ref() {
        Some(g) => {
            let (best, results) = grid_search(g, evaluate_point, spec.jobs)?;
            (Some(best), results)
        }
        None => {
            let r = evaluate_point(&GridPoint::new())?;
            (None, vec![r])
        }
    };

    let best = results
        .iter()
        .max_by(|a, b| {
            a.mean_accuracy
                .partial_cmp(&b.mean_accuracy)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one result")
        .clone();
    // Ties break to the earliest enumerated result.
    let best = results
        .iter()
        .find(|r| r.mean_accuracy == best.mean_accuracy)
        .expect("just found")
        .clone();

    let manifest = serde_json::json!({
        "version": tweetopic_core::VERSION,
        "created_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "spec": spec,
        "dataset_sha256": data.dataset_sha256,
        "format": data.format.as_str(),
        "n_tweets": data.corpus.len(),
        "labels": data.corpus.labels(),
        "fold_assignment_hash": data.folds.hash(),
        "preprocess_config_hash": data.pipeline_hash,
        "grid": grid,
        "grid_size": results.len(),
    });

    let mut results_body = String::new();
    for r in &results {
        results_body.push_str(&serde_json::to_string(r).expect("result serializes"));
        results_body.push('\n');
    }
    let report = emit_report(
        ReportInput::Results {
            results: &results,
            comparisons: &[],
        },
        ReportLayout::Table4,
    )?;

    std::fs::create_dir_all(&spec.output_dir).map_err(|e| Error::io(&spec.output_dir, e))?;
    write_atomic(
        &spec.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)
            .expect("manifest serializes")
            .as_bytes(),
    )?;
    write_atomic(&spec.output_dir.join("results.jsonl"), results_body.as_bytes())?;
    write_atomic(&spec.output_dir.join("report.md"), report.markdown.as_bytes())?;
    write_atomic(&spec.output_dir.join("report.csv"), report.csv.as_bytes())?;

    Ok(RunSummary {
        best,
        best_point,
        results,
        manifest,
        report,
        output_dir: spec.output_dir.clone(),
    })
}

/// `run --manifest`: re-execute a recorded run (optionally into a new
/// output directory). Results are byte-identical to the original run.
pub fn cmd_run_from_manifest(manifest_path: &Path, output_dir: Option<&Path>) -> Result<RunSummary> {
    let body = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: serde_json::Value = serde_json::from_str(&body)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;
    let mut spec: RunSpec = serde_json::from_value(
        manifest
            .get("spec")
            .cloned()
            .ok_or_else(|| Error::Config("manifest has no spec field".to_string()))?,
    )
    .map_err(|e| Error::Config(format!("bad manifest spec: {e}")))?;
    if let Some(dir) = output_dir {
        spec.output_dir = dir.to_path_buf();
    }
    cmd_run(&spec)
}

fn read_results_jsonl(dir: &Path) -> Result<Vec<EvaluationResult>> {
    let path = dir.join("results.jsonl");
    let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus { path });
    }
    Ok(out)
}

/// Best result (max mean accuracy, earliest on ties) from a run directory.
fn best_of(results: &[EvaluationResult]) -> EvaluationResult {
    let best = results
        .iter()
        .map(|r| r.mean_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    results
        .iter()
        .find(|r| r.mean_accuracy == best)
        .expect("non-empty results")
        .clone()
}

/// `compare`: pairwise paired t-tests of each run's best result against the
/// baseline model, over shared fold assignments.
pub fn cmd_compare(
    result_dirs: &[PathBuf],
    baseline: &str,
    layout: ReportLayout,
) -> Result<ReportDoc> {
    if result_dirs.is_empty() {
        return Err(Error::Config("compare needs at least one result dir".into()));
    }
    let mut bests = Vec::new();
    for dir in result_dirs {
        bests.push(best_of(&read_results_jsonl(dir)?));
    }
    let hash = &bests[0].fold_assignment_hash;
    for b in &bests {
        if &b.fold_assignment_hash != hash {
            return Err(Error::Evaluation(format!(
                "results are not comparable: fold assignment of {} differs (run them with the same dataset, k, and seed)",
                b.model_name
            )));
        }
    }
    let baseline_result = bests
        .iter()
        .find(|b| b.model_name == baseline)
        .cloned()
        .ok_or_else(|| {
            Error::Config(format!(
                "baseline {baseline:?} not among: {}",
                bests.iter().map(|b| b.model_name.clone()).collect::<Vec<_>>().join(", ")
            ))
        })?;

    let mut comparisons = Vec::new();
    for b in &bests {
        let ttest = paired_ttest(&b.fold_accuracies, &baseline_result.fold_accuracies)?;
        comparisons.push(ModelComparison {
            model_name: b.model_name.clone(),
            baseline: baseline.to_string(),
            ttest,
        });
    }
    emit_report(
        ReportInput::Results {
            results: &bests,
            comparisons: &comparisons,
        },
        layout,
    )
}

/// `report`: re-emit the report from a run directory's results.
pub fn cmd_report(dir: &Path, layout: ReportLayout) -> Result<ReportDoc> {
    let results = read_results_jsonl(dir)?;
    emit_report(
        ReportInput::Results {
            results: &results,
            comparisons: &[],
        },
        layout,
    )
}

/// `grid list` / `grid show`.
pub fn cmd_grid(name: Option<&str>) -> Result<String> {
    match name {
        None => {
            let mut out = String::from("model    points\n");
            for family in ["mnb", "lr", "cnn", "lstm", "bilstm", "stf:<backend>"] {
                let key = if family.starts_with("stf") { "stf:stub" } else { family };
                if let Some(g) = default_grid(key) {
                    out.push_str(&format!("{family:<8} {}\n", g.cartesian_size()));
                }
            }
            Ok(out)
        }
        Some(name) => {
            let grid = default_grid(name)
                .ok_or_else(|| Error::Config(format!("no default grid for {name:?}")))?;
            Ok(serde_json::to_string_pretty(&grid).expect("grid serializes"))
        }
    }
}

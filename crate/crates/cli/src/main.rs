use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tweetopic_cli::{
    cmd_compare, cmd_grid, cmd_preprocess, cmd_report, cmd_run, cmd_run_from_manifest, cmd_stats,
    exit_code, GridChoice, RunSpec,
};
use tweetopic_core::evaluate::ReportLayout;
use tweetopic_core::pipeline::FeatureKind;

/// Tweet topic classification experiments: preprocessing, classical and
/// neural baselines, sentence-encoder fine-tuning, and a cross-validated
/// benchmark harness.
#[derive(Parser)]
#[command(name = "tweetopic", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics (tweets, words, unique words, averages).
    Stats {
        /// Dataset file (csv, tsv, or jsonl with id,text,label).
        #[arg(long)]
        data: PathBuf,
        /// Input format; inferred from the extension when omitted.
        #[arg(long)]
        format: Option<String>,
        /// Pipeline config (TOML); defaults to the counting profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Add a per-class breakdown table.
        #[arg(long)]
        per_class: bool,
        /// Emit JSON instead of Markdown.
        #[arg(long)]
        json: bool,
    },
    /// Normalize a dataset into JSONL token streams.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long)]
        format: Option<String>,
        /// Pipeline config (TOML); defaults to the full rule set.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a cross-validated experiment (optionally a grid search).
    Run {
        /// Re-run a recorded manifest instead of giving flags.
        #[arg(long, conflicts_with_all = ["data", "model"])]
        manifest: Option<PathBuf>,
        #[arg(long, required_unless_present = "manifest")]
        data: Option<PathBuf>,
        /// mnb | lr | cnn | lstm | bilstm | stf:<backend>
        #[arg(long, required_unless_present = "manifest")]
        model: Option<String>,
        /// bow | tfidf | embedding (classical models only).
        #[arg(long, default_value = "bow")]
        features: String,
        /// none | default | path to a grid TOML file.
        #[arg(long, default_value = "none")]
        grid: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "out")]
        output_dir: Option<PathBuf>,
        /// Word-vector file (required for cnn/lstm/bilstm and embedding
        /// features).
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        /// Preprocessing config (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads for grid points.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Stub encoder dimension (stf:stub).
        #[arg(long, default_value_t = 32)]
        stub_dim: usize,
        /// Fine-tuning epochs override (stf models).
        #[arg(long)]
        epochs: Option<usize>,
        /// Batch-size override (neural / stf models).
        #[arg(long)]
        batch_size: Option<usize>,
        /// Learning-rate override (neural / stf models).
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Early-stopping patience (neural models).
        #[arg(long, default_value_t = 3)]
        patience: usize,
        /// Epoch cap (neural models).
        #[arg(long, default_value_t = 50)]
        max_epochs: usize,
    },
    /// Inspect the shipped hyperparameter grids.
    Grid {
        #[command(subcommand)]
        action: GridAction,
    },
    /// Compare run directories against a baseline with paired t-tests.
    Compare {
        /// Result directories produced by `run` (same dataset, k, seed).
        dirs: Vec<PathBuf>,
        /// Model name of the baseline row, e.g. stf:stub.
        #[arg(long)]
        baseline: String,
        /// table4 (grouped accuracy) or table5 (significance asterisks).
        #[arg(long, default_value = "table5")]
        layout: String,
        /// Write report.md / report.csv here instead of stdout only.
        #[arg(long = "out")]
        output_dir: Option<PathBuf>,
    },
    /// Re-emit the report from a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "table4")]
        layout: String,
    },
}

#[derive(Subcommand)]
enum GridAction {
    /// List the shipped grids and their sizes.
    List,
    /// Print one grid as JSON.
    Show { name: String },
}

fn parse_layout(name: &str) -> Result<ReportLayout, tweetopic_core::Error> {
    match name {
        "table1" => Ok(ReportLayout::Table1),
        "table4" => Ok(ReportLayout::Table4),
        "table5" => Ok(ReportLayout::Table5),
        other => Err(tweetopic_core::Error::Config(format!(
            "unknown layout {other:?} (expected table1, table4, table5)"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), tweetopic_core::Error> {
    match cli.command {
        Command::Stats {
            data,
            format,
            config,
            per_class,
            json,
        } => {
            let out = cmd_stats(&data, format.as_deref(), config.as_deref(), per_class, json)?;
            println!("{out}");
        }
        Command::Preprocess {
            input,
            output,
            format,
            config,
        } => {
            let n = cmd_preprocess(&input, &output, format.as_deref(), config.as_deref())?;
            eprintln!("wrote {n} records to {}", output.display());
        }
        Command::Run {
            manifest,
            data,
            model,
            features,
            grid,
            k,
            seed,
            output_dir,
            embeddings,
            format,
            config,
            jobs,
            stub_dim,
            epochs,
            batch_size,
            learning_rate,
            patience,
            max_epochs,
        } => {
            let summary = if let Some(manifest) = manifest {
                cmd_run_from_manifest(&manifest, output_dir.as_deref())?
            } else {
                let output_dir = output_dir.ok_or_else(|| {
                    tweetopic_core::Error::Config("run requires --out DIR".to_string())
                })?;
                let mut spec = RunSpec::new(
                    data.expect("clap enforces --data"),
                    model.expect("clap enforces --model"),
                    output_dir,
                );
                spec.features = FeatureKind::from_name(&features)?;
                spec.grid = GridChoice::parse(&grid);
                spec.k = k;
                spec.seed = seed;
                spec.embeddings = embeddings;
                spec.format = format;
                spec.preprocess_config = config;
                spec.jobs = jobs;
                spec.stub_dim = stub_dim;
                spec.epochs = epochs;
                spec.batch_size = batch_size;
                spec.learning_rate = learning_rate;
                spec.patience = patience;
                spec.max_epochs = max_epochs;
                cmd_run(&spec)?
            };
            println!(
                "{}: mean accuracy {:.4} over {} folds ({} configs evaluated)",
                summary.best.model_name,
                summary.best.mean_accuracy,
                summary.best.fold_accuracies.len(),
                summary.results.len(),
            );
            println!("results written to {}", summary.output_dir.display());
        }
        Command::Grid { action } => match action {
            GridAction::List => println!("{}", cmd_grid(None)?),
            GridAction::Show { name } => println!("{}", cmd_grid(Some(&name))?),
        },
        Command::Compare {
            dirs,
            baseline,
            layout,
            output_dir,
        } => {
            let doc = cmd_compare(&dirs, &baseline, parse_layout(&layout)?)?;
            println!("{}", doc.markdown);
            if let Some(dir) = output_dir {
                tweetopic_cli::write_atomic(&dir.join("report.md"), doc.markdown.as_bytes())?;
                tweetopic_cli::write_atomic(&dir.join("report.csv"), doc.csv.as_bytes())?;
            }
        }
        Command::Report { dir, layout } => {
            let doc = cmd_report(&dir, parse_layout(&layout)?)?;
            println!("{}", doc.markdown);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

//! Report emission: Markdown and CSV renderings of corpus statistics and
//! cross-validated accuracy tables.
//!
//! Accuracy tables group models the way the benchmark groups them
//! (Traditional machine learning / Deep Learning / Transformers / Sentence
//! Transformers), bold the best value per column, and mark models whose
//! difference against the baseline is significant with an asterisk.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvaluationResult, TTestResult};
use crate::corpus::CorpusStats;
use crate::error::{Error, Result};

/// Report shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportLayout {
    /// Corpus statistics (minority / majority / total columns).
    Table1,
    /// Grouped accuracy table.
    Table4,
    /// Baseline comparison with significance asterisks.
    Table5,
}

/// A significance comparison of one model against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model_name: String,
    pub baseline: String,
    pub ttest: TTestResult,
}

/// Rendered report in both formats.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDoc {
    pub markdown: String,
    pub csv: String,
}

/// Input to [`emit_report`].
#[derive(Debug, Clone, Copy)]
pub enum ReportInput<'a> {
    Stats(&'a CorpusStats),
    Results {
        results: &'a [EvaluationResult],
        comparisons: &'a [ModelComparison],
    },
}

/// Model families, in report order.
pub const FAMILIES: [&str; 5] = [
    "Traditional machine learning",
    "Deep Learning",
    "Transformers",
    "Sentence Transformers",
    "Other",
];

const TRANSFORMER_BACKENDS: [&str; 7] = [
    "electra-base-discriminator",
    "electra-base-generator",
    "distilbert-base-uncased",
    "distilroberta-base",
    "bert-base-uncased",
    "albert-base-v2",
    "roberta-base",
];

/// Family a model name reports under.
pub fn family_of(model_name: &str) -> &'static str {
    let lower = model_name.to_lowercase();
    if lower.starts_with("mnb") || lower.starts_with("lr") {
        FAMILIES[0]
    } else if lower.starts_with("cnn") || lower.starts_with("lstm") || lower.starts_with("bilstm")
    {
        FAMILIES[1]
    } else if let Some(backend) = lower.strip_prefix("stf:") {
        if TRANSFORMER_BACKENDS.contains(&backend) {
            FAMILIES[2]
        } else {
            FAMILIES[3]
        }
    } else {
        FAMILIES[4]
    }
}

/// Renders a report document.
pub fn emit_report(input: ReportInput<'_>, layout: ReportLayout) -> Result<ReportDoc> {
    match (layout, input) {
        (ReportLayout::Table1, ReportInput::Stats(stats)) => Ok(stats_report(stats)),
        (ReportLayout::Table4, ReportInput::Results { results, .. }) => {
            if results.is_empty() {
                return Err(Error::Evaluation("no results to report".to_string()));
            }
            Ok(accuracy_report(results))
        }
        (ReportLayout::Table5, ReportInput::Results { results, comparisons }) => {
            if results.is_empty() {
                return Err(Error::Evaluation("no results to report".to_string()));
            }
            Ok(comparison_report(results, comparisons))
        }
        _ => Err(Error::Config(
            "layout does not match the report input".to_string(),
        )),
    }
}

fn stats_report(stats: &CorpusStats) -> ReportDoc {
    let markdown = stats.to_markdown();
    let minority = stats.minority();
    let majority = stats.majority();
    let mut csv = String::from("statistic,minority_class,majority_class,total\n");
    let _ = writeln!(
        csv,
        "number_of_tweets,{},{},{}",
        minority.n_tweets, majority.n_tweets, stats.n_tweets
    );
    let _ = writeln!(
        csv,
        "word_count,{},{},{}",
        minority.word_count, majority.word_count, stats.word_count
    );
    let _ = writeln!(
        csv,
        "unique_words,{},{},{}",
        minority.unique_words, majority.unique_words, stats.unique_words
    );
    let _ = writeln!(
        csv,
        "average_words_per_tweet,{:.4},{:.4},{:.4}",
        minority.avg_words_per_tweet, majority.avg_words_per_tweet, stats.avg_words_per_tweet
    );
    ReportDoc { markdown, csv }
}

fn pct(acc: f64) -> String {
    format!("{:.2}", acc * 100.0)
}

fn accuracy_report(results: &[EvaluationResult]) -> ReportDoc {
    let best = results
        .iter()
        .map(|r| r.mean_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut markdown = String::new();
    let _ = writeln!(markdown, "| Group | Model | Accuracy |");
    let _ = writeln!(markdown, "|-------|-------|----------|");
    let mut csv = String::from("group,model,accuracy,fold_accuracies\n");

    for family in FAMILIES {
        for r in results.iter().filter(|r| family_of(&r.model_name) == family) {
            let cell = if r.mean_accuracy == best {
                format!("**{}**", pct(r.mean_accuracy))
            } else {
                pct(r.mean_accuracy)
            };
            let _ = writeln!(markdown, "| {} | {} | {} |", family, r.model_name, cell);
            let folds = r
                .fold_accuracies
                .iter()
                .map(|a| format!("{a:.6}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                csv,
                "{},{},{:.6},{}",
                family, r.model_name, r.mean_accuracy, folds
            );
        }
    }
    ReportDoc { markdown, csv }
}

fn comparison_report(results: &[EvaluationResult], comparisons: &[ModelComparison]) -> ReportDoc {
    let best = results
        .iter()
        .map(|r| r.mean_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let baseline = comparisons
        .first()
        .map(|c| c.baseline.clone())
        .unwrap_or_default();

    let mut markdown = String::new();
    if !baseline.is_empty() {
        let _ = writeln!(
            markdown,
            "Baseline: {baseline}. `*` marks a significant difference against the baseline (paired t-test, p < 0.05)."
        );
        let _ = writeln!(markdown);
    }
    let _ = writeln!(markdown, "| Model | Accuracy | p-value |");
    let _ = writeln!(markdown, "|-------|----------|---------|");
    let mut csv = String::from("model,accuracy,p_value,t_statistic,significant\n");

    for r in results {
        let cmp = comparisons.iter().find(|c| c.model_name == r.model_name);
        let star = cmp.map(|c| c.ttest.significant).unwrap_or(false);
        let name = if star {
            format!("{}*", r.model_name)
        } else {
            r.model_name.clone()
        };
        let cell = if r.mean_accuracy == best {
            format!("**{}**", pct(r.mean_accuracy))
        } else {
            pct(r.mean_accuracy)
        };
        let p_cell = cmp
            .map(|c| format!("{:.4}", c.ttest.p))
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(markdown, "| {name} | {cell} | {p_cell} |");
        let _ = writeln!(
            csv,
            "{},{:.6},{},{},{}",
            r.model_name,
            r.mean_accuracy,
            cmp.map(|c| format!("{:.6}", c.ttest.p)).unwrap_or_default(),
            cmp.map(|c| format!("{:.6}", c.ttest.t)).unwrap_or_default(),
            star
        );
    }
    ReportDoc { markdown, csv }
}

//! Labeled tweet datasets: loading, statistics, and stratified folds.
//!
//! The canonical on-disk format is UTF-8 CSV with an `id,text,label` header;
//! TSV (same columns) and JSONL (`{"id":..,"text":..,"label":..}`) are
//! accepted as alternates. Loading preserves file order, collects labels in
//! first-appearance order, and rejects duplicate ids rather than deduping.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::Pipeline;

/// One labeled tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTweet {
    pub id: String,
    pub text: String,
    pub label: String,
}

/// Dataset file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Tsv,
    Jsonl,
}

impl DataFormat {
    pub fn from_name(name: &str) -> Result<DataFormat> {
        match name.to_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "tsv" => Ok(DataFormat::Tsv),
            "jsonl" | "ndjson" => Ok(DataFormat::Jsonl),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }

    /// Guesses from a file extension; defaults to CSV.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => DataFormat::Tsv,
            Some("jsonl") | Some("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::Tsv => "tsv",
            DataFormat::Jsonl => "jsonl",
        }
    }
}

/// An ordered collection of labeled tweets plus the label inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    tweets: Vec<LabeledTweet>,
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from records, validating the loader invariants:
    /// non-empty text/label, unique ids. Labels are collected in
    /// first-appearance order.
    pub fn from_tweets(tweets: Vec<LabeledTweet>) -> Result<Corpus> {
        let mut labels = Vec::new();
        let mut label_index = HashMap::new();
        let mut seen_ids = HashMap::new();
        for (i, t) in tweets.iter().enumerate() {
            if t.text.trim().is_empty() {
                return Err(Error::Record {
                    path: PathBuf::from("<memory>"),
                    line: i + 1,
                    message: "empty text".to_string(),
                });
            }
            if t.label.trim().is_empty() {
                return Err(Error::Record {
                    path: PathBuf::from("<memory>"),
                    line: i + 1,
                    message: "empty label".to_string(),
                });
            }
            if let Some(prev) = seen_ids.insert(t.id.clone(), i + 1) {
                let _ = prev;
                return Err(Error::DuplicateId {
                    id: t.id.clone(),
                    line: i + 1,
                });
            }
            if !label_index.contains_key(&t.label) {
                label_index.insert(t.label.clone(), labels.len());
                labels.push(t.label.clone());
            }
        }
        Ok(Corpus {
            tweets,
            labels,
            label_index,
        })
    }

    pub fn tweets(&self) -> &[LabeledTweet] {
        &self.tweets
    }

    /// Class names in first-appearance order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Index of a class name in the label inventory.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    /// Per-tweet class indices, aligned with `tweets()`.
    pub fn class_indices(&self) -> Vec<usize> {
        self.tweets
            .iter()
            .map(|t| self.label_index[&t.label])
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
    label: String,
}

/// Loads a labeled tweet dataset. Ordering is stable (file order); labels
/// are collected in first-appearance order; record-level problems carry the
/// offending line number.
pub fn load_corpus(path: &Path, format: DataFormat) -> Result<Corpus> {
    let tweets = match format {
        DataFormat::Csv => read_delimited(path, b',')?,
        DataFormat::Tsv => read_delimited(path, b'\t')?,
        DataFormat::Jsonl => read_jsonl(path)?,
    };
    if tweets.is_empty() {
        return Err(Error::EmptyCorpus {
            path: path.to_path_buf(),
        });
    }
    Corpus::from_tweets(tweets).map_err(|e| match e {
        // Rewrite in-memory paths to the real file.
        Error::Record { line, message, .. } => Error::Record {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

fn read_delimited(path: &Path, delimiter: u8) -> Result<Vec<LabeledTweet>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Record {
                path: path.to_path_buf(),
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (id_col, text_col, label_col) = (col("id")?, col("text")?, col("label")?);

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(out.len() + 2);
            Error::Record {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(out.len() + 2);
        let field = |idx: usize, name: &str| -> Result<String> {
            let v = record.get(idx).unwrap_or("").trim();
            if v.is_empty() {
                Err(Error::Record {
                    path: path.to_path_buf(),
                    line,
                    message: format!("missing or empty {name}"),
                })
            } else {
                Ok(v.to_string())
            }
        };
        out.push(LabeledTweet {
            id: field(id_col, "id")?,
            text: field(text_col, "text")?,
            label: field(label_col, "label")?,
        });
    }
    Ok(out)
}

fn read_jsonl(path: &Path) -> Result<Vec<LabeledTweet>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in body.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(raw).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if rec.text.trim().is_empty() {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line,
                message: "missing or empty text".to_string(),
            });
        }
        if rec.label.trim().is_empty() {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line,
                message: "missing or empty label".to_string(),
            });
        }
        out.push(LabeledTweet {
            id: rec.id,
            text: rec.text,
            label: rec.label,
        });
    }
    Ok(out)
}

/// Statistics for one class slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: String,
    pub n_tweets: usize,
    pub word_count: usize,
    pub unique_words: usize,
    pub avg_words_per_tweet: f64,
}

/// Corpus statistics computed with the artifact's own tokenizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_tweets: usize,
    pub word_count: usize,
    pub unique_words: usize,
    pub avg_words_per_tweet: f64,
    /// Per-class statistics, in label inventory order.
    pub per_class: Vec<ClassStats>,
}

impl CorpusStats {
    /// Minority class (fewest tweets; ties go to the earlier label).
    pub fn minority(&self) -> &ClassStats {
        self.per_class
            .iter()
            .min_by_key(|c| c.n_tweets)
            .expect("stats cover at least one class")
    }

    /// Majority class (most tweets; ties go to the earlier label).
    pub fn majority(&self) -> &ClassStats {
        let max = self.per_class.iter().map(|c| c.n_tweets).max().unwrap_or(0);
        self.per_class
            .iter()
            .find(|c| c.n_tweets == max)
            .expect("stats cover at least one class")
    }

    /// Markdown table with minority/majority/total columns.
    pub fn to_markdown(&self) -> String {
        let minority = self.minority();
        let majority = self.majority();
        let mut s = String::new();
        let _ = writeln!(s, "|                         | Minority class | Majority class | Total |");
        let _ = writeln!(s, "|-------------------------|----------------|----------------|-------|");
        let _ = writeln!(
            s,
            "| Number of tweets        | {} | {} | {} |",
            minority.n_tweets, majority.n_tweets, self.n_tweets
        );
        let _ = writeln!(
            s,
            "| Word count              | {} | {} | {} |",
            minority.word_count, majority.word_count, self.word_count
        );
        let _ = writeln!(
            s,
            "| Unique words            | {} | {} | {} |",
            minority.unique_words, majority.unique_words, self.unique_words
        );
        let _ = writeln!(
            s,
            "| Average words per tweet | {:.2} | {:.2} | {:.2} |",
            minority.avg_words_per_tweet, majority.avg_words_per_tweet, self.avg_words_per_tweet
        );
        s
    }

    /// Markdown table with one column per class.
    pub fn to_markdown_per_class(&self) -> String {
        let mut s = String::new();
        let mut header = String::from("|                         |");
        let mut rule = String::from("|-------------------------|");
        for c in &self.per_class {
            let _ = write!(header, " {} |", c.label);
            let _ = write!(rule, "---|");
        }
        header.push_str(" Total |");
        rule.push_str("---|");
        let _ = writeln!(s, "{header}");
        let _ = writeln!(s, "{rule}");
        let row = |name: &str, f: &dyn Fn(&ClassStats) -> String, total: String| {
            let mut r = format!("| {name} |");
            for c in &self.per_class {
                let _ = write!(r, " {} |", f(c));
            }
            let _ = write!(r, " {total} |");
            r
        };
        let _ = writeln!(
            s,
            "{}",
            row("Number of tweets        ", &|c| c.n_tweets.to_string(), self.n_tweets.to_string())
        );
        let _ = writeln!(
            s,
            "{}",
            row("Word count              ", &|c| c.word_count.to_string(), self.word_count.to_string())
        );
        let _ = writeln!(
            s,
            "{}",
            row("Unique words            ", &|c| c.unique_words.to_string(), self.unique_words.to_string())
        );
        let _ = writeln!(
            s,
            "{}",
            row(
                "Average words per tweet ",
                &|c| format!("{:.2}", c.avg_words_per_tweet),
                format!("{:.2}", self.avg_words_per_tweet)
            )
        );
        s
    }
}

/// Computes token statistics over the corpus with the given pipeline.
pub fn compute_stats(corpus: &Corpus, pipeline: &Pipeline) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::invalid("corpus", "must be non-empty"));
    }
    let mut word_count = 0usize;
    let mut uniq: BTreeSet<String> = BTreeSet::new();
    let mut per_class: Vec<(usize, usize, BTreeSet<String>)> = corpus
        .labels()
        .iter()
        .map(|_| (0usize, 0usize, BTreeSet::new()))
        .collect();

    for t in corpus.tweets() {
        let toks = pipeline.preprocess(&t.text);
        let ci = corpus.label_index(&t.label).expect("label in inventory");
        let entry = &mut per_class[ci];
        entry.0 += 1;
        entry.1 += toks.tokens.len();
        word_count += toks.tokens.len();
        for tok in &toks.tokens {
            uniq.insert(tok.clone());
            entry.2.insert(tok.clone());
        }
    }

    let per_class = corpus
        .labels()
        .iter()
        .zip(per_class)
        .map(|(label, (n, wc, u))| ClassStats {
            label: label.clone(),
            n_tweets: n,
            word_count: wc,
            unique_words: u.len(),
            avg_words_per_tweet: if n > 0 { wc as f64 / n as f64 } else { 0.0 },
        })
        .collect();

    Ok(CorpusStats {
        n_tweets: corpus.len(),
        word_count,
        unique_words: uniq.len(),
        avg_words_per_tweet: word_count as f64 / corpus.len() as f64,
        per_class,
    })
}

/// Assignment of every tweet to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold index per tweet, aligned with corpus order.
    pub folds: Vec<usize>,
    /// Tweet id -> fold index.
    pub by_id: HashMap<String, usize>,
}

impl FoldAssignment {
    /// Stable digest over (id, fold) pairs; shared by comparable runs.
    pub fn hash(&self) -> String {
        let mut pairs: Vec<(&String, &usize)> = self.by_id.iter().collect();
        pairs.sort();
        let mut h = Sha256::new();
        h.update(self.k.to_le_bytes());
        for (id, fold) in pairs {
            h.update(id.as_bytes());
            h.update(b":");
            h.update(fold.to_le_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Indices of tweets inside / outside fold `fold`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, f) in self.folds.iter().enumerate() {
            if *f == fold {
                val.push(i);
            } else {
                train.push(i);
            }
        }
        (train, val)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for f in &self.folds {
            sizes[*f] += 1;
        }
        sizes
    }
}

/// Deterministic stratified fold assignment: tweet indices are grouped by
/// class (label inventory order), each group is shuffled under the run seed,
/// and the concatenated sequence is dealt round-robin to folds. The dealing
/// continues across class groups, so both fold sizes and per-class counts
/// differ by at most one.
pub fn stratified_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if k < 2 {
        return Err(Error::invalid("k", "fold count must be at least 2"));
    }
    let classes = corpus.class_indices();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); corpus.n_classes()];
    for (i, c) in classes.iter().enumerate() {
        by_class[*c].push(i);
    }
    for (ci, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::Stratification {
                label: corpus.labels()[ci].clone(),
                count: members.len(),
                k,
            });
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; corpus.len()];
    let mut next_fold = 0usize;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for idx in members.iter() {
            folds[*idx] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }

    let by_id = corpus
        .tweets()
        .iter()
        .zip(&folds)
        .map(|(t, f)| (t.id.clone(), *f))
        .collect();

    Ok(FoldAssignment { k, folds, by_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::PipelineConfig;

    fn tweet(id: &str, text: &str, label: &str) -> LabeledTweet {
        LabeledTweet {
            id: id.to_string(),
            text: text.to_string(),
            label: label.to_string(),
        }
    }

    fn toy_corpus(sizes: &[(&str, usize)]) -> Corpus {
        let mut tweets = Vec::new();
        for (label, n) in sizes {
            for i in 0..*n {
                tweets.push(tweet(&format!("{label}-{i}"), "text body", label));
            }
        }
        Corpus::from_tweets(tweets).unwrap()
    }

    #[test]
    fn labels_in_first_appearance_order() {
        let c = Corpus::from_tweets(vec![
            tweet("t1", "hello", "Sports"),
            tweet("t2", "vote now", "Politics"),
            tweet("t3", "again", "Sports"),
        ])
        .unwrap();
        assert_eq!(c.labels(), &["Sports".to_string(), "Politics".to_string()]);
        assert_eq!(c.class_indices(), vec![0, 1, 0]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Corpus::from_tweets(vec![
            tweet("t1", "hello", "Sports"),
            tweet("t1", "again", "Sports"),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { .. }));
    }

    #[test]
    fn stats_counts_by_hand() {
        // Tokenizer with no removals: 2 tweets ["a b a", "b c"].
        let c = Corpus::from_tweets(vec![
            tweet("t1", "a b a", "X"),
            tweet("t2", "b c", "X"),
        ])
        .unwrap();
        let p = Pipeline::new(PipelineConfig::counting()).unwrap();
        let s = compute_stats(&c, &p).unwrap();
        assert_eq!(s.n_tweets, 2);
        assert_eq!(s.word_count, 5);
        assert_eq!(s.unique_words, 3);
        assert!((s.avg_words_per_tweet - 2.5).abs() < 1e-12);
    }

    #[test]
    fn stats_single_tweet() {
        let c = Corpus::from_tweets(vec![tweet("t1", "x", "X")]).unwrap();
        let p = Pipeline::new(PipelineConfig::counting()).unwrap();
        let s = compute_stats(&c, &p).unwrap();
        assert_eq!(
            (s.n_tweets, s.word_count, s.unique_words),
            (1, 1, 1)
        );
        assert!((s.avg_words_per_tweet - 1.0).abs() < 1e-12);
    }

    #[test]
    fn per_class_sums_to_totals() {
        let c = toy_corpus(&[("A", 3), ("B", 2)]);
        let p = Pipeline::new(PipelineConfig::counting()).unwrap();
        let s = compute_stats(&c, &p).unwrap();
        assert_eq!(s.per_class.iter().map(|x| x.n_tweets).sum::<usize>(), s.n_tweets);
        assert_eq!(s.per_class.iter().map(|x| x.word_count).sum::<usize>(), s.word_count);
        assert_eq!(s.minority().label, "B");
        assert_eq!(s.majority().label, "A");
    }

    #[test]
    fn balanced_two_class_folds() {
        // 10 tweets, 2 classes of 5 each, k=5: each fold gets one of each.
        let c = toy_corpus(&[("A", 5), ("B", 5)]);
        let fa = stratified_folds(&c, 5, 7).unwrap();
        let classes = c.class_indices();
        for fold in 0..5 {
            let (_, val) = fa.split(fold);
            assert_eq!(val.len(), 2);
            let a = val.iter().filter(|i| classes[**i] == 0).count();
            assert_eq!(a, 1, "fold {fold} must hold one tweet of each class");
        }
    }

    #[test]
    fn seven_in_five_folds() {
        let c = toy_corpus(&[("A", 7)]);
        let fa = stratified_folds(&c, 5, 3).unwrap();
        let mut sizes = fa.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 2, 2]);
    }

    #[test]
    fn determinism_and_hash() {
        let c = toy_corpus(&[("A", 9), ("B", 6), ("C", 11)]);
        let f1 = stratified_folds(&c, 5, 42).unwrap();
        let f2 = stratified_folds(&c, 5, 42).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(f1.hash(), f2.hash());
        let f3 = stratified_folds(&c, 5, 43).unwrap();
        assert_ne!(f1.hash(), f3.hash());
    }

    #[test]
    fn small_class_errors() {
        let c = toy_corpus(&[("A", 5), ("B", 3)]);
        let err = stratified_folds(&c, 5, 1).unwrap_err();
        match err {
            Error::Stratification { label, count, k } => {
                assert_eq!((label.as_str(), count, k), ("B", 3, 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}

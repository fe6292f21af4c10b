//! Tweet normalization pipeline.
//!
//! Raw tweet text is turned into an annotated token sequence by applying, in
//! order: entity normalization (URLs, emails, mentions, percent/money/time/
//! date/phone/number expressions, RT markers, stopwords, emoticons), then
//! whitespace/punctuation tokenization, hashtag unpacking, elongation
//! reduction, repetition reduction, and lowercasing.
//!
//! Placeholder tags such as `<url>` or `<hashtag>` are ordinary lowercase
//! tokens, so downstream bag-of-words models treat them as terms. Re-running
//! the pipeline on its own rendered output is a no-op: existing placeholder
//! tokens pass through the scanner untouched, and everything between
//! `<hashtag>` and `</hashtag>` is protected from entity rules.
//!
//! Every byte of the input is accounted for: it either survives into a token,
//! is consumed by a rule (entity replacement, separator, hashtag mark,
//! elongation, repetition), or is discarded (stopword, RT, emoticon). See
//! [`Accounting`].

mod elongation;
mod hashtag;
mod scanner;
mod tokenize;

pub use elongation::reduce_elongated;
pub use hashtag::unpack_hashtag;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use scanner::Scanner;
use tokenize::{tokenize, RawTokKind};

/// Default stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("assets/stopwords_en.txt");
/// Default segmentation lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("assets/lexicon_en.txt");

/// Opening tag emitted before unpacked hashtag words.
pub const HASHTAG_OPEN: &str = "<hashtag>";
/// Closing tag emitted after unpacked hashtag words.
pub const HASHTAG_CLOSE: &str = "</hashtag>";
/// Marker inserted before the surviving instance of a collapsed token run.
pub const REPEATED_TOKEN: &str = "<repeated>";

/// Pipeline rules, in the fixed registry. The first twelve drive the entity
/// scanner (their order is the tie-break order for equal-length matches); the
/// last four toggle token-level stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Url,
    Email,
    User,
    Percent,
    Money,
    Time,
    Date,
    Phone,
    Number,
    Rt,
    Emoticon,
    Stopword,
    UnpackHashtags,
    ReduceElongated,
    ReduceRepeated,
    Lowercase,
}

impl Rule {
    /// Every rule, in the default application order.
    pub fn registry() -> &'static [Rule] {
        use Rule::*;
        &[
            Url, Email, User, Percent, Money, Time, Date, Phone, Number, Rt, Emoticon, Stopword,
            UnpackHashtags, ReduceElongated, ReduceRepeated, Lowercase,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        use Rule::*;
        match self {
            Url => "url",
            Email => "email",
            User => "user",
            Percent => "percent",
            Money => "money",
            Time => "time",
            Date => "date",
            Phone => "phone",
            Number => "number",
            Rt => "rt",
            Emoticon => "emoticon",
            Stopword => "stopword",
            UnpackHashtags => "unpack_hashtags",
            ReduceElongated => "reduce_elongated",
            ReduceRepeated => "reduce_repeated",
            Lowercase => "lowercase",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::registry().iter().copied().find(|r| r.as_str() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Annotation tags attached to token spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationTag {
    Hashtag,
    Elongated,
    Repeated,
    Url,
    Email,
    User,
    Number,
    Percent,
    Money,
    Time,
    Date,
    Phone,
    Emoticon,
}

impl AnnotationTag {
    pub fn as_str(&self) -> &'static str {
        use AnnotationTag::*;
        match self {
            Hashtag => "hashtag",
            Elongated => "elongated",
            Repeated => "repeated",
            Url => "url",
            Email => "email",
            User => "user",
            Number => "number",
            Percent => "percent",
            Money => "money",
            Time => "time",
            Date => "date",
            Phone => "phone",
            Emoticon => "emoticon",
        }
    }

    /// Placeholder token text for entity tags, e.g. `<url>`.
    pub fn placeholder(&self) -> String {
        format!("<{}>", self.as_str())
    }

    fn from_name(name: &str) -> Option<AnnotationTag> {
        use AnnotationTag::*;
        [
            Hashtag, Elongated, Repeated, Url, Email, User, Number, Percent, Money, Time, Date,
            Phone, Emoticon,
        ]
        .into_iter()
        .find(|t| t.as_str() == name)
    }
}

/// A tagged span over token positions (`start..end`, end exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub tag: AnnotationTag,
    pub start: usize,
    pub end: usize,
}

/// Output of the preprocessing pipeline: lowercase tokens plus annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TokenizedTweet {
    pub tokens: Vec<String>,
    pub annotations: Vec<Annotation>,
}

impl TokenizedTweet {
    /// True when every token was removed by the pipeline (or the input was
    /// empty); such tweets are kept in the corpus but carry no features.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined token stream, suitable for re-tokenization or for
    /// feeding sentence encoders.
    pub fn render(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Word list used for hashtag segmentation and elongation reduction.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: BTreeSet<String>,
    max_len: usize,
}

impl Lexicon {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        let mut set = BTreeSet::new();
        let mut max_len = 0;
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() || w.starts_with('#') {
                continue;
            }
            max_len = max_len.max(w.chars().count());
            set.insert(w);
        }
        Lexicon {
            words: set,
            max_len,
        }
    }

    /// Parses a word-list file body (one word per line, `#` comments).
    pub fn from_word_list(body: &str) -> Self {
        Lexicon::new(body.lines())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// Longest word length, in chars.
    pub fn max_word_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.as_str())
    }
}

/// Declarative pipeline configuration: which rules run (in order), plus the
/// segmentation lexicon and stopword list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rules: Vec<Rule>,
    pub lexicon: Vec<String>,
    pub stopwords: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rules: Rule::registry().to_vec(),
            lexicon: parse_word_list(DEFAULT_LEXICON),
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
        }
    }
}

impl PipelineConfig {
    /// Tokenize-and-lowercase only: no entity rules, no stopword removal.
    /// Used for corpus statistics, where removal would skew word counts.
    pub fn counting() -> Self {
        PipelineConfig {
            rules: vec![Rule::Lowercase],
            lexicon: Vec::new(),
            stopwords: Vec::new(),
        }
    }

    pub fn with_rules(mut self, rules: Vec<Rule>) -> Self {
        self.rules = rules;
        self
    }

    pub fn with_stopwords<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_lexicon<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.lexicon = words.into_iter().map(Into::into).collect();
        self
    }
}

/// Parses a word-list body: one entry per line, `#` starts a comment line.
pub fn parse_word_list(body: &str) -> Vec<String> {
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// How an input byte was used by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteLabel {
    /// Not yet assigned (never present in a finished accounting).
    Pending,
    /// Byte survives inside an output token.
    Emitted,
    /// Byte was consumed by a structural rule.
    Consumed(ConsumedBy),
    /// Byte belonged to removed content.
    Discarded(DiscardReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsumedBy {
    /// Replaced by an entity placeholder.
    Entity(Rule),
    /// Whitespace or punctuation between tokens.
    Separator,
    /// The `#` sigil (and `_` separators) of an unpacked hashtag.
    HashtagMark,
    /// Duplicate letters removed by elongation reduction.
    Elongation,
    /// Duplicate tokens removed by repetition reduction.
    Repetition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    Stopword,
    Rt,
    Emoticon,
}

/// Per-byte usage record for one pipeline run. The labels partition the
/// input: every byte is emitted, consumed, or discarded, exactly once.
#[derive(Debug, Clone)]
pub struct Accounting {
    labels: Vec<ByteLabel>,
}

impl Accounting {
    fn new(len: usize) -> Self {
        Accounting {
            labels: vec![ByteLabel::Pending; len],
        }
    }

    fn set(&mut self, range: std::ops::Range<usize>, label: ByteLabel) {
        for b in range {
            debug_assert_eq!(self.labels[b], ByteLabel::Pending, "byte {b} labeled twice");
            self.labels[b] = label;
        }
    }

    pub fn labels(&self) -> &[ByteLabel] {
        &self.labels
    }

    /// True when every byte carries a final label.
    pub fn is_complete(&self) -> bool {
        self.labels.iter().all(|l| *l != ByteLabel::Pending)
    }

    pub fn count(&self, label: ByteLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// A compiled preprocessing pipeline. Construction compiles the entity
/// scanner once; running it is pure and safe to share across threads.
#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    scanner: Scanner,
    lexicon: Lexicon,
    stopwords: BTreeSet<String>,
    unpack: bool,
    elongated: bool,
    repeated: bool,
    lowercase: bool,
    stopword_rule: bool,
    config_hash: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        for (i, r) in config.rules.iter().enumerate() {
            if config.rules[..i].contains(r) {
                return Err(Error::Config(format!("duplicate pipeline rule {r}")));
            }
        }
        let lexicon = Lexicon::new(&config.lexicon);
        let stopwords: BTreeSet<String> =
            config.stopwords.iter().map(|w| w.to_lowercase()).collect();
        let scanner = Scanner::new(&config.rules, &stopwords)?;
        let config_hash = hash_config(&config);
        Ok(Pipeline {
            unpack: config.rules.contains(&Rule::UnpackHashtags),
            elongated: config.rules.contains(&Rule::ReduceElongated),
            repeated: config.rules.contains(&Rule::ReduceRepeated),
            lowercase: config.rules.contains(&Rule::Lowercase),
            stopword_rule: config.rules.contains(&Rule::Stopword),
            config,
            scanner,
            lexicon,
            stopwords,
            config_hash,
        })
    }

    /// Pipeline over the default configuration.
    pub fn default_pipeline() -> Self {
        Pipeline::new(PipelineConfig::default()).expect("default config is valid")
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// SHA-256 over the rule list and both word lists; recorded in run
    /// manifests so results are reproducible.
    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Entity normalization only: placeholders substituted, RT/stopwords/
    /// emoticons removed, whitespace squeezed.
    pub fn normalize_entities(&self, text: &str) -> String {
        let mut acct = Accounting::new(text.len());
        self.scanner.scan(text, &mut acct).output
    }

    /// Runs the full pipeline.
    pub fn preprocess(&self, text: &str) -> TokenizedTweet {
        self.preprocess_detailed(text).0
    }

    /// Runs the full pipeline and returns the per-byte accounting.
    pub fn preprocess_detailed(&self, text: &str) -> (TokenizedTweet, Accounting) {
        let mut acct = Accounting::new(text.len());
        let scan = self.scanner.scan(text, &mut acct);
        let raw = tokenize(&scan.output);

        // Bytes of the normalized text not covered by any token are
        // separators; map them back to input bytes.
        let mut covered = vec![false; scan.output.len()];
        for t in &raw {
            for b in t.range.clone() {
                covered[b] = true;
            }
        }
        for (b, cov) in covered.iter().enumerate() {
            if !cov {
                if let Some(o) = scan.origin[b] {
                    acct.set(o as usize..o as usize + 1, ByteLabel::Consumed(ConsumedBy::Separator));
                }
            }
        }

        // Internal working tokens carrying per-char input origins.
        #[derive(Clone)]
        struct Tok {
            text: String,
            origins: Vec<Option<u32>>, // one per char; None = synthetic
            in_hashtag: bool,
            is_word: bool,
            elongated: bool,
        }
        let synthetic = |text: &str, in_hashtag: bool| Tok {
            origins: vec![None; text.chars().count()],
            text: text.to_string(),
            in_hashtag,
            is_word: false,
            elongated: false,
        };

        let char_origins = |range: std::ops::Range<usize>| -> Vec<Option<u32>> {
            scan.output[range.clone()]
                .char_indices()
                .map(|(i, _)| scan.origin[range.start + i])
                .collect()
        };

        let mut toks: Vec<Tok> = Vec::new();
        for rt in &raw {
            match rt.kind {
                RawTokKind::Placeholder => toks.push(Tok {
                    text: rt.text.clone(),
                    origins: char_origins(rt.range.clone()),
                    in_hashtag: rt.in_hashtag,
                    is_word: false,
                    elongated: false,
                }),
                RawTokKind::Word => toks.push(Tok {
                    text: rt.text.clone(),
                    origins: char_origins(rt.range.clone()),
                    in_hashtag: rt.in_hashtag,
                    is_word: true,
                    elongated: false,
                }),
                RawTokKind::Hashtag => {
                    if !self.unpack {
                        toks.push(Tok {
                            text: rt.text.clone(),
                            origins: char_origins(rt.range.clone()),
                            in_hashtag: false,
                            is_word: true,
                            elongated: false,
                        });
                        continue;
                    }
                    let origins = char_origins(rt.range.clone());
                    // '#' sigil.
                    if let Some(o) = origins[0] {
                        label_char(&mut acct, &scan.output[rt.range.clone()], 0, o, ByteLabel::Consumed(ConsumedBy::HashtagMark));
                    }
                    let body: String = rt.text.chars().skip(1).collect();
                    let body_origins = &origins[1..];
                    toks.push(synthetic(HASHTAG_OPEN, true));
                    for seg in hashtag::split_body(&body, &self.lexicon) {
                        match seg {
                            hashtag::Segment::Word(char_range) => {
                                let text: String =
                                    body.chars().skip(char_range.start).take(char_range.len()).collect();
                                toks.push(Tok {
                                    text,
                                    origins: body_origins[char_range].to_vec(),
                                    in_hashtag: true,
                                    is_word: true,
                                    elongated: false,
                                });
                            }
                            hashtag::Segment::Mark(idx) => {
                                if let Some(o) = body_origins[idx] {
                                    label_char(&mut acct, &body, idx, o, ByteLabel::Consumed(ConsumedBy::HashtagMark));
                                }
                            }
                        }
                    }
                    toks.push(synthetic(HASHTAG_CLOSE, true));
                }
            }
        }

        // Elongation reduction.
        if self.elongated {
            let mut kept: Vec<Tok> = Vec::with_capacity(toks.len());
            for mut t in toks {
                if !t.is_word {
                    kept.push(t);
                    continue;
                }
                if let Some((text, mask)) = elongation::reduce_detail(&t.text, &self.lexicon) {
                    let mut origins = Vec::with_capacity(text.chars().count());
                    for (i, keep) in mask.iter().enumerate() {
                        if *keep {
                            origins.push(t.origins[i]);
                        } else if let Some(o) = t.origins[i] {
                            label_char(&mut acct, &t.text, i, o, ByteLabel::Consumed(ConsumedBy::Elongation));
                        }
                    }
                    t.text = text;
                    t.origins = origins;
                    t.elongated = true;
                    // A reduced word can surface a stopword the scanner could
                    // not see; drop it (outside hashtags) so re-running the
                    // pipeline on rendered output is a no-op.
                    if !t.in_hashtag
                        && self.stopword_rule
                        && self.stopwords.contains(&t.text.to_lowercase())
                    {
                        for (i, o) in t.origins.iter().enumerate() {
                            if let Some(o) = *o {
                                label_char(&mut acct, &t.text, i, o, ByteLabel::Discarded(DiscardReason::Stopword));
                            }
                        }
                        continue;
                    }
                }
                kept.push(t);
            }
            toks = kept;
        }

        // Repetition reduction: runs of an identical token collapse to a
        // marker plus the first instance.
        if self.repeated {
            let mut out: Vec<Tok> = Vec::with_capacity(toks.len());
            let mut i = 0;
            while i < toks.len() {
                let mut j = i + 1;
                while j < toks.len() && toks[j].text == toks[i].text {
                    j += 1;
                }
                if j - i >= 2 {
                    out.push(synthetic(REPEATED_TOKEN, toks[i].in_hashtag));
                    for dup in &toks[i + 1..j] {
                        for (ci, o) in dup.origins.iter().enumerate() {
                            if let Some(o) = *o {
                                label_char(&mut acct, &dup.text, ci, o, ByteLabel::Consumed(ConsumedBy::Repetition));
                            }
                        }
                    }
                }
                out.push(toks[i].clone());
                i = j;
            }
            toks = out;
        }

        // Lowercase.
        if self.lowercase {
            for t in &mut toks {
                if t.is_word {
                    let lower = t.text.to_lowercase();
                    if lower != t.text {
                        // Re-align origins: lowercasing can change char count
                        // (rare); fall back to best-effort alignment.
                        t.origins = realign_origins(&t.text, &lower, &t.origins);
                        t.text = lower;
                    }
                }
            }
        }

        // Emit: label surviving origins, build annotations.
        let mut tokens = Vec::with_capacity(toks.len());
        let mut annotations = Vec::new();
        for (pos, t) in toks.iter().enumerate() {
            for (ci, o) in t.origins.iter().enumerate() {
                if let Some(o) = *o {
                    label_char(&mut acct, &t.text, ci, o, ByteLabel::Emitted);
                }
            }
            if t.text == REPEATED_TOKEN {
                let end = (pos + 2).min(toks.len());
                annotations.push(Annotation {
                    tag: AnnotationTag::Repeated,
                    start: pos,
                    end,
                });
            } else if t.text == HASHTAG_OPEN {
                let close = toks[pos + 1..]
                    .iter()
                    .position(|x| x.text == HASHTAG_CLOSE)
                    .map(|off| pos + 1 + off)
                    .unwrap_or(toks.len() - 1);
                annotations.push(Annotation {
                    tag: AnnotationTag::Hashtag,
                    start: pos,
                    end: close + 1,
                });
            } else if let Some(tag) = entity_tag_of(&t.text) {
                annotations.push(Annotation {
                    tag,
                    start: pos,
                    end: pos + 1,
                });
            }
            if t.elongated {
                annotations.push(Annotation {
                    tag: AnnotationTag::Elongated,
                    start: pos,
                    end: pos + 1,
                });
            }
            tokens.push(t.text.clone());
        }
        annotations.sort_by_key(|a| (a.start, a.end));

        (
            TokenizedTweet {
                tokens,
                annotations,
            },
            acct,
        )
    }
}

/// Tag for an entity placeholder token such as `<url>`, if it is one.
fn entity_tag_of(token: &str) -> Option<AnnotationTag> {
    let name = token.strip_prefix('<')?.strip_suffix('>')?;
    if name.starts_with('/') {
        return None;
    }
    match AnnotationTag::from_name(name) {
        Some(AnnotationTag::Hashtag) | Some(AnnotationTag::Repeated) => None,
        other => other,
    }
}

/// Labels the input bytes backing char `char_idx` of `text` at origin byte
/// `origin`. Multi-byte chars are labeled over their full width.
fn label_char(acct: &mut Accounting, text: &str, char_idx: usize, origin: u32, label: ByteLabel) {
    let width = text
        .chars()
        .nth(char_idx)
        .map(|c| c.len_utf8())
        .unwrap_or(1);
    acct.set(origin as usize..origin as usize + width, label);
}

fn realign_origins(old: &str, new: &str, origins: &[Option<u32>]) -> Vec<Option<u32>> {
    let new_len = new.chars().count();
    let old_len = old.chars().count();
    if new_len == old_len {
        return origins.to_vec();
    }
    // Lowercasing expanded or shrank the char count; keep a prefix-aligned
    // best effort (pure-ASCII corpora never hit this path).
    let mut out: Vec<Option<u32>> = origins.iter().copied().take(new_len).collect();
    while out.len() < new_len {
        out.push(None);
    }
    out
}

fn hash_config(config: &PipelineConfig) -> String {
    let mut h = Sha256::new();
    for r in &config.rules {
        h.update(r.as_str().as_bytes());
        h.update(b"\n");
    }
    h.update(b"--lexicon--\n");
    for w in &config.lexicon {
        h.update(w.as_bytes());
        h.update(b"\n");
    }
    h.update(b"--stopwords--\n");
    for w in &config.stopwords {
        h.update(w.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Collapses maximal runs (length >= 2) of an identical token to a
/// `<repeated>` marker followed by a single instance.
pub fn reduce_repeated(tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i + 1;
        while j < tokens.len() && tokens[j] == tokens[i] {
            j += 1;
        }
        if j - i >= 2 {
            out.push(REPEATED_TOKEN.to_string());
        }
        out.push(tokens[i].clone());
        i = j;
    }
    out
}

/// Convenience wrapper: builds a pipeline from `config` and runs it once.
/// Prefer [`Pipeline::preprocess`] when processing many tweets.
pub fn preprocess(text: &str, config: &PipelineConfig) -> Result<TokenizedTweet> {
    Ok(Pipeline::new(config.clone())?.preprocess(text))
}

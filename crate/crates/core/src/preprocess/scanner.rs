//! Entity normalization scanner.
//!
//! Walks the raw text left to right. At each position the enabled rules are
//! tried and the longest match wins (ties go to the rule listed first in the
//! config). Matched spans are replaced by placeholder tokens or removed;
//! everything else is copied through with whitespace squeezed to single
//! spaces. Existing placeholder tokens pass through untouched, and a
//! `<hashtag>` ... `</hashtag>` region is copied verbatim so that re-running
//! the pipeline on rendered output never rewrites unpacked hashtag words.

use std::collections::BTreeSet;

use once_cell::sync::Lazy;
use regex::Regex;

use super::{Accounting, ByteLabel, ConsumedBy, DiscardReason, Rule, HASHTAG_CLOSE, HASHTAG_OPEN};
use crate::error::{Error, Result};

/// Placeholder tag names the scanner and tokenizer recognize as atomic.
pub(crate) const PLACEHOLDER_NAMES: &[&str] = &[
    "hashtag", "repeated", "elongated", "url", "email", "user", "number", "percent", "money",
    "time", "date", "phone",
];

static PLACEHOLDER_RE: Lazy<Regex> = Lazy::new(|| {
    let names = PLACEHOLDER_NAMES.join("|");
    Regex::new(&format!("^</?(?:{names})>")).expect("placeholder regex")
});

static HASHTAG_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^#\w+").expect("hashtag regex"));

fn entity_pattern(rule: Rule) -> Option<(&'static str, Option<&'static str>)> {
    // (anchored pattern, placeholder token or None for removal)
    match rule {
        Rule::Url => Some((r"^(?i:https?://[^\s]+|www\.[^\s]+)", Some("<url>"))),
        Rule::Email => Some((
            r"^[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}",
            Some("<email>"),
        )),
        Rule::User => Some((r"^@\w+", Some("<user>"))),
        Rule::Percent => Some((r"^\d+(?:[.,]\d+)?\s?%", Some("<percent>"))),
        Rule::Money => Some((
            r"^(?:[$€£]\s?\d+(?:[.,]\d+)*(?i:k|m|bn)?|\d+(?:[.,]\d+)*\s?(?:[$€£]|(?i:dollars?|euros?|usd|bucks?)))",
            Some("<money>"),
        )),
        Rule::Time => Some((
            r"^(?i:\d{1,2}:\d{2}(?::\d{2})?(?:\s?[ap]\.?m\.?)?|\d{1,2}\s?[ap]\.?m\.?)",
            Some("<time>"),
        )),
        Rule::Date => Some((
            r"^(?:\d{4}-\d{1,2}-\d{1,2}|\d{1,2}/\d{1,2}/\d{2,4}|(?i:january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)\.?\s+\d{1,2}(?i:st|nd|rd|th)?(?:,\s*\d{4})?)",
            Some("<date>"),
        )),
        Rule::Phone => Some((
            r"^(?:\+\d{1,3}[\s.-]?)?(?:\(\d{3}\)[\s.-]?|\d{3}[\s.-])\d{3}[\s.-]\d{4}",
            Some("<phone>"),
        )),
        Rule::Number => Some((r"^\d+(?:[.,]\d+)*", Some("<number>"))),
        Rule::Rt => Some((r"^(?i:rt)", None)),
        Rule::Emoticon => Some((
            r"^(?:</?3|\^_*\^|[oO]\.[oO]|\*_\*|-_-|T_T|>?[:;=8][-o^']?[()\[\]dDpP/\\|@3*{}]+|[()\[\]dDpP/\\|]+[-o^']?[:;=8]|[Xx][Dd]+)",
            None,
        )),
        _ => None,
    }
}

struct EntityRule {
    rule: Rule,
    re: Option<Regex>, // None for the stopword rule
    replace: Option<&'static str>,
    end_guard: bool,
}

pub(crate) struct ScanResult {
    pub output: String,
    /// Input byte behind each output byte; `None` for synthetic bytes
    /// (placeholder text and squeezed spaces).
    pub origin: Vec<Option<u32>>,
}

#[derive(Debug)]
pub(crate) struct Scanner {
    rules: Vec<(Rule, usize)>, // (rule, index into compiled) for order
    compiled: Vec<EntityRule>,
    stopwords: BTreeSet<String>,
}

impl std::fmt::Debug for EntityRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EntityRule").field("rule", &self.rule).finish()
    }
}

impl Scanner {
    pub fn new(rules: &[Rule], stopwords: &BTreeSet<String>) -> Result<Self> {
        let mut compiled = Vec::new();
        let mut order = Vec::new();
        for rule in rules {
            match rule {
                Rule::Stopword => {
                    order.push((*rule, compiled.len()));
                    compiled.push(EntityRule {
                        rule: *rule,
                        re: None,
                        replace: None,
                        end_guard: true,
                    });
                }
                r => {
                    if let Some((pattern, replace)) = entity_pattern(*r) {
                        let re = Regex::new(pattern).map_err(|e| {
                            Error::Config(format!("rule {r}: bad pattern: {e}"))
                        })?;
                        order.push((*r, compiled.len()));
                        compiled.push(EntityRule {
                            rule: *r,
                            re: Some(re),
                            replace,
                            end_guard: *r != Rule::Url,
                        });
                    }
                }
            }
        }
        Ok(Scanner {
            rules: order,
            compiled,
            stopwords: stopwords.clone(),
        })
    }

    pub fn scan(&self, text: &str, acct: &mut Accounting) -> ScanResult {
        let bytes = text.len();
        let mut output = String::with_capacity(bytes);
        let mut origin: Vec<Option<u32>> = Vec::with_capacity(bytes);
        let mut i = 0;
        let mut prev_char: Option<char> = None;

        let copy_char = |c: char,
                             at: usize,
                             output: &mut String,
                             origin: &mut Vec<Option<u32>>,
                             acct: &mut Accounting| {
            if c.is_whitespace() {
                acct.set(at..at + c.len_utf8(), ByteLabel::Consumed(ConsumedBy::Separator));
                if !output.is_empty() && !output.ends_with(' ') {
                    output.push(' ');
                    origin.push(None);
                }
            } else {
                output.push(c);
                for b in at..at + c.len_utf8() {
                    origin.push(Some(b as u32));
                }
            }
        };

        while i < bytes {
            let slice = &text[i..];
            let c = slice.chars().next().expect("char boundary");

            // Existing placeholder tokens are atomic; a <hashtag> region is
            // copied verbatim up to and including its closing tag.
            if let Some(m) = PLACEHOLDER_RE.find(slice) {
                let end = if &slice[..m.end()] == HASHTAG_OPEN {
                    match slice[m.end()..].find(HASHTAG_CLOSE) {
                        Some(off) => m.end() + off + HASHTAG_CLOSE.len(),
                        None => slice.len(),
                    }
                } else {
                    m.end()
                };
                for (ci, ch) in slice[..end].char_indices() {
                    copy_char(ch, i + ci, &mut output, &mut origin, acct);
                }
                prev_char = slice[..end].chars().last();
                i += end;
                continue;
            }

            // Hashtags pass through; the tokenizer unpacks them later.
            if let Some(m) = HASHTAG_RE.find(slice) {
                for (ci, ch) in slice[..m.end()].char_indices() {
                    copy_char(ch, i + ci, &mut output, &mut origin, acct);
                }
                prev_char = slice[..m.end()].chars().last();
                i += m.end();
                continue;
            }

            // Longest rule match at this position; ties go to config order.
            let prev_alnum = prev_char.map(|p| p.is_alphanumeric()).unwrap_or(false);
            let mut best: Option<(usize, usize)> = None; // (len, compiled idx)
            for (_, idx) in &self.rules {
                let er = &self.compiled[*idx];
                let len = match &er.re {
                    Some(re) => match re.find(slice) {
                        Some(m) => {
                            let mut end = m.end();
                            if er.rule == Rule::Url {
                                end = trim_url_end(&slice[..end]);
                            }
                            end
                        }
                        None => continue,
                    },
                    None => match self.stopword_match(slice) {
                        Some(len) => len,
                        None => continue,
                    },
                };
                if len == 0 {
                    continue;
                }
                let matched = &slice[..len];
                let first = matched.chars().next().unwrap();
                let last = matched.chars().last().unwrap();
                if first.is_alphanumeric() && prev_alnum {
                    continue;
                }
                if er.end_guard && last.is_alphanumeric() {
                    if let Some(next) = slice[len..].chars().next() {
                        if next.is_alphanumeric() {
                            continue;
                        }
                    }
                }
                if best.map(|(l, _)| len > l).unwrap_or(true) {
                    best = Some((len, *idx));
                }
            }

            if let Some((len, idx)) = best {
                let er = &self.compiled[idx];
                match er.replace {
                    Some(token) => {
                        acct.set(i..i + len, ByteLabel::Consumed(ConsumedBy::Entity(er.rule)));
                        if !output.is_empty() && !output.ends_with(' ') {
                            output.push(' ');
                            origin.push(None);
                        }
                        output.push_str(token);
                        origin.extend(std::iter::repeat(None).take(token.len()));
                        prev_char = Some('>');
                    }
                    None => {
                        let reason = match er.rule {
                            Rule::Rt => DiscardReason::Rt,
                            Rule::Emoticon => DiscardReason::Emoticon,
                            _ => DiscardReason::Stopword,
                        };
                        acct.set(i..i + len, ByteLabel::Discarded(reason));
                        prev_char = Some(' ');
                    }
                }
                i += len;
                continue;
            }

            copy_char(c, i, &mut output, &mut origin, acct);
            prev_char = Some(c);
            i += c.len_utf8();
        }

        // Squeezed output never starts with a space; drop a trailing one.
        if output.ends_with(' ') {
            output.pop();
            origin.pop();
        }

        ScanResult { output, origin }
    }

    /// Whole-word stopword lookup at the slice start (case-insensitive,
    /// apostrophes are part of the word).
    fn stopword_match(&self, slice: &str) -> Option<usize> {
        if self.stopwords.is_empty() {
            return None;
        }
        let mut end = 0;
        let mut chars = slice.char_indices().peekable();
        match chars.peek() {
            Some((_, c)) if is_word_char(*c) => {}
            _ => return None,
        }
        while let Some((idx, c)) = chars.peek().copied() {
            if is_word_char(c) {
                end = idx + c.len_utf8();
                chars.next();
            } else if (c == '\'' || c == '’')
                && slice[idx + c.len_utf8()..]
                    .chars()
                    .next()
                    .map(is_word_char)
                    .unwrap_or(false)
            {
                end = idx + c.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let word = slice[..end].to_lowercase().replace('’', "'");
        if self.stopwords.contains(&word) {
            Some(end)
        } else {
            None
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Trims trailing punctuation a URL match greedily swallowed.
fn trim_url_end(matched: &str) -> usize {
    let mut end = matched.len();
    while end > 0 {
        let c = matched[..end].chars().last().unwrap();
        if matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']' | '}' | '"' | '\'') {
            end -= c.len_utf8();
        } else {
            break;
        }
    }
    end
}

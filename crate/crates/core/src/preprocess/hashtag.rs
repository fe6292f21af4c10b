//! Hashtag unpacking.
//!
//! The body is split on camel-case, letter/digit, and underscore boundaries
//! first. A caseless body (no boundary found) falls back to greedy
//! longest-match segmentation over the lexicon; whatever cannot be segmented
//! is kept whole as a single residue token.

use std::ops::Range;

use super::{Lexicon, HASHTAG_CLOSE, HASHTAG_OPEN};

/// One piece of a hashtag body, in char indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment {
    Word(Range<usize>),
    /// A consumed separator char (underscore).
    Mark(usize),
}

pub(crate) fn split_body(body: &str, lexicon: &Lexicon) -> Vec<Segment> {
    let chars: Vec<char> = body.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }

    // Camel-case / digit / underscore boundaries.
    let mut segments: Vec<Segment> = Vec::new();
    let mut start = 0;
    let mut split_happened = false;
    for i in 0..chars.len() {
        if chars[i] == '_' {
            if start < i {
                segments.push(Segment::Word(start..i));
            }
            segments.push(Segment::Mark(i));
            start = i + 1;
            split_happened = true;
            continue;
        }
        if i > start {
            let prev = chars[i - 1];
            let cur = chars[i];
            let camel = cur.is_uppercase() && prev.is_lowercase();
            let acronym_end = cur.is_uppercase()
                && prev.is_uppercase()
                && chars.get(i + 1).map(|n| n.is_lowercase()).unwrap_or(false);
            let digit_edge = (cur.is_numeric() && prev.is_alphabetic())
                || (cur.is_alphabetic() && prev.is_numeric());
            if camel || acronym_end || digit_edge {
                segments.push(Segment::Word(start..i));
                start = i;
                split_happened = true;
            }
        }
    }
    if start < chars.len() {
        segments.push(Segment::Word(start..chars.len()));
    }

    if split_happened {
        return segments;
    }

    // Caseless body: greedy longest-match over the lexicon.
    let lowered: Vec<String> = chars.iter().map(|c| c.to_lowercase().collect()).collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let max_len = lexicon.max_word_len().min(chars.len() - pos);
        let mut matched = None;
        let mut candidate = String::new();
        let mut lens = Vec::with_capacity(max_len);
        for take in 1..=max_len {
            candidate.push_str(&lowered[pos + take - 1]);
            lens.push(candidate.len());
        }
        for take in (1..=max_len).rev() {
            if lexicon.contains(&candidate[..lens[take - 1]]) {
                matched = Some(take);
                break;
            }
        }
        match matched {
            Some(take) => {
                out.push(Segment::Word(pos..pos + take));
                pos += take;
            }
            None => {
                // Unsegmentable residue stays whole.
                out.push(Segment::Word(pos..chars.len()));
                break;
            }
        }
    }
    out
}

/// Unpacks a `#hashtag` token into an open tag, its lowercased constituent
/// words, and a close tag. Worst case the body comes back whole between the
/// tags.
pub fn unpack_hashtag(token: &str, lexicon: &Lexicon) -> Vec<String> {
    debug_assert!(token.starts_with('#'), "hashtag token must start with '#'");
    let body: String = token.chars().skip(1).collect();
    let chars: Vec<char> = body.chars().collect();
    let mut out = vec![HASHTAG_OPEN.to_string()];
    for seg in split_body(&body, lexicon) {
        if let Segment::Word(r) = seg {
            out.push(chars[r].iter().collect::<String>().to_lowercase());
        }
    }
    out.push(HASHTAG_CLOSE.to_string());
    out
}

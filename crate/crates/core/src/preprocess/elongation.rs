//! Elongated-word reduction.
//!
//! Runs of the same letter longer than two collapse to at most two; runs are
//! further collapsed to a single letter when that produces a lexicon word.
//! Candidates are tried in a fixed order that prefers keeping doubled
//! letters, so the reduction is deterministic: for "gooooal" the candidate
//! "gooal" is tested before "goal".

use super::Lexicon;

/// Longest candidate search: with more than this many long runs only the
/// all-doubles collapse is produced.
const MAX_SEARCHED_RUNS: usize = 8;

/// Collapses elongated runs. Returns `None` when the token has no run longer
/// than two; otherwise the reduced string plus a keep-mask over the original
/// chars (false = char removed).
pub(crate) fn reduce_detail(token: &str, lexicon: &Lexicon) -> Option<(String, Vec<bool>)> {
    let chars: Vec<char> = token.chars().collect();
    // (start, len) per run of identical chars.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut j = i + 1;
        while j < chars.len() && chars[j] == chars[i] {
            j += 1;
        }
        runs.push((i, j - i));
        i = j;
    }
    let long: Vec<usize> = (0..runs.len()).filter(|r| runs[*r].1 > 2).collect();
    if long.is_empty() {
        return None;
    }

    let build = |mask: u32| -> (String, Vec<bool>) {
        let mut text = String::with_capacity(chars.len());
        let mut keep = vec![false; chars.len()];
        for (ri, (start, len)) in runs.iter().enumerate() {
            let keep_n = match long.iter().position(|l| *l == ri) {
                Some(bit) => {
                    if mask & (1 << bit) != 0 {
                        1
                    } else {
                        2
                    }
                }
                None => *len,
            };
            for k in 0..keep_n.min(*len) {
                text.push(chars[start + k]);
                keep[start + k] = true;
            }
        }
        (text, keep)
    };

    if long.len() <= MAX_SEARCHED_RUNS {
        for mask in 0..(1u32 << long.len()) {
            let (text, keep) = build(mask);
            if lexicon.contains(&text) {
                return Some((text, keep));
            }
        }
    }
    // No lexicon hit: keep the two-letter collapse.
    Some(build(0))
}

/// Collapses elongated runs in `token`. The boolean reports whether any
/// reduction occurred (the elongation annotation).
pub fn reduce_elongated(token: &str, lexicon: &Lexicon) -> (String, bool) {
    match reduce_detail(token, lexicon) {
        Some((text, _)) => (text, true),
        None => (token.to_string(), false),
    }
}

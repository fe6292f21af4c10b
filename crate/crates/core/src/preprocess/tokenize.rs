//! Whitespace/punctuation tokenizer over normalized text.
//!
//! Recognizes three token shapes: registered placeholder tags (`<url>`,
//! `</hashtag>`, ...), hashtags (`#` plus word chars), and words (word chars
//! with internal apostrophes). Everything else separates tokens.

use std::ops::Range;

use super::scanner::PLACEHOLDER_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawTokKind {
    Placeholder,
    Hashtag,
    Word,
}

#[derive(Debug, Clone)]
pub(crate) struct RawTok {
    pub text: String,
    pub range: Range<usize>, // byte range in the normalized text
    pub kind: RawTokKind,
    pub in_hashtag: bool,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Parses a placeholder tag at the slice start; returns (byte len, name,
/// is_close) when the tag name is registered.
fn placeholder_at(slice: &str) -> Option<(usize, &str, bool)> {
    let rest = slice.strip_prefix('<')?;
    let (rest, close) = match rest.strip_prefix('/') {
        Some(r) => (r, true),
        None => (rest, false),
    };
    let name_len = rest.bytes().take_while(|b| b.is_ascii_lowercase()).count();
    if name_len == 0 || !rest[name_len..].starts_with('>') {
        return None;
    }
    let name = &rest[..name_len];
    if !PLACEHOLDER_NAMES.contains(&name) {
        return None;
    }
    let total = 1 + usize::from(close) + name_len + 1;
    Some((total, name, close))
}

pub(crate) fn tokenize(text: &str) -> Vec<RawTok> {
    let mut toks = Vec::new();
    let mut in_hashtag = false;
    let mut i = 0;
    while i < text.len() {
        let slice = &text[i..];
        let c = slice.chars().next().expect("char boundary");

        if let Some((len, name, close)) = placeholder_at(slice) {
            if name == "hashtag" && !close {
                in_hashtag = true;
            }
            toks.push(RawTok {
                text: slice[..len].to_string(),
                range: i..i + len,
                kind: RawTokKind::Placeholder,
                in_hashtag,
            });
            if name == "hashtag" && close {
                in_hashtag = false;
            }
            i += len;
            continue;
        }

        if c == '#' {
            let body_len: usize = slice[1..]
                .char_indices()
                .take_while(|(_, ch)| is_word_char(*ch))
                .map(|(_, ch)| ch.len_utf8())
                .sum();
            if body_len > 0 {
                let len = 1 + body_len;
                toks.push(RawTok {
                    text: slice[..len].to_string(),
                    range: i..i + len,
                    kind: RawTokKind::Hashtag,
                    in_hashtag,
                });
                i += len;
                continue;
            }
        }

        if is_word_char(c) {
            let mut end = 0;
            let mut chars = slice.char_indices().peekable();
            while let Some((idx, ch)) = chars.peek().copied() {
                if is_word_char(ch) {
                    end = idx + ch.len_utf8();
                    chars.next();
                } else if (ch == '\'' || ch == '’')
                    && slice[idx + ch.len_utf8()..]
                        .chars()
                        .next()
                        .map(is_word_char)
                        .unwrap_or(false)
                {
                    end = idx + ch.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            toks.push(RawTok {
                text: slice[..end].to_string(),
                range: i..i + end,
                kind: RawTokKind::Word,
                in_hashtag,
            });
            i += end;
            continue;
        }

        i += c.len_utf8();
    }
    toks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(input: &str) -> Vec<String> {
        tokenize(input).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn words_and_punctuation() {
        assert_eq!(texts("hello, world!"), vec!["hello", "world"]);
        assert_eq!(texts("don't stop"), vec!["don't", "stop"]);
        assert_eq!(texts(""), Vec::<String>::new());
    }

    #[test]
    fn placeholders_are_atomic() {
        assert_eq!(texts("(<percent>)"), vec!["<percent>"]);
        assert_eq!(texts("<user> check <url>"), vec!["<user>", "check", "<url>"]);
        // Unregistered tags are not placeholders.
        assert_eq!(texts("<blah> x"), vec!["blah", "x"]);
    }

    #[test]
    fn hashtag_region_state() {
        let toks = tokenize("<hashtag> go go </hashtag> goal");
        assert!(toks[1].in_hashtag && toks[2].in_hashtag);
        assert!(!toks[4].in_hashtag);
        assert_eq!(toks[4].text, "goal");
    }

    #[test]
    fn hashtag_tokens() {
        let toks = tokenize("see #GoGoGo now");
        assert_eq!(toks[1].kind, RawTokKind::Hashtag);
        assert_eq!(toks[1].text, "#GoGoGo");
    }
}

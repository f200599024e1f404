//! Comment normalisation: lowercase, mask URLs and user mentions, split on
//! non-alphanumeric boundaries, drop stop words, stem.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use rust_stemmers::{Algorithm, Stemmer};

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

const STOP_WORDS: &str = include_str!("../../data/stopwords_en.txt");

struct Preprocessor {
    url: Regex,
    mention: Regex,
    stop: HashSet<&'static str>,
    stemmer: Stemmer,
}

fn preprocessor() -> &'static Preprocessor {
    static P: OnceLock<Preprocessor> = OnceLock::new();
    P.get_or_init(|| Preprocessor {
        url: Regex::new(r"(?:https?://|www\.)\S+").unwrap(),
        mention: Regex::new(r"/?\bu/[a-z0-9_-]+|@[a-z0-9_]+").unwrap(),
        stop: STOP_WORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect(),
        stemmer: Stemmer::create(Algorithm::English),
    })
}

pub fn is_stop_word(word: &str) -> bool {
    preprocessor().stop.contains(word)
}

/// Splits on anything that is not alphanumeric, keeping the mask tokens
/// intact.
fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            out.push(&text[s..i]);
        }
        if c == '<' {
            for mask in [URL_TOKEN, USER_TOKEN] {
                if text[i..].starts_with(mask) {
                    out.push(&text[i..i + mask.len()]);
                    // skip the rest of the mask
                    for _ in 1..mask.chars().count() {
                        chars.next();
                    }
                    break;
                }
            }
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

pub fn preprocess(body: &str) -> Vec<String> {
    let p = preprocessor();
    let lower = body.to_lowercase();
    let masked = p.url.replace_all(&lower, " <url> ");
    let masked = p.mention.replace_all(&masked, " <user> ");
    tokenize(&masked)
        .into_iter()
        .filter(|t| !p.stop.contains(t))
        .map(|t| {
            if t == URL_TOKEN || t == USER_TOKEN {
                t.to_owned()
            } else {
                p.stemmer.stem(t).into_owned()
            }
        })
        .collect()
}

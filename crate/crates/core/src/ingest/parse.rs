//! Line-level parsing of newline-delimited comment dumps.
//!
//! Field names follow the public Reddit archive schema. Extra fields are
//! ignored, and `created_utc` is accepted either as a JSON number or as a
//! decimal string (older archive months store it quoted).

use std::fmt;

use serde::Deserialize;
use serde_json::Value;

/// One authored comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub id: String,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    DeletedAuthor,
    MissingField(&'static str),
    BlankLine,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::DeletedAuthor => f.write_str("deleted-author"),
            SkipReason::MissingField(field) => write!(f, "missing-{field}"),
            SkipReason::BlankLine => f.write_str("blank-line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedLine {
    Record(CommentRecord),
    Skip(SkipReason),
}

/// A malformed line. Recoverable: callers count it and move on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError(pub String);

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Deserialize)]
struct RawComment {
    author: Option<String>,
    subreddit: Option<String>,
    created_utc: Option<Value>,
    id: Option<String>,
    body: Option<String>,
}

const DELETED_AUTHORS: [&str; 2] = ["[deleted]", "[removed]"];

pub fn parse_comment_line(raw_line: &str) -> Result<ParsedLine, LineError> {
    let line = raw_line.trim();
    if line.is_empty() {
        return Ok(ParsedLine::Skip(SkipReason::BlankLine));
    }
    let raw: RawComment = serde_json::from_str(line).map_err(|e| LineError(e.to_string()))?;

    let author = match non_empty(raw.author) {
        Some(a) => a,
        None => return Ok(ParsedLine::Skip(SkipReason::MissingField("author"))),
    };
    if DELETED_AUTHORS.contains(&author.as_str()) {
        return Ok(ParsedLine::Skip(SkipReason::DeletedAuthor));
    }
    let Some(subreddit) = non_empty(raw.subreddit) else {
        return Ok(ParsedLine::Skip(SkipReason::MissingField("subreddit")));
    };
    let Some(id) = non_empty(raw.id) else {
        return Ok(ParsedLine::Skip(SkipReason::MissingField("id")));
    };
    let created_utc = match raw.created_utc {
        None | Some(Value::Null) => {
            return Ok(ParsedLine::Skip(SkipReason::MissingField("created_utc")))
        }
        Some(v) => timestamp(&v).ok_or_else(|| LineError(format!("bad created_utc: {v}")))?,
    };

    Ok(ParsedLine::Record(CommentRecord {
        author,
        subreddit,
        created_utc,
        id,
        body: raw.body.unwrap_or_default(),
    }))
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.is_empty())
}

fn timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_fields_directly() {
        let line = r#"{"author":"u1","subreddit":"Honda","created_utc":1500000000,"id":"c1","body":"tr*nny is dying"}"#;
        let parsed = parse_comment_line(line).unwrap();
        assert_eq!(
            parsed,
            ParsedLine::Record(CommentRecord {
                author: "u1".into(),
                subreddit: "Honda".into(),
                created_utc: 1_500_000_000,
                id: "c1".into(),
                body: "tr*nny is dying".into(),
            })
        );
    }

    #[test]
    fn deleted_and_removed_authors_are_skipped() {
        let line = r#"{"author":"[deleted]","subreddit":"gay","id":"c2","created_utc":1,"body":"x"}"#;
        assert_eq!(
            parse_comment_line(line).unwrap(),
            ParsedLine::Skip(SkipReason::DeletedAuthor)
        );
        let line = r#"{"author":"[removed]","subreddit":"gay","id":"c3","created_utc":1}"#;
        assert_eq!(
            parse_comment_line(line).unwrap(),
            ParsedLine::Skip(SkipReason::DeletedAuthor)
        );
    }

    #[test]
    fn malformed_line_is_an_error_not_a_panic() {
        assert!(parse_comment_line("not json {{{").is_err());
        assert!(parse_comment_line("[1,2,3]").is_err());
    }

    #[test]
    fn missing_fields_are_skips() {
        let line = r#"{"author":"u1","created_utc":1,"id":"c1"}"#;
        assert_eq!(
            parse_comment_line(line).unwrap(),
            ParsedLine::Skip(SkipReason::MissingField("subreddit"))
        );
        let line = r#"{"author":null,"subreddit":"a","created_utc":1,"id":"c1"}"#;
        assert_eq!(
            parse_comment_line(line).unwrap(),
            ParsedLine::Skip(SkipReason::MissingField("author"))
        );
        assert_eq!(
            parse_comment_line("   ").unwrap(),
            ParsedLine::Skip(SkipReason::BlankLine)
        );
    }

    #[test]
    fn string_timestamps_and_extra_fields() {
        let line = r#"{"author":"u1","subreddit":"a","created_utc":"1134365188","id":"c1","score":3,"gilded":0}"#;
        match parse_comment_line(line).unwrap() {
            ParsedLine::Record(r) => {
                assert_eq!(r.created_utc, 1_134_365_188);
                assert_eq!(r.body, "");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

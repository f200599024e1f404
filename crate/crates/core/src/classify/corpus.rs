use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four-way gold annotation of a slur usage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GoldLabel {
    #[serde(rename = "DEG")]
    Derogatory,
    #[serde(rename = "NDNA")]
    NonDerogatoryNonAppropriative,
    #[serde(rename = "APR")]
    Appropriative,
    #[serde(rename = "HOM")]
    Homonym,
}

impl GoldLabel {
    pub const ALL: [GoldLabel; 4] = [
        GoldLabel::Derogatory,
        GoldLabel::NonDerogatoryNonAppropriative,
        GoldLabel::Appropriative,
        GoldLabel::Homonym,
    ];

    pub fn code(self) -> &'static str {
        match self {
            GoldLabel::Derogatory => "DEG",
            GoldLabel::NonDerogatoryNonAppropriative => "NDNA",
            GoldLabel::Appropriative => "APR",
            GoldLabel::Homonym => "HOM",
        }
    }

    pub fn binary(self) -> BinaryLabel {
        match self {
            GoldLabel::Derogatory => BinaryLabel::Deg,
            _ => BinaryLabel::Ndg,
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for GoldLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GoldLabel::ALL
            .into_iter()
            .find(|l| l.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown gold label {s:?}")))
    }
}

/// Binary task classes: derogatory vs. everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryLabel {
    #[serde(rename = "DEG")]
    Deg,
    #[serde(rename = "NDG")]
    Ndg,
}

impl BinaryLabel {
    pub fn is_deg(self) -> bool {
        self == BinaryLabel::Deg
    }

    pub fn from_deg(deg: bool) -> Self {
        if deg {
            BinaryLabel::Deg
        } else {
            BinaryLabel::Ndg
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryLabel::Deg => "DEG",
            BinaryLabel::Ndg => "NDG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledComment {
    pub id: String,
    pub subreddit: String,
    pub author: String,
    pub created_utc: Option<i64>,
    pub slur: String,
    pub gold: GoldLabel,
    pub body: String,
}

impl LabeledComment {
    pub fn binary_gold(&self) -> BinaryLabel {
        self.gold.binary()
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: String,
    subreddit: String,
    author: String,
    created_utc: Option<i64>,
    slur: String,
    gold_label: String,
    body: String,
}

/// Reads a corpus CSV with header `id,subreddit,author,created_utc,slur,gold_label,body`.
pub fn read_corpus<R: Read>(r: R) -> Result<Vec<LabeledComment>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader.headers()?.clone();
    for required in ["id", "subreddit", "author", "created_utc", "slur", "gold_label", "body"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Config(format!("corpus CSV is missing column {required:?}")));
        }
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in reader.deserialize() {
        let row: CsvRow = row?;
        if !seen.insert(row.id.clone()) {
            return Err(Error::Config(format!("duplicate comment id {:?}", row.id)));
        }
        out.push(LabeledComment {
            gold: row.gold_label.parse()?,
            id: row.id,
            subreddit: row.subreddit,
            author: row.author,
            created_utc: row.created_utc,
            slur: row.slur,
            body: row.body,
        });
    }
    Ok(out)
}

pub fn write_corpus<W: Write>(corpus: &[LabeledComment], w: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::NonNumeric)
        .from_writer(w);
    for c in corpus {
        writer.serialize(CsvRow {
            id: c.id.clone(),
            subreddit: c.subreddit.clone(),
            author: c.author.clone(),
            created_utc: c.created_utc,
            slur: c.slur.clone(),
            gold_label: c.gold.code().to_owned(),
            body: c.body.clone(),
        })?;
    }
    writer.flush().map_err(|e| Error::io("corpus", e))?;
    Ok(())
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{parse_comment_line, ActivityTable, ParsedLine};
use crate::error::{Error, Result};

const MAX_ERROR_SAMPLES: usize = 10;

/// Counters for one ingest run. `lines == records + skipped + errors`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files: usize,
    pub lines: u64,
    pub records: u64,
    pub skipped: BTreeMap<String, u64>,
    pub errors: u64,
    pub error_samples: Vec<String>,
    pub bot_rows_removed: u64,
    pub bot_comments_removed: u64,
    pub users: usize,
    pub subreddits: usize,
    pub active_users: usize,
    pub retained_subreddits: usize,
    pub retained_users: usize,
    pub warnings: Vec<String>,
}

impl IngestReport {
    pub fn skipped_total(&self) -> u64 {
        self.skipped.values().sum()
    }

    pub fn merge(&mut self, other: IngestReport) {
        self.files += other.files;
        self.lines += other.lines;
        self.records += other.records;
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_insert(0) += v;
        }
        self.errors += other.errors;
        for s in other.error_samples {
            if self.error_samples.len() < MAX_ERROR_SAMPLES {
                self.error_samples.push(s);
            }
        }
        self.warnings.extend(other.warnings);
    }
}

/// Expands glob patterns (plain paths are patterns too) into a sorted,
/// de-duplicated file list. A pattern matching nothing is an error.
pub fn expand_inputs<S: AsRef<str>>(patterns: &[S]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for pat in patterns {
        let pat = pat.as_ref();
        let paths = glob::glob(pat).map_err(|e| Error::Config(format!("bad glob {pat:?}: {e}")))?;
        let before = out.len();
        for p in paths {
            let p = p.map_err(|e| { let path = e.path().to_path_buf(); Error::io(path, e.into()) })?;
            if p.is_file() {
                out.push(p);
            }
        }
        if out.len() == before {
            return Err(Error::Config(format!("input pattern {pat:?} matched no files")));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Accumulates one stream. Parse errors are counted, never fatal; I/O
/// errors are.
pub fn ingest_reader<R: BufRead>(reader: R, source: &Path) -> Result<(ActivityTable, IngestReport)> {
    let mut table = ActivityTable::new();
    let mut report = IngestReport::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        report.lines += 1;
        match parse_comment_line(&line) {
            Ok(ParsedLine::Record(r)) => {
                report.records += 1;
                table.record(&r.author, &r.subreddit);
            }
            Ok(ParsedLine::Skip(reason)) => {
                *report.skipped.entry(reason.to_string()).or_insert(0) += 1;
            }
            Err(e) => {
                report.errors += 1;
                if report.error_samples.len() < MAX_ERROR_SAMPLES {
                    report
                        .error_samples
                        .push(format!("{}:{}: {e}", source.display(), lineno + 1));
                }
            }
        }
    }
    Ok((table, report))
}

fn open_dump(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    let inner: Box<dyn Read + Send> = if gz {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 20, inner)))
}

/// Ingests each file as an independent shard in parallel, then merges the
/// shards in path order. The merged table is canonicalised so that ids do
/// not depend on scheduling.
pub fn ingest_paths(paths: &[PathBuf]) -> Result<(ActivityTable, IngestReport)> {
    let shards: Vec<Result<(ActivityTable, IngestReport)>> = paths
        .par_iter()
        .map(|p| {
            let (t, mut r) = ingest_reader(open_dump(p)?, p)?;
            r.files = 1;
            log::debug!("{}: {} lines, {} records", p.display(), r.lines, r.records);
            Ok((t, r))
        })
        .collect();

    let mut table = ActivityTable::new();
    let mut report = IngestReport::default();
    for shard in shards {
        let (t, r) = shard?;
        table.merge(t);
        report.merge(r);
    }
    Ok((table.canonicalize(), report))
}

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Candidate, EmbeddingSpace};
use crate::error::{Error, Result};

/// `left + right ≈ expected`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionTest {
    pub left: String,
    pub right: String,
    pub expected: String,
}

/// `a : b :: c : expected`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyTest {
    pub a: String,
    pub b: String,
    pub c: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SuiteTest {
    Composition(CompositionTest),
    Analogy(AnalogyTest),
}

impl SuiteTest {
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            SuiteTest::Composition(t) => vec![&t.left, &t.right],
            SuiteTest::Analogy(t) => vec![&t.a, &t.b, &t.c],
        }
    }

    pub fn expected(&self) -> &str {
        match self {
            SuiteTest::Composition(t) => &t.expected,
            SuiteTest::Analogy(t) => &t.expected,
        }
    }

    fn run(&self, space: &EmbeddingSpace, k: usize) -> Result<Vec<Candidate>> {
        match self {
            SuiteTest::Composition(t) => space.compose(&t.left, &t.right, k),
            SuiteTest::Analogy(t) => space.analogy(&t.a, &t.b, &t.c, k),
        }
    }
}

impl From<CompositionTest> for SuiteTest {
    fn from(t: CompositionTest) -> Self {
        SuiteTest::Composition(t)
    }
}

impl From<AnalogyTest> for SuiteTest {
    fn from(t: AnalogyTest) -> Self {
        SuiteTest::Analogy(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Composition,
    Analogy,
}

impl std::str::FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "composition" => Ok(SuiteKind::Composition),
            "analogy" => Ok(SuiteKind::Analogy),
            other => Err(Error::Config(format!(
                "unknown suite type {other:?} (expected composition or analogy)"
            ))),
        }
    }
}

/// Parses a suite TSV: `left<TAB>right<TAB>expected` for composition,
/// `a<TAB>b<TAB>c<TAB>expected` for analogy. Blank lines and lines starting
/// with `#` are ignored. `path` is only used in diagnostics.
pub fn read_suite<R: BufRead>(r: R, kind: SuiteKind, path: &Path) -> Result<Vec<SuiteTest>> {
    let width = match kind {
        SuiteKind::Composition => 3,
        SuiteKind::Analogy => 4,
    };
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        if f.len() != width || f.iter().any(|s| s.is_empty()) {
            return Err(Error::format(
                path,
                k + 1,
                format!("expected {width} tab-separated names"),
            ));
        }
        if f[..width - 1].contains(&f[width - 1]) {
            return Err(Error::format(path, k + 1, "expected answer repeats a query input"));
        }
        let test = match kind {
            SuiteKind::Composition => SuiteTest::Composition(CompositionTest {
                left: f[0].into(),
                right: f[1].into(),
                expected: f[2].into(),
            }),
            SuiteKind::Analogy => SuiteTest::Analogy(AnalogyTest {
                a: f[0].into(),
                b: f[1].into(),
                c: f[2].into(),
                expected: f[3].into(),
            }),
        };
        out.push(test);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: SuiteTest,
    /// 1-based position of the expected answer among `candidates`.
    pub rank: Option<usize>,
    pub hit_at_1: bool,
    pub hit_at_5: bool,
    pub hit_at_k: bool,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSkip {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub suite: String,
    pub k: usize,
    pub total: usize,
    pub evaluated: usize,
    pub hits_at_1: usize,
    pub hits_at_5: usize,
    pub hits_at_k: usize,
    pub skips: usize,
    pub skipped: Vec<SuiteSkip>,
    pub results: Vec<TestOutcome>,
}

impl EvalReport {
    /// hits@5 over evaluated (non-skipped) tests; 0 for an empty suite.
    pub fn rate_at_5(&self) -> f64 {
        ratio(self.hits_at_5, self.evaluated)
    }

    pub fn rate_at_1(&self) -> f64 {
        ratio(self.hits_at_1, self.evaluated)
    }

    pub fn rate_at_k(&self) -> f64 {
        ratio(self.hits_at_k, self.evaluated)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Runs every test, keeping `max(k, 5)` candidates each. Tests naming a
/// subreddit outside the space are skipped and recorded, never fatal.
pub fn run_eval_suite(
    name: &str,
    tests: &[SuiteTest],
    space: &EmbeddingSpace,
    k: usize,
) -> Result<EvalReport> {
    let keep = k.max(5);
    let mut report = EvalReport {
        suite: name.to_owned(),
        k,
        total: tests.len(),
        evaluated: 0,
        hits_at_1: 0,
        hits_at_5: 0,
        hits_at_k: 0,
        skips: 0,
        skipped: Vec::new(),
        results: Vec::new(),
    };
    for (index, test) in tests.iter().enumerate() {
        let missing: Vec<&str> = test
            .inputs()
            .into_iter()
            .chain(std::iter::once(test.expected()))
            .filter(|n| !space.contains(n))
            .collect();
        if !missing.is_empty() {
            report.skips += 1;
            report.skipped.push(SuiteSkip {
                index,
                reason: format!("not in vocabulary: {}", missing.join(", ")),
            });
            continue;
        }
        let candidates = match test.run(space, keep) {
            Ok(c) => c,
            Err(Error::ZeroNorm) => {
                report.skips += 1;
                report.skipped.push(SuiteSkip {
                    index,
                    reason: "query vector has zero norm".into(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let rank = candidates
            .iter()
            .position(|c| c.name == test.expected())
            .map(|p| p + 1);
        let within = |n: usize| rank.is_some_and(|r| r <= n);
        let outcome = TestOutcome {
            test: test.clone(),
            rank,
            hit_at_1: within(1),
            hit_at_5: within(5),
            hit_at_k: within(k),
            candidates,
        };
        report.evaluated += 1;
        report.hits_at_1 += usize::from(outcome.hit_at_1);
        report.hits_at_5 += usize::from(outcome.hit_at_5);
        report.hits_at_k += usize::from(outcome.hit_at_k);
        report.results.push(outcome);
    }
    Ok(report)
}

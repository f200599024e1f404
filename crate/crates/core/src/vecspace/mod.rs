//! Similarity, neighbour, composition, and analogy queries over an
//! embedding space, plus evaluation suites.
//!
//! Vectors are L2-normalised once when the space is built, so every score
//! is a dot product of unit vectors. Query inputs never appear among their
//! own candidates, and equal scores are ordered by name.

mod suite;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

pub use suite::{
    read_suite, run_eval_suite, AnalogyTest, CompositionTest, EvalReport, SuiteKind, SuiteSkip,
    SuiteTest, TestOutcome,
};

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity. Zero-norm inputs are an error rather than 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub score: f64,
}

/// Immutable, query-ready embedding space.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    unit: Vec<f64>,
}

impl EmbeddingSpace {
    pub fn new(matrix: &EmbeddingMatrix) -> Result<Self> {
        let dim = matrix.dim();
        let mut unit = Vec::with_capacity(matrix.data().len());
        let mut index = HashMap::with_capacity(matrix.len());
        for (i, name) in matrix.names().iter().enumerate() {
            let v = matrix.vector(i);
            let n = norm(v);
            if n == 0.0 {
                return Err(Error::Config(format!("subreddit {name} has a zero vector")));
            }
            unit.extend(v.iter().map(|x| x / n));
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate subreddit {name} in embeddings")));
            }
        }
        Ok(EmbeddingSpace {
            names: matrix.names().to_vec(),
            index,
            dim,
            unit,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn unit(&self, i: usize) -> &[f64] {
        &self.unit[i * self.dim..(i + 1) * self.dim]
    }

    /// Unit vector of `name`.
    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        Ok(self.unit(self.lookup(name)?))
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownName {
            name: name.to_owned(),
            suggestions: self.suggest(name, 5),
        })
    }

    /// Closest vocabulary names by case-insensitive Jaro–Winkler similarity.
    pub fn suggest(&self, name: &str, n: usize) -> Vec<String> {
        let lower = name.to_lowercase();
        let mut scored: Vec<(f64, &String)> = self
            .names
            .iter()
            .map(|c| (strsim::jaro_winkler(&lower, &c.to_lowercase()), c))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(n).map(|(_, c)| c.clone()).collect()
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (i, j) = (self.lookup(a)?, self.lookup(b)?);
        Ok(dot(self.unit(i), self.unit(j)).clamp(-1.0, 1.0))
    }

    /// Exact scan: top `k` vocabulary entries by cosine to `query`, skipping
    /// the ids in `exclude`. Descending score, ties by name.
    pub fn rank(&self, query: &[f64], k: usize, exclude: &HashSet<usize>) -> Result<Vec<Candidate>> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: query.len(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let n = norm(query);
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let q: Vec<f64> = query.iter().map(|x| x / n).collect();
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|i| !exclude.contains(i))
            .map(|i| (dot(&q, self.unit(i)), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then_with(|| self.names[a.1].cmp(&self.names[b.1]))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(s, i)| Candidate {
                name: self.names[i].clone(),
                score: s,
            })
            .collect())
    }

    fn exclusion(&self, names: &[&str]) -> Result<HashSet<usize>> {
        names.iter().map(|n| self.lookup(n)).collect()
    }

    /// Top `k` neighbours of `name`, excluding `name` itself and any of
    /// `exclude` (unknown names in `exclude` are ignored).
    pub fn nearest_neighbors(&self, name: &str, k: usize, exclude: &[&str]) -> Result<Vec<Candidate>> {
        let i = self.lookup(name)?;
        let mut skip: HashSet<usize> = exclude.iter().filter_map(|n| self.index.get(*n).copied()).collect();
        skip.insert(i);
        self.rank(self.unit(i), k, &skip)
    }

    /// Ranks by cosine to `left + right`, excluding both inputs.
    pub fn compose(&self, left: &str, right: &str, k: usize) -> Result<Vec<Candidate>> {
        let skip = self.exclusion(&[left, right])?;
        let (l, r) = (self.unit(self.lookup(left)?), self.unit(self.lookup(right)?));
        let v: Vec<f64> = l.iter().zip(r).map(|(a, b)| a + b).collect();
        self.rank(&v, k, &skip)
    }

    /// Solves `a : b :: c : ?` by ranking against `b − a + c`, excluding all
    /// three inputs.
    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<Vec<Candidate>> {
        let skip = self.exclusion(&[a, b, c])?;
        let (va, vb, vc) = (
            self.unit(self.lookup(a)?),
            self.unit(self.lookup(b)?),
            self.unit(self.lookup(c)?),
        );
        let v: Vec<f64> = (0..self.dim).map(|d| vb[d] - va[d] + vc[d]).collect();
        self.rank(&v, k, &skip)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

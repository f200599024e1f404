use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::features::SparseVector;

pub const MAX_NGRAM: usize = 3;

/// Word n-grams of orders 1..=`max_n`, joined with single spaces.
pub fn ngrams(tokens: &[String], max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for w in tokens.windows(n) {
            out.push(w.join(" "));
        }
    }
    out
}

/// TF-IDF over 1–3-grams with smoothed idf `ln((1+N)/(1+df)) + 1`; each
/// transformed document is L2-normalised. Term ids follow lexicographic
/// order of the terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    vocab: HashMap<String, u32>,
    terms: Vec<String>,
    df: Vec<usize>,
    idf: Vec<f64>,
    n_docs: usize,
}

impl Vectorizer {
    /// Fits on already-preprocessed token sequences.
    pub fn fit<T: AsRef<[String]>>(docs: &[T]) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let unique: BTreeSet<String> = ngrams(doc.as_ref(), MAX_NGRAM).into_iter().collect();
            for term in unique {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let n_docs = docs.len();
        let mut vocab = HashMap::with_capacity(df.len());
        let mut terms = Vec::with_capacity(df.len());
        let mut dfs = Vec::with_capacity(df.len());
        let mut idf = Vec::with_capacity(df.len());
        for (id, (term, d)) in df.into_iter().enumerate() {
            vocab.insert(term.clone(), id as u32);
            terms.push(term);
            idf.push(((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0);
            dfs.push(d);
        }
        Vectorizer {
            vocab,
            terms,
            df: dfs,
            idf,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.vocab.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.term_id(term).map(|i| self.df[i as usize])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_id(term).map(|i| self.idf[i as usize])
    }

    /// Raw counts × idf, L2-normalised. Terms outside the vocabulary are
    /// dropped, so an all-unseen document maps to the empty vector.
    pub fn transform(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for g in ngrams(tokens, MAX_NGRAM) {
            if let Some(&id) = self.vocab.get(&g) {
                *counts.entry(id).or_insert(0.0) += 1.0;
            }
        }
        let mut v = SparseVector::with_capacity(counts.len());
        for (id, tf) in counts {
            v.push(id, tf * self.idf[id as usize]);
        }
        v.normalize();
        v
    }
}

use std::borrow::Borrow;
use std::collections::BTreeMap;

use super::context::ContextBlock;
use super::tfidf::Vectorizer;

/// Sparse row with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn with_capacity(n: usize) -> Self {
        SparseVector {
            indices: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    /// Appends an entry; `index` must exceed every index already present.
    pub fn push(&mut self, index: u32, value: f64) {
        assert!(
            self.indices.last().map_or(true, |&l| index > l),
            "sparse indices must be strictly increasing"
        );
        self.indices.push(index);
        self.values.push(value);
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, index: u32) -> Option<f64> {
        self.indices
            .binary_search(&index)
            .ok()
            .map(|k| self.values[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }

    /// Scales to unit L2 norm; the zero vector is left unchanged.
    pub fn normalize(&mut self) {
        let n = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
    }
}

/// n-gram block followed by a context block. The context block's feature
/// ids start right after the n-gram vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    vectorizer: Vectorizer,
    context: BTreeMap<String, u32>,
}

impl FeatureSpace {
    /// Vocabulary of both blocks comes from the training rows only.
    pub fn fit<T: AsRef<[String]>, C: Borrow<ContextBlock>>(tokens: &[T], contexts: &[C]) -> Self {
        let vectorizer = Vectorizer::fit(tokens);
        let offset = vectorizer.len() as u32;
        let mut keys: Vec<&str> = contexts
            .iter()
            .flat_map(|c| c.borrow().features.iter().map(|(k, _)| k.as_str()))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let context = keys
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k.to_owned(), offset + i as u32))
            .collect();
        FeatureSpace {
            vectorizer,
            context,
        }
    }

    pub fn vectorizer(&self) -> &Vectorizer {
        &self.vectorizer
    }

    pub fn context_vocab(&self) -> &BTreeMap<String, u32> {
        &self.context
    }

    pub fn dim(&self) -> usize {
        self.vectorizer.len() + self.context.len()
    }

    /// Context features unknown to the training vocabulary are dropped.
    pub fn transform(&self, tokens: &[String], context: &ContextBlock) -> SparseVector {
        let mut row = self.vectorizer.transform(tokens);
        let mut ctx: Vec<(u32, f64)> = context
            .features
            .iter()
            .filter_map(|(k, w)| self.context.get(k).map(|&id| (id, *w)))
            .collect();
        ctx.sort_unstable_by_key(|&(id, _)| id);
        for (id, w) in ctx {
            row.push(id, w);
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn block(pairs: &[(&str, f64)]) -> ContextBlock {
        ContextBlock {
            features: pairs.iter().map(|(k, w)| (k.to_string(), *w)).collect(),
            fell_back: false,
        }
    }

    #[test]
    fn sparse_basics() {
        let mut v = SparseVector::default();
        v.push(1, 3.0);
        v.push(4, 4.0);
        assert_eq!(v.dot(&[0.0, 1.0, 0.0, 0.0, 2.0]), 11.0);
        v.normalize();
        assert_eq!(v.get(4), Some(0.8));
        assert_eq!(v.get(2), None);
    }

    #[test]
    #[should_panic]
    fn sparse_rejects_unsorted_push() {
        let mut v = SparseVector::default();
        v.push(3, 1.0);
        v.push(3, 1.0);
    }

    #[test]
    fn empty_context_matches_plain_vectorizer() {
        let docs = vec![toks("a b"), toks("b c")];
        let empty = vec![ContextBlock::default(); 2];
        let fs = FeatureSpace::fit(&docs, &empty);
        let v = Vectorizer::fit(&docs);
        assert_eq!(fs.dim(), v.len());
        for d in &docs {
            assert_eq!(fs.transform(d, &ContextBlock::default()), v.transform(d));
        }
    }

    #[test]
    fn context_block_is_appended_after_ngrams() {
        let docs = vec![toks("a b"), toks("b c")];
        let ctx = vec![block(&[("sub=Honda", 1.0)]), block(&[("sub=cars", 1.0), ("sub=Autos", 0.5)])];
        let fs = FeatureSpace::fit(&docs, &ctx);
        assert_eq!(fs.dim(), 5 + 3);
        let row = fs.transform(&toks("a"), &block(&[("sub=cars", 1.0), ("sub=unseen", 1.0), ("sub=Autos", 0.5)]));
        let autos = fs.context_vocab()["sub=Autos"];
        let cars = fs.context_vocab()["sub=cars"];
        assert!(autos >= 5 && cars >= 5);
        assert_eq!(row.get(autos), Some(0.5));
        assert_eq!(row.get(cars), Some(1.0));
        assert_eq!(row.len(), 3);
    }
}

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::LabeledComment;
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;
const RARE_BUCKET: &str = "<rare>";

/// Fold index per corpus position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn fold_of(&self, index: usize) -> usize {
        self.assignment[index]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assignment
    }

    /// Corpus positions held out in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }

    pub fn to_map(&self, corpus: &[LabeledComment]) -> BTreeMap<String, usize> {
        corpus
            .iter()
            .zip(&self.assignment)
            .map(|(c, &f)| (c.id.clone(), f))
            .collect()
    }

    /// Largest gap, in percentage points, between a fold's DEG share and the
    /// corpus DEG share.
    pub fn label_skew(&self, corpus: &[LabeledComment]) -> f64 {
        if corpus.is_empty() {
            return 0.0;
        }
        let total = share(corpus.iter().map(|c| c.binary_gold().is_deg()));
        (0..self.k)
            .map(|f| {
                let fold = corpus
                    .iter()
                    .zip(&self.assignment)
                    .filter(|&(_, &a)| a == f)
                    .map(|(c, _)| c.binary_gold().is_deg());
                (share(fold) - total).abs() * 100.0
            })
            .fold(0.0, f64::max)
    }
}

fn share(labels: impl Iterator<Item = bool>) -> f64 {
    let (mut n, mut deg) = (0usize, 0usize);
    for l in labels {
        n += 1;
        deg += usize::from(l);
    }
    if n == 0 {
        0.0
    } else {
        deg as f64 / n as f64
    }
}

/// Groups comments by (binary label, slur, subreddit bucket), shuffles each
/// group, and deals the groups out in key order with one running pointer.
/// Label sorts first in the key, so each label's comments form one
/// contiguous run of the deal and every fold gets its count to within one.
pub fn stratified_folds(corpus: &[LabeledComment], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut per_sub: HashMap<&str, usize> = HashMap::new();
    for c in corpus {
        *per_sub.entry(c.subreddit.as_str()).or_insert(0) += 1;
    }
    let mut groups: BTreeMap<(bool, &str, &str), Vec<usize>> = BTreeMap::new();
    for (i, c) in corpus.iter().enumerate() {
        let bucket = if per_sub[c.subreddit.as_str()] < k {
            RARE_BUCKET
        } else {
            c.subreddit.as_str()
        };
        // DEG first
        let key = (!c.binary_gold().is_deg(), c.slur.as_str(), bucket);
        groups.entry(key).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pointer = rng.gen_range(0..k);
    let mut assignment = vec![0; corpus.len()];
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = pointer;
            pointer = (pointer + 1) % k;
        }
    }
    Ok(FoldAssignment { k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::corpus::GoldLabel;

    fn corpus(n: usize, deg_every: usize) -> Vec<LabeledComment> {
        (0..n)
            .map(|i| LabeledComment {
                id: format!("c{i}"),
                subreddit: format!("s{}", i % 13),
                author: "a".into(),
                created_utc: None,
                slur: format!("t{}", i % 3),
                gold: if i % deg_every == 0 {
                    GoldLabel::Derogatory
                } else {
                    GoldLabel::ALL[1 + i % 3]
                },
                body: String::new(),
            })
            .collect()
    }

    #[test]
    fn ten_single_label_comments_give_two_per_fold() {
        let mut c = corpus(10, 1);
        c.iter_mut().for_each(|x| x.gold = GoldLabel::Homonym);
        let f = stratified_folds(&c, 5, 0).unwrap();
        assert_eq!(f.sizes(), vec![2; 5]);
    }

    #[test]
    fn large_corpus_fold_sizes_are_balanced() {
        let c = corpus(39_811, 2);
        let f = stratified_folds(&c, 5, 11).unwrap();
        for s in f.sizes() {
            assert!((s as f64 - 7962.2).abs() <= 1.0, "{s}");
        }
        assert!(f.label_skew(&c) < 0.1);
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let c = corpus(500, 3);
        let a = stratified_folds(&c, 5, 1).unwrap();
        assert_eq!(a, stratified_folds(&c, 5, 1).unwrap());
        assert_ne!(a, stratified_folds(&c, 5, 2).unwrap());
        let map = a.to_map(&c);
        assert_eq!(map.len(), 500);
        assert!(map.values().all(|&f| f < 5));
        let mut all: Vec<usize> = (0..5).flat_map(|f| a.test_indices(f)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..500).collect::<Vec<_>>());
    }

    #[test]
    fn k_below_two_is_rejected() {
        assert!(stratified_folds(&corpus(10, 2), 1, 0).is_err());
    }
}

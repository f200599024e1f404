//! Cross-validated experiment: one shared fold assignment, one model per
//! fold, out-of-fold predictions for every comment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::{build_context_features, Channel, ContextBlock};
use super::corpus::{BinaryLabel, LabeledComment};
use super::features::FeatureSpace;
use super::folds::{stratified_folds, FoldAssignment, DEFAULT_FOLDS};
use super::logreg::{train_model, Model, SolverOptions, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use super::metrics::{check_coverage, MetricsReport, Prediction};
use super::text::preprocess;
use super::tfidf::Vectorizer;
use crate::error::{Error, Result};
use crate::vecspace::EmbeddingSpace;

pub const DEFAULT_NEIGHBOR_K: usize = 5;
pub const BASELINE_NAME: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub seed: u64,
    /// L2 strength λ on the mean loss. Unset means 1/N for N training
    /// comments, i.e. the usual inverse-strength setting C = 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    pub neighbor_k: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            folds: DEFAULT_FOLDS,
            seed: 0,
            l2: None,
            neighbor_k: DEFAULT_NEIGHBOR_K,
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl ExperimentConfig {
    /// Solver settings for a fold with `n_train` training comments.
    pub fn solver(&self, n_train: usize) -> SolverOptions {
        SolverOptions {
            l2: self.l2.unwrap_or(1.0 / n_train.max(1) as f64),
            tolerance: self.tolerance,
            max_iter: self.max_iter,
        }
    }
}

/// Vectoriser and weights trained on one fold's training part.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub space: FeatureSpace,
    pub model: Model,
}

impl FoldModel {
    pub fn decision(&self, tokens: &[String], context: &ContextBlock) -> f64 {
        self.model.decision(&self.space.transform(tokens, context))
    }
}

pub fn tokenize_corpus(corpus: &[LabeledComment]) -> Vec<Vec<String>> {
    corpus.par_iter().map(|c| preprocess(&c.body)).collect()
}

/// Fits vocabulary and model on the comments at `train` only.
pub fn train_fold(
    tokens: &[Vec<String>],
    contexts: &[ContextBlock],
    labels: &[BinaryLabel],
    train: &[usize],
    solver: &SolverOptions,
) -> Result<FoldModel> {
    if train.is_empty() {
        return Err(Error::Config("empty training fold".into()));
    }
    let tr_tokens: Vec<&[String]> = train.iter().map(|&i| tokens[i].as_slice()).collect();
    let tr_ctx: Vec<&ContextBlock> = train.iter().map(|&i| &contexts[i]).collect();
    let space = FeatureSpace::fit(&tr_tokens, &tr_ctx);
    let rows: Vec<_> = train
        .iter()
        .map(|&i| space.transform(&tokens[i], &contexts[i]))
        .collect();
    let y: Vec<BinaryLabel> = train.iter().map(|&i| labels[i]).collect();
    let model = train_model(&rows, &y, space.dim(), solver)?;
    Ok(FoldModel { space, model })
}

/// Runs `fit_predict(train, test)` for every fold concurrently and stitches
/// the decisions back into corpus order.
fn cross_validate<F>(corpus: &[LabeledComment], folds: &FoldAssignment, fit_predict: F) -> Result<Vec<Prediction>>
where
    F: Fn(usize, &[usize], &[usize]) -> Result<Vec<f64>> + Sync,
{
    let per_fold: Vec<Result<(Vec<usize>, Vec<f64>)>> = (0..folds.k())
        .into_par_iter()
        .map(|f| {
            let train = folds.train_indices(f);
            let test = folds.test_indices(f);
            let scores = fit_predict(f, &train, &test)?;
            log::debug!("fold {f}: train {} test {}", train.len(), test.len());
            Ok((test, scores))
        })
        .collect();

    let mut decision = vec![None; corpus.len()];
    for r in per_fold {
        let (test, scores) = r?;
        for (i, s) in test.into_iter().zip(scores) {
            decision[i] = Some(s);
        }
    }
    let preds: Vec<Prediction> = corpus
        .iter()
        .zip(decision)
        .enumerate()
        .map(|(i, (c, d))| {
            let d = d.expect("every comment sits in exactly one fold");
            Prediction {
                id: c.id.clone(),
                gold: c.gold,
                predicted: BinaryLabel::from_deg(d > 0.0),
                fold: folds.fold_of(i),
                decision: d,
            }
        })
        .collect();
    check_coverage(corpus, &preds)?;
    Ok(preds)
}

fn labels(corpus: &[LabeledComment]) -> Vec<BinaryLabel> {
    corpus.iter().map(LabeledComment::binary_gold).collect()
}

fn finish(
    name: &str,
    corpus: &[LabeledComment],
    folds: &FoldAssignment,
    preds: Vec<Prediction>,
    fallbacks: usize,
    baseline: Option<&MetricsReport>,
) -> Result<MetricsReport> {
    let mut report = MetricsReport::from_predictions(name, folds.k(), preds);
    report.fold_label_skew_pp = folds.label_skew(corpus);
    report.context_fallbacks = fallbacks;
    if let Some(b) = baseline {
        report.compare_with(b)?;
    }
    Ok(report)
}

pub fn run_experiment(
    corpus: &[LabeledComment],
    channel: Channel,
    embeddings: Option<&EmbeddingSpace>,
    config: &ExperimentConfig,
    baseline: Option<&MetricsReport>,
) -> Result<MetricsReport> {
    let folds = stratified_folds(corpus, config.folds, config.seed)?;
    let tokens = tokenize_corpus(corpus);
    let contexts = corpus
        .iter()
        .map(|c| build_context_features(&c.subreddit, channel, embeddings, config.neighbor_k))
        .collect::<Result<Vec<_>>>()?;
    let fallbacks = contexts.iter().filter(|c| c.fell_back).count();
    if fallbacks > 0 {
        log::warn!("{fallbacks} comments fell back to the name channel (subreddit not embedded)");
    }
    let y = labels(corpus);
    let preds = cross_validate(corpus, &folds, |f, train, test| {
        let m = train_fold(&tokens, &contexts, &y, train, &config.solver(train.len()))
            .map_err(|e| Error::Config(format!("fold {f}: {e}")))?;
        Ok(test.iter().map(|&i| m.decision(&tokens[i], &contexts[i])).collect())
    })?;
    finish(channel.as_str(), corpus, &folds, preds, fallbacks, baseline)
}

/// Text-only model built straight from the n-gram vectoriser, without any
/// context machinery. Reference point for the identity channel.
pub fn run_baseline(corpus: &[LabeledComment], config: &ExperimentConfig) -> Result<MetricsReport> {
    let folds = stratified_folds(corpus, config.folds, config.seed)?;
    let tokens = tokenize_corpus(corpus);
    let y = labels(corpus);
    let preds = cross_validate(corpus, &folds, |f, train, test| {
        let docs: Vec<&[String]> = train.iter().map(|&i| tokens[i].as_slice()).collect();
        let vectorizer = Vectorizer::fit(&docs);
        let rows: Vec<_> = docs.iter().map(|d| vectorizer.transform(d)).collect();
        let ty: Vec<BinaryLabel> = train.iter().map(|&i| y[i]).collect();
        let model = train_model(&rows, &ty, vectorizer.len(), &config.solver(train.len()))
            .map_err(|e| Error::Config(format!("fold {f}: {e}")))?;
        Ok(test
            .iter()
            .map(|&i| model.decision(&vectorizer.transform(&tokens[i])))
            .collect())
    })?;
    finish(BASELINE_NAME, corpus, &folds, preds, 0, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::corpus::GoldLabel;

    fn comment(i: usize, sub: &str, gold: GoldLabel, body: &str) -> LabeledComment {
        LabeledComment {
            id: format!("c{i}"),
            subreddit: sub.into(),
            author: format!("u{i}"),
            created_utc: None,
            slur: "tok".into(),
            gold,
            body: body.into(),
        }
    }

    /// Label depends on the community only; text is identical.
    fn community_corpus() -> Vec<LabeledComment> {
        (0..200)
            .map(|i| {
                let (sub, gold) = if i % 2 == 0 {
                    ("hostile", GoldLabel::Derogatory)
                } else {
                    ("friendly", GoldLabel::Appropriative)
                };
                let filler = ["alpha", "beta", "gamma", "delta"][(i / 2) % 4];
                comment(i, sub, gold, &format!("tok {filler}"))
            })
            .collect()
    }

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            l2: Some(0.01),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn every_comment_gets_one_prediction() {
        let corpus = community_corpus();
        let r = run_experiment(&corpus, Channel::None, None, &cfg(), None).unwrap();
        assert_eq!(r.predictions.len(), corpus.len());
        for (c, p) in corpus.iter().zip(&r.predictions) {
            assert_eq!(c.id, p.id);
        }
        assert!((r.reconciled_accuracy() - r.accuracy).abs() < 1e-9);
    }

    #[test]
    fn name_channel_recovers_community_signal() {
        let corpus = community_corpus();
        let none = run_experiment(&corpus, Channel::None, None, &cfg(), None).unwrap();
        let name = run_experiment(&corpus, Channel::Name, None, &cfg(), Some(&none)).unwrap();
        assert_eq!(name.accuracy, 1.0);
        assert!(none.accuracy < 0.8);
        let flips = name.flips.unwrap();
        assert_eq!(flips.baseline, "none");
        assert_eq!(flips.overall.broken_by_context, 0);
    }

    #[test]
    fn none_channel_matches_plain_baseline() {
        let corpus = community_corpus();
        let a = run_experiment(&corpus, Channel::None, None, &cfg(), None).unwrap();
        let b = run_baseline(&corpus, &cfg()).unwrap();
        assert_eq!(a.predictions, b.predictions);
    }

    #[test]
    fn held_out_text_does_not_leak_into_training() {
        let corpus = community_corpus();
        let folds = stratified_folds(&corpus, 5, 0).unwrap();
        let y = labels(&corpus);
        let ctx = vec![ContextBlock::default(); corpus.len()];
        let train = folds.train_indices(0);
        let test = folds.test_indices(0);

        let tokens = tokenize_corpus(&corpus);
        let a = train_fold(&tokens, &ctx, &y, &train, &cfg().solver(train.len())).unwrap();
        let mut perturbed = corpus.clone();
        perturbed[test[0]].body = "completely novel words zebra".into();
        let tokens = tokenize_corpus(&perturbed);
        let b = train_fold(&tokens, &ctx, &y, &train, &cfg().solver(train.len())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn experiment_is_reproducible() {
        let corpus = community_corpus();
        let a = run_experiment(&corpus, Channel::Name, None, &cfg(), None).unwrap();
        let b = run_experiment(&corpus, Channel::Name, None, &cfg(), None).unwrap();
        assert_eq!(a, b);
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::corpus::{BinaryLabel, GoldLabel, LabeledComment};
use crate::error::{Error, Result};

/// One out-of-fold prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub gold: GoldLabel,
    pub predicted: BinaryLabel,
    pub fold: usize,
    pub decision: f64,
}

impl Prediction {
    pub fn correct(&self) -> bool {
        self.predicted == self.gold.binary()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: BinaryLabel,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Share of comments with a given gold label that were classified DEG.
/// For gold DEG this is the true-positive rate, otherwise a false-positive
/// rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRow {
    pub gold: GoldLabel,
    pub count: usize,
    pub classified_deg: usize,
    pub pct_classified_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub size: usize,
    pub deg_share: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipCounts {
    pub both_correct: usize,
    pub both_wrong: usize,
    pub fixed_by_context: usize,
    pub broken_by_context: usize,
}

impl FlipCounts {
    /// Comments whose predicted label changed.
    pub fn flipped(&self) -> usize {
        self.fixed_by_context + self.broken_by_context
    }

    pub fn total(&self) -> usize {
        self.both_correct + self.both_wrong + self.flipped()
    }

    fn add(&mut self, base_ok: bool, ctx_ok: bool) {
        match (base_ok, ctx_ok) {
            (true, true) => self.both_correct += 1,
            (false, false) => self.both_wrong += 1,
            (false, true) => self.fixed_by_context += 1,
            (true, false) => self.broken_by_context += 1,
        }
    }
}

/// Pairwise comparison of this run against a baseline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipTable {
    pub baseline: String,
    pub overall: FlipCounts,
    pub by_gold: Vec<(GoldLabel, FlipCounts)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub channel: String,
    pub n: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassStats>,
    pub per_gold: Vec<GoldRow>,
    /// NDG comments classified DEG over all NDG comments.
    pub ndg_false_positive_rate: f64,
    pub folds: Vec<FoldMetrics>,
    pub fold_label_skew_pp: f64,
    pub context_fallbacks: usize,
    pub flips: Option<FlipTable>,
    pub predictions: Vec<Prediction>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn class_stats(preds: &[&Prediction]) -> Vec<ClassStats> {
    [BinaryLabel::Deg, BinaryLabel::Ndg]
        .into_iter()
        .map(|label| {
            let tp = preds
                .iter()
                .filter(|p| p.predicted == label && p.gold.binary() == label)
                .count();
            let predicted = preds.iter().filter(|p| p.predicted == label).count();
            let support = preds.iter().filter(|p| p.gold.binary() == label).count();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassStats {
                label,
                support,
                precision,
                recall,
                f1,
            }
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl MetricsReport {
    /// Builds the report from out-of-fold predictions, one per comment.
    pub fn from_predictions(channel: &str, k: usize, predictions: Vec<Prediction>) -> Self {
        let all: Vec<&Prediction> = predictions.iter().collect();
        let per_class = class_stats(&all);
        let n = predictions.len();
        let correct = predictions.iter().filter(|p| p.correct()).count();

        let per_gold: Vec<GoldRow> = GoldLabel::ALL
            .into_iter()
            .map(|gold| {
                let count = predictions.iter().filter(|p| p.gold == gold).count();
                let classified_deg = predictions
                    .iter()
                    .filter(|p| p.gold == gold && p.predicted.is_deg())
                    .count();
                GoldRow {
                    gold,
                    count,
                    classified_deg,
                    pct_classified_deg: 100.0 * ratio(classified_deg, count),
                }
            })
            .collect();
        let ndg: Vec<&GoldRow> = per_gold.iter().filter(|r| !r.gold.binary().is_deg()).collect();
        let ndg_false_positive_rate = ratio(
            ndg.iter().map(|r| r.classified_deg).sum(),
            ndg.iter().map(|r| r.count).sum(),
        );

        let folds = (0..k)
            .map(|fold| {
                let fp: Vec<&Prediction> = predictions.iter().filter(|p| p.fold == fold).collect();
                FoldMetrics {
                    fold,
                    size: fp.len(),
                    deg_share: ratio(fp.iter().filter(|p| p.gold.binary().is_deg()).count(), fp.len()),
                    accuracy: ratio(fp.iter().filter(|p| p.correct()).count(), fp.len()),
                    macro_f1: mean(class_stats(&fp).iter().map(|c| c.f1)),
                }
            })
            .collect();

        MetricsReport {
            channel: channel.to_owned(),
            n,
            accuracy: ratio(correct, n),
            macro_precision: mean(per_class.iter().map(|c| c.precision)),
            macro_recall: mean(per_class.iter().map(|c| c.recall)),
            macro_f1: mean(per_class.iter().map(|c| c.f1)),
            per_class,
            per_gold,
            ndg_false_positive_rate,
            folds,
            fold_label_skew_pp: 0.0,
            context_fallbacks: 0,
            flips: None,
            predictions,
        }
    }

    pub fn gold_row(&self, gold: GoldLabel) -> &GoldRow {
        self.per_gold
            .iter()
            .find(|r| r.gold == gold)
            .expect("every gold label has a row")
    }

    /// Accuracy recomputed from the four %-classified-DEG cells and their
    /// label counts alone.
    pub fn reconciled_accuracy(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let correct: f64 = self
            .per_gold
            .iter()
            .map(|r| {
                let rate = r.pct_classified_deg / 100.0;
                let ok = if r.gold.binary().is_deg() { rate } else { 1.0 - rate };
                ok * r.count as f64
            })
            .sum();
        correct / self.n as f64
    }

    /// Attaches the flip table against `baseline`. Both runs must cover the
    /// same comment ids.
    pub fn compare_with(&mut self, baseline: &MetricsReport) -> Result<()> {
        let base: HashMap<&str, &Prediction> =
            baseline.predictions.iter().map(|p| (p.id.as_str(), p)).collect();
        if base.len() != self.predictions.len() {
            return Err(Error::Config(format!(
                "baseline {:?} covers {} comments, this run {}",
                baseline.channel,
                base.len(),
                self.predictions.len()
            )));
        }
        let mut overall = FlipCounts::default();
        let mut by_gold: Vec<(GoldLabel, FlipCounts)> =
            GoldLabel::ALL.iter().map(|&g| (g, FlipCounts::default())).collect();
        for p in &self.predictions {
            let b = base.get(p.id.as_str()).ok_or_else(|| {
                Error::Config(format!("comment {:?} missing from baseline {:?}", p.id, baseline.channel))
            })?;
            overall.add(b.correct(), p.correct());
            let row = by_gold.iter_mut().find(|(g, _)| *g == p.gold).unwrap();
            row.1.add(b.correct(), p.correct());
        }
        self.flips = Some(FlipTable {
            baseline: baseline.channel.clone(),
            overall,
            by_gold,
        });
        Ok(())
    }

    pub fn predictions_by_id(&self) -> HashMap<&str, &Prediction> {
        self.predictions.iter().map(|p| (p.id.as_str(), p)).collect()
    }
}

/// Checks that `predictions` holds exactly one entry per corpus comment.
pub(crate) fn check_coverage(corpus: &[LabeledComment], predictions: &[Prediction]) -> Result<()> {
    if corpus.len() != predictions.len()
        || corpus.iter().zip(predictions).any(|(c, p)| c.id != p.id)
    {
        return Err(Error::Config(
            "out-of-fold predictions do not cover the corpus exactly once".into(),
        ));
    }
    Ok(())
}

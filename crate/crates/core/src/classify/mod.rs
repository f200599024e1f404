//! Slur-usage classification: TF-IDF n-grams, optional community context,
//! L2 logistic regression, stratified cross-validation.

pub mod context;
pub mod corpus;
pub mod experiment;
pub mod features;
pub mod folds;
pub mod logreg;
pub mod metrics;
pub mod text;
pub mod tfidf;

pub use context::{build_context_features, Channel, ContextBlock};
pub use corpus::{read_corpus, write_corpus, BinaryLabel, GoldLabel, LabeledComment};
pub use experiment::{run_baseline, run_experiment, train_fold, ExperimentConfig, FoldModel};
pub use features::{FeatureSpace, SparseVector};
pub use folds::{stratified_folds, FoldAssignment};
pub use logreg::{train_model, Model, SolverOptions};
pub use metrics::{FlipCounts, FlipTable, MetricsReport, Prediction};
pub use text::preprocess;
pub use tfidf::Vectorizer;

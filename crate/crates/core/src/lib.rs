//! Community (subreddit) embeddings from user co-occurrence, vector-space
//! evaluation, and context-aware classification of slur usage.
//!
//! The crate is organised as a batch pipeline:
//!
//! * [`ingest`]: stream comment dumps into per-(user, subreddit) counts,
//!   drop bots, keep users with at least ten comments in a subreddit, and
//!   select the most active subreddits.
//! * [`cooccur`]: count users active in both subreddits of each pair.
//! * [`embed`]: GloVe-style AdaGrad factorisation of the co-occurrence matrix.
//! * [`vecspace`]: cosine neighbours, composition and analogy queries, and
//!   evaluation suites over the trained space.
//! * [`classify`]: TF-IDF n-gram logistic regression with optional community
//!   context features, evaluated by stratified cross-validation.
//! * [`pipeline`]: configuration, orchestration, manifests, and synthetic data.

pub mod checksum;
pub mod classify;
pub mod cooccur;
pub mod embed;
pub mod error;
pub mod ingest;
pub mod intern;
pub mod pipeline;
pub mod vecspace;

pub use classify::{
    BinaryLabel, Channel, ExperimentConfig, GoldLabel, LabeledComment, MetricsReport,
};
pub use cooccur::CooccurrenceMatrix;
pub use embed::{EmbedConfig, EmbeddingMatrix};
pub use error::{Error, Result};
pub use ingest::{ActivityTable, CommentRecord, MembershipSets, SubredditVocab};
pub use intern::Interner;
pub use pipeline::{PipelineConfig, SyntheticSpec};
pub use vecspace::{AnalogyTest, CompositionTest, EmbeddingSpace, EvalReport};

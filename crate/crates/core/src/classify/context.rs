use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecspace::EmbeddingSpace;

/// How community identity enters the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Text only.
    None,
    /// One indicator for the source subreddit.
    Name,
    /// Source indicator plus its nearest embedding neighbours weighted by
    /// clipped cosine similarity.
    Neighborhood,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::None => "none",
            Channel::Name => "name",
            Channel::Neighborhood => "neighborhood",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Channel::None),
            "name" => Ok(Channel::Name),
            "neighborhood" | "neighbourhood" => Ok(Channel::Neighborhood),
            other => Err(Error::Config(format!(
                "unknown channel {other:?} (expected none, name or neighborhood)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextBlock {
    /// `(feature key, weight)` in construction order.
    pub features: Vec<(String, f64)>,
    /// Neighbourhood was requested but the subreddit is not embedded.
    pub fell_back: bool,
}

pub fn subreddit_feature(name: &str) -> String {
    format!("sub={name}")
}

pub fn build_context_features(
    subreddit: &str,
    channel: Channel,
    embeddings: Option<&EmbeddingSpace>,
    neighbor_k: usize,
) -> Result<ContextBlock> {
    let source = (subreddit_feature(subreddit), 1.0);
    match channel {
        Channel::None => Ok(ContextBlock::default()),
        Channel::Name => Ok(ContextBlock {
            features: vec![source],
            fell_back: false,
        }),
        Channel::Neighborhood => {
            let space = embeddings.ok_or_else(|| {
                Error::Config("the neighborhood channel needs an embedding space".into())
            })?;
            if !space.contains(subreddit) {
                return Ok(ContextBlock {
                    features: vec![source],
                    fell_back: true,
                });
            }
            let mut features = vec![source];
            for c in space.nearest_neighbors(subreddit, neighbor_k, &[])? {
                features.push((subreddit_feature(&c.name), c.score.clamp(0.0, 1.0)));
            }
            Ok(ContextBlock {
                features,
                fell_back: false,
            })
        }
    }
}

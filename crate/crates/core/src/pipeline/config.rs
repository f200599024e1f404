use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{Channel, ExperimentConfig};
use crate::cooccur::BuildOptions;
use crate::embed::{EmbedConfig, VectorExport};
use crate::error::{Error, Result};
use crate::ingest::{IngestOptions, DEFAULT_MIN_COMMENTS, DEFAULT_TOP};
use crate::vecspace::SuiteKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestStage {
    pub enabled: bool,
    pub inputs: Vec<String>,
    pub bots: Option<PathBuf>,
    pub bot_suffix_heuristic: bool,
    pub min_comments: u64,
    pub top: usize,
}

impl Default for IngestStage {
    fn default() -> Self {
        IngestStage {
            enabled: true,
            inputs: Vec::new(),
            bots: None,
            bot_suffix_heuristic: false,
            min_comments: DEFAULT_MIN_COMMENTS,
            top: DEFAULT_TOP,
        }
    }
}

impl IngestStage {
    pub fn options(&self) -> IngestOptions {
        IngestOptions {
            inputs: self.inputs.clone(),
            bots: self.bots.clone(),
            bot_suffix_heuristic: self.bot_suffix_heuristic,
            min_comments: self.min_comments,
            top: self.top,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CooccurStage {
    pub enabled: bool,
    /// Read memberships from here instead of the ingest output.
    pub memberships: Option<PathBuf>,
    pub max_memberships_per_user: Option<usize>,
}

impl Default for CooccurStage {
    fn default() -> Self {
        CooccurStage {
            enabled: true,
            memberships: None,
            max_memberships_per_user: None,
        }
    }
}

impl CooccurStage {
    pub fn options(&self) -> BuildOptions {
        BuildOptions {
            max_memberships_per_user: self.max_memberships_per_user,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedStage {
    pub enabled: bool,
    pub matrix: Option<PathBuf>,
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub deterministic: bool,
    pub export: VectorExport,
}

impl Default for EmbedStage {
    fn default() -> Self {
        let d = EmbedConfig::default();
        EmbedStage {
            enabled: true,
            matrix: None,
            dim: d.dim,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            x_max: d.x_max,
            alpha: d.alpha,
            deterministic: d.deterministic,
            export: d.export,
        }
    }
}

impl EmbedStage {
    pub fn config(&self, seed: u64) -> EmbedConfig {
        EmbedConfig {
            dim: self.dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            x_max: self.x_max,
            alpha: self.alpha,
            seed,
            deterministic: self.deterministic,
            export: self.export,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteRef {
    pub path: PathBuf,
    pub kind: SuiteKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalStage {
    pub enabled: bool,
    pub embeddings: Option<PathBuf>,
    pub k: usize,
    pub suites: Vec<SuiteRef>,
}

impl Default for EvalStage {
    fn default() -> Self {
        EvalStage {
            enabled: true,
            embeddings: None,
            k: 10,
            suites: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyStage {
    pub enabled: bool,
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Run in order; every later channel is compared against the first.
    pub channels: Vec<Channel>,
    pub folds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    pub neighbor_k: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for ClassifyStage {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        ClassifyStage {
            enabled: true,
            corpus: None,
            embeddings: None,
            channels: vec![Channel::None, Channel::Name, Channel::Neighborhood],
            folds: d.folds,
            l2: d.l2,
            neighbor_k: d.neighbor_k,
            tolerance: d.tolerance,
            max_iter: d.max_iter,
        }
    }
}

impl ClassifyStage {
    pub fn config(&self, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            folds: self.folds,
            seed,
            l2: self.l2,
            neighbor_k: self.neighbor_k,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
        }
    }
}

/// One file configures the whole run. Relative paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub ingest: IngestStage,
    pub cooccur: CooccurStage,
    pub embed: EmbedStage,
    pub eval: EvalStage,
    pub classify: ClassifyStage,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            ingest: IngestStage::default(),
            cooccur: CooccurStage::default(),
            embed: EmbedStage::default(),
            eval: EvalStage::default(),
            classify: ClassifyStage::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Loads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        rebase(base, &mut self.out_dir);
        for input in &mut self.ingest.inputs {
            if Path::new(input).is_relative() {
                *input = base.join(&*input).to_string_lossy().into_owned();
            }
        }
        let optional = [
            &mut self.ingest.bots,
            &mut self.cooccur.memberships,
            &mut self.embed.matrix,
            &mut self.eval.embeddings,
            &mut self.classify.corpus,
            &mut self.classify.embeddings,
        ];
        for p in optional.into_iter().flatten() {
            rebase(base, p);
        }
        for s in &mut self.eval.suites {
            rebase(base, &mut s.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ingest.enabled && self.ingest.inputs.is_empty() {
            return Err(Error::Config("ingest is enabled but lists no inputs".into()));
        }
        if self.embed.enabled {
            self.embed.config(self.seed).validate()?;
        }
        if self.classify.enabled {
            if self.classify.corpus.is_none() {
                return Err(Error::Config("classify is enabled but no corpus is set".into()));
            }
            if self.classify.channels.is_empty() {
                return Err(Error::Config("classify needs at least one channel".into()));
            }
            if self.classify.folds < 2 {
                return Err(Error::Config("classify needs at least 2 folds".into()));
            }
        }
        Ok(())
    }
}

//! End-to-end orchestration: ingest → cooccur → embed → eval → classify.
//!
//! Stages run sequentially in that order. A disabled stage can be replaced
//! by a file the later stage reads (by default the one the disabled stage
//! would have written). Every artifact is checksummed into `manifest.json`.

mod config;
mod manifest;
pub mod synth;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::classify::{read_corpus, run_experiment, Channel, MetricsReport};
use crate::cooccur::{build_cooccurrence, read_matrix, write_matrix};
use crate::embed::{load_embeddings, train, write_text};
use crate::error::{Error, Result};
use crate::ingest::{read_memberships, run_ingest, write_memberships, SubredditVocab};
use crate::vecspace::{read_suite, run_eval_suite, EmbeddingSpace, EvalReport};

pub use config::{
    ClassifyStage, CooccurStage, EmbedStage, EvalStage, IngestStage, PipelineConfig, SuiteRef,
};
pub use manifest::{ArtifactRecord, Manifest, StageRecord, StageStatus};
pub use synth::{generate_synthetic, SyntheticData, SyntheticSpec};

pub const MEMBERSHIPS_FILE: &str = "memberships.tsv";
pub const MATRIX_FILE: &str = "cooccur.bin";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";
pub const CLASSIFY_REPORT_FILE: &str = "classify_report.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct ClassifyOutput {
    pub config: crate::classify::ExperimentConfig,
    pub reports: Vec<MetricsReport>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    stages: Vec<StageRecord>,
    artifacts: Vec<ArtifactRecord>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Resolves the input a stage reads: an explicit path, or the default
/// artifact in the output directory. Must exist.
fn dependency(stage: &'static str, explicit: Option<&PathBuf>, out: &Path, default: &str) -> Result<PathBuf> {
    let p = explicit.cloned().unwrap_or_else(|| out.join(default));
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::MissingDependency { stage, path: p })
    }
}

fn load_space(path: &Path) -> Result<EmbeddingSpace> {
    EmbeddingSpace::new(&load_embeddings(path)?)
}

impl Run<'_> {
    fn artifact(&mut self, name: &str, stage: &str) -> Result<()> {
        self.artifacts.push(ArtifactRecord::of(self.out, name, stage)?);
        Ok(())
    }

    fn stage<F>(&mut self, name: &'static str, enabled: bool, body: F) -> Result<()>
    where
        F: FnOnce(&mut Self) -> Result<serde_json::Value>,
    {
        if !enabled {
            self.stages.push(StageRecord {
                name: name.into(),
                status: StageStatus::Disabled,
                summary: serde_json::Value::Null,
            });
            return Ok(());
        }
        log::info!("stage {name}");
        let summary = body(self).map_err(|e| match e {
            e @ (Error::MissingDependency { .. } | Error::Stage { .. }) => e,
            other => Error::Stage {
                stage: name,
                source: Box::new(other),
            },
        })?;
        self.stages.push(StageRecord {
            name: name.into(),
            status: StageStatus::Ran,
            summary,
        });
        Ok(())
    }

    fn ingest(&mut self) -> Result<serde_json::Value> {
        let output = run_ingest(&self.cfg.ingest.options())?;
        let path = self.out.join(MEMBERSHIPS_FILE);
        let mut w = create(&path)?;
        write_memberships(&output.selection.sets, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        self.artifact(MEMBERSHIPS_FILE, "ingest")?;
        Ok(serde_json::to_value(&output.report)?)
    }

    fn cooccur(&mut self) -> Result<serde_json::Value> {
        let src = dependency("cooccur", self.cfg.cooccur.memberships.as_ref(), self.out, MEMBERSHIPS_FILE)?;
        let sets = read_memberships(open(&src)?, &src)?;
        let vocab = SubredditVocab::from_sets(&sets);
        let (matrix, report) = build_cooccurrence(&sets, &vocab, &self.cfg.cooccur.options())?;
        let path = self.out.join(MATRIX_FILE);
        let mut w = create(&path)?;
        write_matrix(&matrix, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        self.artifact(MATRIX_FILE, "cooccur")?;
        Ok(serde_json::to_value(&report)?)
    }

    fn embed(&mut self) -> Result<serde_json::Value> {
        let src = dependency("embed", self.cfg.embed.matrix.as_ref(), self.out, MATRIX_FILE)?;
        let matrix = read_matrix(open(&src)?, &src)?;
        let config = self.cfg.embed.config(self.cfg.seed);
        let out = train(&matrix, &config)?;
        let path = self.out.join(EMBEDDINGS_FILE);
        let mut w = create(&path)?;
        write_text(&out.embeddings, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        self.artifact(EMBEDDINGS_FILE, "embed")?;
        Ok(json!({
            "subreddits": out.embeddings.len(),
            "dim": config.dim,
            "epochs": config.epochs,
            "first_loss": out.loss_trace.first(),
            "final_loss": out.loss_trace.last(),
        }))
    }

    fn eval(&mut self) -> Result<serde_json::Value> {
        let src = dependency("eval", self.cfg.eval.embeddings.as_ref(), self.out, EMBEDDINGS_FILE)?;
        let space = load_space(&src)?;
        let mut reports: Vec<EvalReport> = Vec::new();
        for suite in &self.cfg.eval.suites {
            if !suite.path.is_file() {
                return Err(Error::MissingDependency {
                    stage: "eval",
                    path: suite.path.clone(),
                });
            }
            let tests = read_suite(open(&suite.path)?, suite.kind, &suite.path)?;
            let name = suite
                .path
                .file_name()
                .map_or_else(|| suite.path.display().to_string(), |n| n.to_string_lossy().into_owned());
            reports.push(run_eval_suite(&name, &tests, &space, self.cfg.eval.k)?);
        }
        write_json(&self.out.join(EVAL_REPORT_FILE), &reports)?;
        self.artifact(EVAL_REPORT_FILE, "eval")?;
        Ok(serde_json::Value::Array(
            reports
                .iter()
                .map(|r| json!({ "suite": r.suite, "evaluated": r.evaluated, "hits_at_5": r.rate_at_5() }))
                .collect(),
        ))
    }

    fn classify(&mut self) -> Result<serde_json::Value> {
        let stage = &self.cfg.classify;
        let corpus_path = stage
            .corpus
            .as_ref()
            .ok_or_else(|| Error::Config("no corpus configured".into()))?;
        let corpus_path = dependency("classify", Some(corpus_path), self.out, "")?;
        let corpus = read_corpus(open(&corpus_path)?)?;
        let space = if stage.channels.contains(&Channel::Neighborhood) {
            let src = dependency("classify", stage.embeddings.as_ref(), self.out, EMBEDDINGS_FILE)?;
            Some(load_space(&src)?)
        } else {
            None
        };
        let config = stage.config(self.cfg.seed);
        let mut reports: Vec<MetricsReport> = Vec::new();
        for &channel in &stage.channels {
            let r = run_experiment(&corpus, channel, space.as_ref(), &config, reports.first())?;
            log::info!("classify {channel}: accuracy {:.4}", r.accuracy);
            reports.push(r);
        }
        let summary = reports
            .iter()
            .map(|r| {
                json!({
                    "channel": r.channel,
                    "accuracy": r.accuracy,
                    "macro_f1": r.macro_f1,
                    "ndg_false_positive_rate": r.ndg_false_positive_rate,
                })
            })
            .collect();
        write_json(&self.out.join(CLASSIFY_REPORT_FILE), &ClassifyOutput { config, reports })?;
        self.artifact(CLASSIFY_REPORT_FILE, "classify")?;
        Ok(serde_json::Value::Array(summary))
    }
}

/// Runs every enabled stage and writes the resolved config and the
/// manifest into `config.out_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let out = config.out_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let resolved = out.join(RESOLVED_CONFIG_FILE);
    fs::write(&resolved, config.to_toml()).map_err(|e| Error::io(&resolved, e))?;

    let mut run = Run {
        cfg: config,
        out,
        stages: Vec::new(),
        artifacts: Vec::new(),
    };
    run.stage("ingest", config.ingest.enabled, Run::ingest)?;
    run.stage("cooccur", config.cooccur.enabled, Run::cooccur)?;
    run.stage("embed", config.embed.enabled, Run::embed)?;
    run.stage("eval", config.eval.enabled, Run::eval)?;
    run.stage("classify", config.classify.enabled, Run::classify)?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        config: ArtifactRecord::of(out, RESOLVED_CONFIG_FILE, "config")?,
        stages: run.stages,
        artifacts: run.artifacts,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

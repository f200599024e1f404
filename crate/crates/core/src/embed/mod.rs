//! GloVe-style factorisation of the co-occurrence matrix with AdaGrad.
//!
//! Each stored entry `(i, j, x)` contributes `f(x)·(w_i·w̃_j + b_i + b̃_j − ln x)²`
//! to the loss, where `f(x) = min(1, (x/x_max)^α)`.

mod io;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooccur::CooccurrenceMatrix;
use crate::error::{Error, Result};

pub use io::{load_embeddings, read_binary, read_text, write_binary, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VectorExport {
    /// `w + w̃`
    #[default]
    Sum,
    /// `w` only
    Main,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Single sequential updater; bit-reproducible under `seed`.
    pub deterministic: bool,
    pub export: VectorExport,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 150,
            epochs: 100,
            learning_rate: 0.05,
            x_max: 100.0,
            alpha: 0.75,
            seed: 0,
            deterministic: true,
            export: VectorExport::Sum,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::Config("x_max must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// GloVe weighting `min(1, (x/x_max)^α)` for a positive count.
pub fn weight(x: f64, config: &EmbedConfig) -> f64 {
    debug_assert!(x > 0.0);
    if x < config.x_max {
        (x / config.x_max).powf(config.alpha)
    } else {
        1.0
    }
}

/// Trainable parameters and their AdaGrad accumulators, row-major
/// (`n × dim` for vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    pub dim: usize,
    pub w: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b: Vec<f64>,
    pub b_ctx: Vec<f64>,
    pub grad_w: Vec<f64>,
    pub grad_w_ctx: Vec<f64>,
    pub grad_b: Vec<f64>,
    pub grad_b_ctx: Vec<f64>,
}

impl EmbeddingState {
    /// Main vectors and biases uniform in `[−0.5/dim, 0.5/dim)`; context
    /// parameters start equal to the main ones so that the objective's
    /// row/column symmetry carries over to the trajectory. Accumulators
    /// start at 1.
    pub fn init(n: usize, config: &EmbedConfig) -> Self {
        let dim = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = 1.0 / dim as f64;
        let w: Vec<f64> = (0..n * dim).map(|_| (rng.gen::<f64>() - 0.5) * scale).collect();
        let b: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * scale).collect();
        EmbeddingState {
            dim,
            w_ctx: w.clone(),
            b_ctx: b.clone(),
            grad_w: vec![1.0; n * dim],
            grad_w_ctx: vec![1.0; n * dim],
            grad_b: vec![1.0; n],
            grad_b_ctx: vec![1.0; n],
            w,
            b,
        }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn main(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context(&self, i: usize) -> &[f64] {
        &self.w_ctx[i * self.dim..(i + 1) * self.dim]
    }

    /// `w_i·w̃_j + b_i + b̃_j`
    pub fn predict(&self, i: usize, j: usize) -> f64 {
        dot(self.main(i), self.context(j)) + (self.b[i] + self.b_ctx[j])
    }

    pub fn all_finite(&self) -> bool {
        [&self.w, &self.w_ctx, &self.b, &self.b_ctx]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn finalize(&self, export: VectorExport) -> Vec<f64> {
        match export {
            VectorExport::Sum => self.w.iter().zip(&self.w_ctx).map(|(a, b)| a + b).collect(),
            VectorExport::Main => self.w.clone(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One co-occurrence observation in training orientation: row `i` uses the
/// main vector, column `j` the context vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainEntry {
    pub row: u32,
    pub col: u32,
    pub count: f64,
}

pub struct Trainer {
    config: EmbedConfig,
    state: EmbeddingState,
    entries: Vec<TrainEntry>,
    /// ln(count) and f(count) per entry, precomputed.
    targets: Vec<(f64, f64)>,
    order: Vec<usize>,
    shuffle: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(matrix: &CooccurrenceMatrix, config: &EmbedConfig) -> Result<Self> {
        let entries = matrix
            .entries()
            .iter()
            .map(|e| TrainEntry {
                row: e.row,
                col: e.col,
                count: f64::from(e.count),
            })
            .collect();
        Self::from_entries(matrix.dim(), entries, config)
    }

    pub fn from_entries(n: usize, entries: Vec<TrainEntry>, config: &EmbedConfig) -> Result<Self> {
        config.validate()?;
        for e in &entries {
            if e.row as usize >= n || e.col as usize >= n {
                return Err(Error::Config(format!(
                    "training entry ({}, {}) outside vocabulary of {n}",
                    e.row, e.col
                )));
            }
            if !(e.count > 0.0 && e.count.is_finite()) {
                return Err(Error::Config(format!(
                    "training entry ({}, {}) has non-positive count {}",
                    e.row, e.col, e.count
                )));
            }
        }
        let targets = entries
            .iter()
            .map(|e| (e.count.ln(), weight(e.count, config)))
            .collect();
        let mut shuffle = ChaCha8Rng::seed_from_u64(config.seed);
        shuffle.set_stream(1);
        Ok(Trainer {
            state: EmbeddingState::init(n, config),
            order: (0..entries.len()).collect(),
            config: config.clone(),
            entries,
            targets,
            shuffle,
            epoch: 0,
        })
    }

    pub fn state(&self) -> &EmbeddingState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut EmbeddingState {
        &mut self.state
    }

    pub fn into_state(self) -> EmbeddingState {
        self.state
    }

    /// Loss of the current parameters over all entries, without updating.
    pub fn loss(&self) -> f64 {
        self.entries
            .iter()
            .zip(&self.targets)
            .map(|(e, &(ln_x, fx))| {
                let diff = self.state.predict(e.row as usize, e.col as usize) - ln_x;
                fx * diff * diff
            })
            .sum()
    }

    /// One AdaGrad pass over every entry in a freshly shuffled order.
    /// Returns the summed per-entry cost, each evaluated just before its
    /// update.
    pub fn train_epoch(&mut self) -> Result<f64> {
        if self.entries.is_empty() {
            return Err(Error::Config("cannot train on an empty co-occurrence matrix".into()));
        }
        self.order.shuffle(&mut self.shuffle);
        let epoch = self.epoch;
        self.epoch += 1;
        if self.config.deterministic {
            self.sequential_epoch(epoch)
        } else {
            self.parallel_epoch(epoch)
        }
    }

    fn sequential_epoch(&mut self, epoch: usize) -> Result<f64> {
        let dim = self.state.dim;
        let lr = self.config.learning_rate;
        let s = &mut self.state;
        let mut total = 0.0;
        for &k in &self.order {
            let e = self.entries[k];
            let (ln_x, fx) = self.targets[k];
            let (i, j) = (e.row as usize, e.col as usize);
            let (wi, wj) = (i * dim, j * dim);

            let diff = dot(&s.w[wi..wi + dim], &s.w_ctx[wj..wj + dim]) + (s.b[i] + s.b_ctx[j]) - ln_x;
            let fdiff = fx * diff;
            let cost = fdiff * diff;
            if !cost.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    row: e.row,
                    col: e.col,
                    count: e.count,
                });
            }
            total += cost;

            for d in 0..dim {
                let g_main = fdiff * s.w_ctx[wj + d];
                let g_ctx = fdiff * s.w[wi + d];
                s.w[wi + d] -= lr * g_main / s.grad_w[wi + d].sqrt();
                s.w_ctx[wj + d] -= lr * g_ctx / s.grad_w_ctx[wj + d].sqrt();
                s.grad_w[wi + d] += g_main * g_main;
                s.grad_w_ctx[wj + d] += g_ctx * g_ctx;
            }
            s.b[i] -= lr * fdiff / s.grad_b[i].sqrt();
            s.b_ctx[j] -= lr * fdiff / s.grad_b_ctx[j].sqrt();
            s.grad_b[i] += fdiff * fdiff;
            s.grad_b_ctx[j] += fdiff * fdiff;
        }
        Ok(total)
    }

    /// Lock-free (Hogwild-style) pass: the shuffled order is split into one
    /// contiguous shard per worker and all workers update the shared
    /// parameters concurrently through relaxed atomics.
    fn parallel_epoch(&mut self, epoch: usize) -> Result<f64> {
        let dim = self.state.dim;
        let lr = self.config.learning_rate;
        let shared = SharedState::from(&self.state);
        let workers = rayon::current_num_threads().max(1);
        let chunk = self.order.len().div_ceil(workers).max(1);
        let entries = &self.entries;
        let targets = &self.targets;

        let partials: Vec<Result<f64>> = self
            .order
            .par_chunks(chunk)
            .map(|shard| {
                let mut total = 0.0;
                let mut main = vec![0.0; dim];
                let mut ctx = vec![0.0; dim];
                for &k in shard {
                    let e = entries[k];
                    let (ln_x, fx) = targets[k];
                    let (i, j) = (e.row as usize, e.col as usize);
                    let (wi, wj) = (i * dim, j * dim);
                    for d in 0..dim {
                        main[d] = load(&shared.w[wi + d]);
                        ctx[d] = load(&shared.w_ctx[wj + d]);
                    }
                    let diff = dot(&main, &ctx) + (load(&shared.b[i]) + load(&shared.b_ctx[j])) - ln_x;
                    let fdiff = fx * diff;
                    let cost = fdiff * diff;
                    if !cost.is_finite() {
                        return Err(Error::NonFinite {
                            epoch,
                            row: e.row,
                            col: e.col,
                            count: e.count,
                        });
                    }
                    total += cost;
                    for d in 0..dim {
                        let g_main = fdiff * ctx[d];
                        let g_ctx = fdiff * main[d];
                        let gw = load(&shared.grad_w[wi + d]);
                        let gc = load(&shared.grad_w_ctx[wj + d]);
                        store(&shared.w[wi + d], main[d] - lr * g_main / gw.sqrt());
                        store(&shared.w_ctx[wj + d], ctx[d] - lr * g_ctx / gc.sqrt());
                        store(&shared.grad_w[wi + d], gw + g_main * g_main);
                        store(&shared.grad_w_ctx[wj + d], gc + g_ctx * g_ctx);
                    }
                    let gb = load(&shared.grad_b[i]);
                    let gbc = load(&shared.grad_b_ctx[j]);
                    store(&shared.b[i], load(&shared.b[i]) - lr * fdiff / gb.sqrt());
                    store(&shared.b_ctx[j], load(&shared.b_ctx[j]) - lr * fdiff / gbc.sqrt());
                    store(&shared.grad_b[i], gb + fdiff * fdiff);
                    store(&shared.grad_b_ctx[j], gbc + fdiff * fdiff);
                }
                Ok(total)
            })
            .collect();

        let mut total = 0.0;
        for p in partials {
            total += p?;
        }
        shared.write_back(&mut self.state);
        Ok(total)
    }

    pub fn finalize(&self) -> Vec<f64> {
        self.state.finalize(self.config.export)
    }
}

fn load(a: &AtomicU64) -> f64 {
    f64::from_bits(a.load(Ordering::Relaxed))
}

fn store(a: &AtomicU64, v: f64) {
    a.store(v.to_bits(), Ordering::Relaxed);
}

struct SharedState {
    w: Vec<AtomicU64>,
    w_ctx: Vec<AtomicU64>,
    b: Vec<AtomicU64>,
    b_ctx: Vec<AtomicU64>,
    grad_w: Vec<AtomicU64>,
    grad_w_ctx: Vec<AtomicU64>,
    grad_b: Vec<AtomicU64>,
    grad_b_ctx: Vec<AtomicU64>,
}

impl SharedState {
    fn from(s: &EmbeddingState) -> Self {
        let conv = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        SharedState {
            w: conv(&s.w),
            w_ctx: conv(&s.w_ctx),
            b: conv(&s.b),
            b_ctx: conv(&s.b_ctx),
            grad_w: conv(&s.grad_w),
            grad_w_ctx: conv(&s.grad_w_ctx),
            grad_b: conv(&s.grad_b),
            grad_b_ctx: conv(&s.grad_b_ctx),
        }
    }

    fn write_back(self, s: &mut EmbeddingState) {
        let back = |src: Vec<AtomicU64>, dst: &mut Vec<f64>| {
            *dst = src.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
        };
        back(self.w, &mut s.w);
        back(self.w_ctx, &mut s.w_ctx);
        back(self.b, &mut s.b);
        back(self.b_ctx, &mut s.b_ctx);
        back(self.grad_w, &mut s.grad_w);
        back(self.grad_w_ctx, &mut s.grad_w_ctx);
        back(self.grad_b, &mut s.grad_b);
        back(self.grad_b_ctx, &mut s.grad_b_ctx);
    }
}

/// One dense vector per subreddit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    names: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(names: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != names.len() * dim {
            return Err(Error::Dimension {
                expected: names.len() * dim,
                actual: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite embedding value for {}",
                names[k / dim.max(1)]
            )));
        }
        Ok(EmbeddingMatrix { names, dim, data })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

pub struct TrainOutput {
    pub embeddings: EmbeddingMatrix,
    pub loss_trace: Vec<f64>,
}

pub fn train(matrix: &CooccurrenceMatrix, config: &EmbedConfig) -> Result<TrainOutput> {
    let mut trainer = Trainer::new(matrix, config)?;
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let loss = trainer.train_epoch()?;
        log::debug!("epoch {epoch}: loss {loss:.6}");
        loss_trace.push(loss);
    }
    let embeddings = EmbeddingMatrix::new(matrix.vocab().names.clone(), config.dim, trainer.finalize())?;
    Ok(TrainOutput {
        embeddings,
        loss_trace,
    })
}

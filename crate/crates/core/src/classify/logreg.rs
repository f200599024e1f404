//! L2-regularised logistic regression fitted with L-BFGS.
//!
//! Objective: mean logistic loss + λ‖w‖²/2, intercept unpenalised.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::corpus::BinaryLabel;
use super::features::SparseVector;
use crate::error::{Error, Result};

pub const DEFAULT_L2: f64 = 1.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 1000;

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub l2: f64,
    /// Stop once the L2 norm of the full gradient falls below this.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            l2: DEFAULT_L2,
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

impl Model {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.iter()
            .filter(|&(i, _)| (i as usize) < self.weights.len())
            .map(|(i, v)| v * self.weights[i as usize])
            .sum::<f64>()
            + self.intercept
    }

    pub fn predict(&self, x: &SparseVector) -> BinaryLabel {
        BinaryLabel::from_deg(self.decision(x) > 0.0)
    }

    pub fn probability(&self, x: &SparseVector) -> f64 {
        sigmoid(self.decision(x))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    rows: &'a [SparseVector],
    y: Vec<f64>,
    dim: usize,
    l2: f64,
}

impl Problem<'_> {
    /// Objective and gradient at `theta = [w, b]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (w, b) = theta.split_at(self.dim);
        let b = b[0];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.rows.len() as f64;
        let mut loss = 0.0;
        let mut gb = 0.0;
        for (x, &y) in self.rows.iter().zip(&self.y) {
            let margin = y * (x.dot(w) + b);
            loss += softplus(-margin);
            let coef = -y * sigmoid(-margin);
            for (i, v) in x.iter() {
                grad[i as usize] += coef * v;
            }
            gb += coef;
        }
        let mut reg = 0.0;
        for (g, &wi) in grad[..self.dim].iter_mut().zip(w) {
            *g = *g / n + self.l2 * wi;
            reg += wi * wi;
        }
        grad[self.dim] = gb / n;
        loss / n + 0.5 * self.l2 * reg
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits the model. Rows must have indices below `dim`.
pub fn train_model(
    rows: &[SparseVector],
    labels: &[BinaryLabel],
    dim: usize,
    opts: &SolverOptions,
) -> Result<Model> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let deg = labels.iter().filter(|l| l.is_deg()).count();
    if deg == 0 {
        return Err(Error::SingleClass("NDG"));
    }
    if deg == labels.len() {
        return Err(Error::SingleClass("DEG"));
    }
    if !(opts.l2 >= 0.0 && opts.l2.is_finite()) {
        return Err(Error::Config(format!("l2 must be finite and >= 0, got {}", opts.l2)));
    }
    if let Some(bad) = rows.iter().flat_map(|r| r.indices()).find(|&&i| i as usize >= dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: *bad as usize + 1,
        });
    }

    let problem = Problem {
        rows,
        y: labels.iter().map(|l| if l.is_deg() { 1.0 } else { -1.0 }).collect(),
        dim,
        l2: opts.l2,
    };
    let p = dim + 1;
    let mut theta = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut f = problem.eval(&theta, &mut grad);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);

    let mut next = vec![0.0; p];
    let mut next_grad = vec![0.0; p];
    let mut dir = vec![0.0; p];
    let mut alpha = vec![0.0; HISTORY];
    let mut iterations = 0;
    let mut gnorm = dot(&grad, &grad).sqrt();

    while gnorm >= opts.tolerance && iterations < opts.max_iter {
        iterations += 1;

        // two-loop recursion
        dir.copy_from_slice(&grad);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &dir);
            dir.iter_mut().zip(y).for_each(|(d, yi)| *d -= alpha[k] * yi);
        }
        let gamma = history
            .back()
            .map_or(1.0 / gnorm.max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        dir.iter_mut().for_each(|d| *d *= gamma);
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &dir);
            dir.iter_mut().zip(s).for_each(|(d, si)| *d += (alpha[k] - beta) * si);
        }
        dir.iter_mut().for_each(|d| *d = -*d);

        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            // not a descent direction; restart from steepest descent
            history.clear();
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g / gnorm.max(1.0));
            slope = dot(&grad, &dir);
        }

        let mut step = 1.0;
        let mut f_next;
        loop {
            next.iter_mut()
                .zip(&theta)
                .zip(&dir)
                .for_each(|((n, t), d)| *n = t + step * d);
            f_next = problem.eval(&next, &mut next_grad);
            if f_next <= f + ARMIJO * step * slope || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }
        if f_next > f {
            // line search failed; current point is as good as it gets
            break;
        }

        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut theta, &mut next);
        std::mem::swap(&mut grad, &mut next_grad);
        f = f_next;
        gnorm = dot(&grad, &grad).sqrt();
    }

    let intercept = theta[dim];
    theta.truncate(dim);
    Ok(Model {
        weights: theta,
        intercept,
        iterations,
        grad_norm: gnorm,
        converged: gnorm < opts.tolerance,
    })
}

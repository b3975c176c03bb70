//! Binary L2-regularized logistic regression trained on frozen embeddings.
//!
//! The objective is mean binary cross-entropy plus `l2_strength/2 * |w|^2`
//! (bias unregularized), which is strictly convex, so all three solvers
//! agree up to tolerance. Training stops when the full objective-gradient
//! norm drops to `tolerance` or after `max_iterations` outer iterations,
//! whichever comes first; the outcome records which.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedder::EmbeddingVector;

/// Optimizer used for the head objective. All minimize the same function;
/// `Liblinear` is a coordinate-Newton scheme standing in for the external
/// solver of the same name in the tuner's search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    NewtonCg,
    Lbfgs,
    Liblinear,
}

impl Solver {
    pub const ALL: [Solver; 3] = [Solver::NewtonCg, Solver::Lbfgs, Solver::Liblinear];
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Solver::NewtonCg => write!(f, "newton-cg"),
            Solver::Lbfgs => write!(f, "lbfgs"),
            Solver::Liblinear => write!(f, "liblin"),
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Solver, String> {
        match s.to_ascii_lowercase().as_str() {
            "newton-cg" | "newton_cg" => Ok(Solver::NewtonCg),
            "lbfgs" => Ok(Solver::Lbfgs),
            "liblin" | "liblinear" => Ok(Solver::Liblinear),
            other => Err(format!("unknown solver '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub max_iterations: usize,
    pub solver: Solver,
    pub l2_strength: f64,
    pub tolerance: f64,
}

impl Default for HeadConfig {
    /// Unit inverse-regularization (l2_strength = 1) and a tolerance tight
    /// enough for the oracle comparisons in the test suite.
    fn default() -> HeadConfig {
        HeadConfig {
            max_iterations: 100,
            solver: Solver::Lbfgs,
            l2_strength: 1.0,
            tolerance: 1e-10,
        }
    }
}

/// Trained parameters: `p(x) = sigmoid(weights . x + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// A trained head plus how training ended.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHead {
    pub model: HeadModel,
    pub config: HeadConfig,
    /// true: gradient norm reached tolerance; false: iteration budget hit.
    pub converged: bool,
    pub iterations_used: usize,
    pub final_gradient_norm: f64,
}

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("got {embeddings} embeddings but {labels} labels")]
    LengthMismatch { embeddings: usize, labels: usize },
    #[error("training needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("both classes must be present in the training labels")]
    SingleClassLabels,
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("threshold must lie strictly inside (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("invalid head config: {0}")]
    InvalidConfig(String),
    #[error("bad head state: {0}")]
    BadState(String),
}

pub fn sigmoid(z: f64) -> f64 {
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

/// P(label = 1 | embedding) under the model.
pub fn predict_proba(model: &HeadModel, embedding: &EmbeddingVector) -> Result<f64, HeadError> {
    if embedding.len() != model.weights.len() {
        return Err(HeadError::DimensionMismatch {
            expected: model.weights.len(),
            got: embedding.len(),
        });
    }
    let z: f64 = model
        .weights
        .iter()
        .zip(&embedding.values)
        .map(|(w, x)| w * x)
        .sum::<f64>()
        + model.bias;
    Ok(sigmoid(z))
}

/// Thresholded prediction; probability equal to the threshold counts as
/// positive.
pub fn predict(
    model: &HeadModel,
    embedding: &EmbeddingVector,
    threshold: f64,
) -> Result<bool, HeadError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(HeadError::InvalidThreshold(threshold));
    }
    Ok(predict_proba(model, embedding)? >= threshold)
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Column-of-ones-free design: theta = [w_0 .. w_{d-1}, b].
struct Objective<'a> {
    x: Vec<&'a [f64]>,
    y: Vec<f64>,
    dim: usize,
    l2: f64,
}

impl<'a> Objective<'a> {
    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let (w, b) = split(theta, self.dim);
        self.x
            .iter()
            .map(|xi| xi.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b)
            .collect()
    }

    fn value_from_margins(&self, theta: &[f64], z: &[f64]) -> f64 {
        let (w, _) = split(theta, self.dim);
        let n = self.y.len() as f64;
        let data: f64 = z
            .iter()
            .zip(&self.y)
            .map(|(&zi, &yi)| softplus(zi) - yi * zi)
            .sum();
        data / n + 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let z = self.margins(theta);
        self.value_from_margins(theta, &z)
    }

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (w, _) = split(theta, self.dim);
        let z = self.margins(theta);
        let n = self.y.len() as f64;
        let mut grad = vec![0.0; self.dim + 1];
        let mut value = 0.0;
        for ((xi, &yi), &zi) in self.x.iter().zip(&self.y).zip(&z) {
            value += softplus(zi) - yi * zi;
            let r = sigmoid(zi) - yi;
            for (g, &xij) in grad.iter_mut().zip(xi.iter()) {
                *g += r * xij;
            }
            grad[self.dim] += r;
        }
        value /= n;
        for g in grad.iter_mut() {
            *g /= n;
        }
        for (g, &wj) in grad.iter_mut().zip(w) {
            *g += self.l2 * wj;
        }
        value += 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        (value, grad)
    }

    /// Exact Hessian-vector product at `theta`.
    fn hessian_vec(&self, theta: &[f64], v: &[f64]) -> Vec<f64> {
        let z = self.margins(theta);
        let (vw, vb) = split(v, self.dim);
        let n = self.y.len() as f64;
        let mut out = vec![0.0; self.dim + 1];
        for (xi, &zi) in self.x.iter().zip(&z) {
            let p = sigmoid(zi);
            let curvature = p * (1.0 - p);
            let s: f64 = xi.iter().zip(vw).map(|(x, v)| x * v).sum::<f64>() + vb;
            let c = curvature * s;
            for (o, &xij) in out.iter_mut().zip(xi.iter()) {
                *o += c * xij;
            }
            out[self.dim] += c;
        }
        for o in out.iter_mut() {
            *o /= n;
        }
        for (o, &vj) in out.iter_mut().zip(vw) {
            *o += self.l2 * vj;
        }
        out
    }
}

fn split(theta: &[f64], dim: usize) -> (&[f64], f64) {
    (&theta[..dim], theta[dim])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value and gradient of the head objective at `(weights, bias)`, with the
/// bias derivative last. Exposed for gradient checks and diagnostics.
pub fn objective_value_and_gradient(
    embeddings: &[EmbeddingVector],
    labels: &[bool],
    l2_strength: f64,
    weights: &[f64],
    bias: f64,
) -> Result<(f64, Vec<f64>), HeadError> {
    if embeddings.len() != labels.len() {
        return Err(HeadError::LengthMismatch {
            embeddings: embeddings.len(),
            labels: labels.len(),
        });
    }
    let dim = weights.len();
    for e in embeddings {
        if e.len() != dim {
            return Err(HeadError::DimensionMismatch {
                expected: dim,
                got: e.len(),
            });
        }
    }
    let objective = Objective {
        x: embeddings.iter().map(|e| e.values.as_slice()).collect(),
        y: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
        dim,
        l2: l2_strength,
    };
    let mut theta = weights.to_vec();
    theta.push(bias);
    Ok(objective.value_and_gradient(&theta))
}

/// Minimizes the head objective. Both classes must be present.
pub fn train_head(
    embeddings: &[EmbeddingVector],
    labels: &[bool],
    config: &HeadConfig,
) -> Result<TrainedHead, HeadError> {
    if embeddings.len() != labels.len() {
        return Err(HeadError::LengthMismatch {
            embeddings: embeddings.len(),
            labels: labels.len(),
        });
    }
    if embeddings.len() < 2 {
        return Err(HeadError::TooFewSamples(embeddings.len()));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(HeadError::SingleClassLabels);
    }
    if config.max_iterations == 0 {
        return Err(HeadError::InvalidConfig("max_iterations must be >= 1".into()));
    }
    if !(config.l2_strength > 0.0 && config.l2_strength.is_finite()) {
        return Err(HeadError::InvalidConfig("l2_strength must be positive".into()));
    }
    if !(config.tolerance > 0.0 && config.tolerance.is_finite()) {
        return Err(HeadError::InvalidConfig("tolerance must be positive".into()));
    }
    let dim = embeddings[0].len();
    for e in embeddings {
        if e.len() != dim {
            return Err(HeadError::DimensionMismatch {
                expected: dim,
                got: e.len(),
            });
        }
    }

    let objective = Objective {
        x: embeddings.iter().map(|e| e.values.as_slice()).collect(),
        y: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
        dim,
        l2: config.l2_strength,
    };

    let outcome = match config.solver {
        Solver::Lbfgs => lbfgs(&objective, config),
        Solver::NewtonCg => newton_cg(&objective, config),
        Solver::Liblinear => coordinate_newton(&objective, config),
    }?;

    let (w, b) = split(&outcome.theta, dim);
    let model = HeadModel {
        weights: w.to_vec(),
        bias: b,
    };
    if model.bias.is_finite() && model.weights.iter().all(|v| v.is_finite()) {
        Ok(TrainedHead {
            model,
            config: *config,
            converged: outcome.converged,
            iterations_used: outcome.iterations,
            final_gradient_norm: outcome.gradient_norm,
        })
    } else {
        Err(HeadError::NonFiniteObjective {
            iteration: outcome.iterations,
        })
    }
}

struct SolveOutcome {
    theta: Vec<f64>,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Backtracking Armijo search along `direction`; returns the accepted step
/// and new (theta, value), or None when no acceptable step exists.
fn line_search(
    objective: &Objective,
    theta: &[f64],
    value: f64,
    grad: &[f64],
    direction: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let slope = dot(grad, direction);
    if slope >= 0.0 {
        return None;
    }
    let mut step = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let candidate: Vec<f64> = theta
            .iter()
            .zip(direction)
            .map(|(t, d)| t + step * d)
            .collect();
        let candidate_value = objective.value(&candidate);
        if candidate_value.is_finite() && candidate_value <= value + ARMIJO_C1 * step * slope {
            return Some((candidate, candidate_value));
        }
        step *= 0.5;
    }
    None
}

fn lbfgs(objective: &Objective, config: &HeadConfig) -> Result<SolveOutcome, HeadError> {
    const MEMORY: usize = 10;
    let n_params = objective.dim + 1;
    let mut theta = vec![0.0; n_params];
    let (mut value, mut grad) = objective.value_and_gradient(&theta);
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;

    for iter in 0..config.max_iterations {
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(HeadError::NonFiniteObjective { iteration: iter });
        }
        if norm(&grad) <= config.tolerance {
            break;
        }
        iterations = iter + 1;

        // two-loop recursion
        let mut direction: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &direction);
            for (d, yj) in direction.iter_mut().zip(yv) {
                *d -= alpha * yj;
            }
            alphas.push(alpha);
        }
        if let Some((s, yv, _)) = history.last() {
            let scale = dot(s, yv) / dot(yv, yv).max(f64::MIN_POSITIVE);
            for d in direction.iter_mut() {
                *d *= scale;
            }
        }
        for ((s, yv, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * dot(yv, &direction);
            for (d, sj) in direction.iter_mut().zip(s) {
                *d += (alpha - beta) * sj;
            }
        }

        let step = match line_search(objective, &theta, value, &grad, &direction) {
            Some(hit) => hit,
            None => {
                // curvature memory went stale; retry along steepest descent
                history.clear();
                let steepest: Vec<f64> = grad.iter().map(|g| -g).collect();
                match line_search(objective, &theta, value, &grad, &steepest) {
                    Some(hit) => hit,
                    None => break,
                }
            }
        };
        let (new_theta, new_value) = step;
        let (_, new_grad) = objective.value_and_gradient(&new_theta);

        let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            if history.len() == MEMORY {
                history.remove(0);
            }
            history.push((s, yv, 1.0 / sy));
        }
        theta = new_theta;
        value = new_value;
        grad = new_grad;
    }

    let gradient_norm = norm(&grad);
    Ok(SolveOutcome {
        theta,
        converged: gradient_norm <= config.tolerance,
        iterations,
        gradient_norm,
    })
}

fn newton_cg(objective: &Objective, config: &HeadConfig) -> Result<SolveOutcome, HeadError> {
    let n_params = objective.dim + 1;
    let mut theta = vec![0.0; n_params];
    let mut iterations = 0;

    for iter in 0..config.max_iterations {
        let (value, grad) = objective.value_and_gradient(&theta);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(HeadError::NonFiniteObjective { iteration: iter });
        }
        let gnorm = norm(&grad);
        if gnorm <= config.tolerance {
            break;
        }
        iterations = iter + 1;

        // inexact Newton step: CG on H d = -g with a forcing tolerance
        let cg_tol = (gnorm.sqrt().min(0.5) * gnorm).max(1e-18);
        let mut d = vec![0.0; n_params];
        let mut residual: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut p = residual.clone();
        let mut rr = dot(&residual, &residual);
        for _ in 0..2 * n_params {
            if rr.sqrt() <= cg_tol {
                break;
            }
            let hp = objective.hessian_vec(&theta, &p);
            let php = dot(&p, &hp);
            if php <= 0.0 {
                break;
            }
            let alpha = rr / php;
            for ((dj, pj), hpj) in d.iter_mut().zip(&p).zip(&hp) {
                *dj += alpha * pj;
                let _ = hpj;
            }
            for (rj, hpj) in residual.iter_mut().zip(&hp) {
                *rj -= alpha * hpj;
            }
            let rr_new = dot(&residual, &residual);
            let beta = rr_new / rr;
            for (pj, rj) in p.iter_mut().zip(&residual) {
                *pj = rj + beta * *pj;
            }
            rr = rr_new;
        }
        if d.iter().all(|&x| x == 0.0) {
            d = grad.iter().map(|g| -g).collect();
        }

        match line_search(objective, &theta, value, &grad, &d) {
            Some((new_theta, _)) => theta = new_theta,
            None => break,
        }
    }

    let (_, grad) = objective.value_and_gradient(&theta);
    let gradient_norm = norm(&grad);
    Ok(SolveOutcome {
        theta,
        converged: gradient_norm <= config.tolerance,
        iterations,
        gradient_norm,
    })
}

/// Cyclic coordinate Newton with per-coordinate backtracking. One sweep over
/// all coordinates counts as one iteration.
#[allow(clippy::needless_range_loop)] // j indexes theta, x columns, and the bias slot alike
fn coordinate_newton(objective: &Objective, config: &HeadConfig) -> Result<SolveOutcome, HeadError> {
    let dim = objective.dim;
    let n = objective.y.len() as f64;
    let mut theta = vec![0.0; dim + 1];
    let mut iterations = 0;

    for sweep in 0..config.max_iterations {
        let mut z = objective.margins(&theta);
        let mut value = objective.value_from_margins(&theta, &z);
        if !value.is_finite() {
            return Err(HeadError::NonFiniteObjective { iteration: sweep });
        }
        let (_, grad) = objective.value_and_gradient(&theta);
        if norm(&grad) <= config.tolerance {
            break;
        }
        iterations = sweep + 1;

        for j in 0..=dim {
            let is_bias = j == dim;
            let mut g = 0.0;
            let mut h = 0.0;
            for (i, &zi) in z.iter().enumerate() {
                let p = sigmoid(zi);
                let xij = if is_bias { 1.0 } else { objective.x[i][j] };
                g += (p - objective.y[i]) * xij;
                h += p * (1.0 - p) * xij * xij;
            }
            g /= n;
            h /= n;
            if !is_bias {
                g += objective.l2 * theta[j];
                h += objective.l2;
            }
            if g == 0.0 {
                continue;
            }
            let mut delta = -g / h.max(1e-12);
            let mut accepted = false;
            for _ in 0..30 {
                let trial_value = {
                    let mut wj_term = 0.0;
                    if !is_bias {
                        let old = theta[j];
                        let new = old + delta;
                        wj_term = 0.5 * objective.l2 * (new * new - old * old);
                    }
                    let data: f64 = z
                        .iter()
                        .enumerate()
                        .map(|(i, &zi)| {
                            let xij = if is_bias { 1.0 } else { objective.x[i][j] };
                            let zn = zi + delta * xij;
                            softplus(zn) - objective.y[i] * zn
                                - (softplus(zi) - objective.y[i] * zi)
                        })
                        .sum();
                    value + data / n + wj_term
                };
                if trial_value.is_finite() && trial_value <= value + ARMIJO_C1 * delta * g {
                    for (i, zi) in z.iter_mut().enumerate() {
                        let xij = if is_bias { 1.0 } else { objective.x[i][j] };
                        *zi += delta * xij;
                    }
                    theta[j] += delta;
                    value = trial_value;
                    accepted = true;
                    break;
                }
                delta *= 0.5;
            }
            let _ = accepted;
        }
    }

    let (_, grad) = objective.value_and_gradient(&theta);
    let gradient_norm = norm(&grad);
    Ok(SolveOutcome {
        theta,
        converged: gradient_norm <= config.tolerance,
        iterations,
        gradient_norm,
    })
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

const HEAD_FORMAT_VERSION: u32 = 1;

impl TrainedHead {
    /// Flat text format: dimension, weights row, bias, config echo,
    /// convergence flag.
    pub fn to_text(&self) -> String {
        let weights: Vec<String> = self.model.weights.iter().map(|w| w.to_string()).collect();
        format!(
            "head {HEAD_FORMAT_VERSION}\n\
             dimension {}\n\
             weights {}\n\
             bias {}\n\
             solver {}\n\
             max_iterations {}\n\
             l2_strength {}\n\
             tolerance {}\n\
             converged {}\n\
             iterations_used {}\n\
             final_gradient_norm {}\n",
            self.model.weights.len(),
            weights.join(" "),
            self.model.bias,
            self.config.solver,
            self.config.max_iterations,
            self.config.l2_strength,
            self.config.tolerance,
            self.converged,
            self.iterations_used,
            self.final_gradient_norm,
        )
    }

    pub fn from_text(text: &str) -> Result<TrainedHead, HeadError> {
        let bad = |msg: String| HeadError::BadState(msg);
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match line.split_once(' ') {
                Some((key, value)) => {
                    fields.insert(key.to_string(), value.trim().to_string());
                }
                None => return Err(bad(format!("malformed line '{line}'"))),
            }
        }
        let get = |key: &str| {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| HeadError::BadState(format!("missing field '{key}'")))
        };
        if get("head")? != HEAD_FORMAT_VERSION.to_string() {
            return Err(bad("unsupported head format version".into()));
        }
        let dimension: usize = get("dimension")?
            .parse()
            .map_err(|_| bad("bad dimension".into()))?;
        let weights: Result<Vec<f64>, _> = get("weights")?
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect();
        let weights = weights.map_err(|_| bad("bad weights".into()))?;
        if weights.len() != dimension {
            return Err(bad(format!(
                "dimension says {dimension} but {} weights present",
                weights.len()
            )));
        }
        Ok(TrainedHead {
            model: HeadModel {
                weights,
                bias: get("bias")?.parse().map_err(|_| bad("bad bias".into()))?,
            },
            config: HeadConfig {
                max_iterations: get("max_iterations")?
                    .parse()
                    .map_err(|_| bad("bad max_iterations".into()))?,
                solver: get("solver")?
                    .parse()
                    .map_err(|e: String| bad(e))?,
                l2_strength: get("l2_strength")?
                    .parse()
                    .map_err(|_| bad("bad l2_strength".into()))?,
                tolerance: get("tolerance")?
                    .parse()
                    .map_err(|_| bad("bad tolerance".into()))?,
            },
            converged: get("converged")?
                .parse()
                .map_err(|_| bad("bad converged flag".into()))?,
            iterations_used: get("iterations_used")?
                .parse()
                .map_err(|_| bad("bad iterations_used".into()))?,
            final_gradient_norm: get("final_gradient_norm")?
                .parse()
                .map_err(|_| bad("bad final_gradient_norm".into()))?,
        })
    }
}

//! Sentence-encoder contract plus a deterministic, trainable toy encoder.
//!
//! Everything downstream (pair fine-tuning, the classifier head, artifacts)
//! talks to [`EmbeddingBackend`] only. The pretrained transformer encoders
//! from the model registry are install-time extras consumed through this
//! same contract; the bundled [`ToyEncoder`] keeps the whole pipeline
//! testable at desk scale.

mod toy;

pub use toy::ToyEncoder;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pairgen::SentencePair;

/// A fixed-dimension sentence embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity with the zero-vector convention `cos(0, _) = 0`.
///
/// The denominator is computed as `sqrt(|a|^2 * |b|^2)` so that identical
/// vectors score exactly 1.0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let na2 = dot(&a.values, &a.values);
    let nb2 = dot(&b.values, &b.values);
    if na2 == 0.0 || nb2 == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na2 * nb2).sqrt()
}

pub const DEFAULT_BATCH_SIZE: usize = 16;

/// Settings for one fine-tuning run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineTuneConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl FineTuneConfig {
    pub fn new(learning_rate: f64, epochs: usize, seed: u64) -> FineTuneConfig {
        FineTuneConfig {
            learning_rate,
            epochs,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
        }
    }
}

/// Per-epoch mean pair loss, one entry per configured epoch, each computed
/// over the full pair set with the post-epoch encoder state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("backend '{id}' unavailable: {reason}")]
    BackendUnavailable { id: String, reason: String },
    #[error("unknown backend id '{id}'")]
    UnknownBackend { id: String },
    #[error("fine-tuning needs a non-empty pair set")]
    NoPairs,
    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },
    #[error("bad backend state: {0}")]
    BadState(String),
}

/// A fine-tunable text-to-vector encoder.
///
/// `encode` on a frozen backend is pure and safe for concurrent callers;
/// `fine_tune` takes the backend exclusively. Train one clone per category.
pub trait EmbeddingBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn dimension(&self) -> usize;

    /// One vector per input, order preserved, deterministic for fixed state.
    fn encode(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    /// Updates the encoder in place against the cosine-regression loss
    /// `(target - cos(encode(a), encode(b)))^2`, returning per-epoch losses.
    fn fine_tune(
        &mut self,
        pairs: &[SentencePair],
        config: &FineTuneConfig,
    ) -> Result<TrainingLog, EmbedError>;

    fn clone_backend(&self) -> Box<dyn EmbeddingBackend>;

    /// Serialized trainable state, parseable by [`restore_backend`].
    fn state_text(&self) -> String;

    fn encode_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut vectors = self.encode(&[text.to_string()])?;
        Ok(vectors.remove(0))
    }
}

impl std::fmt::Debug for dyn EmbeddingBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EmbeddingBackend({})", self.backend_id())
    }
}

/// Mean cosine-regression loss of `pairs` under the backend's current state.
/// This is the quantity `fine_tune` logs after each epoch.
pub fn mean_pair_loss(
    backend: &dyn EmbeddingBackend,
    pairs: &[SentencePair],
) -> Result<f64, EmbedError> {
    if pairs.is_empty() {
        return Err(EmbedError::NoPairs);
    }
    let mut total = 0.0;
    for pair in pairs {
        let a = backend.encode_one(&pair.text_a)?;
        let b = backend.encode_one(&pair.text_b)?;
        let residual = pair.target - cosine(&a, &b);
        total += residual * residual;
    }
    Ok(total / pairs.len() as f64)
}

// ---------------------------------------------------------------------------
// Backend registry
// ---------------------------------------------------------------------------

pub const TOY_BACKEND_PREFIX: &str = "toy-hash-encoder";

/// Pretrained sentence-encoder identifiers known to the registry. Loading
/// them requires the optional external model runtime, which is not part of
/// the core build.
pub const EXTERNAL_BACKEND_IDS: [&str; 4] = [
    "paraphrase-MiniLM-L3-v2",
    "all-MiniLM-L6-v2",
    "all-mpnet-base-v2",
    "st-codesearch-distilroberta-base",
];

pub const DEFAULT_TOY_DIMENSION: usize = 64;

/// Instantiates a backend by id.
///
/// Toy ids take the form `toy-hash-encoder[:<dimension>[:<seed>]]`.
pub fn create_backend(id: &str) -> Result<Box<dyn EmbeddingBackend>, EmbedError> {
    if let Some(rest) = id.strip_prefix(TOY_BACKEND_PREFIX) {
        let (dimension, seed) = parse_toy_params(rest, id)?;
        return Ok(Box::new(ToyEncoder::new(dimension, seed)));
    }
    if EXTERNAL_BACKEND_IDS.contains(&id) {
        return Err(EmbedError::BackendUnavailable {
            id: id.to_string(),
            reason: "pretrained sentence encoders are an optional install-time extra; \
                     see the full-scale runbook in the README"
                .to_string(),
        });
    }
    Err(EmbedError::UnknownBackend { id: id.to_string() })
}

/// Rebuilds a backend from a serialized state produced by `state_text`.
pub fn restore_backend(id: &str, state_text: &str) -> Result<Box<dyn EmbeddingBackend>, EmbedError> {
    if id.starts_with(TOY_BACKEND_PREFIX) {
        return Ok(Box::new(ToyEncoder::from_state_text(state_text)?));
    }
    create_backend(id)
}

/// Every id the registry understands.
pub fn known_backend_ids() -> Vec<String> {
    let mut ids = vec![TOY_BACKEND_PREFIX.to_string()];
    ids.extend(EXTERNAL_BACKEND_IDS.iter().map(|s| s.to_string()));
    ids
}

fn parse_toy_params(rest: &str, full_id: &str) -> Result<(usize, u64), EmbedError> {
    if rest.is_empty() {
        return Ok((DEFAULT_TOY_DIMENSION, 0));
    }
    let bad = || EmbedError::UnknownBackend {
        id: full_id.to_string(),
    };
    let rest = rest.strip_prefix(':').ok_or_else(bad)?;
    let mut parts = rest.split(':');
    let dimension: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(bad)?;
    let seed: u64 = match parts.next() {
        Some(s) => s.parse().map_err(|_| bad())?,
        None => 0,
    };
    if parts.next().is_some() || dimension < 2 {
        return Err(bad());
    }
    Ok((dimension, seed))
}

//! Hashed-bag-of-tokens encoder with a trainable linear map.
//!
//! `encode(text) = W * phi(text)` where `phi` counts lowercased tokens
//! hashed (FNV-1a) into `dimension` buckets and `W` is a square matrix
//! initialized to identity plus small seeded uniform noise. Gradients of
//! the cosine-regression pair loss with respect to `W` are analytic, which
//! makes the encoder a finite-difference-checkable stand-in for the real
//! transformer backends.
//!
//! State serializes to a flat text format:
//!
//! ```text
//! toy-hash-encoder 1
//! dimension <d>
//! seed <s>
//! <d rows of d space-separated f64 values>
//! ```

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    mean_pair_loss, EmbedError, EmbeddingBackend, EmbeddingVector, FineTuneConfig, TrainingLog,
    TOY_BACKEND_PREFIX,
};
use crate::pairgen::SentencePair;

const INIT_NOISE: f64 = 0.01;
const STATE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ToyEncoder {
    backend_id: String,
    dimension: usize,
    seed: u64,
    /// Row-major `dimension x dimension` trainable matrix.
    weights: Vec<f64>,
}

impl ToyEncoder {
    /// Identity-plus-noise initialization; `dimension` must be at least 2.
    pub fn new(dimension: usize, seed: u64) -> ToyEncoder {
        assert!(dimension >= 2, "toy encoder needs dimension >= 2");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = vec![0.0; dimension * dimension];
        for i in 0..dimension {
            for j in 0..dimension {
                let noise = rng.gen_range(-INIT_NOISE..INIT_NOISE);
                weights[i * dimension + j] = if i == j { 1.0 + noise } else { noise };
            }
        }
        ToyEncoder {
            backend_id: format!("{TOY_BACKEND_PREFIX}:{dimension}:{seed}"),
            dimension,
            seed,
            weights,
        }
    }

    /// Sparse hashed token counts for one text, sorted by bucket.
    pub fn features(&self, text: &str) -> Vec<(usize, f64)> {
        let mut counts = std::collections::BTreeMap::new();
        for token in tokenize(text) {
            let bucket = (fnv1a(token.as_bytes()) % self.dimension as u64) as usize;
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
        counts.into_iter().collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn apply(&self, features: &[(usize, f64)]) -> Vec<f64> {
        let d = self.dimension;
        let mut out = vec![0.0; d];
        for &(j, v) in features {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.weights[i * d + j] * v;
            }
        }
        out
    }

    /// Cosine-regression loss of a single pair under the current weights.
    pub fn pair_loss(&self, pair: &SentencePair) -> f64 {
        let a = self.apply(&self.features(&pair.text_a));
        let b = self.apply(&self.features(&pair.text_b));
        let residual = pair.target - cosine_raw(&a, &b);
        residual * residual
    }

    /// Analytic gradient of the mean pair loss with respect to the weight
    /// matrix, row-major.
    pub fn loss_gradient(&self, pairs: &[SentencePair]) -> Vec<f64> {
        let d = self.dimension;
        let mut grad = vec![0.0; d * d];
        for pair in pairs {
            self.accumulate_pair_gradient(pair, &mut grad);
        }
        let scale = 1.0 / pairs.len().max(1) as f64;
        for g in &mut grad {
            *g *= scale;
        }
        grad
    }

    fn accumulate_pair_gradient(&self, pair: &SentencePair, grad: &mut [f64]) {
        let d = self.dimension;
        let fa = self.features(&pair.text_a);
        let fb = self.features(&pair.text_b);
        let a = self.apply(&fa);
        let b = self.apply(&fb);
        let na2 = super::dot(&a, &a);
        let nb2 = super::dot(&b, &b);
        if na2 == 0.0 || nb2 == 0.0 {
            // cos defined as 0 here; the loss is locally constant in W
            return;
        }
        let denom = (na2 * nb2).sqrt();
        let ab = super::dot(&a, &b);
        let cos = ab / denom;
        let dloss_dcos = -2.0 * (pair.target - cos);

        // d cos / d a = (b - (ab / |a|^2) a) / (|a||b|), symmetrically for b
        let inv = 1.0 / denom;
        for i in 0..d {
            let ga = dloss_dcos * (b[i] - ab / na2 * a[i]) * inv;
            let gb = dloss_dcos * (a[i] - ab / nb2 * b[i]) * inv;
            if ga != 0.0 {
                for &(j, v) in &fa {
                    grad[i * d + j] += ga * v;
                }
            }
            if gb != 0.0 {
                for &(j, v) in &fb {
                    grad[i * d + j] += gb * v;
                }
            }
        }
    }

    pub fn from_state_text(text: &str) -> Result<ToyEncoder, EmbedError> {
        let bad = |msg: &str| EmbedError::BadState(msg.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty state"))?;
        let expected_header = format!("{TOY_BACKEND_PREFIX} {STATE_FORMAT_VERSION}");
        if header.trim() != expected_header {
            return Err(bad(&format!(
                "unexpected header '{header}', expected '{expected_header}'"
            )));
        }
        let dimension: usize = parse_kv(lines.next(), "dimension")?;
        let seed: u64 = parse_kv(lines.next(), "seed")?;
        if dimension < 2 {
            return Err(bad("dimension must be >= 2"));
        }
        let mut weights = Vec::with_capacity(dimension * dimension);
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
            let row = row.map_err(|_| bad(&format!("row {i}: unparseable value")))?;
            if row.len() != dimension {
                return Err(bad(&format!(
                    "row {i}: expected {dimension} values, got {}",
                    row.len()
                )));
            }
            weights.extend(row);
        }
        if weights.len() != dimension * dimension {
            return Err(bad(&format!(
                "expected {} weight rows, got {}",
                dimension,
                weights.len() / dimension
            )));
        }
        Ok(ToyEncoder {
            backend_id: format!("{TOY_BACKEND_PREFIX}:{dimension}:{seed}"),
            dimension,
            seed,
            weights,
        })
    }
}

fn parse_kv<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T, EmbedError> {
    let line = line.ok_or_else(|| EmbedError::BadState(format!("missing '{key}' line")))?;
    let value = line
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| EmbedError::BadState(format!("expected '{key} <value>', got '{line}'")))?;
    value
        .parse()
        .map_err(|_| EmbedError::BadState(format!("unparseable {key}: '{value}'")))
}

impl EmbeddingBackend for ToyEncoder {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn encode(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts
            .iter()
            .map(|t| EmbeddingVector {
                values: self.apply(&self.features(t)),
            })
            .collect())
    }

    fn fine_tune(
        &mut self,
        pairs: &[SentencePair],
        config: &FineTuneConfig,
    ) -> Result<TrainingLog, EmbedError> {
        if pairs.is_empty() {
            return Err(EmbedError::NoPairs);
        }
        let d = self.dimension;
        let batch_size = config.batch_size.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let mut epoch_losses = Vec::with_capacity(config.epochs);

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(batch_size) {
                let mut grad = vec![0.0; d * d];
                for &idx in batch {
                    self.accumulate_pair_gradient(&pairs[idx], &mut grad);
                }
                let step = config.learning_rate / batch.len() as f64;
                for (w, g) in self.weights.iter_mut().zip(&grad) {
                    *w -= step * g;
                }
            }
            if self.weights.iter().any(|w| !w.is_finite()) {
                return Err(EmbedError::NonFiniteLoss {
                    epoch,
                    detail: "weight matrix diverged".to_string(),
                });
            }
            let loss = mean_pair_loss(self, pairs)?;
            if !loss.is_finite() {
                return Err(EmbedError::NonFiniteLoss {
                    epoch,
                    detail: format!("epoch loss = {loss}"),
                });
            }
            epoch_losses.push(loss);
        }
        Ok(TrainingLog { epoch_losses })
    }

    fn clone_backend(&self) -> Box<dyn EmbeddingBackend> {
        Box::new(self.clone())
    }

    fn state_text(&self) -> String {
        let d = self.dimension;
        let mut out = String::new();
        out.push_str(&format!("{TOY_BACKEND_PREFIX} {STATE_FORMAT_VERSION}\n"));
        out.push_str(&format!("dimension {d}\n"));
        out.push_str(&format!("seed {}\n", self.seed));
        for i in 0..d {
            let row: Vec<String> = (0..d).map(|j| self.weights[i * d + j].to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn cosine_raw(a: &[f64], b: &[f64]) -> f64 {
    let na2 = super::dot(a, a);
    let nb2 = super::dot(b, b);
    if na2 == 0.0 || nb2 == 0.0 {
        return 0.0;
    }
    super::dot(a, b) / (na2 * nb2).sqrt()
}

fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '@' || c == '_'))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

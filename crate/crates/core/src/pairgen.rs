//! Contrastive sentence-pair generation for embedding fine-tuning.
//!
//! For each of `iterations` rounds, every input sentence is paired once with
//! a uniformly drawn same-label partner (target 1.0) and once with a
//! uniformly drawn different-label partner (target 0.0), so the output holds
//! exactly `2 * iterations * n` pairs, half of them positive. Sampling is
//! uniform with replacement and driven solely by the seed; a sentence pairs
//! with itself only when it is the sole member of its label.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A contrastive training pair with a cosine-similarity regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub text_a: String,
    pub text_b: String,
    /// 1.0 when the source labels agree, 0.0 when they differ.
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGenConfig {
    /// Number of generation rounds; 0 yields an empty pair set.
    pub iterations: u32,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PairGenError {
    #[error("pair generation needs both labels, got {positives} positive / {negatives} negative")]
    SingleClassInput { positives: usize, negatives: usize },
}

/// Generates `2 * config.iterations * samples.len()` contrastive pairs.
pub fn generate_pairs(
    samples: &[(String, bool)],
    config: &PairGenConfig,
) -> Result<Vec<SentencePair>, PairGenError> {
    if config.iterations == 0 {
        return Ok(Vec::new());
    }

    let positives: Vec<usize> = indices_with_label(samples, true);
    let negatives: Vec<usize> = indices_with_label(samples, false);
    if positives.is_empty() || negatives.is_empty() {
        return Err(PairGenError::SingleClassInput {
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::with_capacity(2 * config.iterations as usize * samples.len());
    for _ in 0..config.iterations {
        for (i, (text, label)) in samples.iter().enumerate() {
            let (same, different) = if *label {
                (&positives, &negatives)
            } else {
                (&negatives, &positives)
            };
            let partner = sample_partner(same, i, &mut rng);
            pairs.push(SentencePair {
                text_a: text.clone(),
                text_b: samples[partner].0.clone(),
                target: 1.0,
            });
            let partner = different[rng.gen_range(0..different.len())];
            pairs.push(SentencePair {
                text_a: text.clone(),
                text_b: samples[partner].0.clone(),
                target: 0.0,
            });
        }
    }
    Ok(pairs)
}

fn indices_with_label(samples: &[(String, bool)], label: bool) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, (_, l))| *l == label)
        .map(|(i, _)| i)
        .collect()
}

/// Uniform draw from `pool` excluding `own`; falls back to `own` when it is
/// the only candidate.
fn sample_partner(pool: &[usize], own: usize, rng: &mut ChaCha8Rng) -> usize {
    if pool.len() == 1 {
        return pool[0];
    }
    loop {
        let candidate = pool[rng.gen_range(0..pool.len())];
        if candidate != own {
            return candidate;
        }
    }
}

/// Debug dump with columns text_a, text_b, target.
pub fn dump_pairs_csv<W: std::io::Write>(pairs: &[SentencePair], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["text_a", "text_b", "target"])?;
    for p in pairs {
        writer.write_record([&p.text_a, &p.text_b, &p.target.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

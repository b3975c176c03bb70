//! Synthetic dataset generators.
//!
//! Two uses: trying the toolkit without the competition data (see the README
//! quickstart), and desk-scale tests that need datasets with known
//! structure. Everything here is seeded and deterministic.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    reference_counts, CategoryDataset, CategoryId, CommentSample, CorpusError, Language,
    Partition, SampleCounts,
};

/// Vocabulary used for positive sentences of the token-disjoint fixture.
const POSITIVE_TOKENS: [&str; 8] = [
    "@author", "written", "maintainer", "ownership", "contact", "contributed", "licensed",
    "attribution",
];
/// Vocabulary used for negative sentences; shares no token with the
/// positive list, so the fixture is separable at the feature level.
const NEGATIVE_TOKENS: [&str; 8] = [
    "returns", "computes", "buffer", "index", "stream", "parses", "value", "cache",
];
const CLASS_FILES: [&str; 4] = ["Widget.java", "Parser.java", "Cache.java", "Stream.java"];

/// A category whose positive and negative sentences draw from disjoint
/// vocabularies (`train_per_class`/`test_per_class` samples per class per
/// split). A working pipeline must reach F1 = 1.0 on it.
pub fn token_disjoint_category(
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> CategoryDataset {
    let category = CategoryId::official(Language::Java, "Ownership").expect("official category");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut next_id = 0i64;
    for (partition, per_class) in [
        (Partition::Train, train_per_class),
        (Partition::Test, test_per_class),
    ] {
        for label in [true, false] {
            let vocab: &[&str] = if label { &POSITIVE_TOKENS } else { &NEGATIVE_TOKENS };
            for _ in 0..per_class {
                let words: Vec<&str> = (0..rng.gen_range(3..=6))
                    .map(|_| vocab[rng.gen_range(0..vocab.len())])
                    .collect();
                samples.push(CommentSample {
                    id: next_id,
                    text: words.join(" "),
                    class_file: CLASS_FILES[rng.gen_range(0..CLASS_FILES.len())].to_string(),
                    partition,
                    category: category.clone(),
                    label,
                });
                next_id += 1;
            }
        }
    }
    CategoryDataset::from_samples(category, samples)
}

/// Generates one category with exactly the requested counts. Sentence text
/// is filler; only the shape matters.
pub fn category_with_counts(
    category: &CategoryId,
    counts: &SampleCounts,
    seed: u64,
) -> CategoryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut next_id = 0i64;
    let mut push = |n: usize, partition: Partition, label: bool, rng: &mut ChaCha8Rng| {
        let polarity = if label { "about" } else { "unrelated to" };
        for _ in 0..n {
            samples.push(CommentSample {
                id: next_id,
                text: format!(
                    "generated sentence {next_id} {polarity} {} number {}",
                    category.name,
                    rng.gen_range(0..100_000)
                ),
                class_file: CLASS_FILES[rng.gen_range(0..CLASS_FILES.len())].to_string(),
                partition,
                category: category.clone(),
                label,
            });
            next_id += 1;
        }
    };
    push(counts.train_pos, Partition::Train, true, &mut rng);
    push(counts.train_neg, Partition::Train, false, &mut rng);
    push(counts.test_pos, Partition::Test, true, &mut rng);
    push(counts.test_neg, Partition::Test, false, &mut rng);
    CategoryDataset::from_samples(category.clone(), samples)
}

/// Writes a full 19-category corpus in the on-disk layout the CLI expects
/// (`<root>/<language>/<category>.csv`), with per-category counts matching
/// the published reference table exactly.
pub fn write_reference_shaped_corpus(root: &Path, seed: u64) -> Result<(), CorpusError> {
    for (i, entry) in reference_counts().iter().enumerate() {
        let dataset = category_with_counts(&entry.id(), &entry.counts(), seed ^ i as u64);
        let dir = root.join(entry.language.to_string());
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.csv", entry.category.to_ascii_lowercase()));
        crate::corpus::save_category(&dataset, &path)?;
    }
    Ok(())
}

//! On-disk classifier artifacts.
//!
//! An artifact is a directory holding a versioned JSON manifest, the head
//! parameters (`head.txt`), and the fine-tuned backend state
//! (`backend_state.txt`). Loading an artifact reproduces bit-identical
//! predictions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Hyperparams, PipelineError, TrainOptions};
use crate::corpus::{format_text, CategoryId, FormattingVariant};
use crate::embedder::{restore_backend, EmbeddingBackend};
use crate::head::{predict_proba, TrainedHead};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HEAD_FILE: &str = "head.txt";
pub const BACKEND_STATE_FILE: &str = "backend_state.txt";

/// Reproducibility metadata recorded at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub pair_count: usize,
    pub created_unix: u64,
    pub train_wall_ms: u64,
    pub epoch_losses: Vec<f64>,
}

/// A trained per-category classifier: fine-tuned backend, logistic head,
/// and everything needed to rebuild it from disk.
pub struct ClassifierArtifact {
    pub category: CategoryId,
    pub variant: FormattingVariant,
    pub backend: Box<dyn EmbeddingBackend>,
    pub head: TrainedHead,
    pub hyperparams: Hyperparams,
    pub options: TrainOptions,
    pub meta: TrainingMeta,
}

impl std::fmt::Debug for ClassifierArtifact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassifierArtifact")
            .field("category", &self.category)
            .field("variant", &self.variant)
            .field("backend_id", &self.backend.backend_id())
            .field("hyperparams", &self.hyperparams)
            .field("meta", &self.meta)
            .finish()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    category: CategoryId,
    variant: FormattingVariant,
    backend_id: String,
    hyperparams: Hyperparams,
    options: TrainOptions,
    meta: TrainingMeta,
}

impl ClassifierArtifact {
    /// (label, probability) for already-formatted inputs, in order.
    pub fn predict_formatted(&self, inputs: &[String]) -> Result<Vec<(bool, f64)>, PipelineError> {
        let embeddings = self.backend.encode(inputs)?;
        let mut out = Vec::with_capacity(embeddings.len());
        for e in &embeddings {
            let p = predict_proba(&self.head.model, e)?;
            out.push((p >= self.options.threshold, p));
        }
        Ok(out)
    }

    /// Classifies one sentence, applying the artifact's formatting variant.
    /// A `WithClassname` artifact requires the classname.
    pub fn classify(
        &self,
        sentence: &str,
        classname: Option<&str>,
    ) -> Result<(bool, f64), PipelineError> {
        let input = match (self.variant, classname) {
            (FormattingVariant::WithClassname, Some(c)) => {
                format_text(sentence, c, FormattingVariant::WithClassname)
            }
            (FormattingVariant::WithClassname, None) => {
                return Err(PipelineError::VariantMismatch {
                    variant: self.variant,
                })
            }
            (FormattingVariant::SentenceOnly, _) => sentence.to_string(),
        };
        Ok(self.predict_formatted(&[input])?.remove(0))
    }

    /// Directory name artifacts are stored under: `<language>-<category>`.
    pub fn dir_name(&self) -> String {
        format!(
            "{}-{}",
            self.category.language,
            self.category.name.to_ascii_lowercase()
        )
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format_version: ARTIFACT_FORMAT_VERSION,
            category: self.category.clone(),
            variant: self.variant,
            backend_id: self.backend.backend_id().to_string(),
            hyperparams: self.hyperparams,
            options: self.options,
            meta: self.meta.clone(),
        };
        let manifest_json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| PipelineError::Artifact(e.to_string()))?;
        fs::write(dir.join(MANIFEST_FILE), manifest_json)?;
        fs::write(dir.join(HEAD_FILE), self.head.to_text())?;
        fs::write(dir.join(BACKEND_STATE_FILE), self.backend.state_text())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ClassifierArtifact, PipelineError> {
        let manifest_text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest: Manifest = serde_json::from_str(&manifest_text)
            .map_err(|e| PipelineError::Artifact(format!("manifest: {e}")))?;
        if manifest.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(PipelineError::Artifact(format!(
                "unsupported artifact format version {}",
                manifest.format_version
            )));
        }
        let head = TrainedHead::from_text(&fs::read_to_string(dir.join(HEAD_FILE))?)?;
        let state = fs::read_to_string(dir.join(BACKEND_STATE_FILE))?;
        let backend = restore_backend(&manifest.backend_id, &state)?;
        Ok(ClassifierArtifact {
            category: manifest.category,
            variant: manifest.variant,
            backend,
            head,
            hyperparams: manifest.hyperparams,
            options: manifest.options,
            meta: manifest.meta,
        })
    }
}

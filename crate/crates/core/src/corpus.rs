//! Loading, validation, and input formatting for the per-category
//! comment-sentence CSV datasets.
//!
//! Each category is an independent binary classification problem shipped as
//! one CSV file with six columns (canonical header names below, remappable
//! through [`ColumnAliases`]):
//!
//! ```text
//! comment_sentence_id, comment_sentence, class, partition, category, instance_type
//! ```
//!
//! `partition` accepts `train`/`test` (case-insensitive) or the numeric
//! encoding `0`/`1` used by the competition files. `instance_type` must be
//! `0` or `1`. Text is kept verbatim apart from stripping trailing newline
//! characters; normalization belongs to the embedding backend.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source language of a comment-sentence category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Pharo,
    Python,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::Java, Language::Pharo, Language::Python];

    pub fn parse(s: &str) -> Option<Language> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Some(Language::Java),
            "pharo" => Some(Language::Pharo),
            "python" => Some(Language::Python),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Language::Java => write!(f, "java"),
            Language::Pharo => write!(f, "pharo"),
            Language::Python => write!(f, "python"),
        }
    }
}

/// A language-specific category key, e.g. java/Ownership.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategoryId {
    pub language: Language,
    #[serde(rename = "category")]
    pub name: String,
}

impl CategoryId {
    /// Builds a category key without checking it against the official list.
    /// Synthetic or ad-hoc categories are allowed; `validate_against_reference`
    /// reports them as unknown.
    pub fn new(language: Language, name: impl Into<String>) -> CategoryId {
        CategoryId {
            language,
            name: name.into(),
        }
    }

    /// Resolves one of the 19 official categories, canonicalizing the name
    /// (case-insensitive, long-form aliases accepted).
    pub fn official(language: Language, name: &str) -> Result<CategoryId, CorpusError> {
        match canonical_category_name(language, name) {
            Some(canonical) => Ok(CategoryId::new(language, canonical)),
            None => Err(CorpusError::UnknownCategory {
                language,
                name: name.to_string(),
            }),
        }
    }

    /// `language/name` form used on the command line and in file paths.
    pub fn slug(&self) -> String {
        format!("{}/{}", self.language, self.name.to_ascii_lowercase())
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.language, self.name)
    }
}

/// Train/test split marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

impl Partition {
    fn parse(s: &str) -> Option<Partition> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "0" => Some(Partition::Train),
            "test" | "1" => Some(Partition::Test),
            _ => None,
        }
    }

    /// Numeric encoding used by the competition CSVs.
    fn as_numeric(&self) -> &'static str {
        match self {
            Partition::Train => "0",
            Partition::Test => "1",
        }
    }
}

/// One labeled comment sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentSample {
    pub id: i64,
    /// The sentence text, verbatim apart from trailing-newline stripping.
    pub text: String,
    /// Class or file the sentence was extracted from, e.g. "Checksum.java".
    pub class_file: String,
    pub partition: Partition,
    pub category: CategoryId,
    /// true = positive instance (instance_type 1).
    pub label: bool,
}

/// Whether classifier inputs carry the classname suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormattingVariant {
    /// "{sentence} | {classname}"
    WithClassname,
    /// The bare sentence.
    SentenceOnly,
}

impl fmt::Display for FormattingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormattingVariant::WithClassname => write!(f, "with_classname"),
            FormattingVariant::SentenceOnly => write!(f, "sentence_only"),
        }
    }
}

/// Per-partition positive/negative row counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
}

impl SampleCounts {
    pub fn total(&self) -> usize {
        self.train_pos + self.train_neg + self.test_pos + self.test_neg
    }
}

/// A fully loaded category: immutable after load, safe to share read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryDataset {
    pub category: CategoryId,
    pub train: Vec<CommentSample>,
    pub test: Vec<CommentSample>,
    pub counts: SampleCounts,
}

impl CategoryDataset {
    /// Assembles a dataset from samples, splitting by partition and counting.
    /// Relative order within each partition follows the input order.
    pub fn from_samples(category: CategoryId, samples: Vec<CommentSample>) -> CategoryDataset {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for s in samples {
            match s.partition {
                Partition::Train => train.push(s),
                Partition::Test => test.push(s),
            }
        }
        let counts = SampleCounts {
            train_pos: train.iter().filter(|s| s.label).count(),
            train_neg: train.iter().filter(|s| !s.label).count(),
            test_pos: test.iter().filter(|s| s.label).count(),
            test_neg: test.iter().filter(|s| !s.label).count(),
        };
        CategoryDataset {
            category,
            train,
            test,
            counts,
        }
    }
}

/// Non-fatal observations made while loading a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    /// The same sentence id appeared more than once; all rows are kept.
    DuplicateId { id: i64, occurrences: usize },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::DuplicateId { id, occurrences } => {
                write!(f, "id {id} appears {occurrences} times")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{column}' (known aliases exhausted)")]
    MissingColumn { column: String },
    #[error("row {row}: instance_type must be 0 or 1, got '{value}'")]
    BadLabel { row: usize, value: String },
    #[error("row {row}: partition must be train/test (or 0/1), got '{value}'")]
    BadPartition { row: usize, value: String },
    #[error("row {row}: id is not an integer: '{value}'")]
    BadId { row: usize, value: String },
    #[error("row {row}: comment sentence is empty after trimming")]
    EmptyText { row: usize },
    #[error("row {row}: category column says '{found}', expected '{expected}'")]
    WrongCategory {
        row: usize,
        expected: String,
        found: String,
    },
    #[error("{path}: no data rows")]
    EmptyFile { path: String },
    #[error("{name} is not an official {language} category")]
    UnknownCategory { language: Language, name: String },
}

/// Maps canonical column names to the header names actually present.
///
/// Defaults to the identity mapping over the canonical names; extend with
/// `with_alias` when a file uses different headers.
#[derive(Debug, Clone, Default)]
pub struct ColumnAliases {
    overrides: HashMap<String, Vec<String>>,
}

pub const CANONICAL_COLUMNS: [&str; 6] = [
    "comment_sentence_id",
    "comment_sentence",
    "class",
    "partition",
    "category",
    "instance_type",
];

impl ColumnAliases {
    pub fn new() -> ColumnAliases {
        ColumnAliases::default()
    }

    /// Registers an extra accepted header name for a canonical column.
    pub fn with_alias(mut self, canonical: &str, alias: &str) -> ColumnAliases {
        self.overrides
            .entry(canonical.to_string())
            .or_default()
            .push(alias.to_string());
        self
    }

    /// Loads a JSON object mapping canonical names to alias name(s):
    /// `{"comment_sentence": ["sentence", "text"]}`.
    pub fn from_json(json: &str) -> Result<ColumnAliases, serde_json::Error> {
        let raw: HashMap<String, Vec<String>> = serde_json::from_str(json)?;
        Ok(ColumnAliases { overrides: raw })
    }

    fn resolve(&self, canonical: &str, headers: &csv::StringRecord) -> Option<usize> {
        let mut accepted: Vec<&str> = vec![canonical];
        if let Some(extra) = self.overrides.get(canonical) {
            accepted.extend(extra.iter().map(|s| s.as_str()));
        }
        headers
            .iter()
            .position(|h| accepted.iter().any(|a| a.eq_ignore_ascii_case(h.trim())))
    }
}

/// Formats a sample the way the classifier consumes it.
///
/// `WithClassname` appends `" | {class_file}"` (single space, pipe, single
/// space); pipes already present in the text are not escaped.
pub fn format_input(sample: &CommentSample, variant: FormattingVariant) -> String {
    format_text(&sample.text, &sample.class_file, variant)
}

/// [`format_input`] on raw strings, for inference-time inputs that never
/// became a `CommentSample`.
pub fn format_text(text: &str, class_file: &str, variant: FormattingVariant) -> String {
    match variant {
        FormattingVariant::WithClassname => format!("{text} | {class_file}"),
        FormattingVariant::SentenceOnly => text.to_string(),
    }
}

/// Loads one category CSV.
///
/// Returns the dataset plus non-fatal warnings (currently duplicate ids).
/// Rows must all carry the dataset's category; partition and label values
/// outside their enums are rejected.
pub fn load_category(
    path: &Path,
    category: &CategoryId,
) -> Result<(CategoryDataset, Vec<LoadWarning>), CorpusError> {
    load_category_with_aliases(path, category, &ColumnAliases::default())
}

pub fn load_category_with_aliases(
    path: &Path,
    category: &CategoryId,
    aliases: &ColumnAliases,
) -> Result<(CategoryDataset, Vec<LoadWarning>), CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();

    let mut col = HashMap::new();
    for canonical in CANONICAL_COLUMNS {
        let idx = aliases
            .resolve(canonical, &headers)
            .ok_or_else(|| CorpusError::MissingColumn {
                column: canonical.to_string(),
            })?;
        col.insert(canonical, idx);
    }

    let mut samples = Vec::new();
    let mut id_counts: HashMap<i64, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based data row number, header excluded
        let row = i + 1;
        let field = |name: &str| record.get(col[name]).unwrap_or("");

        let id_raw = field("comment_sentence_id").trim();
        let id: i64 = id_raw.parse().map_err(|_| CorpusError::BadId {
            row,
            value: id_raw.to_string(),
        })?;

        let text = strip_trailing_newlines(field("comment_sentence"));
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { row });
        }

        let partition_raw = field("partition");
        let partition =
            Partition::parse(partition_raw).ok_or_else(|| CorpusError::BadPartition {
                row,
                value: partition_raw.to_string(),
            })?;

        let label_raw = field("instance_type").trim();
        let label = match label_raw {
            "0" => false,
            "1" => true,
            other => {
                return Err(CorpusError::BadLabel {
                    row,
                    value: other.to_string(),
                })
            }
        };

        let cat_raw = field("category").trim();
        if !category_name_matches(&category.name, cat_raw) {
            return Err(CorpusError::WrongCategory {
                row,
                expected: category.name.clone(),
                found: cat_raw.to_string(),
            });
        }

        *id_counts.entry(id).or_insert(0) += 1;
        samples.push(CommentSample {
            id,
            text: text.to_string(),
            class_file: field("class").to_string(),
            partition,
            category: category.clone(),
            label,
        });
    }

    if samples.is_empty() {
        return Err(CorpusError::EmptyFile {
            path: path.display().to_string(),
        });
    }

    let mut warnings: Vec<LoadWarning> = id_counts
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(id, occurrences)| LoadWarning::DuplicateId { id, occurrences })
        .collect();
    warnings.sort_by_key(|w| match w {
        LoadWarning::DuplicateId { id, .. } => *id,
    });

    Ok((CategoryDataset::from_samples(category.clone(), samples), warnings))
}

/// Writes a dataset back out in the canonical column order, train rows first.
/// Reloading the written file yields identical samples.
pub fn save_category(dataset: &CategoryDataset, path: &Path) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CANONICAL_COLUMNS)?;
    for sample in dataset.train.iter().chain(dataset.test.iter()) {
        writer.write_record([
            sample.id.to_string().as_str(),
            &sample.text,
            &sample.class_file,
            sample.partition.as_numeric(),
            &sample.category.name,
            if sample.label { "1" } else { "0" },
        ])?;
    }
    writer.flush().map_err(CorpusError::Io)?;
    Ok(())
}

fn strip_trailing_newlines(s: &str) -> &str {
    s.trim_end_matches(['\n', '\r'])
}

// ---------------------------------------------------------------------------
// Official category list and reference counts
// ---------------------------------------------------------------------------

/// Expected counts for one official category, as shipped in
/// `data/dataset_counts.json`.
#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceCounts {
    pub language: Language,
    pub category: String,
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
}

impl ReferenceCounts {
    pub fn id(&self) -> CategoryId {
        CategoryId::new(self.language, self.category.clone())
    }

    pub fn counts(&self) -> SampleCounts {
        SampleCounts {
            train_pos: self.train_pos,
            train_neg: self.train_neg,
            test_pos: self.test_pos,
            test_neg: self.test_neg,
        }
    }
}

const DATASET_COUNTS_JSON: &str = include_str!("../data/dataset_counts.json");

/// The 19 official categories with their published row counts, in canonical
/// order (java, pharo, python; original row order within each language).
pub fn reference_counts() -> Vec<ReferenceCounts> {
    serde_json::from_str(DATASET_COUNTS_JSON).expect("bundled dataset_counts.json is valid")
}

/// The 19 official category ids in canonical order.
pub fn official_categories() -> Vec<CategoryId> {
    reference_counts().iter().map(|r| r.id()).collect()
}

/// Long-form spellings seen in the wild for the short official names.
const CATEGORY_NAME_ALIASES: [(&str, &str); 6] = [
    ("Resp", "Responsibilities"),
    ("Keymsg", "Keymessages"),
    ("Keyimpl", "Keyimplementationpoints"),
    ("Classref", "Classreferences"),
    ("Collaborators", "Collab"),
    ("Deprecation", "Depreciation"),
];

fn category_name_matches(canonical: &str, candidate: &str) -> bool {
    if canonical.eq_ignore_ascii_case(candidate) {
        return true;
    }
    CATEGORY_NAME_ALIASES.iter().any(|(canon, alias)| {
        canon.eq_ignore_ascii_case(canonical) && alias.eq_ignore_ascii_case(candidate)
    })
}

/// Canonical official name for `name` under `language`, if any.
pub fn canonical_category_name(language: Language, name: &str) -> Option<String> {
    reference_counts()
        .iter()
        .filter(|r| r.language == language)
        .find(|r| category_name_matches(&r.category, name))
        .map(|r| r.category.clone())
}

/// Where a category's CSV lives under a data root:
/// `<root>/<language>/<lowercase name>.csv`.
pub fn dataset_path(data_root: &Path, category: &CategoryId) -> PathBuf {
    data_root
        .join(category.language.to_string())
        .join(format!("{}.csv", category.name.to_ascii_lowercase()))
}

/// Scans the standard layout for category CSVs. File stems matching an
/// official category are canonicalized; anything else is returned verbatim
/// so the caller can flag it.
pub fn discover_csvs(data_root: &Path) -> std::io::Result<Vec<(CategoryId, PathBuf)>> {
    let mut found = Vec::new();
    for language in Language::ALL {
        let dir = data_root.join(language.to_string());
        if !dir.is_dir() {
            continue;
        }
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let category = match canonical_category_name(language, stem) {
                Some(name) => CategoryId::new(language, name),
                None => CategoryId::new(language, stem.to_string()),
            };
            found.push((category, path));
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

/// A mismatch between a loaded dataset and the published reference counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discrepancy {
    CountMismatch {
        category: CategoryId,
        field: &'static str,
        expected: usize,
        got: usize,
    },
    UnknownCategory { category: CategoryId },
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discrepancy::CountMismatch {
                category,
                field,
                expected,
                got,
            } => write!(f, "{category}: {field} expected {expected}, got {got}"),
            Discrepancy::UnknownCategory { category } => {
                write!(f, "{category}: not an official category")
            }
        }
    }
}

/// Checks loaded datasets against the published per-category counts.
/// Empty result iff every given dataset matches exactly.
pub fn validate_against_reference(datasets: &[CategoryDataset]) -> Vec<Discrepancy> {
    let reference = reference_counts();
    let mut out = Vec::new();
    for ds in datasets {
        let entry = reference.iter().find(|r| {
            r.language == ds.category.language && category_name_matches(&r.category, &ds.category.name)
        });
        let Some(entry) = entry else {
            out.push(Discrepancy::UnknownCategory {
                category: ds.category.clone(),
            });
            continue;
        };
        let expected = entry.counts();
        let got = ds.counts;
        let fields = [
            ("train_pos", expected.train_pos, got.train_pos),
            ("train_neg", expected.train_neg, got.train_neg),
            ("test_pos", expected.test_pos, got.test_pos),
            ("test_neg", expected.test_neg, got.test_neg),
        ];
        for (field, exp, act) in fields {
            if exp != act {
                out.push(Discrepancy::CountMismatch {
                    category: ds.category.clone(),
                    field,
                    expected: exp,
                    got: act,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn java_expand() -> CategoryId {
        CategoryId::official(Language::Java, "expand").unwrap()
    }

    #[test]
    fn format_with_classname_matches_published_example() {
        let sample = CommentSample {
            id: 1,
            text: "Method to calculate the SHA-256 checksum".into(),
            class_file: "Checksum.java".into(),
            partition: Partition::Train,
            category: java_expand(),
            label: true,
        };
        assert_eq!(
            format_input(&sample, FormattingVariant::WithClassname),
            "Method to calculate the SHA-256 checksum | Checksum.java"
        );
    }

    #[test]
    fn format_sentence_only_is_identity() {
        assert_eq!(
            format_text("foo", "A.java", FormattingVariant::SentenceOnly),
            "foo"
        );
    }

    #[test]
    fn format_does_not_escape_pipes() {
        assert_eq!(
            format_text("a | b", "C.py", FormattingVariant::WithClassname),
            "a | b | C.py"
        );
    }

    #[test]
    fn loads_hand_written_four_row_file() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             1,first sentence,A.java,train,Expand,1\n\
             2,second sentence,A.java,train,Expand,1\n\
             3,third sentence,B.java,train,Expand,0\n\
             4,fourth sentence,B.java,test,Expand,1\n",
        );
        let (ds, warnings) = load_category(f.path(), &java_expand()).unwrap();
        assert_eq!(
            ds.counts,
            SampleCounts {
                train_pos: 2,
                train_neg: 1,
                test_pos: 1,
                test_neg: 0
            }
        );
        assert!(warnings.is_empty());
        assert_eq!(ds.train.len() + ds.test.len(), ds.counts.total());
    }

    #[test]
    fn numeric_partition_values_are_accepted() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             1,alpha,A.java,0,Expand,1\n\
             2,beta,A.java,1,Expand,0\n",
        );
        let (ds, _) = load_category(f.path(), &java_expand()).unwrap();
        assert_eq!(ds.train.len(), 1);
        assert_eq!(ds.test.len(), 1);
    }

    #[test]
    fn header_only_file_is_empty() {
        let f =
            write_csv("comment_sentence_id,comment_sentence,class,partition,category,instance_type\n");
        let err = load_category(f.path(), &java_expand()).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyFile { .. }), "{err}");
    }

    #[test]
    fn missing_column_is_reported_by_name() {
        let f = write_csv("comment_sentence_id,comment_sentence,class,partition,category\n1,x,A,0,Expand\n");
        let err = load_category(f.path(), &java_expand()).unwrap_err();
        match err {
            CorpusError::MissingColumn { column } => assert_eq!(column, "instance_type"),
            other => panic!("expected MissingColumn, got {other}"),
        }
    }

    #[test]
    fn bad_label_is_rejected() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             1,x,A.java,train,Expand,2\n",
        );
        let err = load_category(f.path(), &java_expand()).unwrap_err();
        assert!(matches!(err, CorpusError::BadLabel { row: 1, .. }), "{err}");
    }

    #[test]
    fn bad_partition_is_rejected() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             1,x,A.java,validation,Expand,1\n",
        );
        let err = load_category(f.path(), &java_expand()).unwrap_err();
        assert!(matches!(err, CorpusError::BadPartition { .. }), "{err}");
    }

    #[test]
    fn column_aliases_remap_headers() {
        let f = write_csv(
            "id,sentence,class,partition,category,instance_type\n\
             1,x,A.java,train,Expand,1\n\
             2,y,A.java,train,Expand,0\n",
        );
        let aliases = ColumnAliases::new()
            .with_alias("comment_sentence_id", "id")
            .with_alias("comment_sentence", "sentence");
        let (ds, _) = load_category_with_aliases(f.path(), &java_expand(), &aliases).unwrap();
        assert_eq!(ds.train.len(), 2);
    }

    #[test]
    fn duplicate_ids_warn_but_load() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             7,x,A.java,train,Expand,1\n\
             7,y,A.java,train,Expand,0\n",
        );
        let (ds, warnings) = load_category(f.path(), &java_expand()).unwrap();
        assert_eq!(ds.train.len(), 2);
        assert_eq!(
            warnings,
            vec![LoadWarning::DuplicateId {
                id: 7,
                occurrences: 2
            }]
        );
    }

    #[test]
    fn wrong_category_row_is_rejected() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             1,x,A.java,train,Ownership,1\n",
        );
        let err = load_category(f.path(), &java_expand()).unwrap_err();
        assert!(matches!(err, CorpusError::WrongCategory { .. }), "{err}");
    }

    #[test]
    fn official_category_canonicalizes_long_names() {
        let id = CategoryId::official(Language::Pharo, "Keymessages").unwrap();
        assert_eq!(id.name, "Keymsg");
        let id = CategoryId::official(Language::Java, "depreciation").unwrap();
        assert_eq!(id.name, "Deprecation");
        assert!(CategoryId::official(Language::Java, "Intent").is_err());
    }

    #[test]
    fn reference_table_has_19_entries_with_consistent_totals() {
        let refs = reference_counts();
        assert_eq!(refs.len(), 19);
        for r in &refs {
            let total = r.counts().total();
            let expected = match r.language {
                Language::Java => 2418,
                Language::Pharo => 1765,
                Language::Python => 2555,
            };
            assert_eq!(total, expected, "{}/{}", r.language, r.category);
        }
    }

    #[test]
    fn validate_flags_count_mismatch_and_unknown_category() {
        let cat = java_expand();
        let mk = |label, partition| CommentSample {
            id: 0,
            text: "t".into(),
            class_file: "A.java".into(),
            partition,
            category: cat.clone(),
            label,
        };
        let mut samples = Vec::new();
        // one train-pos short of the published 505
        for _ in 0..504 {
            samples.push(mk(true, Partition::Train));
        }
        for _ in 0..1426 {
            samples.push(mk(false, Partition::Train));
        }
        for _ in 0..127 {
            samples.push(mk(true, Partition::Test));
        }
        for _ in 0..360 {
            samples.push(mk(false, Partition::Test));
        }
        let ds = CategoryDataset::from_samples(cat.clone(), samples);
        let discrepancies = validate_against_reference(std::slice::from_ref(&ds));
        assert_eq!(
            discrepancies,
            vec![Discrepancy::CountMismatch {
                category: cat.clone(),
                field: "train_pos",
                expected: 505,
                got: 504
            }]
        );

        let synth = CategoryDataset::from_samples(
            CategoryId::new(Language::Java, "Synthetic"),
            vec![mk(true, Partition::Train)],
        );
        let discrepancies = validate_against_reference(std::slice::from_ref(&synth));
        assert_eq!(
            discrepancies,
            vec![Discrepancy::UnknownCategory {
                category: synth.category
            }]
        );
    }

    #[test]
    fn save_then_load_round_trips() {
        let f = write_csv(
            "comment_sentence_id,comment_sentence,class,partition,category,instance_type\n\
             1,\"has, comma and \"\"quotes\"\"\",A.java,train,Expand,1\n\
             2,plain,B.java,test,Expand,0\n\
             3,pipe | here,C.java,train,Expand,0\n",
        );
        let (ds, _) = load_category(f.path(), &java_expand()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_category(&ds, out.path()).unwrap();
        let (reloaded, _) = load_category(out.path(), &java_expand()).unwrap();
        assert_eq!(ds, reloaded);
    }
}

//! Competition evaluation arithmetic: per-category precision/recall/F1,
//! support-weighted F1, accuracy, unweighted averages across categories, and
//! the submission score
//! `mean(F1) * 0.75 + fraction(F1 > baseline F1) * 0.25`.
//!
//! Zero-denominator conventions: precision, recall, and F1 all fall back to
//! 0, matching the published baseline row that reads 0.00 across the board.
//! "Outperformed" is a strict inequality; a tie with the baseline earns
//! nothing.

pub mod reference;
pub mod report;

pub use reference::{baseline_table, reference_results, BaselineEntry, BaselineTable};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CategoryId;

/// Standard binary confusion counts with class 1 as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Per-category scores, all in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("got {predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("empty prediction/label lists")]
    EmptyInput,
    #[error("category {0} missing from the submission")]
    MissingCategory(CategoryId),
    #[error("reports cover different category sets")]
    CategoryMismatch,
}

/// Counts prediction/label agreement; inputs must be equal-length and
/// non-empty.
pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Derives the per-category scores from confusion counts.
///
/// `weighted_f1` is the support-weighted mean of the F1 of class 1 and the
/// F1 of class 0 (supports tp+fn and tn+fp).
pub fn category_metrics(c: &ConfusionCounts) -> CategoryMetrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = f1_from(precision, recall);

    let neg_precision = ratio(c.tn, c.tn + c.fn_);
    let neg_recall = ratio(c.tn, c.tn + c.fp);
    let neg_f1 = f1_from(neg_precision, neg_recall);

    let pos_support = c.tp + c.fn_;
    let neg_support = c.tn + c.fp;
    let weighted_f1 = if pos_support + neg_support == 0 {
        0.0
    } else {
        (pos_support as f64 * f1 + neg_support as f64 * neg_f1)
            / (pos_support + neg_support) as f64
    };

    CategoryMetrics {
        precision,
        recall,
        f1,
        weighted_f1,
        accuracy: ratio(c.tp + c.tn, c.total()),
    }
}

/// Submission score over the full official category set.
///
/// Returns `(score, outperformed_fraction)`; every official category must be
/// present in `f1_by_category`.
pub fn submission_score(
    f1_by_category: &BTreeMap<CategoryId, f64>,
    baseline: &BaselineTable,
) -> Result<(f64, f64), MetricsError> {
    let mut sum = 0.0;
    let mut outperformed = 0usize;
    let official = baseline.categories();
    for category in &official {
        let f1 = f1_by_category
            .get(category)
            .ok_or_else(|| MetricsError::MissingCategory(category.clone()))?;
        sum += f1;
        if *f1 > baseline.f1(category).expect("category from table") {
            outperformed += 1;
        }
    }
    let mean = sum / official.len() as f64;
    let fraction = outperformed as f64 / official.len() as f64;
    Ok((mean * 0.75 + fraction * 0.25, fraction))
}

/// One evaluated category inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub category: CategoryId,
    pub metrics: CategoryMetrics,
    pub counts: ConfusionCounts,
    /// Published baseline F1; None for categories outside the official set.
    pub baseline_f1: Option<f64>,
    pub delta_f1: Option<f64>,
}

/// Assembled evaluation report. Rows are sorted canonically so emission is
/// order-independent of the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// Unweighted arithmetic means over the rows present.
    pub averages: CategoryMetrics,
    /// Fraction of rows whose F1 strictly exceeds the baseline's, over all
    /// rows (rows without a baseline count as not outperformed).
    pub outperformed_fraction: f64,
    /// Present only when the report covers the full official category set.
    pub submission_score: Option<f64>,
}

impl EvalReport {
    pub fn get(&self, category: &CategoryId) -> Option<&ReportRow> {
        self.rows.iter().find(|r| &r.category == category)
    }
}

/// Builds a report from per-category results (1 to 19 categories).
pub fn build_report(
    results: &[(CategoryId, CategoryMetrics, ConfusionCounts)],
    baseline: &BaselineTable,
) -> EvalReport {
    let mut rows: Vec<ReportRow> = results
        .iter()
        .map(|(category, metrics, counts)| {
            let baseline_f1 = baseline.f1(category);
            ReportRow {
                category: category.clone(),
                metrics: *metrics,
                counts: *counts,
                baseline_f1,
                delta_f1: baseline_f1.map(|b| metrics.f1 - b),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.category.cmp(&b.category));

    let n = rows.len().max(1) as f64;
    let averages = CategoryMetrics {
        precision: rows.iter().map(|r| r.metrics.precision).sum::<f64>() / n,
        recall: rows.iter().map(|r| r.metrics.recall).sum::<f64>() / n,
        f1: rows.iter().map(|r| r.metrics.f1).sum::<f64>() / n,
        weighted_f1: rows.iter().map(|r| r.metrics.weighted_f1).sum::<f64>() / n,
        accuracy: rows.iter().map(|r| r.metrics.accuracy).sum::<f64>() / n,
    };
    let outperformed = rows
        .iter()
        .filter(|r| r.baseline_f1.map(|b| r.metrics.f1 > b).unwrap_or(false))
        .count();
    let outperformed_fraction = outperformed as f64 / n;

    let f1_map: BTreeMap<CategoryId, f64> = rows
        .iter()
        .map(|r| (r.category.clone(), r.metrics.f1))
        .collect();
    let submission_score = submission_score(&f1_map, baseline).ok().map(|(s, _)| s);

    EvalReport {
        rows,
        averages,
        outperformed_fraction,
        submission_score,
    }
}

/// Componentwise average metric differences between two reports over the
/// same categories (`with` minus `without`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationDelta {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn ablation_delta(
    report_with: &EvalReport,
    report_without: &EvalReport,
) -> Result<AblationDelta, MetricsError> {
    let cats_with: Vec<&CategoryId> = report_with.rows.iter().map(|r| &r.category).collect();
    let cats_without: Vec<&CategoryId> = report_without.rows.iter().map(|r| &r.category).collect();
    if cats_with != cats_without {
        return Err(MetricsError::CategoryMismatch);
    }
    Ok(AblationDelta {
        precision: report_with.averages.precision - report_without.averages.precision,
        recall: report_with.averages.recall - report_without.averages.recall,
        f1: report_with.averages.f1 - report_without.averages.f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;

    #[test]
    fn confusion_enumerates_all_four_cases() {
        let counts = confusion(
            &[true, false, true, false],
            &[true, false, false, true],
        )
        .unwrap();
        assert_eq!(
            counts,
            ConfusionCounts {
                tp: 1,
                tn: 1,
                fp: 1,
                fn_: 1
            }
        );
    }

    #[test]
    fn all_positive_agreement() {
        let counts = confusion(&[true; 5], &[true; 5]).unwrap();
        assert_eq!(
            counts,
            ConfusionCounts {
                tp: 5,
                fp: 0,
                tn: 0,
                fn_: 0
            }
        );
    }

    #[test]
    fn confusion_rejects_mismatched_or_empty_input() {
        assert_eq!(
            confusion(&[true], &[]).unwrap_err(),
            MetricsError::LengthMismatch {
                predictions: 1,
                labels: 0
            }
        );
        assert_eq!(confusion(&[], &[]).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn ownership_baseline_counts_reproduce_published_row() {
        // 25 test positives with recall 0.68 and precision 1.00
        let counts = ConfusionCounts {
            tp: 17,
            fn_: 8,
            fp: 0,
            tn: 464,
        };
        let m = category_metrics(&counts);
        assert!((m.precision - 1.00).abs() <= 0.005);
        assert!((m.recall - 0.68).abs() <= 0.005);
        assert!((m.f1 - 0.81).abs() <= 0.005);
        assert!((m.f1 - 2.0 * 0.68 / 1.68).abs() < 1e-12);
        // plausibility only: published weighted F1 reads 0.98
        assert!((m.weighted_f1 - 0.98).abs() < 0.01, "wF1 {}", m.weighted_f1);
    }

    #[test]
    fn zero_denominators_follow_the_published_convention() {
        let counts = ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 27,
            tn: 460,
        };
        let m = category_metrics(&counts);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert!(m.weighted_f1 > 0.9, "negative class still scores");
    }

    #[test]
    fn perfect_classifier_scores_ones() {
        let counts = ConfusionCounts {
            tp: 12,
            fp: 0,
            fn_: 0,
            tn: 88,
        };
        let m = category_metrics(&counts);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.weighted_f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    fn full_f1_map(value: f64) -> BTreeMap<CategoryId, f64> {
        baseline_table()
            .categories()
            .into_iter()
            .map(|c| (c, value))
            .collect()
    }

    #[test]
    fn all_zero_f1_scores_zero() {
        let (score, fraction) = submission_score(&full_f1_map(0.0), &baseline_table()).unwrap();
        // the one baseline F1 of 0.00 is not strictly exceeded by 0.0
        assert_eq!(fraction, 0.0);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn ties_with_baseline_do_not_count_as_outperformed() {
        let baseline = baseline_table();
        let f1s: BTreeMap<CategoryId, f64> = baseline
            .categories()
            .into_iter()
            .map(|c| {
                let f1 = baseline.f1(&c).unwrap();
                (c, f1)
            })
            .collect();
        let mean = f1s.values().sum::<f64>() / f1s.len() as f64;
        let (score, fraction) = submission_score(&f1s, &baseline).unwrap();
        assert_eq!(fraction, 0.0);
        assert!((score - mean * 0.75).abs() < 1e-12);
    }

    #[test]
    fn missing_category_is_an_error() {
        let mut f1s = full_f1_map(0.5);
        let removed = baseline_table().categories()[0].clone();
        f1s.remove(&removed);
        let err = submission_score(&f1s, &baseline_table()).unwrap_err();
        assert_eq!(err, MetricsError::MissingCategory(removed));
    }

    #[test]
    fn reference_results_reproduce_the_published_submission_score() {
        let f1s: BTreeMap<CategoryId, f64> = reference_results()
            .iter()
            .map(|e| (e.id(), e.f1))
            .collect();
        let (score, fraction) = submission_score(&f1s, &baseline_table()).unwrap();
        let mean = f1s.values().sum::<f64>() / 19.0;
        assert!((mean - 0.74).abs() <= 0.005, "mean F1 {mean}");
        assert_eq!(fraction, 1.0);
        assert!((score - 0.81).abs() <= 0.005, "score {score}");
    }

    #[test]
    fn report_reproduces_published_average_row() {
        let results: Vec<(CategoryId, CategoryMetrics, ConfusionCounts)> = reference_results()
            .iter()
            .map(|e| {
                (
                    e.id(),
                    CategoryMetrics {
                        precision: e.precision,
                        recall: e.recall,
                        f1: e.f1,
                        weighted_f1: e.weighted_f1,
                        accuracy: 0.0,
                    },
                    ConfusionCounts::default(),
                )
            })
            .collect();
        let report = build_report(&results, &baseline_table());
        assert!((report.averages.precision - 0.71).abs() <= 0.005);
        assert!((report.averages.recall - 0.79).abs() <= 0.005);
        assert!((report.averages.f1 - 0.74).abs() <= 0.005);
        assert!((report.averages.weighted_f1 - 0.92).abs() <= 0.005);
        assert_eq!(report.outperformed_fraction, 1.0);
        assert!(report.submission_score.is_some());

        let deprecation = CategoryId::official(Language::Java, "Deprecation").unwrap();
        let row = report.get(&deprecation).unwrap();
        assert!((row.delta_f1.unwrap() - 0.86).abs() <= 0.005);
    }

    #[test]
    fn single_category_report_has_no_submission_score() {
        let cat = CategoryId::official(Language::Java, "Ownership").unwrap();
        let counts = ConfusionCounts {
            tp: 17,
            fn_: 8,
            fp: 0,
            tn: 464,
        };
        let report = build_report(&[(cat, category_metrics(&counts), counts)], &baseline_table());
        assert_eq!(report.rows.len(), 1);
        assert!(report.submission_score.is_none());
    }

    #[test]
    fn ablation_delta_identical_reports_is_zero() {
        let cat = CategoryId::official(Language::Java, "Usage").unwrap();
        let counts = ConfusionCounts {
            tp: 10,
            fp: 5,
            fn_: 2,
            tn: 83,
        };
        let report = build_report(&[(cat, category_metrics(&counts), counts)], &baseline_table());
        let delta = ablation_delta(&report, &report).unwrap();
        assert_eq!(delta.precision, 0.0);
        assert_eq!(delta.recall, 0.0);
        assert_eq!(delta.f1, 0.0);
    }

    #[test]
    fn ablation_delta_hand_computed_two_category_case() {
        let a = CategoryId::official(Language::Java, "Usage").unwrap();
        let b = CategoryId::official(Language::Python, "Summary").unwrap();
        let with_counts = [
            ConfusionCounts { tp: 8, fp: 2, fn_: 2, tn: 88 },
            ConfusionCounts { tp: 6, fp: 2, fn_: 6, tn: 86 },
        ];
        let without_counts = [
            ConfusionCounts { tp: 5, fp: 5, fn_: 5, tn: 85 },
            ConfusionCounts { tp: 3, fp: 1, fn_: 9, tn: 87 },
        ];
        let make = |counts: &[ConfusionCounts]| {
            build_report(
                &[
                    (a.clone(), category_metrics(&counts[0]), counts[0]),
                    (b.clone(), category_metrics(&counts[1]), counts[1]),
                ],
                &baseline_table(),
            )
        };
        let delta = ablation_delta(&make(&with_counts), &make(&without_counts)).unwrap();
        // hand arithmetic: P_with = (0.8 + 0.75)/2, P_without = (0.5 + 0.75)/2
        assert!((delta.precision - ((0.8 + 0.75) / 2.0 - (0.5 + 0.75) / 2.0)).abs() < 1e-12);
        // R_with = (0.8 + 0.5)/2, R_without = (0.5 + 0.25)/2
        assert!((delta.recall - ((0.8 + 0.5) / 2.0 - (0.5 + 0.25) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn ablation_delta_rejects_different_category_sets() {
        let a = CategoryId::official(Language::Java, "Usage").unwrap();
        let b = CategoryId::official(Language::Python, "Usage").unwrap();
        let counts = ConfusionCounts { tp: 1, fp: 0, fn_: 0, tn: 1 };
        let ra = build_report(&[(a, category_metrics(&counts), counts)], &baseline_table());
        let rb = build_report(&[(b, category_metrics(&counts), counts)], &baseline_table());
        assert_eq!(
            ablation_delta(&ra, &rb).unwrap_err(),
            MetricsError::CategoryMismatch
        );
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn metric_identities_hold_for_arbitrary_counts(
            tp in 0usize..500,
            fp in 0usize..500,
            tn in 0usize..500,
            fn_ in 0usize..500,
        ) {
            let counts = ConfusionCounts { tp, fp, tn, fn_ };
            let m = category_metrics(&counts);
            for (name, v) in [
                ("precision", m.precision),
                ("recall", m.recall),
                ("f1", m.f1),
                ("weighted_f1", m.weighted_f1),
                ("accuracy", m.accuracy),
            ] {
                prop_assert!((0.0..=1.0).contains(&v), "{} = {}", name, v);
            }
            prop_assert!(
                (m.f1 * (m.precision + m.recall) - 2.0 * m.precision * m.recall).abs() < 1e-12
            );
            if counts.total() > 0 {
                prop_assert_eq!(m.accuracy, (tp + tn) as f64 / counts.total() as f64);
            }
        }

        #[test]
        fn submission_score_is_monotone_in_each_f1(
            f1s in prop::collection::vec(0.0f64..=1.0, 19),
            which in 0usize..19,
            bump in 0.0f64..=1.0,
        ) {
            let baseline = baseline_table();
            let categories = baseline.categories();
            let map: BTreeMap<CategoryId, f64> = categories
                .iter()
                .cloned()
                .zip(f1s.iter().copied())
                .collect();
            let (score, _) = submission_score(&map, &baseline).unwrap();

            let mut bumped = map.clone();
            let key = &categories[which];
            let raised = (bumped[key] + bump).min(1.0);
            bumped.insert(key.clone(), raised);
            let (score_bumped, _) = submission_score(&bumped, &baseline).unwrap();
            prop_assert!(score_bumped >= score - 1e-15);
        }

        #[test]
        fn report_averages_ignore_input_order(
            order in Just(()).prop_perturb(|_, mut rng| {
                use proptest::prelude::Rng as _;
                let mut idx: Vec<usize> = (0..19).collect();
                for i in (1..idx.len()).rev() {
                    let j = rng.random_range(0..=i);
                    idx.swap(i, j);
                }
                idx
            }),
        ) {
            let results: Vec<(CategoryId, CategoryMetrics, ConfusionCounts)> = reference_results()
                .iter()
                .map(|e| {
                    let counts = ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 1 };
                    (
                        e.id(),
                        CategoryMetrics {
                            precision: e.precision,
                            recall: e.recall,
                            f1: e.f1,
                            weighted_f1: e.weighted_f1,
                            accuracy: 0.5,
                        },
                        counts,
                    )
                })
                .collect();
            let permuted: Vec<_> = order.iter().map(|&i| results[i].clone()).collect();
            let a = build_report(&results, &baseline_table());
            let b = build_report(&permuted, &baseline_table());
            prop_assert_eq!(a, b);
        }
    }
}

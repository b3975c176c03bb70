//! Report emission: machine-readable CSV (full precision), an aligned
//! human-readable table (two decimals), and a static SVG bar chart of F1
//! against the baseline. All three are deterministic functions of the
//! report, so re-rendering the same report is byte-identical.

use std::fmt::Write as _;

use super::{CategoryMetrics, EvalReport};

/// Per-category CSV with a trailing `average` row.
pub fn render_csv(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(
        "language,category,tp,fp,tn,fn,precision,recall,f1,weighted_f1,accuracy,baseline_f1,delta_f1\n",
    );
    for row in &report.rows {
        let baseline = row
            .baseline_f1
            .map(|v| v.to_string())
            .unwrap_or_default();
        let delta = row.delta_f1.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.category.language,
            row.category.name,
            row.counts.tp,
            row.counts.fp,
            row.counts.tn,
            row.counts.fn_,
            row.metrics.precision,
            row.metrics.recall,
            row.metrics.f1,
            row.metrics.weighted_f1,
            row.metrics.accuracy,
            baseline,
            delta,
        )
        .unwrap();
    }
    let a = &report.averages;
    writeln!(
        out,
        "average,,,,,,{},{},{},{},{},,",
        a.precision, a.recall, a.f1, a.weighted_f1, a.accuracy
    )
    .unwrap();
    out
}

/// Fixed-width table rounded to two decimals, plus the score lines.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<8} {:<15} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8} {:>7}",
        "language", "category", "P", "R", "F1", "wF1", "acc", "base F1", "dF1"
    )
    .unwrap();
    for row in &report.rows {
        let m = &row.metrics;
        writeln!(
            out,
            "{:<8} {:<15} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>8} {:>7}",
            row.category.language.to_string(),
            row.category.name,
            m.precision,
            m.recall,
            m.f1,
            m.weighted_f1,
            m.accuracy,
            row.baseline_f1
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "-".to_string()),
            row.delta_f1
                .map(|v| format!("{v:+.2}"))
                .unwrap_or_else(|| "-".to_string()),
        )
        .unwrap();
    }
    let a: &CategoryMetrics = &report.averages;
    writeln!(
        out,
        "{:<8} {:<15} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>8} {:>7}",
        "average", "", a.precision, a.recall, a.f1, a.weighted_f1, a.accuracy, "", ""
    )
    .unwrap();
    writeln!(
        out,
        "outperformed baseline: {:.0}% of categories",
        report.outperformed_fraction * 100.0
    )
    .unwrap();
    match report.submission_score {
        Some(score) => writeln!(out, "submission score: {score:.4}").unwrap(),
        None => writeln!(out, "submission score: n/a (partial category set)").unwrap(),
    }
    out
}

const SVG_BAR_WIDTH: f64 = 18.0;
const SVG_GROUP_GAP: f64 = 14.0;
const SVG_PLOT_HEIGHT: f64 = 300.0;
const SVG_MARGIN_LEFT: f64 = 50.0;
const SVG_MARGIN_TOP: f64 = 30.0;
const SVG_LABEL_SPACE: f64 = 110.0;

/// Grouped bar chart of F1 (filled) next to baseline F1 (hollow) per
/// category.
pub fn render_svg(report: &EvalReport) -> String {
    let n = report.rows.len();
    let group_width = 2.0 * SVG_BAR_WIDTH + SVG_GROUP_GAP;
    let width = SVG_MARGIN_LEFT + n as f64 * group_width + 30.0;
    let height = SVG_MARGIN_TOP + SVG_PLOT_HEIGHT + SVG_LABEL_SPACE;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#
    )
    .unwrap();

    // y axis and gridlines at 0.0, 0.25, .., 1.0
    for step in 0..=4 {
        let value = step as f64 * 0.25;
        let y = SVG_MARGIN_TOP + SVG_PLOT_HEIGHT * (1.0 - value);
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ccc" stroke-width="1"/>"##,
            SVG_MARGIN_LEFT,
            width - 20.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11" text-anchor="end">{value:.2}</text>"#,
            SVG_MARGIN_LEFT - 6.0,
            y + 4.0
        )
        .unwrap();
    }

    for (i, row) in report.rows.iter().enumerate() {
        let x0 = SVG_MARGIN_LEFT + i as f64 * group_width;
        let f1_height = SVG_PLOT_HEIGHT * row.metrics.f1.clamp(0.0, 1.0);
        writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{:.1}" width="{SVG_BAR_WIDTH:.1}" height="{f1_height:.1}" fill="#4878a8"/>"##,
            SVG_MARGIN_TOP + SVG_PLOT_HEIGHT - f1_height
        )
        .unwrap();
        if let Some(baseline) = row.baseline_f1 {
            let b_height = SVG_PLOT_HEIGHT * baseline.clamp(0.0, 1.0);
            writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="{SVG_BAR_WIDTH:.1}" height="{b_height:.1}" fill="none" stroke="#a85048" stroke-width="1.5"/>"##,
                x0 + SVG_BAR_WIDTH,
                SVG_MARGIN_TOP + SVG_PLOT_HEIGHT - b_height
            )
            .unwrap();
        }
        let label = format!("{}/{}", row.category.language, row.category.name);
        let lx = x0 + SVG_BAR_WIDTH;
        let ly = SVG_MARGIN_TOP + SVG_PLOT_HEIGHT + 10.0;
        writeln!(
            out,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-family="monospace" font-size="11" text-anchor="end" transform="rotate(-60 {lx:.1} {ly:.1})">{label}</text>"#
        )
        .unwrap();
    }

    writeln!(
        out,
        r#"<text x="{SVG_MARGIN_LEFT:.1}" y="{:.1}" font-family="monospace" font-size="12">filled: F1, outline: baseline F1</text>"#,
        SVG_MARGIN_TOP - 12.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CategoryId, Language};
    use crate::metrics::{baseline_table, build_report, category_metrics, ConfusionCounts};

    fn sample_report() -> EvalReport {
        let cat = CategoryId::official(Language::Java, "Ownership").unwrap();
        let counts = ConfusionCounts {
            tp: 17,
            fn_: 8,
            fp: 0,
            tn: 464,
        };
        build_report(&[(cat, category_metrics(&counts), counts)], &baseline_table())
    }

    #[test]
    fn csv_has_header_rows_and_average() {
        let csv = render_csv(&sample_report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("language,category,"));
        assert!(lines[1].starts_with("java,Ownership,17,0,464,8,1,0.68,"));
        assert!(lines[2].starts_with("average,"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let report = sample_report();
        assert_eq!(render_csv(&report), render_csv(&report));
        assert_eq!(render_table(&report), render_table(&report));
        assert_eq!(render_svg(&report), render_svg(&report));
    }

    #[test]
    fn table_rounds_to_two_decimals() {
        let table = render_table(&sample_report());
        assert!(table.contains("1.00"), "{table}");
        assert!(table.contains("0.68"), "{table}");
        assert!(table.contains("0.81"), "{table}");
        assert!(table.contains("submission score: n/a"), "{table}");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = render_svg(&sample_report());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 1 + 2); // background + 2 bars
    }
}

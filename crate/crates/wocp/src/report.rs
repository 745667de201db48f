//! Plain-text tables and their JSON sidecars.

use serde_json::{json, Value};
use wocp_core::aggregation::{DivergenceReport, DivergenceStatus, HistogramRow};
use wocp_core::evaluation::{format_percent, round_tenths, Confusion, FlipSummary, MetricsReport, ModelComparison};
use wocp_core::Label;

/// One row of a score table.
pub struct ScoreRow<'a> {
    pub model: &'a str,
    pub confusion: &'a Confusion,
    pub metrics: &'a MetricsReport,
}

const SCORE_COLUMNS: [&str; 9] = ["model", "TP", "TN", "FP", "FN", "Acc", "Prec", "Recall", "F1"];

/// Right-aligned columns except the first, separated by two spaces.
fn align(rows: &[Vec<String>]) -> String {
    let n = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..n)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn score_table(rows: &[ScoreRow<'_>]) -> String {
    let mut table = vec![SCORE_COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for r in rows {
        let cm = &r.confusion.matrix;
        let m = r.metrics;
        table.push(vec![
            r.model.to_string(),
            cm.tp.to_string(),
            cm.tn.to_string(),
            cm.fp.to_string(),
            cm.fn_.to_string(),
            format_percent(m.accuracy),
            format_percent(m.precision),
            format_percent(m.recall),
            format_percent(m.f1),
        ]);
    }
    align(&table)
}

fn rounded(v: Option<f64>) -> Value {
    match v {
        Some(v) => json!(round_tenths(v) as f64 / 10.0),
        None => Value::Null,
    }
}

fn score_json(r: &ScoreRow<'_>) -> Value {
    let cm = &r.confusion.matrix;
    json!({
        "model": r.model,
        "tp": cm.tp,
        "tn": cm.tn,
        "fp": cm.fp,
        "fn": cm.fn_,
        "accuracy": rounded(r.metrics.accuracy),
        "precision": rounded(r.metrics.precision),
        "recall": rounded(r.metrics.recall),
        "f1": rounded(r.metrics.f1),
        "excluded_unknowns": r.confusion.excluded_unknowns,
    })
}

pub fn scores_json(rows: &[ScoreRow<'_>]) -> Value {
    json!({ "models": rows.iter().map(score_json).collect::<Vec<_>>() })
}

fn flip_lines(flips: &FlipSummary) -> String {
    let mut out = format!("label changes: {}\n", flips.total_changed());
    let mut keys = vec![(Label::Bot, Label::Human), (Label::Human, Label::Bot)];
    keys.extend(flips.changes.keys().filter(|k| !keys.contains(k)).copied().collect::<Vec<_>>());
    for (from, to) in keys {
        let c = flips.get(from, to);
        out.push_str(&format!(
            "  {from} -> {to}: {} ({} correct, {} incorrect",
            c.total(),
            c.correct,
            c.incorrect
        ));
        if c.unscored > 0 {
            out.push_str(&format!(", {} unscored", c.unscored));
        }
        out.push_str(")\n");
    }
    out
}

fn comparison_rows(cmp: &ModelComparison) -> [ScoreRow<'_>; 2] {
    [
        ScoreRow {
            model: "observed",
            confusion: &cmp.before,
            metrics: &cmp.before_metrics,
        },
        ScoreRow {
            model: "woc-p",
            confusion: &cmp.after,
            metrics: &cmp.after_metrics,
        },
    ]
}

/// Score table for both models, excluded unknowns and the label changes.
pub fn comparison_text(cmp: &ModelComparison) -> String {
    let mut out = score_table(&comparison_rows(cmp));
    out.push('\n');
    out.push_str(&format!(
        "unknown predictions excluded: {} observed, {} woc-p\n",
        cmp.before.excluded_unknowns, cmp.after.excluded_unknowns
    ));
    out.push_str(&flip_lines(&cmp.flips));
    out
}

pub fn comparison_json(cmp: &ModelComparison) -> Value {
    let mut v = scores_json(&comparison_rows(cmp));
    let flips: Vec<Value> = cmp
        .flips
        .changes
        .iter()
        .map(|((from, to), c)| {
            json!({
                "from": from.as_str(),
                "to": to.as_str(),
                "correct": c.correct,
                "incorrect": c.incorrect,
                "unscored": c.unscored,
            })
        })
        .collect();
    v["flips"] = json!(flips);
    v["total_changed"] = json!(cmp.flips.total_changed());
    v
}

/// Repository multiplicity histogram followed by the divergence summary.
pub fn population_text(histogram: &[HistogramRow], divergence: &DivergenceReport) -> String {
    let mut table = vec![vec!["repositories".to_string(), "contributors".to_string(), "%".to_string()]];
    for row in histogram {
        table.push(vec![
            row.bucket.to_string(),
            row.count.to_string(),
            format_percent(Some(row.percentage)),
        ]);
    }
    let total: usize = histogram.iter().map(|r| r.count).sum();
    table.push(vec!["total".to_string(), total.to_string(), String::new()]);
    let mut out = align(&table);
    out.push('\n');
    let mut statuses = vec![vec!["status".to_string(), "contributors".to_string()]];
    for s in DivergenceStatus::ALL {
        statuses.push(vec![s.to_string(), divergence.count(s).to_string()]);
    }
    out.push_str(&align(&statuses));
    out
}

pub fn population_json(histogram: &[HistogramRow], divergence: &DivergenceReport) -> Value {
    json!({
        "histogram": histogram
            .iter()
            .map(|r| json!({
                "bucket": r.bucket.as_str(),
                "contributors": r.count,
                "percentage": rounded(Some(r.percentage)),
            }))
            .collect::<Vec<_>>(),
        "divergence": DivergenceStatus::ALL
            .iter()
            .map(|s| (s.as_str().to_string(), json!(divergence.count(*s))))
            .collect::<serde_json::Map<_, _>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use wocp_core::aggregation::{divergence_report, histogram_from_bucket_counts};
    use wocp_core::evaluation::metrics;
    use wocp_core::ConfusionMatrix;

    fn confusion(tp: usize, tn: usize, fp: usize, fn_: usize) -> Confusion {
        Confusion {
            matrix: ConfusionMatrix::new(tp, tn, fp, fn_),
            excluded_unknowns: 0,
        }
    }

    #[test]
    fn score_table_columns_in_order() {
        let c = confusion(928, 288, 79, 31);
        let m = metrics(&c.matrix).unwrap();
        let text = score_table(&[ScoreRow {
            model: "observed",
            confusion: &c,
            metrics: &m,
        }]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0].split_whitespace().collect::<Vec<_>>(),
            ["model", "TP", "TN", "FP", "FN", "Acc", "Prec", "Recall", "F1"]
        );
        assert_eq!(
            lines[1].split_whitespace().collect::<Vec<_>>(),
            ["observed", "928", "288", "79", "31", "91.7", "92.2", "96.8", "94.4"]
        );
        // right-aligned numeric columns end at the same offset
        assert_eq!(lines[0].len(), lines[1].len());
    }

    #[test]
    fn undefined_metrics_print_as_na() {
        let c = confusion(0, 3, 0, 0);
        let m = metrics(&c.matrix).unwrap();
        let row = ScoreRow {
            model: "m",
            confusion: &c,
            metrics: &m,
        };
        assert!(score_table(std::slice::from_ref(&row)).contains("n/a"));
        assert_eq!(scores_json(&[row])["models"][0]["precision"], Value::Null);
    }

    #[test]
    fn population_report_lists_every_bucket() {
        let h = histogram_from_bucket_counts([5671, 1530, 496, 385, 239, 211]);
        let text = population_text(&h, &divergence_report(&[]));
        for needle in ["66.5", "17.9", "5.8", "4.5", "2.8", "2.5", "8532", "10+", "diverging"] {
            assert!(text.contains(needle), "{needle} missing from\n{text}");
        }
    }
}

use std::fmt::Write;

use specap_core::metrics::{MetricsReport, RECALL_KS};

/// Metric name, value and whether lower is better.
fn rows(r: &MetricsReport) -> Vec<(String, f64, bool)> {
    let mut out = vec![
        ("diversity_pct".to_string(), r.diversity_pct, false),
        ("novelty_pct".to_string(), r.novelty_pct, false),
        ("vocab_size".to_string(), r.vocab_size as f64, false),
    ];
    for k in RECALL_KS {
        out.push((format!("recall@{k}"), r.recall(k).unwrap_or(f64::NAN), false));
    }
    out.push(("mean_rank".to_string(), r.mean_rank, true));
    for n in 1..=4 {
        out.push((format!("bleu_{n}"), r.bleu.get(&n.to_string()).copied().unwrap_or(f64::NAN), false));
    }
    out.push(("rouge_l".to_string(), r.rouge_l, false));
    out.push(("avg_caption_length".to_string(), r.avg_caption_length, false));
    out
}

/// Side-by-side table of two reports with absolute and relative deltas.
/// A trailing `*` marks rows where `other` is better than `base`.
pub fn report_diff(base_label: &str, base: &MetricsReport, other_label: &str, other: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "base:  {base_label}");
    let _ = writeln!(s, "other: {other_label}");
    let _ = writeln!(s, "{:<20} {:>10} {:>10} {:>10} {:>9}", "metric", "base", "other", "delta", "rel");
    for ((name, a, lower), (_, b, _)) in rows(base).into_iter().zip(rows(other)) {
        let d = b - a;
        let rel = if a != 0.0 { format!("{:+.1}%", 100.0 * d / a) } else { "-".to_string() };
        let better = if name == "avg_caption_length" || d == 0.0 {
            ""
        } else if (d < 0.0) == lower {
            " *"
        } else {
            ""
        };
        let _ = writeln!(s, "{name:<20} {a:>10.2} {b:>10.2} {d:>+10.2} {rel:>9}{better}");
    }
    s
}

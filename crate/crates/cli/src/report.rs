//! Deterministic, machine-parseable report rendering. Everything written
//! to an output file comes from this module and contains no wall-clock
//! data; timings are rendered separately for stdout so re-runs stay
//! byte-identical.

use crate::eval::EvalOutcome;

pub const REPORT_MAGIC: &str = "SVMPRPRT";

/// Ordered key/value snapshot of the fully resolved configuration; the
/// block a report embeds is sufficient to reproduce the run.
#[derive(Debug, Clone, Default)]
pub struct ConfigEcho {
    entries: Vec<(String, String)>,
}

impl ConfigEcho {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn extend(&mut self, other: ConfigEcho) {
        self.entries.extend(other.entries);
    }

    pub fn push_opt(&mut self, key: &str, value: Option<impl std::fmt::Display>) {
        match value {
            Some(v) => self.push(key, v),
            None => self.push(key, "-"),
        }
    }

    /// One `config.key: value` line per entry.
    pub fn render_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(&format!("config.{k}: {v}\n"));
        }
        out
    }

    /// Compact single-line form for embedding in descriptor/model files.
    pub fn render_line(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn render_outcome(out: &mut String, o: &EvalOutcome) {
    out.push_str(&format!("method: {}\n", o.method.name()));
    for (i, acc) in o.fold_accuracies.iter().enumerate() {
        out.push_str(&format!("fold_accuracy: {i} {acc}\n"));
    }
    out.push_str(&format!("mean_accuracy: {}\n", o.mean_accuracy));
    out.push_str(&format!("overall_accuracy: {}\n", o.overall_accuracy));
    for (class, acc) in o.per_class_accuracy.iter().enumerate() {
        out.push_str(&format!("class_accuracy: {class} {acc}\n"));
    }
    for row in &o.confusion {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("confusion: {}\n", cells.join(" ")));
    }
}

/// Full evaluation report: header, resolved config, then one block per
/// evaluated method, closed by a comparison table when there are several.
pub fn render_report(command: &str, echo: &ConfigEcho, outcomes: &[EvalOutcome]) -> String {
    let mut out = String::new();
    out.push_str(&format!("format: {REPORT_MAGIC}\n"));
    out.push_str("version: 1\n");
    out.push_str(&format!("command: {command}\n"));
    out.push_str(&echo.render_block());
    for o in outcomes {
        render_outcome(&mut out, o);
    }
    if outcomes.len() > 1 {
        out.push_str("table: method mean_accuracy fold_accuracies\n");
        for o in outcomes {
            let folds: Vec<String> =
                o.fold_accuracies.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!(
                "table: {} {} {}\n",
                o.method.name(),
                o.mean_accuracy,
                folds.join(" ")
            ));
        }
    }
    out
}

/// Stage timings for stdout only. Every outcome of one harness run
/// carries the same shared stage totals, so the first speaks for all.
pub fn render_timings(outcomes: &[EvalOutcome]) -> String {
    let mut out = String::new();
    if let Some(o) = outcomes.first() {
        for &(stage, secs) in &o.timings {
            out.push_str(&format!("timing: {stage} {secs:.3}s\n"));
        }
    }
    out
}

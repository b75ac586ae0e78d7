//! The Data Readiness Report, derived entirely from a ledger.

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ledger::{EntryKind, Ledger, LineageEntry};
use super::result::{MetricId, QualityResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
    Html,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
            ReportFormat::Html => "html",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "html" => Ok(ReportFormat::Html),
            other => Err(Error::invalid(format!("unknown report format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric_id: MetricId,
    pub baseline_score: f64,
    pub latest_score: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadinessReport {
    pub generated_at: DateTime<Utc>,
    pub original_fingerprint: String,
    pub current_fingerprint: String,
    pub summary: Vec<SummaryRow>,
    pub baseline: Vec<QualityResult>,
    pub lineage: Vec<LineageEntry>,
}

impl ReadinessReport {
    pub fn from_ledger(ledger: &Ledger, generated_at: DateTime<Utc>) -> Result<ReadinessReport> {
        let (Some(origin), Some(head)) = (ledger.origin(), ledger.head()) else {
            return Err(Error::invalid("ledger is empty"));
        };
        let entries = ledger.entries();
        let mut baseline = Vec::new();
        let mut summary = Vec::new();
        for metric in MetricId::ALL {
            let first = entries.iter().find(|e| {
                e.kind == EntryKind::Assessment
                    && e.metric_id == metric
                    && e.input_fingerprint == origin
                    && e.result.is_some()
            });
            let Some(result) = first.and_then(|e| e.result.clone()) else {
                continue;
            };
            let latest = entries
                .iter()
                .filter(|e| e.metric_id == metric && !e.failed())
                .filter_map(|e| e.score_after)
                .next_back()
                .unwrap_or(result.score);
            summary.push(SummaryRow {
                metric_id: metric,
                baseline_score: result.score,
                latest_score: latest,
                delta: latest - result.score,
            });
            baseline.push(result);
        }
        Ok(ReadinessReport {
            generated_at,
            original_fingerprint: origin.to_string(),
            current_fingerprint: head.to_string(),
            summary,
            baseline,
            lineage: entries.to_vec(),
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::Markdown => self.to_markdown(),
            ReportFormat::Html => self.to_html(),
        }
    }

    fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Data Readiness Report\n");
        let _ = writeln!(s, "Generated at {}\n", self.generated_at.to_rfc3339());
        let _ = writeln!(s, "- Original dataset: `{}`", self.original_fingerprint);
        let _ = writeln!(s, "- Current dataset: `{}`\n", self.current_fingerprint);
        let _ = writeln!(s, "## Summary\n");
        let _ = writeln!(s, "| Metric | Baseline | Latest | Change |");
        let _ = writeln!(s, "|---|---|---|---|");
        for row in &self.summary {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                row.metric_id, row.baseline_score, row.latest_score, row.delta
            );
        }
        let _ = writeln!(s, "\n## Baseline analysis\n");
        for r in &self.baseline {
            let _ = writeln!(s, "### {} ({})\n", r.metric_id, r.score);
            let _ = writeln!(s, "{}\n", md_escape(&r.explanation));
            for rec in &r.recommendations {
                match rec.remediation_op_id {
                    Some(op) => {
                        let _ = writeln!(s, "- {} (`{}`)", md_escape(&rec.action_text), op);
                    }
                    None => {
                        let _ = writeln!(s, "- {}", md_escape(&rec.action_text));
                    }
                }
            }
            if !r.recommendations.is_empty() {
                s.push('\n');
            }
        }
        let _ = writeln!(s, "## Lineage\n");
        let _ = writeln!(s, "| # | Operation | Kind | Rows | Columns | Before | After | Output | Status |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
        for (i, e) in self.lineage.iter().enumerate() {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | `{}` | {} |",
                i + 1,
                e.op_id,
                kind_name(e.kind),
                e.rows_affected,
                md_escape(&e.cols_affected.join(", ")),
                opt(e.score_before),
                opt(e.score_after),
                short(&e.output_fingerprint),
                md_escape(e.error.as_deref().unwrap_or("ok")),
            );
        }
        s
    }

    fn to_html(&self) -> String {
        let mut s = String::new();
        s.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
        s.push_str("<title>Data Readiness Report</title>\n</head>\n<body>\n");
        s.push_str("<h1>Data Readiness Report</h1>\n");
        let _ = writeln!(s, "<p>Generated at {}</p>", esc(&self.generated_at.to_rfc3339()));
        let _ = writeln!(
            s,
            "<ul><li>Original dataset: <code>{}</code></li><li>Current dataset: <code>{}</code></li></ul>",
            esc(&self.original_fingerprint),
            esc(&self.current_fingerprint)
        );
        s.push_str("<h2>Summary</h2>\n<table>\n<tr><th>Metric</th><th>Baseline</th><th>Latest</th><th>Change</th></tr>\n");
        for row in &self.summary {
            let _ = writeln!(
                s,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                row.metric_id, row.baseline_score, row.latest_score, row.delta
            );
        }
        s.push_str("</table>\n<h2>Baseline analysis</h2>\n");
        for r in &self.baseline {
            let _ = writeln!(s, "<h3>{} ({})</h3>", r.metric_id, r.score);
            let _ = writeln!(s, "<p>{}</p>", esc(&r.explanation));
            if !r.recommendations.is_empty() {
                s.push_str("<ul>\n");
                for rec in &r.recommendations {
                    let op = rec
                        .remediation_op_id
                        .map(|op| format!(" (<code>{op}</code>)"))
                        .unwrap_or_default();
                    let _ = writeln!(s, "<li>{}{op}</li>", esc(&rec.action_text));
                }
                s.push_str("</ul>\n");
            }
        }
        s.push_str("<h2>Lineage</h2>\n<table>\n<tr><th>#</th><th>Operation</th><th>Kind</th><th>Rows</th><th>Columns</th><th>Before</th><th>After</th><th>Output</th><th>Status</th></tr>\n");
        for (i, e) in self.lineage.iter().enumerate() {
            let _ = writeln!(
                s,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td><code>{}</code></td><td>{}</td></tr>",
                i + 1,
                esc(&e.op_id),
                kind_name(e.kind),
                e.rows_affected,
                esc(&e.cols_affected.join(", ")),
                opt(e.score_before),
                opt(e.score_after),
                short(&e.output_fingerprint),
                esc(e.error.as_deref().unwrap_or("ok")),
            );
        }
        s.push_str("</table>\n</body>\n</html>\n");
        s
    }
}

/// Renders the report for `ledger` in one format.
pub fn render_report(ledger: &Ledger, format: ReportFormat, generated_at: DateTime<Utc>) -> Result<String> {
    Ok(ReadinessReport::from_ledger(ledger, generated_at)?.render(format))
}

fn kind_name(k: EntryKind) -> &'static str {
    match k {
        EntryKind::Assessment => "assessment",
        EntryKind::Remediation => "remediation",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

fn short(fp: &str) -> &str {
    &fp[..fp.len().min(12)]
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

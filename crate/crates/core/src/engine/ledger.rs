//! Append-only JSON-lines record of assessments and remediations.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::result::{MetricId, QualityResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Assessment,
    Remediation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub op_id: String,
    pub kind: EntryKind,
    /// The metric an assessment ran, or the metric a remediation targets.
    pub metric_id: MetricId,
    pub params: Json,
    pub decisions_ref: Option<String>,
    pub rows_affected: usize,
    pub cols_affected: Vec<String>,
    pub score_before: Option<f64>,
    pub score_after: Option<f64>,
    pub input_fingerprint: String,
    pub output_fingerprint: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<QualityResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl LineageEntry {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    entries: Vec<LineageEntry>,
}

impl Ledger {
    pub fn new() -> Ledger {
        Ledger::default()
    }

    pub fn from_entries(entries: Vec<LineageEntry>) -> Ledger {
        Ledger { entries }
    }

    pub fn entries(&self) -> &[LineageEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fingerprint of the most recent dataset in the chain.
    pub fn head(&self) -> Option<&str> {
        self.entries.last().map(|e| e.output_fingerprint.as_str())
    }

    pub fn origin(&self) -> Option<&str> {
        self.entries.first().map(|e| e.input_fingerprint.as_str())
    }

    pub fn push(&mut self, entry: LineageEntry) {
        self.entries.push(entry);
    }

    /// Checks that every entry starts from the previous entry's output.
    pub fn verify_chain(&self) -> Result<()> {
        for pair in self.entries.windows(2) {
            if pair[1].input_fingerprint != pair[0].output_fingerprint {
                return Err(Error::ChainBroken {
                    expected: pair[0].output_fingerprint.clone(),
                    found: pair[1].input_fingerprint.clone(),
                });
            }
        }
        for e in &self.entries {
            if e.kind == EntryKind::Assessment && (e.input_fingerprint != e.output_fingerprint || e.rows_affected != 0) {
                return Err(Error::invalid(format!("assessment entry '{}' changed the dataset", e.op_id)));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("ledger entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Ledger> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(line)
                .map_err(|err| Error::invalid(format!("corrupt ledger line {}: {err}", i + 1)))?;
            entries.push(e);
        }
        Ok(Ledger { entries })
    }

    pub fn load(path: &Path) -> Result<Ledger> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let reader = BufReader::new(File::open(path)?);
        let mut text = String::new();
        for line in reader.lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        Ledger::from_jsonl(&text)
    }

    /// Loads the ledger at `path`, or an empty one if the file does not exist.
    pub fn load_or_new(path: &Path) -> Result<Ledger> {
        if path.exists() {
            Ledger::load(path)
        } else {
            Ok(Ledger::new())
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    /// Appends the entries after the first `already_saved` to the file.
    pub fn append_to(&self, path: &Path, already_saved: usize) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        for e in &self.entries[already_saved.min(self.entries.len())..] {
            writeln!(f, "{}", serde_json::to_string(e)?)?;
        }
        Ok(())
    }
}

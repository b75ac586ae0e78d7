//! Human answers to a quality result: row and column accept/reject plus annotations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::homogeneity::Annotation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDecision {
    pub row: usize,
    pub accept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnDecision {
    pub column: String,
    pub accept: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionFile {
    /// Fingerprint of the dataset whose result these decisions answer.
    pub answers_fingerprint: Option<String>,
    pub rows: Vec<RowDecision>,
    pub columns: Vec<ColumnDecision>,
    pub annotations: Vec<Annotation>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DecisionForm {
    Full(DecisionFile),
    Rows(Vec<RowDecision>),
    Annotation(Annotation),
}

impl DecisionFile {
    pub fn from_json(text: &str) -> Result<DecisionFile> {
        let form: DecisionForm = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("invalid decision file: {e}")))?;
        Ok(match form {
            DecisionForm::Full(f) => f,
            DecisionForm::Rows(rows) => DecisionFile {
                rows,
                ..Default::default()
            },
            DecisionForm::Annotation(a) => DecisionFile {
                annotations: vec![a],
                ..Default::default()
            },
        })
    }

    pub fn load(path: &Path) -> Result<DecisionFile> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        DecisionFile::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form, recorded in the ledger.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("decisions serialize");
        hex::encode(Sha256::digest(json))
    }

    pub fn accepted_rows(&self) -> Vec<usize> {
        self.rows.iter().filter(|d| d.accept).map(|d| d.row).collect()
    }

    pub fn accepted_columns(&self) -> Vec<String> {
        self.columns.iter().filter(|d| d.accept).map(|d| d.column.clone()).collect()
    }

    /// Errors when these decisions answer a different dataset than `current`.
    pub fn check_fresh(&self, current: &str) -> Result<()> {
        match &self.answers_fingerprint {
            Some(answers) if answers != current => Err(Error::StaleDecisions {
                answers: answers.clone(),
                current: current.to_string(),
            }),
            _ => Ok(()),
        }
    }
}

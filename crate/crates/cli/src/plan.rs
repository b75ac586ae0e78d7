//! Remediation plans: an ordered list of operations with their parameters
//! and, optionally, the decisions answering each.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use dqkit_core::{DecisionFile, RemediationOp};
use serde::Deserialize;
use serde_json::Value as Json;

#[derive(Debug, Clone)]
pub struct Step {
    pub op: RemediationOp,
    pub params: Json,
    pub decisions: Option<DecisionFile>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub steps: Vec<Step>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    op: String,
    #[serde(default)]
    params: Option<Json>,
    /// Inline decisions, or a path relative to the plan file.
    #[serde(default)]
    decisions: Option<Json>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPlan {
    Wrapped {
        steps: Vec<RawStep>,
    },
    Bare(Vec<RawStep>),
}

impl Plan {
    pub fn parse(text: &str, base: &Path) -> Result<Plan> {
        let raw: RawPlan = serde_json::from_str(text).context("invalid plan")?;
        let raw = match raw {
            RawPlan::Wrapped { steps } | RawPlan::Bare(steps) => steps,
        };
        if raw.is_empty() {
            return Err(anyhow!("plan has no steps"));
        }
        let steps = raw
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let op = s.op.parse::<RemediationOp>().with_context(|| format!("plan step {}", i + 1))?;
                let decisions = match s.decisions {
                    None | Some(Json::Null) => None,
                    Some(Json::String(p)) => Some(
                        DecisionFile::load(&base.join(&p)).with_context(|| format!("plan step {}: decisions {p}", i + 1))?,
                    ),
                    Some(inline) => Some(
                        DecisionFile::from_json(&inline.to_string()).with_context(|| format!("plan step {}", i + 1))?,
                    ),
                };
                Ok(Step {
                    op,
                    params: s.params.unwrap_or_else(|| Json::Object(Default::default())),
                    decisions,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Plan { steps })
    }

    pub fn load(path: &Path) -> Result<Plan> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read plan {}", path.display()))?;
        Plan::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn single(op: &str) -> Result<Plan> {
        Ok(Plan {
            steps: vec![Step {
                op: op.parse()?,
                params: Json::Object(Default::default()),
                decisions: None,
            }],
        })
    }
}

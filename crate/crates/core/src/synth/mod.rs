//! Rationale dataset synthesis: link entities, search paths, verbalize,
//! prompt a generator and emit JSONL training records.

pub mod pipeline;
pub mod prompts;
pub mod stats;
pub mod verbalize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astar::PathJson;

pub use pipeline::{synthesize, SynthConfig, SynthOutput};
pub use prompts::{build_factcheck_prompt, build_rationale_prompt, Prompt};
pub use stats::PathStats;
pub use verbalize::{path_triples, verbalize, PathParser};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    #[serde(default)]
    pub instruction: String,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QaError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {field} is empty")]
    EmptyField { line: usize, field: &'static str },
    #[error("line {line}: options do not contain the answer")]
    AnswerNotInOptions { line: usize },
}

impl QAPair {
    fn validate(&self, line: usize) -> Result<(), QaError> {
        if self.question.trim().is_empty() {
            return Err(QaError::EmptyField { line, field: "question" });
        }
        if self.answer.trim().is_empty() {
            return Err(QaError::EmptyField { line, field: "answer" });
        }
        if let Some(opts) = &self.options {
            if !opts.iter().any(|o| o == &self.answer) {
                return Err(QaError::AnswerNotInOptions { line });
            }
        }
        Ok(())
    }
}

/// Parse QA JSONL. Malformed or invalid lines are skipped and returned as
/// diagnostics; blank lines are ignored.
pub fn read_qa_jsonl(text: &str) -> (Vec<QAPair>, Vec<QaError>) {
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<QAPair>(line) {
            Ok(qa) => match qa.validate(line_no) {
                Ok(()) => pairs.push(qa),
                Err(e) => errors.push(e),
            },
            Err(e) => errors.push(QaError::Parse {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    (pairs, errors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Failed,
}

/// One JSONL output line. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub instruction: String,
    pub question: String,
    pub answer: String,
    pub entities_q: Vec<String>,
    pub entities_a: Vec<String>,
    pub paths: Vec<PathJson>,
    pub paths_verbalized: Vec<String>,
    pub rationale: String,
    pub backend: String,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything a generator may use to produce a rationale.
#[derive(Debug, Clone)]
pub struct RationaleRequest {
    pub prompt: Prompt,
    pub question: String,
    pub answer: String,
    /// Per path, its triples as display labels.
    pub path_triples: Vec<Vec<(String, String, String)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

/// A text generator for rationales.
pub trait Backend: Sync {
    fn name(&self) -> String;
    fn generate(&self, request: &RationaleRequest) -> Result<String, BackendError>;
}

/// Deterministic template generator; a pure function of the request.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineBackend;

impl Backend for OfflineBackend {
    fn name(&self) -> String {
        "offline".into()
    }

    fn generate(&self, request: &RationaleRequest) -> Result<String, BackendError> {
        let mut facts: Vec<String> = Vec::new();
        for triples in &request.path_triples {
            for (s, r, o) in triples {
                let fact = format!("{s} {r} {o}");
                if !facts.contains(&fact) {
                    facts.push(fact);
                }
            }
        }
        let answer = request.answer.trim();
        if facts.is_empty() {
            return Ok(format!("No reasoning path was found, so the answer is {answer}."));
        }
        Ok(format!("Because {}, the answer is {answer}.", facts.join(" and ")))
    }
}

const REFUSALS: &[&str] = &["i'm sorry", "i am sorry", "i cannot", "i can't", "as an ai"];

/// Minimal validity gate on generated rationales.
pub fn rationale_is_usable(text: &str) -> bool {
    let t = text.trim();
    if t.chars().count() < 10 {
        return false;
    }
    let lower = t.to_lowercase();
    !REFUSALS.iter().any(|r| lower.starts_with(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qa_jsonl_skips_bad_lines() {
        let text = r#"{"id":"1","instruction":"i","question":"q","answer":"a"}
not json
{"id":"2","instruction":"i","question":"","answer":"a"}

{"id":"3","instruction":"i","question":"q","answer":"a","options":["b"]}
{"id":"4","question":"q","answer":"a","options":["a","b"]}"#;
        let (pairs, errs) = read_qa_jsonl(text);
        assert_eq!(pairs.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), vec!["1", "4"]);
        assert_eq!(errs.len(), 3);
        assert!(matches!(errs[0], QaError::Parse { line: 2, .. }));
        assert_eq!(errs[1], QaError::EmptyField { line: 3, field: "question" });
        assert_eq!(errs[2], QaError::AnswerNotInOptions { line: 5 });
    }

    #[test]
    fn offline_rationale() {
        let req = RationaleRequest {
            prompt: build_rationale_prompt("q", "white light", &[]),
            question: "q".into(),
            answer: "white light".into(),
            path_triples: vec![vec![
                ("the Sun".into(), "emits".into(), "full-spectrum light".into()),
                ("full-spectrum light".into(), "integrates into".into(), "white light".into()),
            ]],
        };
        assert_eq!(
            OfflineBackend.generate(&req).unwrap(),
            "Because the Sun emits full-spectrum light and full-spectrum light integrates into white light, the answer is white light."
        );
    }

    #[test]
    fn usability_gate() {
        assert!(!rationale_is_usable("short"));
        assert!(!rationale_is_usable("I'm sorry, but I can't help with that."));
        assert!(rationale_is_usable("Because x, the answer is y."));
    }
}

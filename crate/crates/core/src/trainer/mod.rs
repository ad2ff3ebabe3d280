//! Toy knowledge-aware training.
//!
//! A tiny conditional next-token model is run twice per output position with
//! teacher forcing: once on the rationale-free context (`p`) and once, through
//! a frozen copy, on the rationale-conditioned context (`q`). Training
//! minimizes the mean token-level `KL(p || q)` by full-batch gradient descent
//! with hand-derived gradients.

pub mod kl;
pub mod model;
pub mod synthetic;
pub mod train;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kl::{kl_divergence, kl_loss, KLReport, PROB_FLOOR};
pub use model::{Checkpoint, ModelDims, ToyModel};
pub use synthetic::{reference_run, synthetic_task, ReferenceRun};
pub use train::{
    argmax_agreement, evaluate, grad_check, pretrain_ce, train, Conditioning, TraceRow, TrainConfig, TrainOutcome,
};

pub type TokenId = u32;

pub const BOS: TokenId = 0;
pub const EOS: TokenId = 1;
pub const SEP: TokenId = 2;
pub const PAD: TokenId = 3;

const RESERVED: [&str; 4] = ["<bos>", "<eos>", "<sep>", "<pad>"];

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Lowercased whitespace tokens with punctuation split off as single-char
/// tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() || c == '_' {
                word.extend(c.to_lowercase());
            } else {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(c.to_string());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from_tokens(Vec::new())
    }
}

impl Vocab {
    /// Reserved tokens followed by `extra` in order; duplicates are dropped.
    pub fn from_tokens(extra: Vec<String>) -> Self {
        let mut v = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in RESERVED.iter().map(|s| s.to_string()).chain(extra) {
            v.add(t);
        }
        v
    }

    /// Tokens of `texts` in first-appearance order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::default();
        for text in texts {
            for t in tokenize(text) {
                v.add(t);
            }
        }
        v
    }

    fn add(&mut self, t: String) -> TokenId {
        if let Some(&id) = self.index.get(&t) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.index.insert(t.clone(), id);
        self.tokens.push(t);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>, TrainError> {
        tokenize(text)
            .into_iter()
            .map(|t| self.id(&t).ok_or(TrainError::UnknownToken(t)))
            .collect()
    }

    /// Rebuild the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
    }
}

/// Tokenized training example. `out` is the teacher-forced target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub inp: Vec<TokenId>,
    pub rats: Vec<TokenId>,
    pub out: Vec<TokenId>,
}

impl TrainingExample {
    /// Conditioning context for `p` at output position `t`.
    pub fn p_context(&self, t: usize) -> Vec<TokenId> {
        let mut ctx = self.inp.clone();
        ctx.extend_from_slice(&self.out[..t]);
        ctx
    }

    /// Conditioning context for `q` at output position `t`. With an empty
    /// rationale no separator is inserted, so the context equals `p`'s.
    pub fn q_context(&self, t: usize) -> Vec<TokenId> {
        let mut ctx = self.inp.clone();
        if !self.rats.is_empty() {
            ctx.push(SEP);
            ctx.extend_from_slice(&self.rats);
        }
        ctx.extend_from_slice(&self.out[..t]);
        ctx
    }
}

/// The fields of a synthesized record the trainer reads; other fields in the
/// JSONL are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainRecord {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub instruction: String,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub status: Option<String>,
}

impl TrainRecord {
    pub fn input_text(&self) -> String {
        format!("{} {}", self.instruction, self.question)
    }
}

/// Parse synthesized JSONL, dropping records whose status is `failed`.
pub fn read_train_jsonl(text: &str) -> Result<Vec<TrainRecord>, TrainError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: TrainRecord = serde_json::from_str(line)
            .map_err(|e| TrainError::Invalid(format!("line {}: {e}", i + 1)))?;
        if r.status.as_deref() != Some("failed") {
            out.push(r);
        }
    }
    Ok(out)
}

pub fn vocab_for(records: &[TrainRecord]) -> Vocab {
    let texts: Vec<String> = records
        .iter()
        .flat_map(|r| [r.input_text(), r.rationale.clone(), r.answer.clone()])
        .collect();
    Vocab::build(texts.iter().map(String::as_str))
}

pub fn encode_record(vocab: &Vocab, r: &TrainRecord) -> Result<TrainingExample, TrainError> {
    let mut inp = vec![BOS];
    inp.extend(vocab.encode(&r.input_text())?);
    let rats = vocab.encode(&r.rationale)?;
    let mut out = vocab.encode(&r.answer)?;
    out.push(EOS);
    Ok(TrainingExample { inp, rats, out })
}

pub fn encode_all(vocab: &Vocab, records: &[TrainRecord]) -> Result<Vec<TrainingExample>, TrainError> {
    records.iter().map(|r| encode_record(vocab, r)).collect()
}

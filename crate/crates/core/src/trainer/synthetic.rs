//! A small synthetic attribute-lookup task and the reference training run
//! over it.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{ModelDims, ToyModel};
use super::train::{argmax_agreement, pretrain_ce, train, Conditioning, TrainConfig, TrainOutcome};
use super::{encode_all, vocab_for, TrainError, TrainRecord, Vocab};

const COLORS: [&str; 6] = ["red", "green", "blue", "yellow", "black", "white"];

/// One record per object with no instruction text; the rationale states the fact the answer needs.
pub fn synthetic_task(objects: usize, seed: u64) -> Vec<TrainRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..objects)
        .map(|i| {
            let color = *COLORS.choose(&mut rng).expect("non-empty palette");
            let name = format!("obj{i}");
            TrainRecord {
                id: format!("syn-{i:03}"),
                instruction: String::new(),
                question: format!("{name} color?"),
                answer: color.into(),
                rationale: format!("{name} is painted {color}."),
                status: Some("ok".into()),
            }
        })
        .collect()
}

pub fn to_jsonl(records: &[TrainRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

/// Object count of the checked-in reference task.
pub const REFERENCE_OBJECTS: usize = 12;
pub const REFERENCE_TASK_SEED: u64 = 7;

/// Teacher pretraining schedule.
pub const TEACHER_STEPS: usize = 100;
pub const TEACHER_LR: f64 = 0.5;
const TEACHER_SEED_MIX: u64 = 0x0074_6561_6368_6572;

#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub vocab: Vocab,
    pub teacher: ToyModel,
    pub teacher_ce: Vec<f64>,
    /// Teacher checksum taken before and after student training.
    pub teacher_checksum: (String, String),
    pub outcome: TrainOutcome,
    pub agreement_before: f64,
    pub agreement_after: f64,
}

impl ReferenceRun {
    pub fn loss_ratio(&self) -> f64 {
        self.outcome.last.mean / self.outcome.initial.mean
    }
}

/// Pretrain a rationale-conditioned teacher, freeze it, then train a fresh
/// plain-context student towards it.
pub fn reference_run(records: &[TrainRecord], cfg: &TrainConfig) -> Result<ReferenceRun, TrainError> {
    let vocab = vocab_for(records);
    let data = encode_all(&vocab, records)?;
    let dims = ModelDims::new(vocab.len());
    let init_q = ToyModel::random(dims, cfg.seed ^ TEACHER_SEED_MIX)?;
    let (teacher, teacher_ce) = pretrain_ce(&init_q, &data, Conditioning::WithRationale, TEACHER_STEPS, TEACHER_LR)?;
    let frozen = teacher.checksum();
    let student = ToyModel::random(dims, cfg.seed)?;
    let agreement_before = argmax_agreement(&student, &teacher, &data)?;
    let outcome = train(&student, &teacher, &data, cfg)?;
    let agreement_after = argmax_agreement(&outcome.model, &teacher, &data)?;
    let teacher_checksum = (frozen, teacher.checksum());
    Ok(ReferenceRun { vocab, teacher, teacher_ce, teacher_checksum, outcome, agreement_before, agreement_after })
}

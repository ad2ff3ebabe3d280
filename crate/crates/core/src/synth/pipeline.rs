use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};

use crate::astar::{find_paths_or_frontier, PathJson, ReasoningPath, SearchConfig};
use crate::heuristic::{Heuristic, HeuristicConfig, LandmarkTable};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::linker::{EntityLinker, MentionSource};

use super::prompts::build_rationale_prompt;
use super::stats::PathStats;
use super::verbalize::{path_triples, verbalize};
use super::{rationale_is_usable, Backend, DatasetRecord, QAPair, RationaleRequest, RecordStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub heuristic: HeuristicConfig,
    pub max_paths: usize,
    pub max_depth: usize,
    /// Cap on (question entity, answer entity) pairs searched per QA.
    pub pair_budget: usize,
    pub zero_heuristic: bool,
    /// Worker threads over QA pairs.
    pub jobs: usize,
    /// Concurrent backend calls.
    pub max_in_flight: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            heuristic: HeuristicConfig::default(),
            max_paths: 3,
            max_depth: 3,
            pair_budget: 16,
            zero_heuristic: false,
            jobs: 1,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthOutput {
    pub records: Vec<DatasetRecord>,
    pub stats: PathStats,
}

impl SynthOutput {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().expect("semaphore poisoned");
            while *free == 0 {
                free = self.cv.wait(free).expect("semaphore poisoned");
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().expect("semaphore poisoned") += 1;
        self.cv.notify_one();
        out
    }
}

/// Entity pairs in id order, skipping identical ends, capped at `budget`.
pub fn entity_pairs(qs: &[EntityId], answers: &[EntityId], budget: usize) -> Vec<(EntityId, EntityId)> {
    let mut qs = qs.to_vec();
    let mut answers = answers.to_vec();
    qs.sort_unstable();
    answers.sort_unstable();
    qs.iter()
        .flat_map(|&q| answers.iter().map(move |&a| (q, a)))
        .filter(|(q, a)| q != a)
        .take(budget)
        .collect()
}

/// Paths for every linked entity pair, in pair order, duplicates removed.
pub fn search_pairs(
    g: &KnowledgeGraph,
    pairs: &[(EntityId, EntityId)],
    cfg: &SynthConfig,
) -> Vec<ReasoningPath> {
    let mut tables: BTreeMap<EntityId, LandmarkTable> = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut paths = Vec::new();
    for &(q, a) in pairs {
        let heuristic = if cfg.zero_heuristic {
            Heuristic::Zero
        } else {
            Heuristic::Landmarks(
                tables
                    .entry(a)
                    .or_insert_with(|| LandmarkTable::for_goal(g, a, &cfg.heuristic)),
            )
        };
        let search = SearchConfig {
            max_paths: cfg.max_paths,
            max_depth: cfg.max_depth,
            direction: cfg.heuristic.direction,
            heuristic,
        };
        let report = find_paths_or_frontier(g, q, a, &search).expect("linked ids are valid");
        for p in report.paths {
            if seen.insert((p.start, p.steps.clone())) {
                paths.push(p);
            }
        }
    }
    paths
}

fn process(
    qa: &QAPair,
    g: &KnowledgeGraph,
    linker: &EntityLinker<'_>,
    cfg: &SynthConfig,
    backend: &dyn Backend,
    gate: &Semaphore,
) -> DatasetRecord {
    let context = format!("{} {}", qa.question, qa.answer);
    let eq = linker.link_text(&qa.question, &context, MentionSource::Question);
    let ea = linker.link_text(&qa.answer, &context, MentionSource::Answer);
    let pairs = entity_pairs(&eq.entities, &ea.entities, cfg.pair_budget);
    let paths = search_pairs(g, &pairs, cfg);

    let verbalized: Vec<String> = paths.iter().map(|p| verbalize(p, g)).collect();
    let request = RationaleRequest {
        prompt: build_rationale_prompt(&qa.question, &qa.answer, &verbalized),
        question: qa.question.clone(),
        answer: qa.answer.clone(),
        path_triples: paths.iter().map(|p| path_triples(p, g)).collect(),
    };
    let (rationale, status, error) = match gate.run(|| backend.generate(&request)) {
        Ok(text) if rationale_is_usable(&text) => (text, RecordStatus::Ok, None),
        Ok(text) => {
            log::warn!("{}: unusable rationale rejected", qa.id);
            (text, RecordStatus::Failed, Some("rationale rejected by validity gate".to_owned()))
        }
        Err(e) => {
            log::warn!("{}: backend failed: {e}", qa.id);
            (String::new(), RecordStatus::Failed, Some(e.to_string()))
        }
    };
    let labels = |ids: &[EntityId]| ids.iter().map(|&e| g.entity_label(e).to_owned()).collect();
    DatasetRecord {
        id: qa.id.clone(),
        instruction: qa.instruction.clone(),
        question: qa.question.clone(),
        answer: qa.answer.clone(),
        entities_q: labels(&eq.entities),
        entities_a: labels(&ea.entities),
        paths: paths.iter().map(|p| PathJson::from_path(p, g)).collect(),
        paths_verbalized: verbalized,
        rationale,
        backend: backend.name(),
        status,
        error,
    }
}

/// Run the full pipeline. Records come back in input order regardless of
/// `jobs`.
pub fn synthesize(
    qas: &[QAPair],
    g: &KnowledgeGraph,
    cfg: &SynthConfig,
    backend: &dyn Backend,
) -> SynthOutput {
    let linker = EntityLinker::new(g);
    let gate = Semaphore::new(cfg.max_in_flight);
    let jobs = cfg.jobs.clamp(1, qas.len().max(1));

    let records: Vec<DatasetRecord> = if jobs == 1 {
        qas.iter()
            .map(|qa| process(qa, g, &linker, cfg, backend, &gate))
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<DatasetRecord>>> = Mutex::new(vec![None; qas.len()]);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(qa) = qas.get(i) else { break };
                    let rec = process(qa, g, &linker, cfg, backend, &gate);
                    slots.lock().expect("slots poisoned")[i] = Some(rec);
                });
            }
        });
        slots
            .into_inner()
            .expect("slots poisoned")
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect()
    };

    let mut stats = PathStats::default();
    for r in &records {
        stats.add_record(r);
    }
    SynthOutput { records, stats }
}

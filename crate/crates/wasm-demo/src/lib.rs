//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes plain strings and numbers and returns JSON.
//! The `*_json` functions hold the logic and run natively as well, which is
//! how the tests exercise them.

use kgrat_core::linker::{EntityLinker, MentionSource};
use kgrat_core::synth::pipeline::entity_pairs;
use kgrat_core::synth::verbalize;
use kgrat_core::trainer::synthetic::{reference_run, synthetic_task, REFERENCE_OBJECTS, REFERENCE_TASK_SEED};
use kgrat_core::trainer::TrainConfig;
use kgrat_core::{find_paths, Heuristic, HeuristicConfig, KnowledgeGraph, LandmarkTable, SearchConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const SAMPLE_GRAPH: &str = "the Sun\temits\tfull-spectrum light
full-spectrum light\tintegrates into\twhite light
the Sun\tis a\tstar
star\temits\tlight
light\thas property\tcolor
white light\tis a\tlight
Earth\torbits\tthe Sun
Earth\thas satellite\tthe Moon
the Moon\treflects\tlight
";

fn graph(tsv: &str) -> Result<KnowledgeGraph, String> {
    KnowledgeGraph::from_str_tsv(tsv).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Mention {
    surface: String,
    start: usize,
    end: usize,
    entity: Option<String>,
}

#[derive(Serialize)]
struct LinkResult {
    mentions: Vec<Mention>,
    entities: Vec<String>,
}

pub fn link_json(tsv: &str, text: &str) -> Result<String, String> {
    let g = graph(tsv)?;
    let linker = EntityLinker::new(&g);
    let set = linker.link_text(text, text, MentionSource::Question);
    let mentions = linker
        .mentions(text)
        .into_iter()
        .map(|m| {
            let one = linker.link_text(&m.surface, text, MentionSource::Question);
            Mention {
                entity: one.entities.first().map(|&e| g.entity_label(e).to_owned()),
                surface: m.surface,
                start: m.span.0,
                end: m.span.1,
            }
        })
        .collect();
    let entities = set.entities.iter().map(|&e| g.entity_label(e).to_owned()).collect();
    Ok(serde_json::to_string(&LinkResult { mentions, entities }).expect("serializes"))
}

#[derive(Serialize)]
struct FoundPath {
    text: String,
    cost: usize,
}

#[derive(Serialize)]
struct PairResult {
    from: String,
    to: String,
    paths: Vec<FoundPath>,
    landmark_expanded: u64,
    zero_expanded: u64,
}

#[derive(Serialize)]
struct SearchResult {
    question_entities: Vec<String>,
    answer_entities: Vec<String>,
    pairs: Vec<PairResult>,
}

pub fn search_json(tsv: &str, question: &str, answer: &str, max_paths: usize, max_depth: usize) -> Result<String, String> {
    let g = graph(tsv)?;
    let linker = EntityLinker::new(&g);
    let context = format!("{question} {answer}");
    let eq = linker.link_text(question, &context, MentionSource::Question);
    let ea = linker.link_text(answer, &context, MentionSource::Answer);
    let base = SearchConfig { max_paths: max_paths.max(1), max_depth: max_depth.max(1), ..Default::default() };
    let mut pairs = Vec::new();
    for (q, a) in entity_pairs(&eq.entities, &ea.entities, 16) {
        let table = LandmarkTable::for_goal(&g, a, &HeuristicConfig::default());
        let zero = find_paths(&g, q, a, &base).map_err(|e| e.to_string())?;
        let guided =
            find_paths(&g, q, a, &SearchConfig { heuristic: Heuristic::Landmarks(&table), ..base }).map_err(|e| e.to_string())?;
        pairs.push(PairResult {
            from: g.entity_label(q).to_owned(),
            to: g.entity_label(a).to_owned(),
            paths: guided.paths.iter().map(|p| FoundPath { text: verbalize(p, &g), cost: p.cost() }).collect(),
            landmark_expanded: guided.nodes_expanded,
            zero_expanded: zero.nodes_expanded,
        });
    }
    let labels = |ids: &[kgrat_core::EntityId]| ids.iter().map(|&e| g.entity_label(e).to_owned()).collect();
    let out = SearchResult { question_entities: labels(&eq.entities), answer_entities: labels(&ea.entities), pairs };
    Ok(serde_json::to_string(&out).expect("serializes"))
}

#[derive(Serialize)]
struct TrainResult {
    /// (step, loss) for every `stride`-th step and the last one.
    trace: Vec<(usize, f64)>,
    initial_kl: f64,
    final_kl: f64,
    agreement_before: f64,
    agreement_after: f64,
    teacher_unchanged: bool,
}

pub fn train_json(steps: usize, lr: f64, seed: u64) -> Result<String, String> {
    let records = synthetic_task(REFERENCE_OBJECTS, REFERENCE_TASK_SEED);
    let cfg = TrainConfig { steps, lr, seed, reverse: false };
    let run = reference_run(&records, &cfg).map_err(|e| e.to_string())?;
    let t = &run.outcome.trace;
    let stride = (t.len() / 100).max(1);
    let trace = t
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == t.len())
        .map(|(_, r)| (r.step, r.loss))
        .collect();
    let out = TrainResult {
        trace,
        initial_kl: run.outcome.initial.mean,
        final_kl: run.outcome.last.mean,
        agreement_before: run.agreement_before,
        agreement_after: run.agreement_after,
        teacher_unchanged: run.teacher_checksum.0 == run.teacher_checksum.1,
    };
    Ok(serde_json::to_string(&out).expect("serializes"))
}

#[wasm_bindgen]
pub fn sample_graph() -> String {
    SAMPLE_GRAPH.to_owned()
}

#[wasm_bindgen]
pub fn link_demo(tsv: &str, text: &str) -> Result<String, JsValue> {
    link_json(tsv, text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn search_demo(tsv: &str, question: &str, answer: &str, max_paths: usize, max_depth: usize) -> Result<String, JsValue> {
    search_json(tsv, question, answer, max_paths, max_depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn train_demo(steps: usize, lr: f64, seed: u32) -> Result<String, JsValue> {
    train_json(steps, lr, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

//! Regenerate the synthetic reference task and its loss trace.
//!
//!     cargo run --release -p kgrat-core --example reference_fixture -- crates/core/tests/data

use std::path::PathBuf;

use kgrat_core::trainer::synthetic::{synthetic_task, to_jsonl, REFERENCE_OBJECTS, REFERENCE_TASK_SEED};
use kgrat_core::trainer::{reference_run, TrainConfig};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/data".into()));
    let records = synthetic_task(REFERENCE_OBJECTS, REFERENCE_TASK_SEED);
    std::fs::write(dir.join("synthetic_task.jsonl"), to_jsonl(&records)).expect("write task");
    let run = reference_run(&records, &TrainConfig::default()).expect("reference run");
    std::fs::write(dir.join("reference_trace.csv"), run.outcome.trace_csv()).expect("write trace");
    println!(
        "kl {:.6} -> {:.6} (ratio {:.4}), agreement {:.3} -> {:.3}",
        run.outcome.initial.mean,
        run.outcome.last.mean,
        run.loss_ratio(),
        run.agreement_before,
        run.agreement_after
    );
}

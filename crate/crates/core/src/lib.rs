//! Knowledge-graph reasoning paths for rationale synthesis, and a toy
//! trainer for aligning rationale-free predictions with rationale-conditioned
//! ones.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`linker`] finds question and answer entities in the graph.
//! 2. [`heuristic`] builds anchor-landmark lower bounds around each answer
//!    entity and [`astar`] enumerates the cheapest loopless paths to it.
//! 3. [`synth`] verbalizes the paths, fills the prompt templates and collects
//!    rationales from a [`synth::Backend`] into JSONL training records.
//! 4. [`trainer`] minimizes token-level `KL(p || q)` between a trainable
//!    model without rationales and a frozen rationale-conditioned one.

pub mod astar;
pub mod bench;
pub mod graphgen;
pub mod heuristic;
pub mod kg;
pub mod linker;
pub mod synth;
pub mod trainer;

pub use astar::{find_paths, find_paths_bfs_oracle, frontier_fallback, ReasoningPath, SearchConfig, SearchReport, Step};
pub use heuristic::{Heuristic, HeuristicConfig, LandmarkTable};
pub use kg::{Direction, EdgeDir, EntityId, KnowledgeGraph, RelationId};

//! Landmark A* against the zero heuristic and the exhaustive oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::astar::{find_paths, find_paths_bfs_oracle, SearchConfig, SearchReport};
use crate::graphgen::{generate, Topology};
use crate::heuristic::{Heuristic, HeuristicConfig, LandmarkTable};
use crate::kg::{EntityId, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub nodes: usize,
    /// Edges attached per new node in the preferential-attachment graph.
    pub attach: usize,
    pub queries: usize,
    pub seed: u64,
    pub max_paths: usize,
    pub max_depth: usize,
    pub heuristic: HeuristicConfig,
    pub tiny_graphs: usize,
    pub tiny_nodes: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            nodes: 1000,
            attach: 2,
            queries: 100,
            seed: 0,
            max_paths: 3,
            max_depth: 3,
            heuristic: HeuristicConfig::default(),
            tiny_graphs: 20,
            tiny_nodes: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub start: EntityId,
    pub goal: EntityId,
    pub landmark_expanded: u64,
    pub zero_expanded: u64,
    pub landmark_pushes: u64,
    pub zero_pushes: u64,
    pub costs: Vec<usize>,
    pub same_costs: bool,
    pub landmark_ms: f64,
    pub zero_ms: f64,
}

impl QueryRow {
    /// Landmark over zero-heuristic expansions; 1 when neither expanded.
    pub fn expansion_ratio(&self) -> f64 {
        if self.zero_expanded == 0 {
            1.0
        } else {
            self.landmark_expanded as f64 / self.zero_expanded as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<QueryRow>,
    pub dominated: usize,
    pub strictly_fewer: usize,
    pub mean_expansion_ratio: f64,
    /// Mean of zero over landmark expansions, counting only queries where
    /// the landmark search expanded something.
    pub mean_speedup: f64,
    pub tiny_agree: usize,
    pub tiny_total: usize,
}

fn ms(r: &SearchReport) -> f64 {
    r.wall_time.as_secs_f64() * 1e3
}

/// Distinct random (start, goal) pairs.
pub fn sample_queries(g: &KnowledgeGraph, count: usize, seed: u64) -> Vec<(EntityId, EntityId)> {
    let n = g.entity_count() as u32;
    if n < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let s = rng.random_range(0..n);
            let mut t = rng.random_range(0..n - 1);
            if t >= s {
                t += 1;
            }
            (EntityId(s), EntityId(t))
        })
        .collect()
}

pub fn compare_query(g: &KnowledgeGraph, start: EntityId, goal: EntityId, cfg: &BenchConfig) -> QueryRow {
    let table = LandmarkTable::for_goal(g, goal, &cfg.heuristic);
    let base = SearchConfig {
        max_paths: cfg.max_paths,
        max_depth: cfg.max_depth,
        direction: cfg.heuristic.direction,
        heuristic: Heuristic::Zero,
    };
    let zero = find_paths(g, start, goal, &base).expect("sampled ids are valid");
    let guided = find_paths(
        g,
        start,
        goal,
        &SearchConfig {
            heuristic: Heuristic::Landmarks(&table),
            ..base
        },
    )
    .expect("sampled ids are valid");
    QueryRow {
        start,
        goal,
        landmark_expanded: guided.nodes_expanded,
        zero_expanded: zero.nodes_expanded,
        landmark_pushes: guided.queue_pushes,
        zero_pushes: zero.queue_pushes,
        costs: guided.costs(),
        same_costs: guided.costs() == zero.costs(),
        landmark_ms: ms(&guided),
        zero_ms: ms(&zero),
    }
}

/// Cost multisets of all three searches agree on small generated graphs.
fn tiny_agreement(cfg: &BenchConfig) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    for i in 0..cfg.tiny_graphs {
        let seed = cfg.seed.wrapping_add(i as u64);
        let g = generate(Topology::ErdosRenyi { p_permille: 250 }, cfg.tiny_nodes, 2, seed).to_graph();
        for (s, t) in sample_queries(&g, 5, seed) {
            let row = compare_query(&g, s, t, cfg);
            let oracle = find_paths_bfs_oracle(
                &g,
                s,
                t,
                &SearchConfig {
                    max_paths: cfg.max_paths,
                    max_depth: cfg.max_depth,
                    direction: cfg.heuristic.direction,
                    heuristic: Heuristic::Zero,
                },
            )
            .expect("sampled ids are valid");
            let mut a = row.costs.clone();
            let mut b = oracle.costs();
            a.sort_unstable();
            b.sort_unstable();
            total += 1;
            agree += usize::from(row.same_costs && a == b);
        }
    }
    (agree, total)
}

pub fn bench_graph(cfg: &BenchConfig) -> KnowledgeGraph {
    generate(Topology::BarabasiAlbert { m: cfg.attach }, cfg.nodes, 4, cfg.seed).to_graph()
}

pub fn run_on(g: &KnowledgeGraph, cfg: &BenchConfig) -> BenchReport {
    let rows: Vec<QueryRow> = sample_queries(g, cfg.queries, cfg.seed)
        .into_iter()
        .map(|(s, t)| compare_query(g, s, t, cfg))
        .collect();
    let dominated = rows.iter().filter(|r| r.landmark_expanded <= r.zero_expanded).count();
    let strictly_fewer = rows.iter().filter(|r| r.landmark_expanded < r.zero_expanded).count();
    let mean = |v: Vec<f64>| if v.is_empty() { 1.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mean_expansion_ratio = mean(rows.iter().map(QueryRow::expansion_ratio).collect());
    let mean_speedup = mean(
        rows.iter()
            .filter(|r| r.landmark_expanded > 0)
            .map(|r| r.zero_expanded as f64 / r.landmark_expanded as f64)
            .collect(),
    );
    let (tiny_agree, tiny_total) = tiny_agreement(cfg);
    BenchReport {
        rows,
        dominated,
        strictly_fewer,
        mean_expansion_ratio,
        mean_speedup,
        tiny_agree,
        tiny_total,
    }
}

pub fn run(cfg: &BenchConfig) -> BenchReport {
    run_on(&bench_graph(cfg), cfg)
}

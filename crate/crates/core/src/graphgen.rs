//! Seeded random graph generators for benchmarks, property suites and the
//! browser demo.
//!
//! Node `i` becomes entity id `i` with label `n007`-style zero padding, and
//! relation `r` becomes relation id `r`.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kg::{EntityId, KnowledgeGraph, RelationId};

/// Shape of a generated graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Each ordered pair gets an edge with probability `p_permille / 1000`.
    ErdosRenyi { p_permille: u32 },
    /// Preferential attachment with `m` edges per new node.
    BarabasiAlbert { m: usize },
    Path,
    /// `width`-column grid.
    Grid { width: usize },
    /// Random recursive tree.
    Tree,
    /// Random graph with bounded out-degree.
    BoundedDegree { max_degree: usize },
}

/// Edge list over nodes `0..n` with relation indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub nodes: usize,
    pub edges: Vec<(usize, usize, usize)>,
    pub relations: usize,
}

impl EdgeList {
    pub fn node_label(&self, i: usize) -> String {
        let width = self.nodes.saturating_sub(1).to_string().len();
        format!("n{i:0width$}")
    }

    pub fn to_graph(&self) -> KnowledgeGraph {
        let entities = (0..self.nodes).map(|i| self.node_label(i)).collect();
        let relations = (0..self.relations).map(|r| format!("r{r}")).collect();
        let triples = self
            .edges
            .iter()
            .map(|&(s, r, o)| (EntityId(s as u32), RelationId(r as u32), EntityId(o as u32)))
            .collect();
        KnowledgeGraph::from_parts(entities, relations, triples).expect("generated ids are in range")
    }
}

pub fn generate(topology: Topology, nodes: usize, relations: usize, seed: u64) -> EdgeList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relations = relations.max(1);
    let mut edges = Vec::new();
    let rel = |rng: &mut ChaCha8Rng| rng.random_range(0..relations);
    match topology {
        Topology::ErdosRenyi { p_permille } => {
            for s in 0..nodes {
                for o in 0..nodes {
                    if s != o && rng.random_range(0..1000) < p_permille {
                        let r = rel(&mut rng);
                        edges.push((s, r, o));
                    }
                }
            }
        }
        Topology::BarabasiAlbert { m } => {
            let m = m.max(1);
            // endpoint multiset: sampling from it is degree-proportional
            let mut pool: Vec<usize> = Vec::new();
            for v in 1..nodes {
                let mut targets: Vec<usize> = Vec::with_capacity(m);
                let want = m.min(v);
                while targets.len() < want {
                    let t = if pool.is_empty() || rng.random_bool(0.1) {
                        rng.random_range(0..v)
                    } else {
                        *pool.choose(&mut rng).expect("non-empty pool")
                    };
                    if !targets.contains(&t) {
                        targets.push(t);
                    }
                }
                for t in targets {
                    let r = rel(&mut rng);
                    if rng.random_bool(0.5) {
                        edges.push((v, r, t));
                    } else {
                        edges.push((t, r, v));
                    }
                    pool.push(v);
                    pool.push(t);
                }
            }
        }
        Topology::Path => {
            for i in 1..nodes {
                let r = rel(&mut rng);
                edges.push((i - 1, r, i));
            }
        }
        Topology::Grid { width } => {
            let width = width.max(1);
            for i in 0..nodes {
                if (i + 1) % width != 0 && i + 1 < nodes {
                    let r = rel(&mut rng);
                    edges.push((i, r, i + 1));
                }
                if i + width < nodes {
                    let r = rel(&mut rng);
                    edges.push((i, r, i + width));
                }
            }
        }
        Topology::Tree => {
            for i in 1..nodes {
                let parent = rng.random_range(0..i);
                let r = rel(&mut rng);
                edges.push((parent, r, i));
            }
        }
        Topology::BoundedDegree { max_degree } => {
            for s in 0..nodes {
                let deg = rng.random_range(0..=max_degree);
                for _ in 0..deg {
                    let o = rng.random_range(0..nodes);
                    if o != s {
                        let r = rel(&mut rng);
                        edges.push((s, r, o));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    EdgeList {
        nodes,
        edges,
        relations,
    }
}

/// Pick a topology for suite index `i`, cycling through every family.
pub fn mixed_topology(i: usize, nodes: usize, rng: &mut impl Rng) -> Topology {
    match i % 6 {
        0 => Topology::ErdosRenyi {
            p_permille: rng.random_range(20..=120),
        },
        1 => Topology::BarabasiAlbert {
            m: rng.random_range(1..=3),
        },
        2 => Topology::Path,
        3 => Topology::Grid {
            width: rng.random_range(2..=nodes.clamp(2, 8)),
        },
        4 => Topology::Tree,
        _ => Topology::BoundedDegree {
            max_degree: rng.random_range(1..=4),
        },
    }
}

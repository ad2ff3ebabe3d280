#![allow(dead_code)]

use std::collections::VecDeque;

use kgrat_core::graphgen::{generate, mixed_topology, Topology};
use kgrat_core::kg::{Direction, EntityId, KnowledgeGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Plain adjacency lists rebuilt from the triple list, independent of the
/// graph's own CSR arrays.
pub fn adjacency(g: &KnowledgeGraph, direction: Direction) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.entity_count()];
    for t in g.triples() {
        let (s, o) = (t.subject.index(), t.object.index());
        match direction {
            Direction::Outgoing => adj[s].push(o),
            Direction::Incoming => adj[o].push(s),
            Direction::Both => {
                adj[s].push(o);
                adj[o].push(s);
            }
        }
    }
    adj
}

/// Full BFS distances from `source` over `adj`.
pub fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Distance from every entity to `goal` under the search policy.
pub fn dist_to_goal(g: &KnowledgeGraph, goal: EntityId, direction: Direction) -> Vec<Option<u32>> {
    let reversed = match direction {
        Direction::Outgoing => Direction::Incoming,
        Direction::Incoming => Direction::Outgoing,
        Direction::Both => Direction::Both,
    };
    bfs(&adjacency(g, reversed), goal.index())
}

pub fn max_degree(g: &KnowledgeGraph) -> usize {
    adjacency(g, Direction::Both).iter().map(Vec::len).max().unwrap_or(0)
}

/// `count` graphs with `min..=max` nodes cycling through every topology
/// family; suite seeds cycle through `seeds` values.
pub fn graph_suite(count: usize, min: usize, max: usize, seeds: u64) -> Vec<KnowledgeGraph> {
    (0..count)
        .map(|i| {
            let seed = i as u64 % seeds;
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 1_000 + i as u64);
            let nodes = rand::Rng::random_range(&mut rng, min..=max);
            let topo = mixed_topology(i, nodes, &mut rng);
            generate(topo, nodes, 3, seed * 7_919 + i as u64).to_graph()
        })
        .collect()
}

/// Graphs with degree at most `max_deg`.
pub fn bounded_suite(count: usize, max_nodes: usize, max_deg: usize) -> Vec<KnowledgeGraph> {
    let mut out = Vec::new();
    let mut i = 0u64;
    while out.len() < count {
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let nodes = rand::Rng::random_range(&mut rng, 4..=max_nodes);
        let topo = match i % 4 {
            0 => Topology::BoundedDegree { max_degree: rand::Rng::random_range(&mut rng, 2..=max_deg) },
            1 => Topology::ErdosRenyi { p_permille: rand::Rng::random_range(&mut rng, 60..=160) },
            2 => Topology::Grid { width: rand::Rng::random_range(&mut rng, 2..=5) },
            _ => Topology::BarabasiAlbert { m: 1 },
        };
        let g = generate(topo, nodes, 2, i).to_graph();
        if max_degree(&g) <= max_deg && g.triple_count() > 0 {
            out.push(g);
        }
        i += 1;
    }
    out
}

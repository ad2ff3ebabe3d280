//! Anchor-landmark lower bounds on the remaining hop distance to a goal.
//!
//! Anchors are sampled from the ball of radius `anchor_hop_radius` around the
//! goal. Each anchor gets a BFS truncated at `bfs_depth`; distances inside the
//! radius are exact, everything beyond is unknown. The bound for an entity is
//!
//! ```text
//! h(e) = max_i [dist(a_i, goal) - dist(a_i, e)]^+
//! ```
//!
//! where any term with an unknown operand contributes 0. By the triangle
//! inequality every term is at most `dist(e, goal)`, and each term moves by at
//! most one per hop, so `h` is both admissible and consistent.

use std::collections::{HashMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{Direction, EntityId, KnowledgeGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    pub anchor_count: usize,
    pub anchor_hop_radius: u32,
    pub bfs_depth: u32,
    pub rng_seed: u64,
    /// Edge policy shared with the path search.
    pub direction: Direction,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            anchor_count: 10,
            anchor_hop_radius: 3,
            bfs_depth: 3,
            rng_seed: 0,
            direction: Direction::Both,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.anchor_count == 0 {
            return Err("anchor_count must be >= 1".into());
        }
        if self.anchor_hop_radius == 0 || self.bfs_depth == 0 {
            return Err("anchor_hop_radius and bfs_depth must be >= 1".into());
        }
        if self.direction == Direction::Incoming {
            return Err("search direction must be `both` or `outgoing`".into());
        }
        Ok(())
    }
}

/// Hop distances from `source` to every entity within `depth` hops.
pub fn truncated_bfs(
    g: &KnowledgeGraph,
    source: EntityId,
    depth: u32,
    direction: Direction,
) -> HashMap<EntityId, u32> {
    let mut dist = HashMap::new();
    dist.insert(source, 0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == depth {
            continue;
        }
        for n in g.neighbors_iter(u, direction) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(n.entity) {
                slot.insert(du + 1);
                queue.push_back(n.entity);
            }
        }
    }
    dist
}

/// Direction to walk from the goal when collecting anchor candidates. Under
/// the outgoing-only policy anchors must be able to reach the goal, so the
/// ball is grown over incoming edges.
fn anchor_pool_direction(direction: Direction) -> Direction {
    match direction {
        Direction::Outgoing => Direction::Incoming,
        other => other,
    }
}

/// `[goal] ++ sample`, where the sample is drawn uniformly without
/// replacement from entities 1..=radius hops from the goal.
pub fn select_anchors(g: &KnowledgeGraph, goal: EntityId, cfg: &HeuristicConfig) -> Vec<EntityId> {
    let ball = truncated_bfs(
        g,
        goal,
        cfg.anchor_hop_radius,
        anchor_pool_direction(cfg.direction),
    );
    let mut pool: Vec<EntityId> = ball.into_keys().filter(|&e| e != goal).collect();
    pool.sort_unstable();

    let mut anchors = vec![goal];
    if pool.len() <= cfg.anchor_count {
        anchors.extend(pool);
        return anchors;
    }
    // one stream per goal so anchor sets do not depend on query order
    let stream = cfg.rng_seed ^ (goal.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let mut picked: Vec<EntityId> = rand::seq::index::sample(&mut rng, pool.len(), cfg.anchor_count)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    anchors.extend(picked);
    anchors
}

/// Lower-bound oracle for a single goal. Only valid for the goal it was
/// built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkTable {
    pub goal: EntityId,
    pub anchors: Vec<EntityId>,
    pub bfs_depth: u32,
    pub dist_maps: Vec<HashMap<EntityId, u32>>,
    pub dist_to_goal: Vec<Option<u32>>,
}

impl LandmarkTable {
    pub fn build(
        g: &KnowledgeGraph,
        anchors: &[EntityId],
        goal: EntityId,
        cfg: &HeuristicConfig,
    ) -> LandmarkTable {
        assert!(!anchors.is_empty(), "landmark table needs at least one anchor");
        let dist_maps: Vec<_> = anchors
            .iter()
            .map(|&a| truncated_bfs(g, a, cfg.bfs_depth, cfg.direction))
            .collect();
        let dist_to_goal = dist_maps.iter().map(|m| m.get(&goal).copied()).collect();
        LandmarkTable {
            goal,
            anchors: anchors.to_vec(),
            bfs_depth: cfg.bfs_depth,
            dist_maps,
            dist_to_goal,
        }
    }

    /// Sample anchors and build the table in one go.
    pub fn for_goal(g: &KnowledgeGraph, goal: EntityId, cfg: &HeuristicConfig) -> LandmarkTable {
        let anchors = select_anchors(g, goal, cfg);
        Self::build(g, &anchors, goal, cfg)
    }

    pub fn h(&self, e: EntityId) -> u32 {
        self.dist_maps
            .iter()
            .zip(&self.dist_to_goal)
            .filter_map(|(map, to_goal)| {
                let to_goal = (*to_goal)?;
                let to_e = *map.get(&e)?;
                Some(to_goal.saturating_sub(to_e))
            })
            .max()
            .unwrap_or(0)
    }
}

/// Heuristic used by the path search.
#[derive(Debug, Clone, Copy)]
pub enum Heuristic<'a> {
    Zero,
    Landmarks(&'a LandmarkTable),
}

impl Heuristic<'_> {
    pub fn estimate(&self, e: EntityId) -> u32 {
        match self {
            Heuristic::Zero => 0,
            Heuristic::Landmarks(t) => t.h(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{generate, Topology};

    fn path_graph(n: usize) -> KnowledgeGraph {
        generate(Topology::Path, n, 1, 0).to_graph()
    }

    fn e(i: u32) -> EntityId {
        EntityId(i)
    }

    #[test]
    fn truncated_bfs_on_path() {
        let g = path_graph(5);
        let m = truncated_bfs(&g, e(0), 3, Direction::Both);
        let mut got: Vec<_> = m.into_iter().collect();
        got.sort();
        assert_eq!(got, vec![(e(0), 0), (e(1), 1), (e(2), 2), (e(3), 3)]);
    }

    #[test]
    fn anchor_equal_to_goal() {
        let g = path_graph(4);
        let cfg = HeuristicConfig::default();
        let t = LandmarkTable::build(&g, &[e(2)], e(2), &cfg);
        assert_eq!(t.dist_to_goal, vec![Some(0)]);
        assert_eq!(t.dist_maps[0][&e(3)], 1);
        assert_eq!(t.dist_maps[0][&e(1)], 1);
    }

    #[test]
    fn h_on_path_graph() {
        let g = path_graph(4);
        let cfg = HeuristicConfig::default();
        let t = LandmarkTable::build(&g, &[e(0)], e(3), &cfg);
        assert_eq!(t.h(e(1)), 2);
        assert_eq!(t.h(e(0)), 3);
        assert_eq!(t.h(e(3)), 0);
    }

    #[test]
    fn h_is_zero_outside_every_radius() {
        let g = path_graph(10);
        let cfg = HeuristicConfig::default();
        let t = LandmarkTable::build(&g, &[e(0)], e(2), &cfg);
        assert_eq!(t.h(e(9)), 0);
    }

    #[test]
    fn small_pool_is_returned_whole() {
        let g = path_graph(3);
        let cfg = HeuristicConfig::default();
        assert_eq!(select_anchors(&g, e(0), &cfg), vec![e(0), e(1), e(2)]);
    }

    #[test]
    fn isolated_goal_anchors_itself() {
        let g = KnowledgeGraph::from_parts(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["r".into()],
            vec![(e(0), crate::kg::RelationId(0), e(1))],
        )
        .unwrap();
        let cfg = HeuristicConfig::default();
        assert_eq!(select_anchors(&g, e(2), &cfg), vec![e(2)]);
    }

    #[test]
    fn anchors_are_seed_deterministic() {
        let g = generate(Topology::ErdosRenyi { p_permille: 150 }, 20, 2, 3).to_graph();
        let cfg = HeuristicConfig {
            anchor_count: 4,
            rng_seed: 42,
            ..Default::default()
        };
        let a = select_anchors(&g, e(5), &cfg);
        let b = select_anchors(&g, e(5), &cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_eq!(a[0], e(5));
        let ball = truncated_bfs(&g, e(5), 3, Direction::Both);
        assert!(a[1..].iter().all(|x| ball.contains_key(x) && *x != e(5)));
    }

    #[test]
    fn outgoing_policy_samples_predecessors() {
        // 0 -> 1 -> 2 -> 3
        let g = path_graph(4);
        let cfg = HeuristicConfig {
            direction: Direction::Outgoing,
            ..Default::default()
        };
        assert_eq!(select_anchors(&g, e(3), &cfg), vec![e(3), e(0), e(1), e(2)]);
        let t = LandmarkTable::for_goal(&g, e(3), &cfg);
        assert_eq!(t.h(e(0)), 3);
        assert_eq!(t.h(e(2)), 1);
    }
}

//! Multi-path best-first search for reasoning paths.
//!
//! Queue entries are whole paths, not entities: the same entity may be
//! reached by many distinct paths and each one is a separate state. There is
//! no global closed set. A state is extended only to entities not already on
//! its own path, and goal states are emitted rather than extended, so the
//! search enumerates the cheapest loopless paths in non-decreasing cost order
//! until `max_paths` are found or the queue runs dry.
//!
//! Queue order is `(f, goal-first, g, insertion seq)`. Putting goal states
//! ahead of other states with equal `f` means the `m`-th path is emitted
//! before any non-goal state with `f` equal to its cost gets expanded, which
//! makes the expanded set with a consistent heuristic a subset of the
//! zero-heuristic one.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::heuristic::Heuristic;
use crate::kg::{Direction, EdgeDir, EntityId, GraphError, KnowledgeGraph, RelationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub relation: RelationId,
    pub dir: EdgeDir,
    pub entity: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub start: EntityId,
    pub steps: Vec<Step>,
    pub complete: bool,
}

impl ReasoningPath {
    pub fn end(&self) -> EntityId {
        self.steps.last().map_or(self.start, |s| s.entity)
    }

    pub fn cost(&self) -> usize {
        self.steps.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.entity))
    }

    pub fn is_loopless(&self) -> bool {
        let mut seen = HashSet::new();
        self.entities().all(|e| seen.insert(e))
    }

    /// Every step is an existing edge walked in a direction the policy allows.
    pub fn is_valid_in(&self, g: &KnowledgeGraph, direction: Direction) -> bool {
        let mut at = self.start;
        for s in &self.steps {
            let allowed = match (direction, s.dir) {
                (Direction::Both, _) => true,
                (Direction::Outgoing, d) => d == EdgeDir::Forward,
                (Direction::Incoming, d) => d == EdgeDir::Reverse,
            };
            if !allowed || !g.has_edge(at, s.relation, s.dir, s.entity) {
                return false;
            }
            at = s.entity;
        }
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig<'a> {
    pub max_paths: usize,
    pub max_depth: usize,
    pub direction: Direction,
    pub heuristic: Heuristic<'a>,
}

impl Default for SearchConfig<'_> {
    fn default() -> Self {
        SearchConfig {
            max_paths: 3,
            max_depth: 3,
            direction: Direction::Both,
            heuristic: Heuristic::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchReport {
    pub paths: Vec<ReasoningPath>,
    pub nodes_expanded: u64,
    pub queue_pushes: u64,
    pub wall_time: Duration,
}

impl SearchReport {
    pub fn costs(&self) -> Vec<usize> {
        self.paths.iter().map(ReasoningPath::cost).collect()
    }

    pub fn has_complete(&self) -> bool {
        self.paths.iter().any(|p| p.complete)
    }

    pub fn to_json(&self, g: &KnowledgeGraph) -> SearchReportJson {
        SearchReportJson {
            paths: self.paths.iter().map(|p| PathJson::from_path(p, g)).collect(),
            nodes_expanded: self.nodes_expanded,
            queue_pushes: self.queue_pushes,
            wall_time_ms: self.wall_time.as_millis() as u64,
        }
    }
}

/// Wire form of a path: labels instead of ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathJson {
    pub start: String,
    pub steps: Vec<[String; 3]>,
    pub cost: usize,
    pub complete: bool,
}

impl PathJson {
    pub fn from_path(p: &ReasoningPath, g: &KnowledgeGraph) -> Self {
        PathJson {
            start: g.entity_label(p.start).to_owned(),
            steps: p
                .steps
                .iter()
                .map(|s| {
                    [
                        g.relation_label(s.relation).to_owned(),
                        s.dir.arrow().to_owned(),
                        g.entity_label(s.entity).to_owned(),
                    ]
                })
                .collect(),
            cost: p.cost(),
            complete: p.complete,
        }
    }

    pub fn to_path(&self, g: &KnowledgeGraph) -> Option<ReasoningPath> {
        let start = g.entity_by_label(&self.start)?;
        let steps = self
            .steps
            .iter()
            .map(|[r, d, e]| {
                Some(Step {
                    relation: g.relation_by_label(r)?,
                    dir: EdgeDir::from_arrow(d)?,
                    entity: g.entity_by_label(e)?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ReasoningPath {
            start,
            steps,
            complete: self.complete,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReportJson {
    pub paths: Vec<PathJson>,
    pub nodes_expanded: u64,
    pub queue_pushes: u64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: u32,
    step: Step,
    depth: u32,
}

const ROOT: u32 = u32::MAX;

/// Arena of path states; each state points at its prefix.
struct PathArena {
    start: EntityId,
    nodes: Vec<Node>,
}

impl PathArena {
    fn entity(&self, idx: u32) -> EntityId {
        if idx == ROOT {
            self.start
        } else {
            self.nodes[idx as usize].step.entity
        }
    }

    fn depth(&self, idx: u32) -> u32 {
        if idx == ROOT {
            0
        } else {
            self.nodes[idx as usize].depth
        }
    }

    fn on_path(&self, mut idx: u32, e: EntityId) -> bool {
        while idx != ROOT {
            let n = &self.nodes[idx as usize];
            if n.step.entity == e {
                return true;
            }
            idx = n.parent;
        }
        self.start == e
    }

    fn push(&mut self, parent: u32, step: Step) -> u32 {
        let depth = self.depth(parent) + 1;
        self.nodes.push(Node {
            parent,
            step,
            depth,
        });
        (self.nodes.len() - 1) as u32
    }

    fn steps(&self, mut idx: u32) -> Vec<Step> {
        let mut out = Vec::with_capacity(self.depth(idx) as usize);
        while idx != ROOT {
            let n = &self.nodes[idx as usize];
            out.push(n.step);
            idx = n.parent;
        }
        out.reverse();
        out
    }
}

#[derive(Debug, PartialEq, Eq)]
struct QueueKey {
    f: u32,
    not_goal: bool,
    g: u32,
    seq: u64,
    state: u32,
}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.f, self.not_goal, self.g, self.seq).cmp(&(other.f, other.not_goal, other.g, other.seq))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Wall-clock stopwatch; reads zero where no monotonic clock exists.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}

fn validate(g: &KnowledgeGraph, start: EntityId, goal: EntityId) -> Result<(), GraphError> {
    g.check(start)?;
    g.check(goal)
}

/// Enumerate up to `max_paths` cheapest loopless paths from `start` to
/// `goal`, best-first on `f = g + h`.
pub fn find_paths(
    g: &KnowledgeGraph,
    start: EntityId,
    goal: EntityId,
    cfg: &SearchConfig<'_>,
) -> Result<SearchReport, GraphError> {
    validate(g, start, goal)?;
    let clock = Stopwatch::start();
    let mut report = SearchReport::default();
    if start == goal {
        report.paths.push(ReasoningPath {
            start,
            steps: Vec::new(),
            complete: true,
        });
        report.wall_time = clock.elapsed();
        return Ok(report);
    }

    let max_depth = cfg.max_depth as u32;
    let mut arena = PathArena {
        start,
        nodes: Vec::new(),
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut emitted: HashSet<Vec<Step>> = HashSet::new();

    let h0 = cfg.heuristic.estimate(start);
    if h0 <= max_depth {
        heap.push(Reverse(QueueKey {
            f: h0,
            not_goal: true,
            g: 0,
            seq,
            state: ROOT,
        }));
        seq += 1;
        report.queue_pushes += 1;
    }

    while let Some(Reverse(key)) = heap.pop() {
        if report.paths.len() >= cfg.max_paths {
            break;
        }
        let here = arena.entity(key.state);
        if here == goal {
            let steps = arena.steps(key.state);
            if emitted.insert(steps.clone()) {
                report.paths.push(ReasoningPath {
                    start,
                    steps,
                    complete: true,
                });
            }
            continue;
        }
        if key.g >= max_depth {
            continue;
        }
        report.nodes_expanded += 1;
        let g_next = key.g + 1;
        for n in g.neighbors_iter(here, cfg.direction) {
            if arena.on_path(key.state, n.entity) {
                continue;
            }
            let h = cfg.heuristic.estimate(n.entity);
            let f = g_next + h;
            // admissible h: nothing past this state reaches the goal in budget
            if f > max_depth {
                continue;
            }
            let state = arena.push(
                key.state,
                Step {
                    relation: n.relation,
                    dir: n.dir,
                    entity: n.entity,
                },
            );
            heap.push(Reverse(QueueKey {
                f,
                not_goal: n.entity != goal,
                g: g_next,
                seq,
                state,
            }));
            seq += 1;
            report.queue_pushes += 1;
        }
    }
    report.wall_time = clock.elapsed();
    Ok(report)
}

/// Depth-first enumeration of every loopless path of at most `max_depth`
/// hops, calling `visit` on each non-root path. Paths are not extended
/// through `stop_at`.
fn enumerate_paths(
    g: &KnowledgeGraph,
    start: EntityId,
    max_depth: usize,
    direction: Direction,
    stop_at: Option<EntityId>,
    mut visit: impl FnMut(&[Step]),
) -> u64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        g: &KnowledgeGraph,
        at: EntityId,
        on_path: &mut Vec<EntityId>,
        steps: &mut Vec<Step>,
        max_depth: usize,
        direction: Direction,
        stop_at: Option<EntityId>,
        visit: &mut dyn FnMut(&[Step]),
        considered: &mut u64,
    ) {
        if steps.len() == max_depth || Some(at) == stop_at {
            return;
        }
        for n in g.neighbors_iter(at, direction) {
            *considered += 1;
            if on_path.contains(&n.entity) {
                continue;
            }
            steps.push(Step {
                relation: n.relation,
                dir: n.dir,
                entity: n.entity,
            });
            on_path.push(n.entity);
            visit(steps);
            rec(g, n.entity, on_path, steps, max_depth, direction, stop_at, visit, considered);
            on_path.pop();
            steps.pop();
        }
    }

    let mut considered = 0;
    rec(
        g,
        start,
        &mut vec![start],
        &mut Vec::new(),
        max_depth,
        direction,
        stop_at,
        &mut visit,
        &mut considered,
    );
    considered
}

/// Exhaustive reference: enumerate every loopless path up to `max_depth`,
/// keep those ending at `goal`, sort by (cost, steps) and take `max_paths`.
/// `nodes_expanded` counts every edge extension considered. The heuristic in
/// `cfg` is ignored.
pub fn find_paths_bfs_oracle(
    g: &KnowledgeGraph,
    start: EntityId,
    goal: EntityId,
    cfg: &SearchConfig<'_>,
) -> Result<SearchReport, GraphError> {
    validate(g, start, goal)?;
    let clock = Stopwatch::start();
    if start == goal {
        return Ok(SearchReport {
            paths: vec![ReasoningPath {
                start,
                steps: Vec::new(),
                complete: true,
            }],
            wall_time: clock.elapsed(),
            ..Default::default()
        });
    }
    let mut found: Vec<Vec<Step>> = Vec::new();
    let considered = enumerate_paths(g, start, cfg.max_depth, cfg.direction, Some(goal), |steps| {
        if steps.last().map(|s| s.entity) == Some(goal) {
            found.push(steps.to_vec());
        }
    });
    found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    found.truncate(cfg.max_paths);
    Ok(SearchReport {
        paths: found
            .into_iter()
            .map(|steps| ReasoningPath {
                start,
                steps,
                complete: true,
            })
            .collect(),
        nodes_expanded: considered,
        queue_pushes: 0,
        wall_time: clock.elapsed(),
    })
}

/// Partial paths for when the goal is out of reach: up to `max_paths`
/// loopless paths of the greatest available length (at most `max_depth`),
/// ranked by how far the heuristic drops from `start` to the path's end,
/// then by step sequence. Returns nothing for an isolated start.
pub fn frontier_fallback(
    g: &KnowledgeGraph,
    start: EntityId,
    cfg: &SearchConfig<'_>,
) -> Result<SearchReport, GraphError> {
    g.check(start)?;
    let clock = Stopwatch::start();
    let mut longest = 0usize;
    let mut best: Vec<Vec<Step>> = Vec::new();
    let considered = enumerate_paths(g, start, cfg.max_depth, cfg.direction, None, |steps| {
        match steps.len().cmp(&longest) {
            Ordering::Greater => {
                longest = steps.len();
                best.clear();
                best.push(steps.to_vec());
            }
            Ordering::Equal => best.push(steps.to_vec()),
            Ordering::Less => {}
        }
    });
    let h_start = cfg.heuristic.estimate(start) as i64;
    let mut ranked: Vec<(i64, Vec<Step>)> = best
        .into_iter()
        .map(|steps| {
            let end = steps.last().expect("non-empty").entity;
            (h_start - cfg.heuristic.estimate(end) as i64, steps)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    ranked.truncate(cfg.max_paths);
    Ok(SearchReport {
        paths: ranked
            .into_iter()
            .map(|(_, steps)| ReasoningPath {
                start,
                steps,
                complete: false,
            })
            .collect(),
        nodes_expanded: considered,
        queue_pushes: 0,
        wall_time: clock.elapsed(),
    })
}

/// Run `find_paths` and fall back to partial frontier paths when no complete
/// path exists within the depth budget. The counters of both phases are
/// summed.
pub fn find_paths_or_frontier(
    g: &KnowledgeGraph,
    start: EntityId,
    goal: EntityId,
    cfg: &SearchConfig<'_>,
) -> Result<SearchReport, GraphError> {
    let mut report = find_paths(g, start, goal, cfg)?;
    if report.has_complete() {
        return Ok(report);
    }
    let fallback = frontier_fallback(g, start, cfg)?;
    report.paths = fallback.paths;
    report.nodes_expanded += fallback.nodes_expanded;
    report.wall_time += fallback.wall_time;
    Ok(report)
}

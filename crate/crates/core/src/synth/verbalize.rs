//! Text form of reasoning paths: `a--rel-->b` for forward steps and
//! `a<--rel--b` for reverse steps, using display labels.

use std::collections::HashMap;

use crate::astar::{ReasoningPath, Step};
use crate::kg::{Direction, EdgeDir, EntityId, KnowledgeGraph};

pub fn verbalize(p: &ReasoningPath, g: &KnowledgeGraph) -> String {
    let mut out = String::from(g.entity_display(p.start));
    for s in &p.steps {
        let rel = g.relation_label(s.relation);
        match s.dir {
            EdgeDir::Forward => {
                out.push_str("--");
                out.push_str(rel);
                out.push_str("-->");
            }
            EdgeDir::Reverse => {
                out.push_str("<--");
                out.push_str(rel);
                out.push_str("--");
            }
        }
        out.push_str(g.entity_display(s.entity));
    }
    out
}

/// Triples along a path as `(subject, relation, object)` display labels,
/// oriented as stored in the graph.
pub fn path_triples(p: &ReasoningPath, g: &KnowledgeGraph) -> Vec<(String, String, String)> {
    let mut at = p.start;
    p.steps
        .iter()
        .map(|s| {
            let (subj, obj) = match s.dir {
                EdgeDir::Forward => (at, s.entity),
                EdgeDir::Reverse => (s.entity, at),
            };
            at = s.entity;
            (
                g.entity_display(subj).to_owned(),
                g.relation_label(s.relation).to_owned(),
                g.entity_display(obj).to_owned(),
            )
        })
        .collect()
}

/// Recover a structured path from its text form by walking graph edges.
/// Returns the first match in neighbor order when homonyms make the text
/// ambiguous; `None` when no walk reproduces the text.
pub struct PathParser<'g> {
    g: &'g KnowledgeGraph,
    by_display: HashMap<&'g str, Vec<EntityId>>,
}

impl<'g> PathParser<'g> {
    pub fn new(g: &'g KnowledgeGraph) -> Self {
        let mut by_display: HashMap<&str, Vec<EntityId>> = HashMap::new();
        for e in g.entity_ids() {
            by_display.entry(g.entity_display(e)).or_default().push(e);
        }
        PathParser { g, by_display }
    }

    pub fn parse(&self, text: &str, goal: Option<EntityId>) -> Option<ReasoningPath> {
        for (cut, _) in text.char_indices().skip(1).chain(std::iter::once((text.len(), ' '))) {
            let Some(starts) = self.by_display.get(&text[..cut]) else {
                continue;
            };
            for &start in starts {
                let mut steps = Vec::new();
                if self.walk(start, &text[cut..], &mut steps) {
                    let complete = goal.is_none_or(|goal| steps.last().map_or(start, |s: &Step| s.entity) == goal);
                    return Some(ReasoningPath {
                        start,
                        steps,
                        complete,
                    });
                }
            }
        }
        None
    }

    fn walk(&self, at: EntityId, rest: &str, steps: &mut Vec<Step>) -> bool {
        if rest.is_empty() {
            return true;
        }
        for n in self.g.neighbors_iter(at, Direction::Both) {
            let rel = self.g.relation_label(n.relation);
            let connector = match n.dir {
                EdgeDir::Forward => format!("--{rel}-->"),
                EdgeDir::Reverse => format!("<--{rel}--"),
            };
            let Some(tail) = rest.strip_prefix(connector.as_str()) else {
                continue;
            };
            let Some(tail) = tail.strip_prefix(self.g.entity_display(n.entity)) else {
                continue;
            };
            steps.push(Step {
                relation: n.relation,
                dir: n.dir,
                entity: n.entity,
            });
            if self.walk(n.entity, tail, steps) {
                return true;
            }
            steps.pop();
        }
        false
    }
}

use std::collections::HashSet;

use kgrat_core::kg::{lookup_key, Direction, EdgeDir, KnowledgeGraph};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["Sun", "sun", "white light", "Light", "Apple#1", "Apple#2", "iPhone", "café", "Mars", "x"])
        .prop_map(str::to_owned)
}

fn triples() -> impl Strategy<Value = Vec<(String, String, String)>> {
    prop::collection::vec((label(), prop::sample::select(vec!["emits", "is", "near"]).prop_map(str::to_owned), label()), 0..25)
}

fn tsv(ts: &[(String, String, String)]) -> String {
    ts.iter().map(|(s, r, o)| format!("{s}\t{r}\t{o}\n")).collect()
}

proptest! {
    #[test]
    fn labels_round_trip(ts in triples()) {
        let g = KnowledgeGraph::from_str_tsv(&tsv(&ts)).unwrap();
        for e in g.entity_ids() {
            prop_assert_eq!(g.entity_by_label(g.entity_label(e)), Some(e));
        }
    }

    #[test]
    fn adjacency_is_symmetric(ts in triples()) {
        let g = KnowledgeGraph::from_str_tsv(&tsv(&ts)).unwrap();
        let out: usize = g.entity_ids().map(|e| g.out_edges(e).len()).sum();
        let inn: usize = g.entity_ids().map(|e| g.in_edges(e).len()).sum();
        prop_assert_eq!(out, g.triple_count());
        prop_assert_eq!(inn, g.triple_count());
        for t in g.triples() {
            prop_assert!(g.out_edges(t.subject).contains(&(t.relation, t.object)));
            prop_assert!(g.in_edges(t.object).contains(&(t.relation, t.subject)));
            prop_assert!(g.has_edge(t.subject, t.relation, EdgeDir::Forward, t.object));
            prop_assert!(g.has_edge(t.object, t.relation, EdgeDir::Reverse, t.subject));
        }
        for e in g.entity_ids() {
            let both = g.neighbors(e, Direction::Both).unwrap().len();
            prop_assert_eq!(both, g.out_edges(e).len() + g.in_edges(e).len());
        }
    }

    #[test]
    fn load_is_order_independent(ts in triples(), seed in any::<u64>()) {
        let mut shuffled = ts.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        shuffled.extend(ts.iter().take(3).cloned());
        let a = KnowledgeGraph::from_str_tsv(&tsv(&ts)).unwrap();
        let b = KnowledgeGraph::from_str_tsv(&tsv(&shuffled)).unwrap();
        prop_assert_eq!(a.to_snapshot(), b.to_snapshot());
        let back = KnowledgeGraph::from_snapshot(&a.to_snapshot()).unwrap();
        prop_assert_eq!(back.to_snapshot(), a.to_snapshot());
        let distinct: HashSet<_> = ts.iter().collect();
        prop_assert!(a.triple_count() <= distinct.len());
    }

    #[test]
    fn case_folded_lookup(ts in triples()) {
        let g = KnowledgeGraph::from_str_tsv(&tsv(&ts)).unwrap();
        for e in g.entity_ids() {
            let upper = g.entity_label(e).to_uppercase();
            let found = g.entity_by_label(&upper).expect("case-folded hit");
            prop_assert_eq!(lookup_key(g.entity_label(found)), lookup_key(g.entity_label(e)));
        }
    }
}

#[test]
fn sun_counts_and_neighbors() {
    let g = KnowledgeGraph::from_str_tsv("Sun\temits\tfull-spectrum light\nfull-spectrum light\tintegrates into\twhite light\n").unwrap();
    assert_eq!((g.entity_count(), g.relation_count(), g.triple_count()), (3, 2, 2));
    let sun = g.entity_by_label("SUN").unwrap();
    let out = g.neighbors(sun, Direction::Outgoing).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(g.entity_label(out[0].entity), "full-spectrum light");
    let white = g.entity_by_label("white light").unwrap();
    assert!(g.neighbors(white, Direction::Outgoing).unwrap().is_empty());
    let mid = g.entity_by_label("full-spectrum light").unwrap();
    assert_eq!(g.neighbors(mid, Direction::Both).unwrap().len(), 2);
    assert_eq!(g.entity_by_label("Mars"), None);
}

use kgrat_core::kg::{display_label, lookup_key, KnowledgeGraph};
use kgrat_core::linker::{EntityLinker, MentionSource, STOP_TOKENS};
use proptest::prelude::*;

fn apple_graph() -> KnowledgeGraph {
    KnowledgeGraph::from_str_tsv(
        "Apple#1\tused in\tCider Making\nApple#1\tgrows as\tWild Apples\nApple#2\tmakes\tiPhone\nApple#2\tmakes\tiMac\n\
Apple#2\tbased in\tCupertino\nApple#1\tgrows in\tOrchard Valley\n",
    )
    .unwrap()
}

fn linked(g: &KnowledgeGraph, context: &str) -> Vec<String> {
    let linker = EntityLinker::new(g);
    linker
        .link_text("Tell me about Apple", context, MentionSource::Question)
        .entities
        .iter()
        .map(|&e| g.entity_label(e).to_owned())
        .collect()
}

#[test]
fn apple_disambiguation() {
    let g = apple_graph();
    assert_eq!(linked(&g, "cider from wild apples"), vec!["Apple#1"]);
    assert_eq!(linked(&g, "the new iphone"), vec!["Apple#2"]);
    // no overlap: lower id wins
    assert_eq!(linked(&g, "weather today"), vec!["Apple#1"]);
}

fn neighbor_words() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(vec!["cider", "making", "wild", "apples", "iphone", "imac", "cupertino", "orchard", "valley", "rain", "the", "of"]), 0..8)
}

proptest! {
    #[test]
    fn adding_candidate_tokens_never_switches_away(base in neighbor_words(), extra in prop::collection::vec(prop::sample::select(vec!["cider", "making", "wild", "orchard", "valley"]), 1..4)) {
        let g = apple_graph();
        let before_ctx = base.join(" ");
        let before = linked(&g, &before_ctx);
        if before == vec!["Apple#1".to_owned()] {
            let after_ctx = format!("{before_ctx} {}", extra.join(" "));
            prop_assert_eq!(linked(&g, &after_ctx), before);
        }
        let tech = base.iter().chain(["iphone", "imac"].iter()).copied().collect::<Vec<_>>().join(" ");
        if linked(&g, &before_ctx) == vec!["Apple#2".to_owned()] {
            prop_assert_eq!(linked(&g, &tech), vec!["Apple#2".to_owned()]);
        }
    }

    #[test]
    fn linked_labels_match_mention_surface(text in "[A-Za-z ]{0,40}", context in "[a-z ]{0,30}") {
        let g = apple_graph();
        let linker = EntityLinker::new(&g);
        let set = linker.link_text(&text, &context, MentionSource::Answer);
        let mentions = linker.mentions(&text);
        for e in &set.entities {
            let key = lookup_key(display_label(g.entity_label(*e)));
            prop_assert!(mentions.iter().any(|m| lookup_key(&m.surface) == key));
        }
        prop_assert_eq!(set, linker.link_text(&text, &context, MentionSource::Answer));
    }
}

#[test]
fn greedy_longest_match() {
    let g = KnowledgeGraph::from_str_tsv("white light\tis\tlight\n").unwrap();
    let linker = EntityLinker::new(&g);
    let m = linker.mentions("white light near white light");
    assert_eq!(m.len(), 2);
    assert!(m.iter().all(|m| m.surface == "white light"));
}

#[test]
fn stop_list_is_published() {
    assert!(STOP_TOKENS.len() >= 40);
    assert!(STOP_TOKENS.contains(&"the"));
}

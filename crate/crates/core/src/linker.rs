//! Dictionary entity linking.
//!
//! Mentions are found by longest match against the graph's display labels
//! (case-folded, word-aligned). A mention whose label is shared by several
//! entities (`Apple#1`, `Apple#2`) is resolved by counting context tokens that
//! also occur in each candidate's 1-hop neighbor labels.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::kg::{lookup_key, Direction, EntityId, KnowledgeGraph};

/// Function words ignored when scoring context overlap.
pub const STOP_TOKENS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "did", "do", "does",
    "for", "from", "had", "has", "have", "he", "her", "his", "how", "i", "if", "in", "into", "is",
    "it", "its", "of", "on", "or", "she", "so", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "to", "was", "we", "were", "what", "when", "where", "which", "who",
    "why", "will", "with", "you",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    /// Byte range in the source text.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionSource {
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedEntitySet {
    pub entities: Vec<EntityId>,
    pub source: MentionSource,
}

/// Lowercased alphanumeric tokens; everything else separates.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn content_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    tokens(text).filter(|t| !STOP_TOKENS.contains(&t.as_str()))
}

/// Case-folded display labels of a graph mapped to their entities.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    by_key: HashMap<String, Vec<EntityId>>,
    max_key_len: usize,
}

impl Lexicon {
    pub fn from_graph(g: &KnowledgeGraph) -> Self {
        let mut by_key: HashMap<String, Vec<EntityId>> = HashMap::new();
        for e in g.entity_ids() {
            let key = lookup_key(g.entity_display(e));
            if !key.is_empty() {
                by_key.entry(key).or_default().push(e);
            }
        }
        let max_key_len = by_key.keys().map(String::len).max().unwrap_or(0);
        Lexicon { by_key, max_key_len }
    }

    /// Entities whose display label folds to the same key as `surface`,
    /// ascending by id.
    pub fn candidates(&self, surface: &str) -> &[EntityId] {
        self.by_key
            .get(&lookup_key(surface))
            .map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}

/// Lowercased copy of `text` with, for every folded byte, the byte offset of
/// the source char it came from.
struct Folded {
    text: String,
    origin: Vec<usize>,
}

impl Folded {
    fn new(src: &str) -> Self {
        let mut text = String::with_capacity(src.len());
        let mut origin = Vec::with_capacity(src.len() + 1);
        for (off, c) in src.char_indices() {
            for lc in c.to_lowercase() {
                let before = text.len();
                text.push(lc);
                origin.extend(std::iter::repeat_n(off, text.len() - before));
            }
        }
        origin.push(src.len());
        Folded { text, origin }
    }

    fn char_before(&self, pos: usize) -> Option<char> {
        self.text[..pos].chars().next_back()
    }

    fn char_at(&self, pos: usize) -> Option<char> {
        self.text[pos..].chars().next()
    }

    fn is_word_start(&self, pos: usize) -> bool {
        match (self.char_before(pos), self.char_at(pos)) {
            (_, None) => false,
            (None, _) => true,
            (Some(b), Some(c)) => !(b.is_alphanumeric() && c.is_alphanumeric()),
        }
    }

    fn is_word_end(&self, pos: usize) -> bool {
        match (self.char_before(pos), self.char_at(pos)) {
            (None, _) => false,
            (_, None) => true,
            (Some(b), Some(c)) => !(b.is_alphanumeric() && c.is_alphanumeric()),
        }
    }
}

/// Word-aligned longest-match mentions. Overlaps resolve to the longer match,
/// then the earlier one; the result is ordered by position.
///
/// Spans are byte offsets into `text`. Matching is case-insensitive; the
/// text is not NFC-normalized, so decomposed input only matches labels that
/// are themselves decomposed-equal.
pub fn extract_mentions(text: &str, lexicon: &Lexicon) -> Vec<Mention> {
    if text.is_empty() || lexicon.is_empty() {
        return Vec::new();
    }
    let folded = Folded::new(text);
    let ft = &folded.text;

    // (folded start, folded end) of the longest label match at each start
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (start, _) in ft.char_indices() {
        if !folded.is_word_start(start) {
            continue;
        }
        let mut limit = (start + lexicon.max_key_len).min(ft.len());
        while !ft.is_char_boundary(limit) {
            limit -= 1;
        }
        let mut best = None;
        for (rel, c) in ft[start..limit].char_indices() {
            let end = start + rel + c.len_utf8();
            if folded.is_word_end(end) && lexicon.by_key.contains_key(&ft[start..end]) {
                best = Some(end);
            }
        }
        if let Some(end) = best {
            found.push((start, end));
        }
    }

    found.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (s, e) in found {
        if chosen.iter().all(|&(cs, ce)| e <= cs || s >= ce) {
            chosen.push((s, e));
        }
    }
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|(s, e)| {
            let span = (folded.origin[s], folded.origin[e]);
            Mention {
                surface: text[span.0..span.1].to_owned(),
                span,
            }
        })
        .collect()
}

/// Number of content tokens of `context` that appear in any 1-hop neighbor
/// label of `candidate`.
pub fn overlap_score(g: &KnowledgeGraph, candidate: EntityId, context_tokens: &HashSet<String>) -> usize {
    let neighbor_tokens: HashSet<String> = g
        .neighbors_iter(candidate, Direction::Both)
        .flat_map(|n| content_tokens(g.entity_display(n.entity)).collect::<Vec<_>>())
        .collect();
    context_tokens.intersection(&neighbor_tokens).count()
}

/// Resolve each mention to one entity. Unmatched mentions are dropped and
/// repeated entities are kept once, at their first position.
pub fn link(
    mentions: &[Mention],
    g: &KnowledgeGraph,
    lexicon: &Lexicon,
    context: &str,
    source: MentionSource,
) -> LinkedEntitySet {
    let ctx: HashSet<String> = content_tokens(context).collect();
    let mut entities = Vec::new();
    for m in mentions {
        let chosen = match lexicon.candidates(&m.surface) {
            [] => continue,
            [only] => *only,
            many => {
                // max score; ties go to the lower id since `many` is ascending
                let mut best = many[0];
                let mut best_score = overlap_score(g, best, &ctx);
                for &c in &many[1..] {
                    let s = overlap_score(g, c, &ctx);
                    if s > best_score {
                        best = c;
                        best_score = s;
                    }
                }
                best
            }
        };
        if !entities.contains(&chosen) {
            entities.push(chosen);
        }
    }
    LinkedEntitySet { entities, source }
}

/// Borrowing bundle of a graph and its lexicon.
pub struct EntityLinker<'g> {
    graph: &'g KnowledgeGraph,
    lexicon: Lexicon,
}

impl<'g> EntityLinker<'g> {
    pub fn new(graph: &'g KnowledgeGraph) -> Self {
        EntityLinker {
            graph,
            lexicon: Lexicon::from_graph(graph),
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn mentions(&self, text: &str) -> Vec<Mention> {
        extract_mentions(text, &self.lexicon)
    }

    /// Extract from `text` and link using `context` for disambiguation.
    pub fn link_text(&self, text: &str, context: &str, source: MentionSource) -> LinkedEntitySet {
        let mentions = self.mentions(text);
        link(&mentions, self.graph, &self.lexicon, context, source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(labels: &[&str]) -> (KnowledgeGraph, Lexicon) {
        let tsv: String = labels.iter().map(|l| format!("{l}\tis\t{l}\n")).collect();
        let g = KnowledgeGraph::from_str_tsv(&tsv).unwrap();
        let lx = Lexicon::from_graph(&g);
        (g, lx)
    }

    fn surfaces(ms: &[Mention]) -> Vec<&str> {
        ms.iter().map(|m| m.surface.as_str()).collect()
    }

    #[test]
    fn finds_sun() {
        let (_, lx) = lex(&["Sun", "white light"]);
        let ms = extract_mentions("what is the true color of the Sun?", &lx);
        assert_eq!(surfaces(&ms), vec!["Sun"]);
        assert_eq!(ms[0].span, (30, 33));
    }

    #[test]
    fn empty_text() {
        let (_, lx) = lex(&["Sun"]);
        assert!(extract_mentions("", &lx).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let (_, lx) = lex(&["white light", "light"]);
        let ms = extract_mentions("white light near white light", &lx);
        assert_eq!(surfaces(&ms), vec!["white light", "white light"]);
        assert_eq!(ms[1].span, (17, 28));
    }

    #[test]
    fn longer_beats_earlier_on_overlap() {
        let (_, lx) = lex(&["new york", "york city hall"]);
        let ms = extract_mentions("new york city hall", &lx);
        assert_eq!(surfaces(&ms), vec!["york city hall"]);
    }

    #[test]
    fn respects_word_boundaries() {
        let (_, lx) = lex(&["sun"]);
        assert!(extract_mentions("sunlight and sunday", &lx).is_empty());
        assert_eq!(surfaces(&extract_mentions("the SUN.", &lx)), vec!["SUN"]);
    }

    #[test]
    fn spans_survive_case_folding_length_changes() {
        // U+0130 lowercases to two chars
        let (_, lx) = lex(&["sun"]);
        let text = "\u{130}x Sun";
        let ms = extract_mentions(text, &lx);
        assert_eq!(ms.len(), 1);
        assert_eq!(&text[ms[0].span.0..ms[0].span.1], "Sun");
    }

    fn apple_graph() -> KnowledgeGraph {
        KnowledgeGraph::from_str_tsv(
            "Apple#1\trelated to\tCider Making\n\
             Apple#1\trelated to\tWild Apples\n\
             Apple#2\tproduces\tiPhone\n\
             Apple#2\tproduces\tiMac\n",
        )
        .unwrap()
    }

    #[test]
    fn disambiguates_by_neighbor_context() {
        let g = apple_graph();
        let linker = EntityLinker::new(&g);
        let fruit = g.entity_by_label("Apple#1").unwrap();
        let company = g.entity_by_label("Apple#2").unwrap();
        let ms = linker.mentions("Apple");
        assert_eq!(ms.len(), 1);
        let set = link(&ms, &g, linker.lexicon(), "cider from wild apples", MentionSource::Question);
        assert_eq!(set.entities, vec![fruit]);
        let set = link(&ms, &g, linker.lexicon(), "my new iphone", MentionSource::Question);
        assert_eq!(set.entities, vec![company]);
    }

    #[test]
    fn zero_overlap_prefers_lower_id() {
        let g = apple_graph();
        let linker = EntityLinker::new(&g);
        let set = linker.link_text("Apple", "nothing relevant here", MentionSource::Answer);
        assert_eq!(set.entities, vec![EntityId(0)]);
        assert_eq!(g.entity_label(EntityId(0)), "Apple#1");
    }

    #[test]
    fn unique_label_links_directly() {
        let g = KnowledgeGraph::from_str_tsv("Sun\temits\tfull-spectrum light\n").unwrap();
        let linker = EntityLinker::new(&g);
        let set = linker.link_text("Sun", "color of the Sun", MentionSource::Question);
        assert_eq!(set.entities, vec![g.entity_by_label("Sun").unwrap()]);
    }

    #[test]
    fn duplicate_mentions_dedupe() {
        let g = KnowledgeGraph::from_str_tsv("Sun\temits\tlight\n").unwrap();
        let linker = EntityLinker::new(&g);
        let set = linker.link_text("Sun, sun and light", "", MentionSource::Question);
        assert_eq!(set.entities.len(), 2);
    }

    #[test]
    fn stop_tokens_do_not_score() {
        let g = KnowledgeGraph::from_str_tsv("X#1\tr\tthe of a\nX#2\tr\tthe thing\n").unwrap();
        let linker = EntityLinker::new(&g);
        let set = linker.link_text("X", "the of a", MentionSource::Question);
        assert_eq!(set.entities, vec![g.entity_by_label("X#1").unwrap()]);
        let set = linker.link_text("X", "the thing", MentionSource::Question);
        assert_eq!(set.entities, vec![g.entity_by_label("X#2").unwrap()]);
    }
}

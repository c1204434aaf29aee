//! Corpus ingestion: raw texts, dependency parses, normalization, time slots.
//!
//! Documents arrive as JSON Lines (id / timestamp / text) and their parses as
//! CoNLL-U. Both are joined by document id, normalized, and partitioned into
//! daily [`TimeSlot`]s over UTC day boundaries. After construction every type
//! here is immutable and safe to share across threads.

mod conllu;
mod jsonl;

pub use conllu::{load_conllu, ConlluOutput, SentenceReject};
pub use jsonl::{load_jsonl, JsonlOutput};

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::canonical_combining_class;
use unicode_normalization::UnicodeNormalization;

/// What a node in a dependency tree stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
}

/// One token of a parsed sentence.
///
/// `head` follows the CoNLL-U convention: 0 marks the root, any other value
/// is the 1-based index of the parent token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub head: usize,
    pub deprel: String,
    pub kind: TokenKind,
}

/// Violations of the dependency-tree invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty sentence")]
    Empty,
    #[error("no root token")]
    NoRoot,
    #[error("multiple roots at tokens {0} and {1}")]
    MultipleRoots(usize, usize),
    #[error("head {head} out of range at token {token}")]
    HeadOutOfRange { token: usize, head: usize },
    #[error("self-loop at token {0}")]
    SelfLoop(usize),
    #[error("cycle involving token {0}")]
    Cycle(usize),
    #[error("expected token index {expected}, found {found}")]
    BadIndex { expected: usize, found: usize },
    #[error("empty lemma at token {0}")]
    EmptyLemma(usize),
}

/// A rooted labeled dependency tree; the shared representation for both
/// documents and queries.
///
/// Construction validates the tree invariants (exactly one root, heads in
/// range, acyclic), so a `DepTree` value is well-formed by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Token>", into = "Vec<Token>")]
pub struct DepTree {
    nodes: Vec<Token>,
    root: usize,
    children: Vec<Vec<usize>>,
}

impl DepTree {
    pub fn new(nodes: Vec<Token>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let n = nodes.len();
        let mut root: Option<usize> = None;
        for (pos, tok) in nodes.iter().enumerate() {
            if tok.index != pos + 1 {
                return Err(TreeError::BadIndex {
                    expected: pos + 1,
                    found: tok.index,
                });
            }
            if tok.lemma.is_empty() {
                return Err(TreeError::EmptyLemma(tok.index));
            }
            if tok.head == tok.index {
                return Err(TreeError::SelfLoop(tok.index));
            }
            if tok.head > n {
                return Err(TreeError::HeadOutOfRange {
                    token: tok.index,
                    head: tok.head,
                });
            }
            if tok.head == 0 {
                match root {
                    None => root = Some(pos),
                    Some(first) => {
                        return Err(TreeError::MultipleRoots(first + 1, tok.index))
                    }
                }
            }
        }
        let root = root.ok_or(TreeError::NoRoot)?;
        // Single root + valid heads still allow off-root cycles; walk each
        // head chain with a step bound to catch them.
        for tok in &nodes {
            let mut cur = tok.head;
            let mut steps = 0;
            while cur != 0 {
                cur = nodes[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(TreeError::Cycle(tok.index));
                }
            }
        }
        let mut children = vec![Vec::new(); n];
        for (pos, tok) in nodes.iter().enumerate() {
            if tok.head != 0 {
                children[tok.head - 1].push(pos);
            }
        }
        // Child lists are already ordered by token index because we push in
        // token order.
        Ok(DepTree {
            nodes,
            root,
            children,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// 0-based position of the root node.
    pub fn root_pos(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Token] {
        &self.nodes
    }

    /// Node at a 0-based position.
    pub fn node(&self, pos: usize) -> &Token {
        &self.nodes[pos]
    }

    /// 0-based positions of the children of the node at `pos`, ordered by
    /// token index.
    pub fn children(&self, pos: usize) -> &[usize] {
        &self.children[pos]
    }

    /// Space-joined lemmas in token order.
    pub fn surface(&self) -> String {
        let lemmas: Vec<&str> = self.nodes.iter().map(|t| t.lemma.as_str()).collect();
        lemmas.join(" ")
    }

    /// New tree containing the full subtree rooted at `pos`, truncated
    /// breadth-first to at most `max_nodes` nodes. Token order of the
    /// original sentence is preserved; indices and heads are rebuilt.
    pub fn subtree(&self, pos: usize, max_nodes: usize) -> DepTree {
        assert!(max_nodes >= 1, "subtree needs room for at least the root");
        let mut selected = vec![pos];
        let mut frontier = 0;
        while frontier < selected.len() && selected.len() < max_nodes {
            let cur = selected[frontier];
            frontier += 1;
            for &child in self.children(cur) {
                if selected.len() >= max_nodes {
                    break;
                }
                selected.push(child);
            }
        }
        selected.sort_unstable();
        let new_pos: BTreeMap<usize, usize> =
            selected.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let nodes: Vec<Token> = selected
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let old = &self.nodes[p];
                let head = if p == pos {
                    0
                } else {
                    // Parents of retained non-root nodes are retained too:
                    // BFS from the subtree root only reaches a child after
                    // its parent.
                    new_pos[&(old.head - 1)] + 1
                };
                Token {
                    index: i + 1,
                    head,
                    ..old.clone()
                }
            })
            .collect();
        DepTree::new(nodes).expect("subtree of a valid tree is valid")
    }
}

impl TryFrom<Vec<Token>> for DepTree {
    type Error = TreeError;
    fn try_from(nodes: Vec<Token>) -> Result<Self, Self::Error> {
        DepTree::new(nodes)
    }
}

impl From<DepTree> for Vec<Token> {
    fn from(tree: DepTree) -> Self {
        tree.nodes
    }
}

/// One ingested document: raw text plus its normalized form and parses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    /// UTC seconds since the epoch.
    pub timestamp: i64,
    pub raw_text: String,
    pub norm_text: String,
    /// One tree per sentence; empty when no parse was joined.
    pub trees: Vec<DepTree>,
}

impl Document {
    /// UTC calendar day this document falls on.
    pub fn day(&self) -> Option<NaiveDate> {
        DateTime::from_timestamp(self.timestamp, 0).map(|dt| dt.date_naive())
    }

    /// Lemma stream used for term statistics: tree lemmas when a parse is
    /// present, whitespace tokens of the normalized text otherwise, so
    /// parse-less documents still count toward corpus-wide statistics.
    pub fn stat_terms(&self) -> Vec<&str> {
        if self.trees.is_empty() {
            self.norm_text.split_whitespace().collect()
        } else {
            self.trees
                .iter()
                .flat_map(|t| t.nodes().iter().map(|tok| tok.lemma.as_str()))
                .collect()
        }
    }
}

/// One UTC calendar day of documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSlot {
    pub day: NaiveDate,
    pub documents: Vec<Document>,
}

impl TimeSlot {
    /// Term statistics over every document in the slot.
    pub fn term_stats(&self) -> TermStats {
        TermStats::from_documents(self.documents.iter())
    }
}

/// Term frequencies over a document set, with both token and document
/// denominators exposed so callers can pick either probability base.
#[derive(Debug, Clone, Default)]
pub struct TermStats {
    counts: BTreeMap<String, usize>,
    total_tokens: usize,
    doc_count: usize,
}

impl TermStats {
    pub fn from_documents<'a>(docs: impl Iterator<Item = &'a Document>) -> TermStats {
        let mut stats = TermStats::default();
        for doc in docs {
            stats.doc_count += 1;
            for term in doc.stat_terms() {
                *stats.counts.entry(term.to_string()).or_insert(0) += 1;
                stats.total_tokens += 1;
            }
        }
        stats
    }

    pub fn count(&self, term: &str) -> usize {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    /// Number of distinct terms.
    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    /// Merge another statistics table into this one (document counts add).
    pub fn absorb(&mut self, other: &TermStats) {
        self.doc_count += other.doc_count;
        self.total_tokens += other.total_tokens;
        for (term, &c) in &other.counts {
            *self.counts.entry(term.clone()).or_insert(0) += c;
        }
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:https?://|www\.)\S+").expect("static regex"))
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").expect("static regex"))
}

/// Fold accented characters to their base letters (NFD, then drop combining
/// marks).
pub fn strip_accents(text: &str) -> String {
    text.nfd()
        .filter(|c| canonical_combining_class(*c) == 0)
        .collect()
}

/// Normalize a raw post: fold accents, lowercase, strip hashtag markers,
/// remove URLs and user mentions, collapse whitespace.
///
/// Idempotent; empty input yields empty output.
pub fn normalize_text(raw: &str) -> String {
    let folded = strip_accents(raw).to_lowercase();
    // '#' is stripped before mention/URL removal so that sigil stacks like
    // "@#user" reduce in one pass.
    let no_hash = folded.replace('#', "");
    let no_url = url_re().replace_all(&no_hash, "");
    let no_mention = mention_re().replace_all(&no_url, "");
    let words: Vec<&str> = no_mention.split_whitespace().collect();
    words.join(" ")
}

/// Partition documents into daily slots (UTC), ascending by day; empty days
/// are omitted. Documents with out-of-range timestamps are dropped.
pub fn bucket_by_day(docs: Vec<Document>) -> Vec<TimeSlot> {
    let mut by_day: BTreeMap<NaiveDate, Vec<Document>> = BTreeMap::new();
    for doc in docs {
        if let Some(day) = doc.day() {
            by_day.entry(day).or_default().push(doc);
        }
    }
    by_day
        .into_iter()
        .map(|(day, mut documents)| {
            documents.sort_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            TimeSlot { day, documents }
        })
        .collect()
}

/// Attach parses to documents by id. Returns the number of parse groups
/// whose id matched no document.
pub fn attach_parses(docs: &mut [Document], parses: Vec<(String, Vec<DepTree>)>) -> usize {
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
    for (pos, doc) in docs.iter().enumerate() {
        by_id.insert(doc.doc_id.clone(), pos);
    }
    let mut orphans = 0;
    for (id, trees) in parses {
        match by_id.get(&id) {
            Some(&pos) => docs[pos].trees.extend(trees),
            None => orphans += 1,
        }
    }
    orphans
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tok(index: usize, lemma: &str, head: usize) -> Token {
        Token {
            index,
            surface: lemma.to_string(),
            lemma: lemma.to_string(),
            upos: "X".to_string(),
            head,
            deprel: "dep".to_string(),
            kind: TokenKind::Word,
        }
    }

    fn doc(id: &str, ts: i64) -> Document {
        Document {
            doc_id: id.to_string(),
            timestamp: ts,
            raw_text: String::new(),
            norm_text: String::new(),
            trees: vec![],
        }
    }

    #[test]
    fn normalize_empty() {
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    fn normalize_removes_mentions() {
        assert_eq!(
            normalize_text("@O2 You completely screwed me over!"),
            "you completely screwed me over!"
        );
    }

    #[test]
    fn normalize_accents_urls_hashtags() {
        assert_eq!(
            normalize_text("Café hacked! http://t.co/x #breach"),
            "cafe hacked! breach"
        );
    }

    #[test]
    fn normalize_idempotent_on_sigil_stacks() {
        for raw in ["@#user ok", "#@user ok", "x www.a.b/#f y", "@@name"] {
            let once = normalize_text(raw);
            assert_eq!(normalize_text(&once), once, "raw = {raw:?}");
        }
    }

    #[test]
    fn deptree_accepts_minimal() {
        let t = DepTree::new(vec![tok(1, "hack", 0), tok(2, "account", 1)]).unwrap();
        assert_eq!(t.root_pos(), 0);
        assert_eq!(t.children(0), &[1]);
        assert_eq!(t.surface(), "hack account");
    }

    #[test]
    fn deptree_rejects_self_loop() {
        let err = DepTree::new(vec![tok(1, "a", 0), tok(2, "b", 1), tok(3, "c", 3)])
            .unwrap_err();
        assert_eq!(err, TreeError::SelfLoop(3));
        assert_eq!(err.to_string(), "self-loop at token 3");
    }

    #[test]
    fn deptree_rejects_cycle_and_multiroot() {
        // 2 and 3 point at each other, root is token 1.
        let err = DepTree::new(vec![tok(1, "a", 0), tok(2, "b", 3), tok(3, "c", 2)])
            .unwrap_err();
        assert!(matches!(err, TreeError::Cycle(_)));
        let err = DepTree::new(vec![tok(1, "a", 0), tok(2, "b", 0)]).unwrap_err();
        assert_eq!(err, TreeError::MultipleRoots(1, 2));
    }

    #[test]
    fn subtree_reindexes_and_truncates() {
        // leak -> {data, madison -> ashley}
        let t = DepTree::new(vec![
            tok(1, "ashley", 2),
            tok(2, "madison", 4),
            tok(3, "data", 4),
            tok(4, "leak", 0),
        ])
        .unwrap();
        let sub = t.subtree(t.root_pos(), 12);
        assert_eq!(sub.surface(), "ashley madison data leak");
        let sub = t.subtree(1, 12); // madison -> ashley
        assert_eq!(sub.surface(), "ashley madison");
        assert_eq!(sub.root_pos(), 1);
        // Breadth-first truncation keeps the shallow nodes.
        let sub = t.subtree(t.root_pos(), 3);
        assert_eq!(sub.surface(), "madison data leak");
    }

    #[test]
    fn bucket_by_day_boundaries() {
        assert!(bucket_by_day(vec![]).is_empty());
        // 2015-07-20 23:59:59 and 2015-07-21 00:00:01 UTC.
        let slots = bucket_by_day(vec![doc("a", 1437436799), doc("b", 1437436801)]);
        assert_eq!(slots.len(), 2);
        assert_eq!(slots[0].day.to_string(), "2015-07-20");
        assert_eq!(slots[1].day.to_string(), "2015-07-21");
        let slots = bucket_by_day(vec![doc("a", 1437436700), doc("b", 1437436799)]);
        assert_eq!(slots.len(), 1);
        assert_eq!(slots[0].documents.len(), 2);
    }

    #[test]
    fn slot_sizes_partition_documents() {
        let docs: Vec<Document> = (0..10)
            .map(|i| doc(&format!("d{i}"), 1437436799 + i * 40000))
            .collect();
        let total: usize = bucket_by_day(docs)
            .iter()
            .map(|s| s.documents.len())
            .sum();
        assert_eq!(total, 10);
    }

    #[test]
    fn term_stats_fall_back_to_norm_text() {
        let mut d = doc("a", 0);
        d.norm_text = "slow internet slow".into();
        let stats = TermStats::from_documents([d].iter());
        assert_eq!(stats.count("slow"), 2);
        assert_eq!(stats.total_tokens(), 3);
        assert_eq!(stats.vocab_size(), 2);
        assert_eq!(stats.doc_count(), 1);
    }
}

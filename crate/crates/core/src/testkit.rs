//! Fixture builders shared by the test suites (tree literals, deterministic
//! random trees, tiny embedding tables). Not part of the pipeline API.

use crate::corpus::{DepTree, Token, TokenKind};
use crate::embeddings::Table;
use crate::num::Real;

/// Deterministic 64-bit generator (SplitMix64); good enough for fixture
/// generation and reproducible across platforms.
#[derive(Debug, Clone)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..n` (n > 0).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform f64 in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn tok(index: usize, lemma: &str, head: usize) -> Token {
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

/// Tree literal: one `(lemma, head)` per token in index order, heads 1-based
/// with 0 for the root.
pub fn tree(spec: &[(&str, usize)]) -> DepTree {
    let nodes = spec
        .iter()
        .enumerate()
        .map(|(i, (lemma, head))| tok(i + 1, lemma, *head))
        .collect();
    DepTree::new(nodes).expect("tree literal is well-formed")
}

/// Two single-node trees.
pub fn leaf_pair(a: &str, b: &str) -> (DepTree, DepTree) {
    (tree(&[(a, 0)]), tree(&[(b, 0)]))
}

/// Random labeled rooted tree with `1..=max_nodes` nodes; the parent of node
/// `i` is drawn uniformly from the earlier nodes, so the result is always a
/// valid tree.
pub fn random_tree(rng: &mut SplitMix64, max_nodes: usize, alphabet: &[&str]) -> DepTree {
    let n = 1 + rng.below(max_nodes);
    let spec: Vec<(String, usize)> = (0..n)
        .map(|i| {
            let label = alphabet[rng.below(alphabet.len())].to_string();
            let head = if i == 0 { 0 } else { 1 + rng.below(i) };
            (label, head)
        })
        .collect();
    let nodes = spec
        .iter()
        .enumerate()
        .map(|(i, (lemma, head))| tok(i + 1, lemma, *head))
        .collect();
    DepTree::new(nodes).expect("random tree is well-formed")
}

/// Embedding table literal over `f64` entries.
pub fn table<F: Real>(dim: usize, entries: &[(&str, &[f64])]) -> Table<F> {
    Table::from_entries(
        dim,
        entries.iter().map(|(w, v)| {
            (
                w.to_string(),
                v.iter().map(|&x| F::from_f64c(x)).collect::<Vec<F>>(),
            )
        }),
    )
}

/// Lemmas of the 14 seed queries, in a fixed order.
pub const SEED_LEXICON: [&str; 24] = [
    "data",
    "leak",
    "security",
    "breach",
    "information",
    "steal",
    "password",
    "hacker",
    "ddos",
    "attack",
    "slow",
    "internet",
    "network",
    "infiltrate",
    "malicious",
    "activity",
    "vulnerability",
    "exploit",
    "phishing",
    "unauthorized",
    "access",
    "identity",
    "hack",
    "account",
];

/// Dimension of the [`seed_lexicon_table`] vectors; the last two axes are
/// free for test-specific extra words.
pub const SEED_LEXICON_DIM: usize = 26;

/// One-hot embedding over the seed lexicon: every seed lemma gets its own
/// axis, so distinct seed queries have distinct vector directions and each
/// seed scores cosine 1 against itself and at most 0.5 against any other.
pub fn seed_lexicon_table<F: Real>() -> Table<F> {
    Table::from_entries(
        SEED_LEXICON_DIM,
        SEED_LEXICON.iter().enumerate().map(|(i, w)| {
            let mut v = vec![F::zero(); SEED_LEXICON_DIM];
            v[i] = F::one();
            (w.to_string(), v)
        }),
    )
}

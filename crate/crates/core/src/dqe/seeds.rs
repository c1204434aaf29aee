//! The fixed seed queries, one small head–modifier tree per phrase.
//!
//! Surfaces are lemma-joined, so participles fold to their verb lemma
//! ("hacked account" carries the surface "hack account").

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::corpus::{DepTree, Token, TokenKind};
use crate::EventCategory;

use super::{Query, QueryOrigin, QuerySet};

/// (surface form, lemma, upos, head, deprel)
type SeedTok = (&'static str, &'static str, &'static str, usize, &'static str);

struct SeedSpec {
    category: EventCategory,
    tokens: &'static [SeedTok],
}

const SEEDS: &[SeedSpec] = &[
    // Data breach
    SeedSpec {
        category: EventCategory::DataBreach,
        tokens: &[
            ("data", "data", "NOUN", 2, "compound"),
            ("leak", "leak", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::DataBreach,
        tokens: &[
            ("security", "security", "NOUN", 2, "compound"),
            ("breach", "breach", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::DataBreach,
        tokens: &[
            ("information", "information", "NOUN", 2, "nsubj:pass"),
            ("stolen", "steal", "VERB", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::DataBreach,
        tokens: &[
            ("password", "password", "NOUN", 2, "nsubj:pass"),
            ("stolen", "steal", "VERB", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::DataBreach,
        tokens: &[
            ("hacker", "hacker", "NOUN", 2, "nsubj"),
            ("stole", "steal", "VERB", 0, "root"),
        ],
    },
    // DDoS
    SeedSpec {
        category: EventCategory::Ddos,
        tokens: &[
            ("DDoS", "ddos", "NOUN", 2, "compound"),
            ("attack", "attack", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::Ddos,
        tokens: &[
            ("slow", "slow", "ADJ", 2, "amod"),
            ("internet", "internet", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::Ddos,
        tokens: &[
            ("network", "network", "NOUN", 2, "nsubj:pass"),
            ("infiltrated", "infiltrate", "VERB", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::Ddos,
        tokens: &[
            ("malicious", "malicious", "ADJ", 2, "amod"),
            ("activity", "activity", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::Ddos,
        tokens: &[
            ("vulnerability", "vulnerability", "NOUN", 2, "compound"),
            ("exploit", "exploit", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::Ddos,
        tokens: &[
            ("phishing", "phishing", "NOUN", 2, "compound"),
            ("attack", "attack", "NOUN", 0, "root"),
        ],
    },
    // Account hijacking
    SeedSpec {
        category: EventCategory::AccountHijacking,
        tokens: &[
            ("unauthorized", "unauthorized", "ADJ", 2, "amod"),
            ("access", "access", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::AccountHijacking,
        tokens: &[
            ("stolen", "steal", "VERB", 2, "amod"),
            ("identity", "identity", "NOUN", 0, "root"),
        ],
    },
    SeedSpec {
        category: EventCategory::AccountHijacking,
        tokens: &[
            ("hacked", "hack", "VERB", 2, "amod"),
            ("account", "account", "NOUN", 0, "root"),
        ],
    },
];

fn build_tree(tokens: &[SeedTok]) -> DepTree {
    let nodes = tokens
        .iter()
        .enumerate()
        .map(|(i, (surface, lemma, upos, head, deprel))| Token {
            index: i + 1,
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            head: *head,
            deprel: deprel.to_string(),
            kind: TokenKind::Word,
        })
        .collect();
    DepTree::new(nodes).expect("seed trees are well-formed")
}

/// Seed queries for one category (origin = seed, iteration = 0).
pub fn seed_queries(category: EventCategory) -> QuerySet {
    let queries = SEEDS
        .iter()
        .filter(|s| s.category == category)
        .map(|s| Query::new(build_tree(s.tokens), QueryOrigin::Seed, 0))
        .collect();
    QuerySet {
        queries,
        iteration: 0,
    }
}

/// All 14 seed queries across the three categories.
pub fn all_seed_queries() -> QuerySet {
    let queries = SEEDS
        .iter()
        .map(|s| Query::new(build_tree(s.tokens), QueryOrigin::Seed, 0))
        .collect();
    QuerySet {
        queries,
        iteration: 0,
    }
}

/// Category of a seed query surface, if the surface belongs to a seed.
pub fn seed_category(surface: &str) -> Option<EventCategory> {
    static MAP: OnceLock<BTreeMap<String, EventCategory>> = OnceLock::new();
    MAP.get_or_init(|| {
        SEEDS
            .iter()
            .map(|s| (build_tree(s.tokens).surface(), s.category))
            .collect()
    })
    .get(surface)
    .copied()
}

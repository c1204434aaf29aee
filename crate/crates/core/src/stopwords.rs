//! Fixed English stoplist, shipped with the crate.
//!
//! Stopword lemmas are excluded from KL term scoring and from entity
//! matching during evaluation, but stay inside query trees (function words
//! carry syntax, not discrimination).

use std::collections::BTreeSet;
use std::sync::OnceLock;

const RAW: &str = include_str!("../data/stopwords_en.txt");

pub fn stopwords() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        RAW.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(lemma: &str) -> bool {
    stopwords().contains(lemma)
}

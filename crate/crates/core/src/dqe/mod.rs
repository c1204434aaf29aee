//! Dynamic typed query expansion.
//!
//! Starting from hand-picked seed queries, each iteration matches the
//! current query set against a daily slot with the tree kernel, extracts
//! candidate subtrees anchored at the best-matching document node, ranks
//! them by summed KL-divergence term weights against the background
//! distribution, and keeps the top K. Seeds are retained across iterations;
//! the loop stops when an iteration introduces no new query surface or when
//! the iteration bound is hit.
//!
//! Within one iteration, kernel matching over documents is data-parallel
//! with read-only shared state; ranking and the stop decision are a
//! sequential barrier. Given identical inputs and configuration the whole
//! loop is deterministic, trace included.

mod seeds;

pub use seeds::{all_seed_queries, seed_category, seed_queries};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DepTree, TermStats, TimeSlot};
use crate::depkernel::{kernel_with_selfk, self_kernel, KernelConfig};
use crate::embeddings::Table;
use crate::num::Real;
use crate::stopwords::is_stopword;
use crate::Scalar;

/// How a query entered the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryOrigin {
    Seed,
    Expanded,
}

/// A typed dependency query: a tree of lemmas plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub tree: DepTree,
    /// Space-joined lemmas in token order; deterministic function of the
    /// tree.
    pub surface: String,
    /// Summed KL term weight (zero for seeds, clamped at zero for
    /// expansions).
    pub weight: Scalar,
    pub origin: QueryOrigin,
    pub iteration: usize,
}

impl Query {
    pub fn new(tree: DepTree, origin: QueryOrigin, iteration: usize) -> Query {
        let surface = tree.surface();
        Query {
            tree,
            surface,
            weight: 0.0,
            origin,
            iteration,
        }
    }

    /// Lemma multiset of the query tree.
    pub fn lemma_multiset(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for tok in self.tree.nodes() {
            *out.entry(tok.lemma.as_str()).or_insert(0) += 1;
        }
        out
    }

    /// Distinct lemmas of the query tree.
    pub fn distinct_lemmas(&self) -> BTreeSet<&str> {
        self.tree.nodes().iter().map(|t| t.lemma.as_str()).collect()
    }
}

/// A set of queries with unique surfaces, tagged with its iteration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QuerySet {
    pub queries: Vec<Query>,
    pub iteration: usize,
}

impl QuerySet {
    /// Build a set, deduplicating by surface (highest weight wins; first
    /// occurrence wins ties).
    pub fn from_queries(queries: Vec<Query>, iteration: usize) -> QuerySet {
        let mut out: Vec<Query> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for q in queries {
            match index.get(&q.surface) {
                Some(&pos) => {
                    if q.weight > out[pos].weight {
                        out[pos] = q;
                    }
                }
                None => {
                    index.insert(q.surface.clone(), out.len());
                    out.push(q);
                }
            }
        }
        QuerySet {
            queries: out,
            iteration,
        }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Query> {
        self.queries.iter()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.queries.iter().map(|q| q.surface.as_str())
    }

    pub fn contains_surface(&self, surface: &str) -> bool {
        self.queries.iter().any(|q| q.surface == surface)
    }
}

/// One matched (document, sentence) pair in a target domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRef {
    pub doc_id: String,
    /// 0-based sentence position within the document.
    pub sentence: usize,
    /// Surface of the best-matching query.
    pub query_surface: String,
    /// Kernel score of that best match (normalized when the kernel
    /// normalizes).
    pub score: Scalar,
}

/// The per-iteration set of target-related (document, sentence) pairs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TargetDomain {
    pub doc_refs: Vec<DocRef>,
    pub iteration: usize,
}

impl TargetDomain {
    pub fn is_empty(&self) -> bool {
        self.doc_refs.is_empty()
    }

    /// Distinct matched document ids, in first-match order.
    pub fn document_ids(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.doc_refs {
            if seen.insert(r.doc_id.as_str()) {
                out.push(r.doc_id.as_str());
            }
        }
        out
    }

    pub fn document_count(&self) -> usize {
        self.document_ids().len()
    }
}

/// Probability base for the KL term weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbModel {
    /// Token counts with add-alpha smoothing (proper distributions).
    Tokens,
    /// Literal variant: raw term frequency over document counts, no
    /// smoothing. Ratios rather than probabilities; kept for comparison
    /// runs.
    Documents,
}

/// Expansion-loop configuration.
#[derive(Debug, Clone)]
pub struct DqeConfig {
    /// Expanded queries kept per iteration.
    pub top_k: usize,
    /// Hard bound on iterations.
    pub max_iterations: usize,
    /// Kernel score at or above which a sentence matches a query.
    pub tau_match: Scalar,
    pub kernel: KernelConfig<Scalar>,
    /// Add-alpha smoothing for term probabilities.
    pub smoothing: Scalar,
    /// Breadth-first cap on extracted candidate subtrees.
    pub max_subtree_nodes: usize,
    pub prob_model: ProbModel,
}

impl Default for DqeConfig {
    fn default() -> Self {
        DqeConfig {
            top_k: 20,
            max_iterations: 10,
            tau_match: 0.35,
            kernel: KernelConfig::default(),
            smoothing: 0.5,
            max_subtree_nodes: 12,
            prob_model: ProbModel::Tokens,
        }
    }
}

/// One query's match against one sentence.
#[derive(Debug, Clone)]
struct QueryHit {
    query_idx: usize,
    score: Scalar,
    /// 1-based token index of the anchor node, when any pair had positive
    /// peaked-path mass.
    anchor: Option<usize>,
}

/// All matches within one sentence of the slot.
#[derive(Debug, Clone)]
struct SentenceMatch {
    doc_pos: usize,
    sentence: usize,
    hits: Vec<QueryHit>,
}

/// Match every query against every parsed sentence of the slot. Parallel
/// over documents; output order follows document order, so the result is
/// deterministic.
fn match_slot(
    queries: &QuerySet,
    slot: &TimeSlot,
    cfg: &DqeConfig,
    table: &Table<Scalar>,
) -> Vec<SentenceMatch> {
    let self_q: Vec<Scalar> = queries
        .iter()
        .map(|q| self_kernel(&q.tree, &cfg.kernel, table))
        .collect();
    let per_doc: Vec<Vec<SentenceMatch>> = slot
        .documents
        .par_iter()
        .enumerate()
        .map(|(doc_pos, doc)| {
            let mut out = Vec::new();
            for (sentence, tree) in doc.trees.iter().enumerate() {
                let self_d = self_kernel(tree, &cfg.kernel, table);
                let mut hits = Vec::new();
                for (query_idx, q) in queries.iter().enumerate() {
                    let res = kernel_with_selfk(
                        &q.tree,
                        tree,
                        &cfg.kernel,
                        table,
                        self_q[query_idx],
                        self_d,
                    );
                    let score = res.match_score(&cfg.kernel);
                    if score >= cfg.tau_match {
                        hits.push(QueryHit {
                            query_idx,
                            score,
                            anchor: res.anchor,
                        });
                    }
                }
                if !hits.is_empty() {
                    out.push(SentenceMatch {
                        doc_pos,
                        sentence,
                        hits,
                    });
                }
            }
            out
        })
        .collect();
    per_doc.into_iter().flatten().collect()
}

fn domain_from(
    matches: &[SentenceMatch],
    queries: &QuerySet,
    slot: &TimeSlot,
    iteration: usize,
) -> TargetDomain {
    let doc_refs = matches
        .iter()
        .map(|m| {
            let best = m
                .hits
                .iter()
                .max_by(|a, b| {
                    a.score
                        .partial_cmp(&b.score)
                        .expect("kernel scores are finite")
                        .then(b.query_idx.cmp(&a.query_idx))
                })
                .expect("matches carry at least one hit");
            DocRef {
                doc_id: slot.documents[m.doc_pos].doc_id.clone(),
                sentence: m.sentence,
                query_surface: queries.queries[best.query_idx].surface.clone(),
                score: best.score,
            }
        })
        .collect();
    TargetDomain {
        doc_refs,
        iteration,
    }
}

/// The set of target-related (document, sentence) pairs for a query set:
/// every sentence whose kernel score against any query reaches `tau_match`,
/// tagged with its best-matching query.
pub fn target_domain(
    queries: &QuerySet,
    slot: &TimeSlot,
    cfg: &DqeConfig,
    table: &Table<Scalar>,
) -> TargetDomain {
    let matches = match_slot(queries, slot, cfg, table);
    domain_from(&matches, queries, slot, queries.iteration)
}

/// Candidate expansion from a matched document sentence: the subtree rooted
/// at the anchor node, truncated breadth-first to `max_subtree_nodes`. When
/// no node has positive peaked-path mass the query itself is returned
/// unchanged (no expansion from this document).
pub fn extract_candidate(
    q: &Query,
    d: &DepTree,
    cfg: &DqeConfig,
    table: &Table<Scalar>,
) -> Query {
    let res = crate::depkernel::kernel(&q.tree, d, &cfg.kernel, table);
    extract_candidate_at(q, d, res.anchor, cfg)
}

fn extract_candidate_at(q: &Query, d: &DepTree, anchor: Option<usize>, cfg: &DqeConfig) -> Query {
    match anchor {
        None => q.clone(),
        Some(token_index) => {
            let tree = d.subtree(token_index - 1, cfg.max_subtree_nodes);
            Query::new(tree, QueryOrigin::Expanded, q.iteration + 1)
        }
    }
}

/// Smoothed KL term weight:
/// `ln(Pr(f|D+) / Pr(f|D)) * Pr(f|D+)` with
/// `Pr(f|X) = (tf_X(f) + alpha) / (tokens(X) + alpha * V)`.
pub fn kl_term<F: Real>(
    tf_plus: usize,
    tokens_plus: usize,
    tf_background: usize,
    tokens_background: usize,
    alpha: F,
    vocab: usize,
) -> F {
    let denom_v = alpha * F::from_count(vocab);
    let p_plus = (F::from_count(tf_plus) + alpha) / (F::from_count(tokens_plus) + denom_v);
    let p_bg =
        (F::from_count(tf_background) + alpha) / (F::from_count(tokens_background) + denom_v);
    (p_plus / p_bg).ln() * p_plus
}

/// Precomputed statistics for scoring the terms of one iteration.
pub struct KlContext {
    plus: TermStats,
    background: TermStats,
    alpha: Scalar,
    model: ProbModel,
}

impl KlContext {
    /// Build from a target domain and its slot. `background` overrides the
    /// comparison corpus (global mode); the slot itself is used otherwise.
    pub fn new(
        dplus: &TargetDomain,
        slot: &TimeSlot,
        background: Option<&TermStats>,
        cfg: &DqeConfig,
    ) -> KlContext {
        let matched: BTreeSet<&str> = dplus.doc_refs.iter().map(|r| r.doc_id.as_str()).collect();
        let plus = TermStats::from_documents(
            slot.documents
                .iter()
                .filter(|d| matched.contains(d.doc_id.as_str())),
        );
        let background = match background {
            Some(b) => b.clone(),
            None => slot.term_stats(),
        };
        KlContext {
            plus,
            background,
            alpha: cfg.smoothing,
            model: cfg.prob_model,
        }
    }

    /// Smoothed probability of a term in the target domain.
    pub fn prob_plus(&self, f: &str) -> Scalar {
        self.prob(self.plus.count(f), self.plus.total_tokens())
    }

    /// Smoothed probability of a term in the background corpus.
    pub fn prob_background(&self, f: &str) -> Scalar {
        self.prob(self.background.count(f), self.background.total_tokens())
    }

    fn prob(&self, tf: usize, tokens: usize) -> Scalar {
        let v = self.background.vocab_size() as Scalar;
        (tf as Scalar + self.alpha) / (tokens as Scalar + self.alpha * v)
    }

    /// Background vocabulary, for distribution-level checks.
    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.background.terms().map(|(t, _)| t)
    }

    /// KL term weight under the configured probability model.
    pub fn score(&self, f: &str) -> Scalar {
        match self.model {
            ProbModel::Tokens => kl_term(
                self.plus.count(f),
                self.plus.total_tokens(),
                self.background.count(f),
                self.background.total_tokens(),
                self.alpha,
                self.background.vocab_size(),
            ),
            ProbModel::Documents => {
                let tf_plus = self.plus.count(f);
                let tf_bg = self.background.count(f);
                // 0 * ln(0/x) treated as its limit; an unseen background
                // term cannot be scored and also yields 0.
                if tf_plus == 0 || tf_bg == 0 {
                    return 0.0;
                }
                let p_plus = tf_plus as Scalar / self.plus.doc_count().max(1) as Scalar;
                let p_bg = tf_bg as Scalar / self.background.doc_count().max(1) as Scalar;
                (p_plus / p_bg).ln() * p_plus
            }
        }
    }
}

/// KL weight of one term for a (domain, slot) pair. Prefer [`KlContext`]
/// when scoring many terms of one iteration.
pub fn kl_score(f: &str, dplus: &TargetDomain, slot: &TimeSlot, cfg: &DqeConfig) -> Scalar {
    KlContext::new(dplus, slot, None, cfg).score(f)
}

/// Weigh candidates by summed KL scores of their distinct non-stopword
/// lemmas, deduplicate by surface, and keep the top K (weight descending,
/// surface ascending on ties).
pub fn rank_candidates(
    candidates: Vec<Query>,
    dplus: &TargetDomain,
    slot: &TimeSlot,
    cfg: &DqeConfig,
    background: Option<&TermStats>,
) -> QuerySet {
    let ctx = KlContext::new(dplus, slot, background, cfg);
    rank_candidates_with(candidates, &ctx, cfg, dplus.iteration + 1)
}

fn rank_candidates_with(
    candidates: Vec<Query>,
    ctx: &KlContext,
    cfg: &DqeConfig,
    iteration: usize,
) -> QuerySet {
    let mut weighed: Vec<Query> = candidates
        .into_iter()
        .map(|mut q| {
            let sum: Scalar = q
                .distinct_lemmas()
                .iter()
                .filter(|l| !is_stopword(l))
                .map(|l| ctx.score(l))
                .sum();
            q.weight = sum.max(0.0);
            q.origin = QueryOrigin::Expanded;
            q.iteration = iteration;
            q
        })
        .collect();
    let mut best: BTreeMap<String, Query> = BTreeMap::new();
    for q in weighed.drain(..) {
        match best.get(&q.surface) {
            Some(existing) if existing.weight >= q.weight => {}
            _ => {
                best.insert(q.surface.clone(), q);
            }
        }
    }
    let mut ranked: Vec<Query> = best.into_values().collect();
    ranked.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .expect("weights are finite")
            .then_with(|| a.surface.cmp(&b.surface))
    });
    ranked.truncate(cfg.top_k);
    QuerySet {
        queries: ranked,
        iteration,
    }
}

/// Per-iteration record for reporting and plot data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub queries: Vec<TraceQuery>,
    pub matched_sentences: usize,
    pub matched_documents: usize,
    pub candidates: usize,
    pub new_surfaces: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceQuery {
    pub surface: String,
    pub weight: Scalar,
    pub origin: QueryOrigin,
}

/// Result of one expansion run over one slot.
#[derive(Debug, Clone)]
pub struct DqeOutcome {
    pub queries: QuerySet,
    pub domain: TargetDomain,
    pub trace: Vec<IterationTrace>,
}

fn trace_queries(qs: &QuerySet) -> Vec<TraceQuery> {
    qs.iter()
        .map(|q| TraceQuery {
            surface: q.surface.clone(),
            weight: q.weight,
            origin: q.origin,
        })
        .collect()
}

/// Run the expansion loop over one slot.
///
/// Returns the final query set (seeds always retained), the last computed
/// target domain, and the per-iteration trace. An empty first domain
/// returns the seeds untouched, signalling "no event signal in this slot".
pub fn run_dqe(
    seeds: &QuerySet,
    slot: &TimeSlot,
    cfg: &DqeConfig,
    table: &Table<Scalar>,
    background: Option<&TermStats>,
) -> DqeOutcome {
    assert!(!seeds.is_empty(), "expansion needs at least one seed");
    let mut active = QuerySet {
        queries: seeds.queries.clone(),
        iteration: 0,
    };
    let mut seen: BTreeSet<String> = active.surfaces().map(str::to_string).collect();
    let mut trace = Vec::new();
    let mut final_domain = TargetDomain::default();

    for k in 0..cfg.max_iterations {
        let matches = match_slot(&active, slot, cfg, table);
        let domain = domain_from(&matches, &active, slot, k);
        if domain.is_empty() {
            trace.push(IterationTrace {
                iteration: k,
                queries: trace_queries(&active),
                matched_sentences: 0,
                matched_documents: 0,
                candidates: 0,
                new_surfaces: Vec::new(),
            });
            final_domain = domain;
            break;
        }

        let mut candidates = Vec::new();
        for m in &matches {
            let tree = &slot.documents[m.doc_pos].trees[m.sentence];
            for hit in &m.hits {
                candidates.push(extract_candidate_at(
                    &active.queries[hit.query_idx],
                    tree,
                    hit.anchor,
                    cfg,
                ));
            }
        }
        let candidate_count = candidates.len();
        let ctx = KlContext::new(&domain, slot, background, cfg);
        let ranked = rank_candidates_with(candidates, &ctx, cfg, k + 1);

        // Seeds are always retained; a seed surface wins over a same-surface
        // expansion.
        let mut merged: Vec<Query> = seeds
            .queries
            .iter()
            .cloned()
            .map(|mut s| {
                s.iteration = k + 1;
                s
            })
            .collect();
        for q in ranked.queries {
            if !merged.iter().any(|s| s.surface == q.surface) {
                merged.push(q);
            }
        }
        let next = QuerySet {
            queries: merged,
            iteration: k + 1,
        };

        let new_surfaces: Vec<String> = next
            .surfaces()
            .filter(|s| !seen.contains(*s))
            .map(str::to_string)
            .collect();
        trace.push(IterationTrace {
            iteration: k,
            queries: trace_queries(&active),
            matched_sentences: domain.doc_refs.len(),
            matched_documents: domain.document_count(),
            candidates: candidate_count,
            new_surfaces: new_surfaces.clone(),
        });
        final_domain = domain;
        active = next;
        if new_surfaces.is_empty() {
            break;
        }
        seen.extend(new_surfaces);
    }

    DqeOutcome {
        queries: active,
        domain: final_domain,
        trace,
    }
}

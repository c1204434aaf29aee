//! From converged query sets to typed event records.
//!
//! A slot's expanded queries are filtered to the maximal ones (no query
//! whose lemma multiset is contained in another's), clustered by affinity
//! propagation over their embedding vectors, typed by nearest seed query,
//! and emitted as dated event records. A sequential pass in date order marks
//! near-duplicates of recently accepted events; per-slot weight floors mark
//! weak clusters as rejected.

pub mod ap;

pub use ap::{affinity_propagation, ApConfig, ApOutcome, Preference};

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dqe::{Query, QuerySet};
use crate::embeddings::{cosine, query_vector, Table};
use crate::{EventCategory, Scalar};

/// Outcome bucket of one emitted event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventStatus {
    Accepted,
    Duplicate,
    Rejected,
    Unspecified,
}

/// One detected event: a cluster of queries with an exemplar, a date, and a
/// type assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub date: NaiveDate,
    /// `None` when typing failed (status is then `Unspecified`).
    pub event_type: Option<EventCategory>,
    pub status: EventStatus,
    pub exemplar: Query,
    pub queries: Vec<Query>,
    /// Cosine similarity between the exemplar and the nearest seed.
    pub type_score: Scalar,
    /// Total member weight; compared against the per-slot rejection floor.
    pub weight: Scalar,
}

impl EventRecord {
    /// Distinct exemplar lemmas, the unit of duplicate comparison and
    /// entity matching.
    pub fn exemplar_lemmas(&self) -> BTreeSet<&str> {
        self.exemplar.distinct_lemmas()
    }
}

/// Event emission thresholds.
#[derive(Debug, Clone)]
pub struct EventsConfig {
    pub ap: ApConfig<Scalar>,
    /// Days back (inclusive) a prior accepted event suppresses a near copy.
    pub duplicate_window_days: i64,
    /// Exemplar-lemma Jaccard overlap at or above which two events are
    /// duplicates.
    pub duplicate_jaccard: Scalar,
    /// Quantile of the slot's cluster weights below which a cluster is
    /// rejected.
    pub rejection_quantile: Scalar,
    /// Typing cosine below which an event stays unspecified.
    pub typing_floor: Scalar,
}

impl Default for EventsConfig {
    fn default() -> Self {
        EventsConfig {
            ap: ApConfig::default(),
            duplicate_window_days: 3,
            duplicate_jaccard: 0.5,
            rejection_quantile: 0.25,
            typing_floor: 0.2,
        }
    }
}

fn multiset_subset(a: &BTreeMap<&str, usize>, b: &BTreeMap<&str, usize>) -> bool {
    a.iter().all(|(k, &c)| b.get(k).copied().unwrap_or(0) >= c)
}

/// Retain only queries whose lemma multiset is not contained in another
/// retained query's multiset. Among equal multisets the highest weight
/// (then lexicographically smallest surface) survives. Idempotent; never
/// grows the set.
pub fn maximal_queries(qs: &QuerySet) -> QuerySet {
    let multisets: Vec<BTreeMap<&str, usize>> =
        qs.queries.iter().map(|q| q.lemma_multiset()).collect();
    let keep = |i: usize| -> bool {
        let qi = &qs.queries[i];
        for (j, qj) in qs.queries.iter().enumerate() {
            if i == j {
                continue;
            }
            if multiset_subset(&multisets[i], &multisets[j]) {
                if multisets[i] != multisets[j] {
                    return false; // strictly contained
                }
                // Equal multisets: keep the canonical representative.
                let better = qj.weight > qi.weight
                    || (qj.weight == qi.weight && qj.surface < qi.surface);
                if better {
                    return false;
                }
            }
        }
        true
    };
    let queries: Vec<Query> = (0..qs.queries.len())
        .filter(|&i| keep(i))
        .map(|i| qs.queries[i].clone())
        .collect();
    QuerySet {
        queries,
        iteration: qs.iteration,
    }
}

/// One affinity-propagation cluster of queries.
#[derive(Debug, Clone)]
pub struct QueryCluster {
    pub exemplar: Query,
    /// Cluster members (the exemplar included), weight-descending.
    pub members: Vec<Query>,
}

impl QueryCluster {
    pub fn total_weight(&self) -> Scalar {
        self.members.iter().map(|q| q.weight).sum()
    }
}

/// Clustering result plus the surfaces that had to be excluded because
/// every lemma was out of vocabulary.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub clusters: Vec<QueryCluster>,
    pub excluded: Vec<String>,
    pub converged: bool,
}

fn weight_then_surface(a: &Query, b: &Query) -> std::cmp::Ordering {
    b.weight
        .partial_cmp(&a.weight)
        .expect("weights are finite")
        .then_with(|| a.surface.cmp(&b.surface))
}

/// Cluster queries by cosine similarity of their embedding vectors.
///
/// Queries whose vectors coincide in direction (cosine within 1e-12 of 1)
/// are grouped before message passing; affinity propagation then runs over
/// the distinct directions, which keeps the degenerate all-identical case
/// well defined. All-out-of-vocabulary queries are excluded with their
/// surfaces reported.
pub fn cluster_queries(
    qs: &QuerySet,
    table: &Table<Scalar>,
    cfg: &ApConfig<Scalar>,
) -> ClusterOutcome {
    let mut excluded = Vec::new();
    let mut items: Vec<(Query, Vec<Scalar>)> = Vec::new();
    for q in qs.iter() {
        match query_vector(&q.tree, table) {
            Some(v) if v.iter().any(|&x| x != 0.0) => items.push((q.clone(), v)),
            _ => excluded.push(q.surface.clone()),
        }
    }
    if items.is_empty() {
        return ClusterOutcome {
            clusters: vec![],
            excluded,
            converged: true,
        };
    }

    // Direction-duplicate grouping.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut rep_vecs: Vec<&Vec<Scalar>> = Vec::new();
    for (idx, (_, v)) in items.iter().enumerate() {
        let mut found = None;
        for (g, rep) in rep_vecs.iter().enumerate() {
            if let Some(c) = cosine(v, rep) {
                if c >= 1.0 - 1e-12 {
                    found = Some(g);
                    break;
                }
            }
        }
        match found {
            Some(g) => groups[g].push(idx),
            None => {
                groups.push(vec![idx]);
                rep_vecs.push(v);
            }
        }
    }

    let (assignments, converged) = if groups.len() == 1 {
        (vec![0], true)
    } else {
        let n = groups.len();
        let mut sim = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sim[i][j] = cosine(rep_vecs[i], rep_vecs[j])
                        .expect("representative vectors are nonzero");
                }
            }
        }
        let out = affinity_propagation(&sim, cfg);
        (out.assignments, out.converged)
    };

    // Gather queries per exemplar group, in exemplar-group order.
    let mut by_exemplar: BTreeMap<usize, Vec<Query>> = BTreeMap::new();
    for (g, &label) in assignments.iter().enumerate() {
        let entry = by_exemplar.entry(label).or_default();
        for &idx in &groups[g] {
            entry.push(items[idx].0.clone());
        }
    }
    let clusters = by_exemplar
        .into_values()
        .map(|mut members| {
            members.sort_by(weight_then_surface);
            QueryCluster {
                exemplar: members[0].clone(),
                members,
            }
        })
        .collect();
    ClusterOutcome {
        clusters,
        excluded,
        converged,
    }
}

/// Category of the seed query most similar to the exemplar, with the cosine
/// score. `None` when the exemplar (or every seed) has no usable vector.
/// Ties resolve in the fixed category order.
pub fn assign_type(
    exemplar: &Query,
    seeds: &QuerySet,
    table: &Table<Scalar>,
) -> Option<(EventCategory, Scalar)> {
    let ev = query_vector(&exemplar.tree, table)?;
    let mut best: Option<(EventCategory, Scalar)> = None;
    for category in EventCategory::ALL {
        for seed in seeds.iter() {
            if crate::dqe::seed_category(&seed.surface) != Some(category) {
                continue;
            }
            let sv = match query_vector(&seed.tree, table) {
                Some(v) => v,
                None => continue,
            };
            let score = match cosine(&ev, &sv) {
                Some(c) => c,
                None => continue,
            };
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((category, score)),
            }
        }
    }
    best
}

/// Rolling record of accepted events for cross-day deduplication. Updated
/// by a single sequential pass in ascending date order.
#[derive(Debug, Clone, Default)]
pub struct DedupState {
    accepted: Vec<(NaiveDate, EventCategory, BTreeSet<String>)>,
    seq: usize,
}

impl DedupState {
    pub fn new() -> Self {
        DedupState::default()
    }

    fn next_id(&mut self) -> String {
        self.seq += 1;
        format!("e{:05}", self.seq)
    }

    fn is_duplicate(
        &self,
        date: NaiveDate,
        category: EventCategory,
        lemmas: &BTreeSet<&str>,
        cfg: &EventsConfig,
    ) -> bool {
        self.accepted.iter().any(|(d, c, prior)| {
            if *c != category {
                return false;
            }
            let gap = (date - *d).num_days();
            if gap < 0 || gap > cfg.duplicate_window_days {
                return false;
            }
            jaccard(lemmas, prior) >= cfg.duplicate_jaccard
        })
    }
}

fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<String>) -> Scalar {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.iter().filter(|l| b.contains(**l)).count();
    let union = a.len() + b.len() - inter;
    inter as Scalar / union as Scalar
}

/// Nearest-rank quantile of the cluster weights.
fn weight_floor(weights: &[Scalar], quantile: Scalar) -> Scalar {
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("weights are finite"));
    let n = sorted.len();
    let rank = ((quantile * n as Scalar).ceil() as usize).max(1) - 1;
    sorted[rank.min(n - 1)]
}

/// Turn one slot's clusters into event records.
///
/// Statuses, in decision order: `duplicate` when a prior accepted event of
/// the same type within the window shares enough exemplar lemmas;
/// `rejected` when the cluster's total weight falls below the slot's weight
/// floor; `unspecified` when typing failed; `accepted` otherwise (and only
/// accepted events feed the duplicate window).
pub fn emit_events(
    clusters: &[QueryCluster],
    day: NaiveDate,
    seeds: &QuerySet,
    state: &mut DedupState,
    cfg: &EventsConfig,
    table: &Table<Scalar>,
) -> Vec<EventRecord> {
    if clusters.is_empty() {
        return Vec::new();
    }
    let weights: Vec<Scalar> = clusters.iter().map(|c| c.total_weight()).collect();
    let floor = weight_floor(&weights, cfg.rejection_quantile);

    let mut out = Vec::new();
    for (cluster, &weight) in clusters.iter().zip(&weights) {
        let typing = assign_type(&cluster.exemplar, seeds, table)
            .filter(|(_, score)| *score >= cfg.typing_floor);
        let lemmas = cluster.exemplar.distinct_lemmas();

        let status = if let Some((category, _)) = typing {
            if state.is_duplicate(day, category, &lemmas, cfg) {
                EventStatus::Duplicate
            } else if weight < floor {
                EventStatus::Rejected
            } else {
                EventStatus::Accepted
            }
        } else if weight < floor {
            EventStatus::Rejected
        } else {
            EventStatus::Unspecified
        };

        if status == EventStatus::Accepted {
            let (category, _) = typing.expect("accepted events are typed");
            state.accepted.push((
                day,
                category,
                lemmas.iter().map(|s| s.to_string()).collect(),
            ));
        }
        out.push(EventRecord {
            id: state.next_id(),
            date: day,
            event_type: typing.map(|(c, _)| c),
            status,
            exemplar: cluster.exemplar.clone(),
            queries: cluster.members.clone(),
            type_score: typing.map(|(_, s)| s).unwrap_or(0.0),
            weight,
        });
    }
    out
}

#[cfg(test)]
mod tests;

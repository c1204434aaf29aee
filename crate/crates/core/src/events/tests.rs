use super::*;
use crate::dqe::{all_seed_queries, Query, QueryOrigin};
use crate::testkit::{seed_lexicon_table, tree};
use approx::assert_relative_eq;

fn q(spec: &[(&str, usize)], weight: Scalar) -> Query {
    let mut q = Query::new(tree(spec), QueryOrigin::Expanded, 1);
    q.weight = weight;
    q
}

fn qs(queries: Vec<Query>) -> QuerySet {
    QuerySet {
        queries,
        iteration: 1,
    }
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

#[test]
fn maximal_queries_keeps_non_subsets() {
    let set = qs(vec![
        q(&[("data", 2), ("breach", 0)], 1.0),
        q(&[("data", 2), ("leak", 0)], 1.0),
        q(&[("ashley", 2), ("madison", 0)], 1.0),
        q(&[("ashley", 2), ("madison", 4), ("data", 4), ("breach", 0)], 3.0),
    ]);
    let maximal = maximal_queries(&set);
    let surfaces: Vec<&str> = maximal.surfaces().collect();
    assert_eq!(surfaces, vec!["data leak", "ashley madison data breach"]);
}

#[test]
fn maximal_queries_trivial_cases() {
    let single = qs(vec![q(&[("data", 2), ("leak", 0)], 1.0)]);
    assert_eq!(maximal_queries(&single).len(), 1);

    let disjoint = qs(vec![
        q(&[("data", 2), ("leak", 0)], 1.0),
        q(&[("ddos", 2), ("attack", 0)], 1.0),
    ]);
    assert_eq!(maximal_queries(&disjoint).len(), 2);
}

#[test]
fn maximal_queries_equal_multisets_keep_highest_weight() {
    let set = qs(vec![
        q(&[("leak", 2), ("data", 0)], 1.0),
        q(&[("data", 2), ("leak", 0)], 2.0),
    ]);
    let maximal = maximal_queries(&set);
    assert_eq!(maximal.len(), 1);
    assert_eq!(maximal.queries[0].surface, "data leak");
}

#[test]
fn maximal_queries_respects_multiset_counts() {
    // "data data leak" is not a subset of "data leak" (count of data).
    let set = qs(vec![
        q(&[("data", 2), ("leak", 0)], 1.0),
        q(&[("data", 3), ("data", 3), ("leak", 0)], 1.0),
    ]);
    assert_eq!(maximal_queries(&set).len(), 1);
    // the smaller one is contained, the bigger survives
    assert_eq!(
        maximal_queries(&set).queries[0].surface,
        "data data leak"
    );
}

#[test]
fn maximal_queries_idempotent_and_shrinking() {
    let set = qs(vec![
        q(&[("data", 2), ("breach", 0)], 1.0),
        q(&[("ashley", 2), ("madison", 4), ("data", 4), ("breach", 0)], 3.0),
        q(&[("ddos", 2), ("attack", 0)], 1.0),
    ]);
    let once = maximal_queries(&set);
    let twice = maximal_queries(&once);
    assert!(once.len() <= set.len());
    let a: Vec<&str> = once.surfaces().collect();
    let b: Vec<&str> = twice.surfaces().collect();
    assert_eq!(a, b);
}

#[test]
fn cluster_single_query_is_its_own_exemplar() {
    let table = seed_lexicon_table::<Scalar>();
    let set = qs(vec![q(&[("data", 2), ("leak", 0)], 1.0)]);
    let out = cluster_queries(&set, &table, &ApConfig::default());
    assert_eq!(out.clusters.len(), 1);
    assert_eq!(out.clusters[0].exemplar.surface, "data leak");
    assert!(out.excluded.is_empty());
}

#[test]
fn cluster_identical_vectors_collapse() {
    let table = seed_lexicon_table::<Scalar>();
    // Same lemma multiset in both orders: identical query vectors.
    let set = qs(vec![
        q(&[("data", 2), ("leak", 0)], 2.0),
        q(&[("leak", 2), ("data", 0)], 1.0),
    ]);
    let out = cluster_queries(&set, &table, &ApConfig::default());
    assert_eq!(out.clusters.len(), 1);
    assert_eq!(out.clusters[0].members.len(), 2);
    assert_eq!(out.clusters[0].exemplar.surface, "data leak");
}

#[test]
fn cluster_two_planted_groups() {
    let table = seed_lexicon_table::<Scalar>();
    // Breach-flavored group vs ddos-flavored group; intra-group vectors
    // share two lemmas, across groups none.
    let set = qs(vec![
        q(&[("data", 2), ("leak", 0)], 1.0),
        q(&[("data", 2), ("leak", 0), ("breach", 2)], 2.0),
        q(&[("data", 2), ("leak", 0), ("security", 2)], 2.0),
        q(&[("ddos", 2), ("attack", 0)], 1.0),
        q(&[("ddos", 2), ("attack", 0), ("internet", 2)], 2.0),
        q(&[("ddos", 2), ("attack", 0), ("network", 2)], 2.0),
    ]);
    let out = cluster_queries(&set, &table, &ApConfig::default());
    assert_eq!(out.clusters.len(), 2);
    let sizes: Vec<usize> = out.clusters.iter().map(|c| c.members.len()).collect();
    assert_eq!(sizes, vec![3, 3]);
    // Partition: every input query lands in exactly one cluster.
    let mut seen: Vec<&str> = out
        .clusters
        .iter()
        .flat_map(|c| c.members.iter().map(|m| m.surface.as_str()))
        .collect();
    seen.sort_unstable();
    let mut input: Vec<&str> = set.surfaces().collect();
    input.sort_unstable();
    assert_eq!(seen, input);
    for c in &out.clusters {
        assert!(c.members.iter().any(|m| m.surface == c.exemplar.surface));
    }
}

#[test]
fn cluster_excludes_out_of_vocabulary_queries() {
    let table = seed_lexicon_table::<Scalar>();
    let set = qs(vec![
        q(&[("data", 2), ("leak", 0)], 1.0),
        q(&[("zorp", 2), ("blart", 0)], 1.0),
    ]);
    let out = cluster_queries(&set, &table, &ApConfig::default());
    assert_eq!(out.clusters.len(), 1);
    assert_eq!(out.excluded, vec!["zorp blart".to_string()]);
    let none = cluster_queries(
        &qs(vec![q(&[("zorp", 0)], 1.0)]),
        &table,
        &ApConfig::default(),
    );
    assert!(none.clusters.is_empty());
}

#[test]
fn assign_type_seed_exemplars_score_one() {
    let table = seed_lexicon_table::<Scalar>();
    let seeds = all_seed_queries();
    for seed in seeds.iter() {
        let (category, score) = assign_type(seed, &seeds, &table).unwrap();
        assert_eq!(
            Some(category),
            crate::dqe::seed_category(&seed.surface),
            "seed {}",
            seed.surface
        );
        assert_relative_eq!(score, 1.0, epsilon = 1e-9);
    }
}

#[test]
fn assign_type_scale_invariant() {
    let table = seed_lexicon_table::<Scalar>();
    let scaled = table.scaled(3.0);
    let seeds = all_seed_queries();
    let exemplar = q(&[("ashley", 2), ("madison", 4), ("data", 4), ("leak", 0)], 1.0);
    let (c1, _) = assign_type(&exemplar, &seeds, &table).unwrap();
    let (c2, _) = assign_type(&exemplar, &seeds, &scaled).unwrap();
    assert_eq!(c1, EventCategory::DataBreach);
    assert_eq!(c1, c2);
}

#[test]
fn assign_type_fails_on_zero_vector() {
    let table = seed_lexicon_table::<Scalar>();
    let seeds = all_seed_queries();
    let oov = q(&[("zorp", 0)], 1.0);
    assert!(assign_type(&oov, &seeds, &table).is_none());
}

#[test]
fn emit_empty_clusters() {
    let table = seed_lexicon_table::<Scalar>();
    let mut state = DedupState::new();
    let out = emit_events(
        &[],
        day(2015, 7, 20),
        &all_seed_queries(),
        &mut state,
        &EventsConfig::default(),
        &table,
    );
    assert!(out.is_empty());
}

fn breach_cluster(extra: &str, weight: Scalar) -> QueryCluster {
    let member = q(&[(extra, 2), ("data", 4), ("leak", 0), ("breach", 3)], weight);
    QueryCluster {
        exemplar: member.clone(),
        members: vec![member],
    }
}

#[test]
fn emit_marks_consecutive_day_duplicates() {
    let table = seed_lexicon_table::<Scalar>();
    let seeds = all_seed_queries();
    let cfg = EventsConfig::default();
    let mut state = DedupState::new();
    let c = breach_cluster("ashley", 5.0);
    let first = emit_events(&[c.clone()], day(2015, 7, 20), &seeds, &mut state, &cfg, &table);
    assert_eq!(first[0].status, EventStatus::Accepted);
    assert_eq!(first[0].event_type, Some(EventCategory::DataBreach));
    let second = emit_events(&[c.clone()], day(2015, 7, 21), &seeds, &mut state, &cfg, &table);
    assert_eq!(second[0].status, EventStatus::Duplicate);
    // Outside the window the same story is a fresh event.
    let third = emit_events(&[c], day(2015, 8, 20), &seeds, &mut state, &cfg, &table);
    assert_eq!(third[0].status, EventStatus::Accepted);
}

#[test]
fn emit_rejects_below_weight_floor() {
    let table = seed_lexicon_table::<Scalar>();
    let seeds = all_seed_queries();
    let cfg = EventsConfig::default();
    let mut state = DedupState::new();
    // Lemma-disjoint strong clusters so the duplicate rule stays quiet.
    let named = |spec: &[(&str, usize)], w| {
        let member = q(spec, w);
        QueryCluster {
            exemplar: member.clone(),
            members: vec![member],
        }
    };
    let clusters = vec![
        breach_cluster("acme", 0.1),
        named(&[("globex", 2), ("data", 4), ("leak", 0), ("breach", 3)], 10.0),
        named(&[("initech", 2), ("ddos", 4), ("attack", 0), ("network", 3)], 10.0),
        named(
            &[("umbrella", 2), ("unauthorized", 4), ("access", 0), ("identity", 3)],
            10.0,
        ),
        named(
            &[("wayne", 2), ("security", 4), ("password", 0), ("information", 3)],
            10.0,
        ),
    ];
    let out = emit_events(&clusters, day(2015, 7, 20), &seeds, &mut state, &cfg, &table);
    assert_eq!(out[0].status, EventStatus::Rejected);
    assert!(
        out[1..].iter().all(|e| e.status == EventStatus::Accepted),
        "statuses: {:?}",
        out.iter().map(|e| e.status).collect::<Vec<_>>()
    );
}

#[test]
fn emit_unspecified_when_typing_fails() {
    let table = seed_lexicon_table::<Scalar>();
    let seeds = all_seed_queries();
    let cfg = EventsConfig::default();
    let mut state = DedupState::new();
    let member = q(&[("zorp", 2), ("blart", 0)], 5.0);
    let cluster = QueryCluster {
        exemplar: member.clone(),
        members: vec![member],
    };
    let out = emit_events(&[cluster], day(2015, 7, 20), &seeds, &mut state, &cfg, &table);
    assert_eq!(out[0].status, EventStatus::Unspecified);
    assert_eq!(out[0].event_type, None);
}

#[test]
fn emit_assigns_sequential_ids() {
    let table = seed_lexicon_table::<Scalar>();
    let seeds = all_seed_queries();
    let cfg = EventsConfig::default();
    let mut state = DedupState::new();
    let a = emit_events(
        &[breach_cluster("acme", 5.0)],
        day(2015, 7, 20),
        &seeds,
        &mut state,
        &cfg,
        &table,
    );
    let b = emit_events(
        &[breach_cluster("globex", 5.0)],
        day(2015, 7, 25),
        &seeds,
        &mut state,
        &cfg,
        &table,
    );
    assert_eq!(a[0].id, "e00001");
    assert_eq!(b[0].id, "e00002");
}

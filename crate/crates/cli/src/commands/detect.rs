//! `ced detect`: per-day query expansion, clustering, typing, dedup.

use std::path::Path;

use rayon::prelude::*;

use ced_core::config::BackgroundScope;
use chrono::NaiveDate;
use ced_core::corpus::{TermStats, TimeSlot};
use ced_core::dqe::{all_seed_queries, run_dqe, seed_queries, QueryOrigin, QuerySet};
use ced_core::events::{cluster_queries, emit_events, maximal_queries, DedupState, QueryCluster};
use ced_core::store::{read_store, write_jsonl, EventLine, TraceLine};
use ced_core::{EmbeddingTable, EventCategory};

use super::{require_path, Context};
use crate::CmdError;

/// Expansion output for one (day, category) unit, before the sequential
/// emission pass.
struct SlotDetection {
    day: NaiveDate,
    category: EventCategory,
    trace: Vec<ced_core::dqe::IterationTrace>,
    clusters: Vec<QueryCluster>,
    excluded: Vec<String>,
    final_queries: QuerySet,
}

pub fn run(ctx: &Context, store: Option<&Path>, embeddings: Option<&Path>) -> Result<(), CmdError> {
    let categories = ctx.categories()?;
    let store_dir = ctx.store_dir(store);
    let embeddings_path = require_path(
        embeddings,
        ctx.config.paths.embeddings.as_ref(),
        "embeddings file",
    )?;
    let table = EmbeddingTable::load_path(&embeddings_path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", embeddings_path.display())))?;
    let (slots, _) = read_store(&store_dir).map_err(super::store_error)?;

    let dqe_cfg = ctx.config.dqe_config();
    let events_cfg = ctx.config.events_config();
    let global_stats: Option<TermStats> = match ctx.config.dqe.background {
        BackgroundScope::Slot => None,
        BackgroundScope::Global => {
            let mut stats = TermStats::default();
            for slot in &slots {
                stats.absorb(&slot.term_stats());
            }
            Some(stats)
        }
    };

    // Expansion is independent per (day, category); collect in order.
    let units: Vec<(&TimeSlot, EventCategory)> = slots
        .iter()
        .flat_map(|slot| categories.iter().map(move |&c| (slot, c)))
        .collect();
    let detections: Vec<SlotDetection> = units
        .par_iter()
        .map(|&(slot, category)| {
            let seeds = seed_queries(category);
            let outcome = run_dqe(&seeds, slot, &dqe_cfg, &table, global_stats.as_ref());
            let expanded: Vec<_> = outcome
                .queries
                .iter()
                .filter(|q| q.origin == QueryOrigin::Expanded)
                .cloned()
                .collect();
            let (clusters, excluded) = if outcome.domain.is_empty() || expanded.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                let set = QuerySet {
                    iteration: outcome.queries.iteration,
                    queries: expanded,
                };
                let maximal = maximal_queries(&set);
                let clustered = cluster_queries(&maximal, &table, &events_cfg.ap);
                (clustered.clusters, clustered.excluded)
            };
            SlotDetection {
                day: slot.day,
                category,
                trace: outcome.trace,
                clusters,
                excluded,
                final_queries: outcome.queries,
            }
        })
        .collect();

    // Sequential pass in date order: per-slot weight floor across all of
    // the slot's clusters, then duplicate marking against accepted history.
    let seeds_all = all_seed_queries();
    let mut state = DedupState::new();
    let mut event_lines: Vec<EventLine> = Vec::new();
    let mut trace_lines: Vec<TraceLine> = Vec::new();
    for slot in &slots {
        let mut day_clusters: Vec<QueryCluster> = Vec::new();
        for det in detections.iter().filter(|d| d.day == slot.day) {
            trace_lines.extend(det.trace.iter().map(|it| TraceLine {
                date: det.day,
                category: det.category,
                iteration: it.clone(),
            }));
            for surface in &det.excluded {
                log::warn!(
                    "{} {}: query {:?} has no usable vector; excluded from clustering",
                    det.day,
                    det.category,
                    surface
                );
            }
            day_clusters.extend(det.clusters.iter().cloned());
        }
        if day_clusters.is_empty() {
            continue;
        }
        let records = emit_events(
            &day_clusters,
            slot.day,
            &seeds_all,
            &mut state,
            &events_cfg,
            &table,
        );
        event_lines.extend(records.iter().map(EventLine::from));
    }

    let out_dir = ctx.output_dir();
    write_jsonl(&out_dir.join("events.jsonl"), &event_lines).map_err(super::store_error)?;
    write_jsonl(&out_dir.join("dqe_trace.jsonl"), &trace_lines).map_err(super::store_error)?;

    // Final query sets as a flat TSV, one row per query.
    let mut tsv = String::from("date\tcategory\tsurface\tweight\titeration\torigin\n");
    for det in &detections {
        for q in det.final_queries.iter() {
            let origin = match q.origin {
                QueryOrigin::Seed => "seed",
                QueryOrigin::Expanded => "expanded",
            };
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                det.day, det.category, q.surface, q.weight, q.iteration, origin
            ));
        }
    }
    ced_core::store::atomic_write(&out_dir.join("queries.tsv"), tsv.as_bytes())
        .map_err(super::store_error)?;

    let cloud_dir = out_dir.join("wordclouds");
    for line in &event_lines {
        let mut csv = String::from("term,weight\n");
        for (term, weight) in line.wordcloud_rows() {
            csv.push_str(&format!("{term},{weight}\n"));
        }
        ced_core::store::atomic_write(&cloud_dir.join(format!("{}.csv", line.id)), csv.as_bytes())
            .map_err(super::store_error)?;
    }

    let accepted = event_lines
        .iter()
        .filter(|e| e.status == ced_core::events::EventStatus::Accepted)
        .count();
    log::info!(
        "detected {} events ({} accepted) over {} days; artifacts in {}",
        event_lines.len(),
        accepted,
        slots.len(),
        out_dir.display()
    );
    Ok(())
}

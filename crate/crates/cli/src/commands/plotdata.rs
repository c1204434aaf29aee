//! `ced plotdata`: plot-ready CSV emission (no rendering).
//!
//! The streamgraph file carries one row per (day, type) with the matched
//! document volume of the final expansion iteration, scaled so each type's
//! series peaks at 1. Word-cloud files carry (term, weight) rows per event.

use std::collections::BTreeMap;
use std::path::Path;

use ced_core::store::{atomic_write, read_jsonl, EventLine, TraceLine};
use chrono::NaiveDate;
use ced_core::{EventCategory, Scalar};

use super::Context;
use crate::CmdError;

pub fn run(ctx: &Context, events: Option<&Path>, trace: Option<&Path>) -> Result<(), CmdError> {
    let out_dir = ctx.output_dir();
    let events_path = events
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("events.jsonl"));
    let trace_path = trace
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("dqe_trace.jsonl"));
    for p in [&events_path, &trace_path] {
        if !p.exists() {
            return Err(CmdError::Input(format!("input not found: {}", p.display())));
        }
    }
    let event_lines: Vec<EventLine> = read_jsonl(&events_path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", events_path.display())))?;
    let trace_lines: Vec<TraceLine> = read_jsonl(&trace_path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", trace_path.display())))?;

    // Final-iteration matched-document volume per (day, category).
    let mut volume: BTreeMap<(NaiveDate, EventCategory), (usize, usize)> = BTreeMap::new();
    for line in &trace_lines {
        let entry = volume.entry((line.date, line.category)).or_insert((0, 0));
        if line.iteration.iteration >= entry.0 {
            *entry = (line.iteration.iteration, line.iteration.matched_documents);
        }
    }
    let mut max_by_type: BTreeMap<EventCategory, usize> = BTreeMap::new();
    for (&(_, cat), &(_, docs)) in &volume {
        let m = max_by_type.entry(cat).or_insert(0);
        *m = (*m).max(docs);
    }

    let plot_dir = out_dir.join("plot");
    let mut csv = String::from("day,type,volume\n");
    for (&(day, cat), &(_, docs)) in &volume {
        let peak = max_by_type.get(&cat).copied().unwrap_or(0);
        let normalized: Scalar = if peak == 0 {
            0.0
        } else {
            docs as Scalar / peak as Scalar
        };
        csv.push_str(&format!("{day},{cat},{normalized}\n"));
    }
    atomic_write(&plot_dir.join("streamgraph.csv"), csv.as_bytes())
        .map_err(super::store_error)?;

    for line in &event_lines {
        let mut csv = String::from("term,weight\n");
        for (term, weight) in line.wordcloud_rows() {
            csv.push_str(&format!("{term},{weight}\n"));
        }
        atomic_write(
            &plot_dir.join(format!("wordcloud_{}.csv", line.id)),
            csv.as_bytes(),
        )
        .map_err(super::store_error)?;
    }

    log::info!(
        "wrote streamgraph ({} day-type rows) and {} word clouds to {}",
        volume.len(),
        event_lines.len(),
        plot_dir.display()
    );
    Ok(())
}

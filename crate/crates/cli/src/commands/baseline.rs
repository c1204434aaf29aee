//! `ced baseline`: Kleinberg bursts over keyword counts, emitted in the
//! shared events schema (untyped).

use std::path::Path;

use ced_core::baseline::{baseline_events, series_from_csv, series_from_slots};
use ced_core::store::{read_store, write_jsonl, EventLine, QueryWeight};

use super::{require_path, Context};
use crate::CmdError;

pub fn run(
    ctx: &Context,
    store: Option<&Path>,
    keywords: Option<&Path>,
    counts_csv: Option<&Path>,
) -> Result<(), CmdError> {
    let cfg = ctx.config.burst_config();

    let (days, series) = match counts_csv {
        Some(csv_path) => {
            if !csv_path.exists() {
                return Err(CmdError::Input(format!(
                    "counts csv not found: {}",
                    csv_path.display()
                )));
            }
            let file = std::fs::File::open(csv_path)
                .map_err(|e| CmdError::Input(format!("{}: {e}", csv_path.display())))?;
            series_from_csv(file)
                .map_err(|e| CmdError::Input(format!("{}: {e}", csv_path.display())))?
        }
        None => {
            let keywords_path = require_path(
                keywords,
                ctx.config.paths.keywords.as_ref(),
                "keyword list",
            )?;
            let text = std::fs::read_to_string(&keywords_path)
                .map_err(|e| CmdError::Input(format!("{}: {e}", keywords_path.display())))?;
            let list: Vec<String> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| l.to_lowercase())
                .collect();
            if list.is_empty() {
                return Err(CmdError::Input(format!(
                    "keyword list {} is empty",
                    keywords_path.display()
                )));
            }
            let (slots, _) = read_store(&ctx.store_dir(store)).map_err(super::store_error)?;
            series_from_slots(&slots, &list)
        }
    };

    let events = baseline_events(&days, &series, &cfg);
    let lines: Vec<EventLine> = events
        .iter()
        .enumerate()
        .map(|(i, e)| EventLine {
            id: format!("b{:05}", i + 1),
            date: e.date,
            event_type: None,
            status: ced_core::events::EventStatus::Accepted,
            exemplar: None,
            queries: e
                .keywords
                .iter()
                .map(|k| QueryWeight {
                    surface: k.clone(),
                    weight: 1.0,
                })
                .collect(),
            type_score: 0.0,
        })
        .collect();

    let out = ctx.output_dir().join("baseline_events.jsonl");
    write_jsonl(&out, &lines).map_err(super::store_error)?;
    log::info!(
        "baseline found {} event days over {} days x {} keywords -> {}",
        lines.len(),
        days.len(),
        series.len(),
        out.display()
    );
    Ok(())
}

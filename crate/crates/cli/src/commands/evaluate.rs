//! `ced evaluate`: match an events file against the GSR and score it.

use std::collections::BTreeMap;
use std::path::Path;

use ced_core::eval::{load_gsr, load_manual_review, match_event, score, MatchResult, ScoreReport};
use ced_core::store::{atomic_write, read_jsonl, write_jsonl, EventLine};

use super::{require_path, Context};
use crate::CmdError;

pub fn run(
    ctx: &Context,
    events: Option<&Path>,
    gsr: Option<&Path>,
    manual_review: Option<&Path>,
) -> Result<(), CmdError> {
    let events_path = events
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.output_dir().join("events.jsonl"));
    if !events_path.exists() {
        return Err(CmdError::Input(format!(
            "events file not found: {}",
            events_path.display()
        )));
    }
    let gsr_path = require_path(gsr, ctx.config.paths.gsr.as_ref(), "gsr csv")?;

    let lines: Vec<EventLine> = read_jsonl(&events_path).map_err(|e| {
        CmdError::Input(format!("events file {}: {e}", events_path.display()))
    })?;
    let gsr_file = std::fs::File::open(&gsr_path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", gsr_path.display())))?;
    let gsr_out =
        load_gsr(gsr_file).map_err(|e| CmdError::Input(format!("{}: {e}", gsr_path.display())))?;
    for reject in &gsr_out.rejects {
        log::warn!("gsr line {} rejected: {}", reject.line, reject.reason);
    }

    let manual = match manual_review
        .map(Path::to_path_buf)
        .or_else(|| ctx.config.paths.manual_review.clone())
    {
        Some(path) => {
            let file = std::fs::File::open(&path)
                .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))?;
            load_manual_review(file)
                .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))?
        }
        None => BTreeMap::new(),
    };

    let eval_cfg = ctx.config.eval_config();
    let detected: Vec<_> = lines.iter().map(EventLine::to_detected).collect();
    let results: Vec<MatchResult> = detected
        .iter()
        .map(|e| match_event(e, &gsr_out.events, &eval_cfg))
        .collect();
    let report = score(&results, &detected, &gsr_out.events, &manual);

    let out_dir = ctx.output_dir();
    let mut json = serde_json::to_vec_pretty(&report)
        .map_err(|e| CmdError::Internal(format!("metrics serialization: {e}")))?;
    json.push(b'\n');
    atomic_write(&out_dir.join("metrics.json"), &json).map_err(super::store_error)?;
    write_jsonl(&out_dir.join("matches.jsonl"), &results).map_err(super::store_error)?;

    let table = render_table(&report);
    atomic_write(&out_dir.join("metrics.txt"), table.as_bytes()).map_err(super::store_error)?;
    print!("{table}");

    if report.unlabeled_counted_fp > 0 {
        log::warn!(
            "{} accepted events had neither a GSR match nor a manual label; counted as false positives",
            report.unlabeled_counted_fp
        );
    }
    let flagged = results.iter().filter(|r| r.manual_flag).count();
    if flagged > 0 {
        log::info!("{flagged} events flagged for manual review (entity step failed)");
    }
    Ok(())
}

fn render_table(report: &ScoreReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20}{:>8}{:>8}{:>8}{:>6}{:>6}{:>6}{:>9}{:>12}\n",
        "type", "P", "R", "F1", "TP", "FP", "GSR", "matched", "manual-TP"
    ));
    for (name, row) in &report.per_type {
        out.push_str(&format!(
            "{:<20}{:>8.3}{:>8.3}{:>8.3}{:>6}{:>6}{:>6}{:>9}{:>12}\n",
            name,
            row.precision,
            row.recall,
            row.f1,
            row.true_positives,
            row.false_positives,
            row.gsr_total,
            row.gsr_matched,
            row.tp_manual_only,
        ));
    }
    if let Some(p) = report.untyped_precision {
        out.push_str(&format!("{:<20}{:>8.3}\n", "untyped", p));
    }
    out.push_str("status counts: ");
    let parts: Vec<String> = report
        .status_counts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    out.push_str(&parts.join(", "));
    out.push('\n');
    out
}

//! `ced ingest`: JSON Lines + CoNLL-U into the day-partitioned store.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ced_core::corpus::{attach_parses, bucket_by_day, load_conllu, load_jsonl};
use ced_core::store::{write_jsonl, write_store, IngestReport};

use super::{require_path, Context};
use crate::CmdError;

pub fn run(ctx: &Context, corpus: Option<&Path>, parses: Option<&Path>) -> Result<(), CmdError> {
    let corpus_path = require_path(corpus, ctx.config.paths.corpus.as_ref(), "corpus file")?;
    let parses_path = require_path(parses, ctx.config.paths.parses.as_ref(), "parses file")?;

    let corpus_file = File::open(&corpus_path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", corpus_path.display())))?;
    let jsonl = load_jsonl(BufReader::new(corpus_file))
        .map_err(|e| CmdError::Input(format!("{}: {e}", corpus_path.display())))?;

    let parses_file = File::open(&parses_path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", parses_path.display())))?;
    let conllu = load_conllu(BufReader::new(parses_file))
        .map_err(|e| CmdError::Input(format!("{}: {e}", parses_path.display())))?;

    let mut docs = jsonl.docs;
    let rejected_sentences = conllu.rejects.len();
    let orphan_parses = attach_parses(&mut docs, conllu.docs);
    let docs_without_parse = docs.iter().filter(|d| d.trees.is_empty()).count();

    let slots = bucket_by_day(docs);
    let report = IngestReport {
        documents: slots.iter().map(|s| s.documents.len()).sum(),
        days: slots.len(),
        malformed_lines: jsonl.malformed,
        rejected_sentences,
        docs_without_parse,
        orphan_parses,
    };

    let store_dir = ctx.output_dir().join("store");
    write_store(&store_dir, &slots, &report).map_err(super::store_error)?;
    write_jsonl(&store_dir.join("rejects.jsonl"), &conllu.rejects)
        .map_err(super::store_error)?;

    if report.documents == 0 {
        log::warn!("ingested an empty corpus");
    }
    if report.malformed_lines > 0 {
        log::warn!("skipped {} malformed corpus lines", report.malformed_lines);
    }
    if rejected_sentences > 0 {
        log::warn!(
            "rejected {rejected_sentences} sentences; see {}",
            store_dir.join("rejects.jsonl").display()
        );
    }
    log::info!(
        "ingested {} documents over {} days into {}",
        report.documents,
        report.days,
        store_dir.display()
    );
    Ok(())
}

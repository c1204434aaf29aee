//! CoNLL-U reader producing validated dependency trees.
//!
//! Expects the 10-column tab-separated format with blank-line sentence
//! delimiters and `# newdoc id = ...` document markers. Multiword-token
//! ranges (`1-2`) and empty nodes (`1.1`) are skipped. Sentences violating
//! the tree invariants are rejected individually with a diagnostic record;
//! the rest of the stream is still consumed.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{strip_accents, DepTree, Token, TokenKind};

/// Diagnostic for one rejected sentence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceReject {
    pub doc_id: String,
    /// 0-based sentence position within the document.
    pub sentence_index: usize,
    pub reason: String,
}

/// Parsed stream: per-document trees plus rejection diagnostics.
#[derive(Debug, Default)]
pub struct ConlluOutput {
    pub docs: Vec<(String, Vec<DepTree>)>,
    pub rejects: Vec<SentenceReject>,
}

impl ConlluOutput {
    pub fn tree_count(&self) -> usize {
        self.docs.iter().map(|(_, ts)| ts.len()).sum()
    }
}

const NEWDOC_PREFIX: &str = "# newdoc id =";
const FALLBACK_DOC_ID: &str = "_doc0";

/// Read a CoNLL-U stream into per-document dependency trees.
///
/// Token `kind` is inferred from the surface form: leading `#` makes a
/// hashtag, leading `@` a mention. Lemmas are lowercased, accent-folded and
/// stripped of their sigil; a missing lemma (`_`) falls back to the surface.
pub fn load_conllu<R: BufRead>(reader: R) -> std::io::Result<ConlluOutput> {
    let mut out = ConlluOutput::default();
    let mut current_doc: Option<usize> = None;
    let mut sentence_in_doc = 0usize;
    let mut pending: Vec<Result<Token, String>> = Vec::new();

    let finish_sentence = |out: &mut ConlluOutput,
                               current_doc: &mut Option<usize>,
                               sentence_in_doc: &mut usize,
                               pending: &mut Vec<Result<Token, String>>| {
        if pending.is_empty() {
            return;
        }
        let doc_pos = *current_doc.get_or_insert_with(|| {
            out.docs.push((FALLBACK_DOC_ID.to_string(), Vec::new()));
            out.docs.len() - 1
        });
        let doc_id = out.docs[doc_pos].0.clone();
        let tokens: Result<Vec<Token>, String> = pending.drain(..).collect();
        let result = tokens.and_then(|toks| {
            DepTree::new(toks).map_err(|e| e.to_string())
        });
        match result {
            Ok(tree) => out.docs[doc_pos].1.push(tree),
            Err(reason) => out.rejects.push(SentenceReject {
                doc_id,
                sentence_index: *sentence_in_doc,
                reason,
            }),
        }
        *sentence_in_doc += 1;
    };

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            finish_sentence(
                &mut out,
                &mut current_doc,
                &mut sentence_in_doc,
                &mut pending,
            );
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(NEWDOC_PREFIX) {
            finish_sentence(
                &mut out,
                &mut current_doc,
                &mut sentence_in_doc,
                &mut pending,
            );
            let id = rest.trim().to_string();
            // Repeated ids extend the existing document.
            let pos = out
                .docs
                .iter()
                .position(|(existing, _)| *existing == id)
                .unwrap_or_else(|| {
                    out.docs.push((id, Vec::new()));
                    out.docs.len() - 1
                });
            current_doc = Some(pos);
            sentence_in_doc = 0;
            continue;
        }
        if trimmed.starts_with('#') {
            continue; // other comments
        }
        match parse_token_line(trimmed, pending.len() + 1) {
            LineOutcome::Token(t) => pending.push(Ok(t)),
            LineOutcome::Skip => {}
            LineOutcome::Bad(reason) => pending.push(Err(reason)),
        }
    }
    finish_sentence(
        &mut out,
        &mut current_doc,
        &mut sentence_in_doc,
        &mut pending,
    );
    Ok(out)
}

/// `Ok(None)` = skip line (range/empty-node ids), `Ok(Some)` = token,
/// `Err` = sentence-level diagnostic.
fn parse_token_line(line: &str, expected_index: usize) -> LineOutcome {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return LineOutcome::Bad(format!(
            "expected 10 tab-separated columns, found {}",
            cols.len()
        ));
    }
    let id = cols[0];
    if id.contains('-') || id.contains('.') {
        return LineOutcome::Skip;
    }
    let index: usize = match id.parse() {
        Ok(i) => i,
        Err(_) => return LineOutcome::Bad(format!("unparseable token id {id:?}")),
    };
    if index != expected_index {
        return LineOutcome::Bad(format!(
            "non-contiguous token id {index} (expected {expected_index})"
        ));
    }
    let head: usize = match cols[6].parse() {
        Ok(h) => h,
        Err(_) => {
            return LineOutcome::Bad(format!(
                "malformed head index {:?} at token {index}",
                cols[6]
            ))
        }
    };
    let surface = cols[1].to_string();
    let kind = if surface.starts_with('#') {
        TokenKind::Hashtag
    } else if surface.starts_with('@') {
        TokenKind::Mention
    } else {
        TokenKind::Word
    };
    let lemma_src = if cols[2] == "_" { cols[1] } else { cols[2] };
    let mut lemma = strip_accents(lemma_src)
        .to_lowercase()
        .trim_start_matches(['#', '@'])
        .to_string();
    if lemma.is_empty() {
        // A bare sigil token keeps its surface so the lemma stays non-empty.
        lemma = lemma_src.to_lowercase();
    }
    LineOutcome::Token(Token {
        index,
        surface,
        lemma,
        upos: cols[3].to_string(),
        head,
        deprel: cols[7].to_string(),
        kind,
    })
}

enum LineOutcome {
    Token(Token),
    Skip,
    Bad(String),
}

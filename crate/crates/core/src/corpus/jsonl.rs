//! JSON Lines document reader.
//!
//! One object per line with fields `id`, `timestamp` (ISO-8601 text or epoch
//! seconds) and `text`. Malformed lines are skipped and counted rather than
//! aborting the stream.

use std::io::BufRead;

use chrono::DateTime;
use serde::Deserialize;

use super::{normalize_text, Document};

/// Loaded documents plus the number of lines that failed to parse.
#[derive(Debug, Default)]
pub struct JsonlOutput {
    pub docs: Vec<Document>,
    pub malformed: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    id: IdField,
    timestamp: TsField,
    text: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdField {
    Text(String),
    Number(i64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TsField {
    Text(String),
    Epoch(i64),
}

fn parse_timestamp(ts: &TsField) -> Option<i64> {
    match ts {
        TsField::Epoch(secs) => Some(*secs),
        TsField::Text(s) => {
            if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
                return Some(dt.timestamp());
            }
            // Naive fallbacks are interpreted as UTC.
            for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
                if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(s, fmt) {
                    return Some(naive.and_utc().timestamp());
                }
            }
            None
        }
    }
}

/// Read documents from a JSON Lines stream. Trees start empty and are joined
/// later by [`super::attach_parses`].
pub fn load_jsonl<R: BufRead>(reader: R) -> std::io::Result<JsonlOutput> {
    let mut out = JsonlOutput::default();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => {
                out.malformed += 1;
                continue;
            }
        };
        let timestamp = match parse_timestamp(&record.timestamp) {
            Some(ts) => ts,
            None => {
                out.malformed += 1;
                continue;
            }
        };
        let doc_id = match record.id {
            IdField::Text(s) => s,
            IdField::Number(n) => n.to_string(),
        };
        let norm_text = normalize_text(&record.text);
        out.docs.push(Document {
            doc_id,
            timestamp,
            raw_text: record.text,
            norm_text,
            trees: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn direct_field_mapping() {
        let out = load_jsonl(Cursor::new(
            r#"{"id":"1","timestamp":"2015-07-20T12:00:00Z","text":"x"}"#,
        ))
        .unwrap();
        assert_eq!(out.docs.len(), 1);
        assert_eq!(out.docs[0].doc_id, "1");
        assert_eq!(out.docs[0].day().unwrap().to_string(), "2015-07-20");
        assert_eq!(out.malformed, 0);
    }

    #[test]
    fn bad_lines_are_counted() {
        let text = "not json\n{\"id\":\"1\",\"timestamp\":0,\"text\":\"a\"}\n{\"id\":\"2\"}\n";
        let out = load_jsonl(Cursor::new(text)).unwrap();
        assert_eq!(out.docs.len(), 1);
        assert_eq!(out.malformed, 2);
    }

    #[test]
    fn mixed_fixture_count() {
        let mut lines = Vec::new();
        for i in 0..100 {
            if i % 33 == 7 {
                lines.push("garbage".to_string());
            } else {
                lines.push(format!(
                    r#"{{"id":{i},"timestamp":1437400000,"text":"doc {i}"}}"#
                ));
            }
        }
        let out = load_jsonl(Cursor::new(lines.join("\n"))).unwrap();
        assert_eq!(out.malformed, 3);
        assert_eq!(out.docs.len(), 97);
    }

    #[test]
    fn norm_text_is_applied() {
        let out = load_jsonl(Cursor::new(
            r#"{"id":"1","timestamp":0,"text":"@x Café #breach"}"#,
        ))
        .unwrap();
        assert_eq!(out.docs[0].norm_text, "cafe breach");
    }
}

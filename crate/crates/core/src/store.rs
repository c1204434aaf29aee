//! On-disk pipeline artifacts.
//!
//! The corpus store is a directory of day-partitioned JSON Lines files plus
//! a manifest; events, traces and diagnostics are flat JSON Lines files.
//! Every writer goes through a temp-file-and-rename so partially written
//! artifacts never appear under their final name, and all serialization
//! uses ordered maps so identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, TimeSlot};
use crate::dqe::IterationTrace;
use crate::eval::DetectedEvent;
use crate::events::{EventRecord, EventStatus};
use crate::stopwords::is_stopword;
use crate::{EventCategory, Scalar};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("store at {0} has no manifest")]
    NotAStore(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write bytes to `path` atomically (temp file in the same directory, then
/// rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "artifact".to_string())
    ));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

/// Serialize items as JSON Lines, atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|source| StoreError::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

/// Read a JSON Lines file.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| StoreError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Ingestion tallies persisted next to the store.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: usize,
    pub days: usize,
    pub malformed_lines: usize,
    pub rejected_sentences: usize,
    pub docs_without_parse: usize,
    pub orphan_parses: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    /// Day -> document count, ordered by day.
    days: BTreeMap<String, usize>,
    report: IngestReport,
}

const MANIFEST: &str = "manifest.json";

/// Persist day-partitioned slots under `dir` (`manifest.json` +
/// `days/<date>.jsonl`).
pub fn write_store(
    dir: &Path,
    slots: &[TimeSlot],
    report: &IngestReport,
) -> Result<(), StoreError> {
    let days_dir = dir.join("days");
    fs::create_dir_all(&days_dir).map_err(io_err(&days_dir))?;
    let mut days = BTreeMap::new();
    for slot in slots {
        let name = format!("{}.jsonl", slot.day);
        write_jsonl(&days_dir.join(name), &slot.documents)?;
        days.insert(slot.day.to_string(), slot.documents.len());
    }
    let manifest = Manifest {
        days,
        report: report.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    atomic_write(&dir.join(MANIFEST), &bytes)
}

/// Load a store written by [`write_store`], slots ascending by day.
pub fn read_store(dir: &Path) -> Result<(Vec<TimeSlot>, IngestReport), StoreError> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(StoreError::NotAStore(dir.to_path_buf()));
    }
    let bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes).map_err(|source| StoreError::Json {
            path: manifest_path.clone(),
            line: 0,
            source,
        })?;
    let mut slots = Vec::new();
    for day_str in manifest.days.keys() {
        let day: NaiveDate = day_str
            .parse()
            .map_err(|_| StoreError::NotAStore(dir.to_path_buf()))?;
        let path = dir.join("days").join(format!("{day_str}.jsonl"));
        let documents: Vec<Document> = read_jsonl(&path)?;
        slots.push(TimeSlot { day, documents });
    }
    Ok((slots, manifest.report))
}

/// One line of the events file; shared schema for expansion and baseline
/// events (baseline lines carry `type: null` and keyword queries).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventLine {
    pub id: String,
    pub date: NaiveDate,
    #[serde(rename = "type")]
    pub event_type: Option<EventCategory>,
    pub status: EventStatus,
    /// Exemplar surface; absent for baseline events.
    pub exemplar: Option<String>,
    pub queries: Vec<QueryWeight>,
    pub type_score: Scalar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryWeight {
    pub surface: String,
    pub weight: Scalar,
}

impl From<&EventRecord> for EventLine {
    fn from(e: &EventRecord) -> Self {
        EventLine {
            id: e.id.clone(),
            date: e.date,
            event_type: e.event_type,
            status: e.status,
            exemplar: Some(e.exemplar.surface.clone()),
            queries: e
                .queries
                .iter()
                .map(|q| QueryWeight {
                    surface: q.surface.clone(),
                    weight: q.weight,
                })
                .collect(),
            type_score: e.type_score,
        }
    }
}

impl EventLine {
    /// Evaluation-side view: exemplar lemmas for typed events, the keyword
    /// set for baseline events.
    pub fn to_detected(&self) -> DetectedEvent {
        let terms: Vec<String> = match &self.exemplar {
            Some(surface) => surface.split_whitespace().map(str::to_string).collect(),
            None => self
                .queries
                .iter()
                .flat_map(|q| q.surface.split_whitespace().map(str::to_string))
                .collect(),
        };
        DetectedEvent {
            id: self.id.clone(),
            date: self.date,
            event_type: self.event_type,
            status: self.status,
            terms,
        }
    }

    /// Word-cloud rows for one event: each member term weighted by the
    /// summed weight of the member queries containing it, stopwords
    /// dropped.
    pub fn wordcloud_rows(&self) -> Vec<(String, Scalar)> {
        let mut weights: BTreeMap<String, Scalar> = BTreeMap::new();
        for q in &self.queries {
            for term in q.surface.split_whitespace() {
                if is_stopword(term) {
                    continue;
                }
                *weights.entry(term.to_string()).or_insert(0.0) += q.weight;
            }
        }
        weights.into_iter().collect()
    }
}

/// One line of the expansion trace file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceLine {
    pub date: NaiveDate,
    pub category: EventCategory,
    #[serde(flatten)]
    pub iteration: IterationTrace,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bucket_by_day;
    use crate::testkit::tree;

    fn doc(id: &str, ts: i64) -> Document {
        Document {
            doc_id: id.into(),
            timestamp: ts,
            raw_text: "data leak".into(),
            norm_text: "data leak".into(),
            trees: vec![tree(&[("data", 2), ("leak", 0)])],
        }
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let slots = bucket_by_day(vec![
            doc("a", 1437350400),
            doc("b", 1437350500),
            doc("c", 1437436900),
        ]);
        let report = IngestReport {
            documents: 3,
            days: 2,
            ..IngestReport::default()
        };
        write_store(dir.path(), &slots, &report).unwrap();
        let (loaded, loaded_report) = read_store(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].documents.len(), 2);
        assert_eq!(loaded[0].documents[0].trees[0].surface(), "data leak");
        assert_eq!(loaded_report.documents, 3);
    }

    #[test]
    fn read_store_rejects_plain_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_store(dir.path()),
            Err(StoreError::NotAStore(_))
        ));
    }

    #[test]
    fn jsonl_round_trip_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let lines = vec![EventLine {
            id: "e00001".into(),
            date: "2015-07-20".parse().unwrap(),
            event_type: Some(EventCategory::DataBreach),
            status: EventStatus::Accepted,
            exemplar: Some("ashley madison data leak".into()),
            queries: vec![QueryWeight {
                surface: "ashley madison data leak".into(),
                weight: 2.5,
            }],
            type_score: 0.9,
        }];
        write_jsonl(&path, &lines).unwrap();
        let first = fs::read(&path).unwrap();
        write_jsonl(&path, &lines).unwrap();
        let second = fs::read(&path).unwrap();
        assert_eq!(first, second);
        let loaded: Vec<EventLine> = read_jsonl(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].event_type, Some(EventCategory::DataBreach));
    }

    #[test]
    fn baseline_lines_detect_via_keywords() {
        let line = EventLine {
            id: "b1".into(),
            date: "2015-07-20".parse().unwrap(),
            event_type: None,
            status: EventStatus::Accepted,
            exemplar: None,
            queries: vec![
                QueryWeight {
                    surface: "ddos".into(),
                    weight: 1.0,
                },
                QueryWeight {
                    surface: "outage".into(),
                    weight: 1.0,
                },
            ],
            type_score: 0.0,
        };
        let detected = line.to_detected();
        assert_eq!(detected.terms, vec!["ddos", "outage"]);
        assert_eq!(detected.event_type, None);
    }

    #[test]
    fn wordcloud_rows_sum_member_weights() {
        let line = EventLine {
            id: "e1".into(),
            date: "2015-07-20".parse().unwrap(),
            event_type: Some(EventCategory::DataBreach),
            status: EventStatus::Accepted,
            exemplar: Some("ashley madison data leak".into()),
            queries: vec![
                QueryWeight {
                    surface: "ashley madison data leak".into(),
                    weight: 2.0,
                },
                QueryWeight {
                    surface: "the data leak".into(),
                    weight: 1.0,
                },
            ],
            type_score: 0.9,
        };
        let rows = line.wordcloud_rows();
        let get = |t: &str| rows.iter().find(|(w, _)| w == t).map(|(_, x)| *x);
        assert_eq!(get("data"), Some(3.0));
        assert_eq!(get("ashley"), Some(2.0));
        assert_eq!(get("the"), None);
    }
}

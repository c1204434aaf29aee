//! Matching detected events against gold-standard records and scoring.
//!
//! The three-step matcher mirrors the semi-automatic protocol: entity terms
//! against victim/description text, then the date window, then the type.
//! Events failing the entity step are flagged for manual review; a manual
//! label file (TP/FP) feeds unmatched events back into the score. Typed
//! precision/recall/F are computed per category over accepted events only.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::EventStatus;
use crate::stopwords::is_stopword;
use crate::{EventCategory, Scalar};

/// One ground-truth incident.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GsrEvent {
    pub gsr_id: String,
    pub date: NaiveDate,
    pub event_type: EventCategory,
    pub victim: String,
    pub description: String,
    pub source: String,
}

/// Evaluation-side view of a detected event; built from the events file, so
/// it works for both the expansion pipeline (exemplar lemmas) and the burst
/// baseline (bursty keywords).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectedEvent {
    pub id: String,
    pub date: NaiveDate,
    /// `None` for untyped (baseline) events.
    pub event_type: Option<EventCategory>,
    pub status: EventStatus,
    /// Entity candidates: non-stopword exemplar lemmas, or the bursty
    /// keyword set for baseline events.
    pub terms: Vec<String>,
}

impl From<&crate::events::EventRecord> for DetectedEvent {
    fn from(e: &crate::events::EventRecord) -> Self {
        DetectedEvent {
            id: e.id.clone(),
            date: e.date,
            event_type: e.event_type,
            status: e.status,
            terms: e.exemplar_lemmas().iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Where the three-step match stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MatchStage {
    EntityFail,
    DateFail,
    TypeFail,
    Matched,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchResult {
    pub event_id: String,
    /// Present iff `stage` is `Matched`.
    pub matched_gsr_id: Option<String>,
    pub stage: MatchStage,
    /// Entity-step failures are queued for human review.
    pub manual_flag: bool,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Days either side of the event date a GSR record may fall in.
    pub date_window_days: i64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            date_window_days: 1,
        }
    }
}

fn tokenize(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Three-step match of one detected event against the GSR.
///
/// Step 1 keeps GSR records whose victim or description contains any
/// non-stopword event term (token-level, case-insensitive); step 2 filters
/// those to the date window; step 3 requires the types to agree. Untyped
/// events skip step 3 and match on steps 1–2 alone.
pub fn match_event(e: &DetectedEvent, gsr: &[GsrEvent], cfg: &EvalConfig) -> MatchResult {
    let terms: BTreeSet<String> = e
        .terms
        .iter()
        .map(|t| t.to_lowercase())
        .filter(|t| !is_stopword(t))
        .collect();

    let me: Vec<&GsrEvent> = gsr
        .iter()
        .filter(|g| {
            let mut tokens = tokenize(&g.victim);
            tokens.extend(tokenize(&g.description));
            terms.iter().any(|t| tokens.contains(t))
        })
        .collect();
    if me.is_empty() {
        return MatchResult {
            event_id: e.id.clone(),
            matched_gsr_id: None,
            stage: MatchStage::EntityFail,
            manual_flag: true,
        };
    }

    let fme: Vec<&GsrEvent> = me
        .into_iter()
        .filter(|g| (g.date - e.date).num_days().abs() <= cfg.date_window_days)
        .collect();
    if fme.is_empty() {
        return MatchResult {
            event_id: e.id.clone(),
            matched_gsr_id: None,
            stage: MatchStage::DateFail,
            manual_flag: false,
        };
    }

    let hit = fme
        .iter()
        .find(|g| e.event_type.is_none() || e.event_type == Some(g.event_type));
    match hit {
        Some(g) => MatchResult {
            event_id: e.id.clone(),
            matched_gsr_id: Some(g.gsr_id.clone()),
            stage: MatchStage::Matched,
            manual_flag: false,
        },
        None => MatchResult {
            event_id: e.id.clone(),
            matched_gsr_id: None,
            stage: MatchStage::TypeFail,
            manual_flag: false,
        },
    }
}

/// Outcome label from the manual-review file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ManualLabel {
    Tp,
    Fp,
}

/// Per-category score row.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TypeScore {
    pub precision: Scalar,
    pub recall: Scalar,
    pub f1: Scalar,
    pub true_positives: usize,
    pub false_positives: usize,
    pub accepted_events: usize,
    pub gsr_total: usize,
    pub gsr_matched: usize,
    /// Matched-with-GSR yes/no tabulation of the true positives.
    pub tp_matched_gsr: usize,
    pub tp_manual_only: usize,
}

/// Full evaluation report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_type: BTreeMap<String, TypeScore>,
    /// Precision over accepted untyped events, when any exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub untyped_precision: Option<Scalar>,
    pub status_counts: BTreeMap<String, usize>,
    /// Accepted events that were neither matched nor manually labeled;
    /// counted as false positives.
    pub unlabeled_counted_fp: usize,
}

fn f_measure(p: Scalar, r: Scalar) -> Scalar {
    if p == 0.0 || r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Score matched events against the GSR.
///
/// Only accepted events count toward precision; duplicates, rejected and
/// unspecified events are excluded from both numerator and denominator but
/// reported in the status tally. Recall counts each GSR record at most
/// once, per its own category. Accepted events lacking both a match and a
/// manual label are conservatively counted as false positives.
pub fn score(
    results: &[MatchResult],
    detected: &[DetectedEvent],
    gsr: &[GsrEvent],
    manual: &BTreeMap<String, ManualLabel>,
) -> ScoreReport {
    let by_id: BTreeMap<&str, &MatchResult> = results
        .iter()
        .map(|r| (r.event_id.as_str(), r))
        .collect();
    let gsr_by_id: BTreeMap<&str, &GsrEvent> =
        gsr.iter().map(|g| (g.gsr_id.as_str(), g)).collect();

    let mut report = ScoreReport::default();
    let mut tp: BTreeMap<EventCategory, usize> = BTreeMap::new();
    let mut fp: BTreeMap<EventCategory, usize> = BTreeMap::new();
    let mut accepted: BTreeMap<EventCategory, usize> = BTreeMap::new();
    let mut tp_matched: BTreeMap<EventCategory, usize> = BTreeMap::new();
    let mut gsr_hit: BTreeSet<&str> = BTreeSet::new();
    let mut untyped_tp = 0usize;
    let mut untyped_total = 0usize;

    for e in detected {
        *report
            .status_counts
            .entry(format!("{:?}", e.status).to_lowercase())
            .or_insert(0) += 1;
        if e.status != EventStatus::Accepted {
            continue;
        }
        let result = by_id.get(e.id.as_str());
        let matched_gsr = result.and_then(|r| r.matched_gsr_id.as_deref());
        let is_tp = match matched_gsr {
            Some(gid) => {
                gsr_hit.insert(gid);
                true
            }
            None => match manual.get(&e.id) {
                Some(ManualLabel::Tp) => true,
                Some(ManualLabel::Fp) => false,
                None => {
                    report.unlabeled_counted_fp += 1;
                    false
                }
            },
        };
        match e.event_type {
            Some(cat) => {
                *accepted.entry(cat).or_insert(0) += 1;
                if is_tp {
                    *tp.entry(cat).or_insert(0) += 1;
                    if matched_gsr.is_some() {
                        *tp_matched.entry(cat).or_insert(0) += 1;
                    }
                } else {
                    *fp.entry(cat).or_insert(0) += 1;
                }
            }
            None => {
                untyped_total += 1;
                if is_tp {
                    untyped_tp += 1;
                }
            }
        }
    }

    for cat in EventCategory::ALL {
        let gsr_total = gsr.iter().filter(|g| g.event_type == cat).count();
        let gsr_matched = gsr_hit
            .iter()
            .filter(|gid| gsr_by_id.get(*gid).map(|g| g.event_type) == Some(cat))
            .count();
        let t = tp.get(&cat).copied().unwrap_or(0);
        let f = fp.get(&cat).copied().unwrap_or(0);
        let acc = accepted.get(&cat).copied().unwrap_or(0);
        if acc == 0 && gsr_total == 0 {
            continue;
        }
        let precision = if t + f == 0 {
            0.0
        } else {
            t as Scalar / (t + f) as Scalar
        };
        let recall = if gsr_total == 0 {
            0.0
        } else {
            gsr_matched as Scalar / gsr_total as Scalar
        };
        let tpm = tp_matched.get(&cat).copied().unwrap_or(0);
        report.per_type.insert(
            cat.as_str().to_string(),
            TypeScore {
                precision,
                recall,
                f1: f_measure(precision, recall),
                true_positives: t,
                false_positives: f,
                accepted_events: acc,
                gsr_total,
                gsr_matched,
                tp_matched_gsr: tpm,
                tp_manual_only: t - tpm,
            },
        );
    }
    if untyped_total > 0 {
        report.untyped_precision = Some(untyped_tp as Scalar / untyped_total as Scalar);
    }
    report
}

#[derive(Debug, Error)]
pub enum GsrError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
}

/// One rejected GSR row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GsrReject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct GsrOutput {
    pub events: Vec<GsrEvent>,
    pub rejects: Vec<GsrReject>,
}

/// Load the GSR CSV (`gsrId, date, type, victim, description, source`).
/// Rows with unknown types or unparseable dates are rejected individually.
pub fn load_gsr<R: Read>(reader: R) -> Result<GsrOutput, GsrError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, GsrError> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(GsrError::MissingColumn(name))
    };
    let c_id = col("gsrId")?;
    let c_date = col("date")?;
    let c_type = col("type")?;
    let c_victim = col("victim")?;
    let c_desc = col("description")?;
    let c_source = col("source")?;

    let mut out = GsrOutput::default();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(GsrReject {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let field = |c: usize| record.get(c).unwrap_or("").to_string();
        let date = match field(c_date).parse::<NaiveDate>() {
            Ok(d) => d,
            Err(_) => {
                out.rejects.push(GsrReject {
                    line,
                    reason: format!("unparseable date {:?}", field(c_date)),
                });
                continue;
            }
        };
        let event_type = match EventCategory::parse_lenient(&field(c_type)) {
            Some(t) => t,
            None => {
                out.rejects.push(GsrReject {
                    line,
                    reason: format!("unknown type {:?}", field(c_type)),
                });
                continue;
            }
        };
        out.events.push(GsrEvent {
            gsr_id: field(c_id),
            date,
            event_type,
            victim: field(c_victim),
            description: field(c_desc),
            source: field(c_source),
        });
    }
    Ok(out)
}

/// Load the manual-review CSV (`eventId, label, note`), label TP or FP.
pub fn load_manual_review<R: Read>(
    reader: R,
) -> Result<BTreeMap<String, ManualLabel>, GsrError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let c_id = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("eventId"))
        .ok_or(GsrError::MissingColumn("eventId"))?;
    let c_label = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("label"))
        .ok_or(GsrError::MissingColumn("label"))?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let id = record.get(c_id).unwrap_or("").to_string();
        let label = match record.get(c_label).map(str::trim) {
            Some(l) if l.eq_ignore_ascii_case("tp") => ManualLabel::Tp,
            Some(l) if l.eq_ignore_ascii_case("fp") => ManualLabel::Fp,
            _ => continue,
        };
        out.insert(id, label);
    }
    Ok(out)
}

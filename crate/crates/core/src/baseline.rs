//! Kleinberg two-state burst detection over daily keyword counts.
//!
//! Each keyword's daily counts are modeled by a two-state automaton: a base
//! state emitting at the keyword's overall rate `p0` and a burst state at
//! `s * p0`. Day costs are binomial negative log-likelihoods (the
//! state-independent combinatorial term dropped); entering the burst state
//! costs `gamma * ln(n)`. The optimal state sequence is found by dynamic
//! programming, with ties resolved toward the base state so the chosen
//! sequence is the lexicographically smallest optimum. A day becomes a
//! baseline event when enough keywords are bursting at once.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("counts and totals differ in length ({counts} vs {totals})")]
    LengthMismatch { counts: usize, totals: usize },
    #[error("day {day}: count {count} exceeds total {total}")]
    CountOverTotal { day: usize, count: u64, total: u64 },
}

/// Daily observation series for one keyword.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordSeries {
    pub keyword: String,
    /// Documents containing the keyword, per day.
    counts: Vec<u64>,
    /// Corpus document totals, per day.
    totals: Vec<u64>,
}

impl KeywordSeries {
    pub fn new(keyword: String, counts: Vec<u64>, totals: Vec<u64>) -> Result<Self, SeriesError> {
        if counts.len() != totals.len() {
            return Err(SeriesError::LengthMismatch {
                counts: counts.len(),
                totals: totals.len(),
            });
        }
        for (day, (&c, &t)) in counts.iter().zip(&totals).enumerate() {
            if c > t {
                return Err(SeriesError::CountOverTotal {
                    day,
                    count: c,
                    total: t,
                });
            }
        }
        Ok(KeywordSeries {
            keyword,
            counts,
            totals,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }
}

/// Burst-model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstConfig<F> {
    /// Burst-to-base rate ratio, > 1.
    pub s: F,
    /// Burst entry cost multiplier, > 0.
    pub gamma: F,
    /// Bursty-keyword count at which a day becomes an event.
    pub tb: usize,
    /// Require strictly more than `tb` bursting keywords instead of at
    /// least `tb`.
    pub strict_threshold: bool,
}

impl<F: Real> Default for BurstConfig<F> {
    fn default() -> Self {
        BurstConfig {
            s: F::from_f64c(2.0),
            gamma: F::one(),
            tb: 36,
            strict_threshold: false,
        }
    }
}

/// Base and burst emission rates for a series; `None` when the series
/// carries no signal (no observations, zero rate, or a base rate too high
/// to elevate).
fn rates<F: Real>(series: &KeywordSeries, cfg: &BurstConfig<F>) -> Option<(F, F)> {
    let total_count: u64 = series.counts.iter().sum();
    let total_docs: u64 = series.totals.iter().sum();
    if total_docs == 0 || total_count == 0 {
        return None;
    }
    let p0 = F::from_count(total_count as usize) / F::from_count(total_docs as usize);
    let cap = F::one() - F::from_f64c(1e-9);
    let p1 = (cfg.s * p0).min(cap);
    if p1 <= p0 {
        return None;
    }
    Some((p0, p1))
}

/// Negative binomial log-likelihood of one day under rate `p`, without the
/// state-independent combinatorial term.
fn day_cost<F: Real>(count: u64, total: u64, p: F) -> F {
    let c = F::from_count(count as usize);
    let t = F::from_count(total as usize);
    -(c * p.ln() + (t - c) * (F::one() - p).ln())
}

/// Optimal state sequence via backward dynamic programming with a greedy
/// forward walk that prefers the base state on ties (the lexicographically
/// smallest optimum). The automaton starts in the base state before day 0.
fn optimal_states<F: Real>(series: &KeywordSeries, cfg: &BurstConfig<F>) -> Vec<bool> {
    let n = series.len();
    let (p0, p1) = match rates(series, cfg) {
        Some(r) => r,
        None => return vec![false; n],
    };
    let enter = cfg.gamma * F::from_count(n).ln();

    // cost_to_go[i][q]: cheapest completion from day i onward given state q
    // on day i (day i's own cost included).
    let mut cost_to_go = vec![[F::zero(); 2]; n + 1];
    for i in (0..n).rev() {
        let c0 = day_cost(series.counts[i], series.totals[i], p0);
        let c1 = day_cost(series.counts[i], series.totals[i], p1);
        let stay0 = cost_to_go[i + 1][0];
        let move01 = enter + cost_to_go[i + 1][1];
        let move10 = cost_to_go[i + 1][0];
        let stay1 = cost_to_go[i + 1][1];
        cost_to_go[i][0] = c0 + stay0.min(move01);
        cost_to_go[i][1] = c1 + move10.min(stay1);
    }

    let mut states = vec![false; n];
    let mut prev_burst = false;
    for (i, state) in states.iter_mut().enumerate() {
        let through_base = cost_to_go[i][0];
        let entry = if prev_burst { F::zero() } else { enter };
        let through_burst = entry + cost_to_go[i][1];
        *state = through_burst < through_base;
        prev_burst = *state;
    }
    states
}

fn states_to_intervals(states: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in states.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, states.len() - 1));
    }
    out
}

/// Maximal burst intervals (inclusive day-index ranges) for one keyword
/// series. All-zero counts yield no bursts.
pub fn kleinberg_bursts<F: Real>(
    series: &KeywordSeries,
    cfg: &BurstConfig<F>,
) -> Vec<(usize, usize)> {
    states_to_intervals(&optimal_states(series, cfg))
}

/// Exhaustive reference: enumerate every state sequence (lexicographically,
/// base state first) and keep the strictly cheapest. Only for short series.
pub fn brute_force_bursts<F: Real>(
    series: &KeywordSeries,
    cfg: &BurstConfig<F>,
) -> Vec<(usize, usize)> {
    let n = series.len();
    assert!(n <= 16, "exhaustive reference is for short series only");
    let (p0, p1) = match rates(series, cfg) {
        Some(r) => r,
        None => return Vec::new(),
    };
    let enter = cfg.gamma * F::from_count(n).ln();
    let mut best_cost = F::infinity();
    let mut best_states = vec![false; n];
    for mask in 0..(1u32 << n) {
        // Bit order puts day 0 in the high bit, so masks enumerate state
        // sequences lexicographically; keeping strictly better costs leaves
        // the lexicographically smallest optimum in place.
        let states: Vec<bool> = (0..n).map(|i| mask & (1 << (n - 1 - i)) != 0).collect();
        let mut cost = F::zero();
        let mut prev = false;
        for (i, &b) in states.iter().enumerate() {
            let p = if b { p1 } else { p0 };
            cost = cost + day_cost(series.counts[i], series.totals[i], p);
            if b && !prev {
                cost = cost + enter;
            }
            prev = b;
        }
        if cost < best_cost {
            best_cost = cost;
            best_states = states;
        }
    }
    states_to_intervals(&best_states)
}

/// The bundled cybersecurity keyword list (the published top-TFIDF list is
/// not available, so runs accept any list file; this one backs fixtures and
/// quick starts).
pub fn bundled_keywords() -> Vec<String> {
    include_str!("../data/keywords_cyber.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Daily keyword series from corpus slots: `counts` are documents whose
/// normalized text contains the keyword as a token, `totals` the day's
/// document count. The day axis is the ascending slot days.
pub fn series_from_slots(
    slots: &[crate::corpus::TimeSlot],
    keywords: &[String],
) -> (Vec<NaiveDate>, Vec<KeywordSeries>) {
    use std::collections::BTreeSet;
    let days: Vec<NaiveDate> = slots.iter().map(|s| s.day).collect();
    let totals: Vec<u64> = slots.iter().map(|s| s.documents.len() as u64).collect();
    let per_day_tokens: Vec<Vec<BTreeSet<&str>>> = slots
        .iter()
        .map(|slot| {
            slot.documents
                .iter()
                .map(|d| d.norm_text.split_whitespace().collect())
                .collect()
        })
        .collect();
    let series = keywords
        .iter()
        .map(|kw| {
            let needle = kw.to_lowercase();
            let counts: Vec<u64> = per_day_tokens
                .iter()
                .map(|docs| {
                    docs.iter()
                        .filter(|tokens| tokens.contains(needle.as_str()))
                        .count() as u64
                })
                .collect();
            KeywordSeries::new(kw.clone(), counts, totals.clone())
                .expect("containment counts cannot exceed document totals")
        })
        .collect();
    (days, series)
}

#[derive(Debug, Error)]
pub enum CountsCsvError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error("day {day}: conflicting totals ({a} vs {b})")]
    TotalConflict { day: NaiveDate, a: u64, b: u64 },
}

/// Pre-aggregated counts from a CSV with columns `day, keyword, count,
/// total`. Missing (day, keyword) combinations count zero; totals must
/// agree across the rows of one day.
pub fn series_from_csv<R: std::io::Read>(
    reader: R,
) -> Result<(Vec<NaiveDate>, Vec<KeywordSeries>), CountsCsvError> {
    use std::collections::BTreeMap;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, CountsCsvError> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(CountsCsvError::MissingColumn(name))
    };
    let (c_day, c_kw, c_count, c_total) = (col("day")?, col("keyword")?, col("count")?, col("total")?);

    let mut day_totals: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    let mut cells: BTreeMap<(String, NaiveDate), u64> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let get = |c: usize| record.get(c).unwrap_or("");
        let day: NaiveDate = get(c_day).parse().map_err(|_| CountsCsvError::BadRow {
            line,
            reason: format!("unparseable day {:?}", get(c_day)),
        })?;
        let count: u64 = get(c_count).parse().map_err(|_| CountsCsvError::BadRow {
            line,
            reason: format!("unparseable count {:?}", get(c_count)),
        })?;
        let total: u64 = get(c_total).parse().map_err(|_| CountsCsvError::BadRow {
            line,
            reason: format!("unparseable total {:?}", get(c_total)),
        })?;
        if count > total {
            return Err(CountsCsvError::BadRow {
                line,
                reason: format!("count {count} exceeds total {total}"),
            });
        }
        match day_totals.get(&day) {
            Some(&existing) if existing != total => {
                return Err(CountsCsvError::TotalConflict {
                    day,
                    a: existing,
                    b: total,
                });
            }
            _ => {
                day_totals.insert(day, total);
            }
        }
        cells.insert((get(c_kw).to_lowercase(), day), count);
    }

    let days: Vec<NaiveDate> = day_totals.keys().copied().collect();
    let totals: Vec<u64> = day_totals.values().copied().collect();
    let keywords: std::collections::BTreeSet<String> =
        cells.keys().map(|(kw, _)| kw.clone()).collect();
    let series = keywords
        .into_iter()
        .map(|kw| {
            let counts: Vec<u64> = days
                .iter()
                .map(|d| cells.get(&(kw.clone(), *d)).copied().unwrap_or(0))
                .collect();
            KeywordSeries::new(kw, counts, totals.clone())
                .expect("validated rows keep counts within totals")
        })
        .collect();
    Ok((days, series))
}

/// One day on which enough keywords burst simultaneously.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineEvent {
    pub date: NaiveDate,
    /// Bursting keywords that day, sorted.
    pub keywords: Vec<String>,
}

/// Collect per-day bursting keyword sets over aligned series and emit an
/// event for each day whose set reaches the threshold. Burst detection per
/// keyword is independent and runs in parallel.
pub fn baseline_events<F: Real>(
    days: &[NaiveDate],
    series: &[KeywordSeries],
    cfg: &BurstConfig<F>,
) -> Vec<BaselineEvent> {
    for s in series {
        assert_eq!(
            s.len(),
            days.len(),
            "series {} is not aligned with the day axis",
            s.keyword
        );
    }
    let all_states: Vec<Vec<bool>> = series
        .par_iter()
        .map(|s| optimal_states(s, cfg))
        .collect();
    let mut out = Vec::new();
    for (day_idx, &date) in days.iter().enumerate() {
        let mut keywords: Vec<String> = series
            .iter()
            .zip(&all_states)
            .filter(|(_, states)| states[day_idx])
            .map(|(s, _)| s.keyword.clone())
            .collect();
        let hit = if cfg.strict_threshold {
            keywords.len() > cfg.tb
        } else {
            keywords.len() >= cfg.tb
        };
        if hit {
            keywords.sort_unstable();
            out.push(BaselineEvent { date, keywords });
        }
    }
    out
}

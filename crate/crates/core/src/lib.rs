//! Unsupervised event detection over time-sliced short-text corpora.
//!
//! The engine discovers cyber-attack events (data breaches, DDoS attacks,
//! account hijackings) from a stream of parsed social-media posts. Starting
//! from a small fixed set of seed dependency-tree queries, it iteratively
//! expands the query set against each daily slice using a convolution tree
//! kernel and KL-divergence term ranking, then clusters the expansions into
//! typed event records. A Kleinberg burst-detection baseline and a
//! ground-truth evaluation harness ship alongside for comparison.
//!
//! Module map:
//!
//! - [`corpus`] — ingestion (JSON Lines texts + CoNLL-U parses), text
//!   normalization, daily time slots.
//! - [`embeddings`] — word-vector table, cosine similarity, the semantic
//!   node-equality operator, query vectors.
//! - [`depkernel`] — the convolution dependency-tree kernel plus a
//!   brute-force path-enumeration oracle.
//! - [`dqe`] — dynamic typed query expansion (target domains, candidate
//!   subtrees, KL ranking, convergence loop).
//! - [`events`] — maximal-query filtering, affinity-propagation clustering,
//!   type assignment, event emission and cross-day deduplication.
//! - [`baseline`] — Kleinberg two-state burst detection over keyword series.
//! - [`eval`] — matching detected events against gold-standard records and
//!   precision/recall/F scoring.
//! - [`store`] / [`config`] — on-disk pipeline artifacts and run configuration.
//!
//! The numeric core (kernels, similarities, clustering, burst costs) is
//! generic over [`num::Real`]; the pipeline instantiates it at [`Scalar`].

pub mod baseline;
pub mod config;
pub mod corpus;
pub mod depkernel;
pub mod dqe;
pub mod embeddings;
pub mod eval;
pub mod events;
pub mod num;
pub mod stopwords;
pub mod store;
pub mod testkit;

use serde::{Deserialize, Serialize};

pub use num::Real;

/// Scalar type the pipeline runs at.
pub type Scalar = f64;

/// Embedding table instantiated at the pipeline scalar.
pub type EmbeddingTable = embeddings::Table<Scalar>;

/// Kernel configuration instantiated at the pipeline scalar.
pub type KernelConfig = depkernel::KernelConfig<Scalar>;

/// Burst-detection configuration is instantiated at the pipeline scalar in
/// [`baseline`].

/// The three attack categories the engine assigns to events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventCategory {
    DataBreach,
    Ddos,
    AccountHijacking,
}

impl EventCategory {
    /// All categories in their fixed tie-break order.
    pub const ALL: [EventCategory; 3] = [
        EventCategory::DataBreach,
        EventCategory::Ddos,
        EventCategory::AccountHijacking,
    ];

    /// Stable identifier used in file formats and CLI flags.
    pub fn as_str(&self) -> &'static str {
        match self {
            EventCategory::DataBreach => "dataBreach",
            EventCategory::Ddos => "ddos",
            EventCategory::AccountHijacking => "accountHijacking",
        }
    }

    /// Parse a category name, tolerating case and common separators
    /// (`data breach`, `data-breach`, `DATABREACH` all map to `DataBreach`).
    pub fn parse_lenient(s: &str) -> Option<EventCategory> {
        let folded: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match folded.as_str() {
            "databreach" => Some(EventCategory::DataBreach),
            "ddos" | "ddosattack" | "ddosattacks" => Some(EventCategory::Ddos),
            "accounthijacking" | "accounthijack" => Some(EventCategory::AccountHijacking),
            _ => None,
        }
    }
}

impl std::fmt::Display for EventCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

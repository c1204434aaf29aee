//! Run configuration: a TOML document mapping onto the per-module configs.
//!
//! Every field has a default, so an empty file (or no file) is a valid
//! configuration; CLI flags override paths afterwards.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::BurstConfig;
use crate::depkernel::KernelConfig;
use crate::dqe::{DqeConfig, ProbModel};
use crate::embeddings::{SemEqConfig, SemEqFallback};
use crate::eval::EvalConfig;
use crate::events::{ApConfig, EventsConfig, Preference};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Input and output locations. All optional here; commands validate the
/// ones they need.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsSection {
    pub corpus: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub gsr: Option<PathBuf>,
    pub manual_review: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Which corpus the KL background distribution comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundScope {
    /// The current day's slot.
    Slot,
    /// All ingested slots pooled.
    Global,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DqeSection {
    pub top_k: usize,
    pub max_iterations: usize,
    pub tau_match: Scalar,
    pub smoothing: Scalar,
    pub max_subtree_nodes: usize,
    pub prob_model: ProbModel,
    pub background: BackgroundScope,
}

impl Default for DqeSection {
    fn default() -> Self {
        let d = DqeConfig::default();
        DqeSection {
            top_k: d.top_k,
            max_iterations: d.max_iterations,
            tau_match: d.tau_match,
            smoothing: d.smoothing,
            max_subtree_nodes: d.max_subtree_nodes,
            prob_model: d.prob_model,
            background: BackgroundScope::Slot,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSection {
    pub lambda: Scalar,
    pub normalize: bool,
    pub all_pairs_literal: bool,
}

impl Default for KernelSection {
    fn default() -> Self {
        let k: KernelConfig<Scalar> = KernelConfig::default();
        KernelSection {
            lambda: k.lambda,
            normalize: k.normalize,
            all_pairs_literal: k.all_pairs_literal,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SemEqSection {
    pub threshold: Scalar,
    pub fallback: SemEqFallback,
}

impl Default for SemEqSection {
    fn default() -> Self {
        let s: SemEqConfig<Scalar> = SemEqConfig::default();
        SemEqSection {
            threshold: s.threshold,
            fallback: s.fallback,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ApSection {
    pub damping: Scalar,
    pub max_iter: usize,
    pub convergence_iter: usize,
    /// Fixed preference; omitted = median pairwise similarity.
    pub preference: Option<Scalar>,
}

impl Default for ApSection {
    fn default() -> Self {
        let a: ApConfig<Scalar> = ApConfig::default();
        ApSection {
            damping: a.damping,
            max_iter: a.max_iter,
            convergence_iter: a.convergence_iter,
            preference: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EventsSection {
    pub duplicate_window_days: i64,
    pub duplicate_jaccard: Scalar,
    pub rejection_quantile: Scalar,
    pub typing_floor: Scalar,
}

impl Default for EventsSection {
    fn default() -> Self {
        let e = EventsConfig::default();
        EventsSection {
            duplicate_window_days: e.duplicate_window_days,
            duplicate_jaccard: e.duplicate_jaccard,
            rejection_quantile: e.rejection_quantile,
            typing_floor: e.typing_floor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BurstSection {
    pub s: Scalar,
    pub gamma: Scalar,
    pub tb: usize,
    pub strict_threshold: bool,
}

impl Default for BurstSection {
    fn default() -> Self {
        let b: BurstConfig<Scalar> = BurstConfig::default();
        BurstSection {
            s: b.s,
            gamma: b.gamma,
            tb: b.tb,
            strict_threshold: b.strict_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub date_window_days: i64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            date_window_days: EvalConfig::default().date_window_days,
        }
    }
}

/// Whole-pipeline configuration.
///
/// The pipeline has no stochastic steps; given the same inputs and the same
/// configuration, every artifact is byte-identical across runs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: PathsSection,
    pub dqe: DqeSection,
    pub kernel: KernelSection,
    pub semeq: SemEqSection,
    pub ap: ApSection,
    pub events: EventsSection,
    pub burst: BurstSection,
    pub eval: EvalSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn sem_eq_config(&self) -> SemEqConfig<Scalar> {
        SemEqConfig {
            threshold: self.semeq.threshold,
            fallback: self.semeq.fallback,
        }
    }

    pub fn kernel_config(&self) -> KernelConfig<Scalar> {
        KernelConfig {
            lambda: self.kernel.lambda,
            sem_eq: self.sem_eq_config(),
            normalize: self.kernel.normalize,
            all_pairs_literal: self.kernel.all_pairs_literal,
        }
    }

    pub fn dqe_config(&self) -> DqeConfig {
        DqeConfig {
            top_k: self.dqe.top_k,
            max_iterations: self.dqe.max_iterations,
            tau_match: self.dqe.tau_match,
            kernel: self.kernel_config(),
            smoothing: self.dqe.smoothing,
            max_subtree_nodes: self.dqe.max_subtree_nodes,
            prob_model: self.dqe.prob_model,
        }
    }

    pub fn ap_config(&self) -> ApConfig<Scalar> {
        ApConfig {
            damping: self.ap.damping,
            max_iter: self.ap.max_iter,
            convergence_iter: self.ap.convergence_iter,
            preference: match self.ap.preference {
                Some(p) => Preference::Fixed(p),
                None => Preference::MedianSimilarity,
            },
        }
    }

    pub fn events_config(&self) -> EventsConfig {
        EventsConfig {
            ap: self.ap_config(),
            duplicate_window_days: self.events.duplicate_window_days,
            duplicate_jaccard: self.events.duplicate_jaccard,
            rejection_quantile: self.events.rejection_quantile,
            typing_floor: self.events.typing_floor,
        }
    }

    pub fn burst_config(&self) -> BurstConfig<Scalar> {
        BurstConfig {
            s: self.burst.s,
            gamma: self.burst.gamma,
            tb: self.burst.tb,
            strict_threshold: self.burst.strict_threshold,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            date_window_days: self.eval.date_window_days,
        }
    }

    /// Summary map for run reports.
    pub fn summary(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        out.insert("dqe.top_k".into(), self.dqe.top_k.to_string());
        out.insert("dqe.tau_match".into(), self.dqe.tau_match.to_string());
        out.insert("kernel.lambda".into(), self.kernel.lambda.to_string());
        out.insert("semeq.threshold".into(), self.semeq.threshold.to_string());
        out.insert("burst.tb".into(), self.burst.tb.to_string());
        out
    }
}

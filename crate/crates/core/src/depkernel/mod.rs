//! Convolution dependency-tree kernel.
//!
//! Similarity between two trees is computed from counts of shared
//! label-matched paths. For nodes `u`, `v`, `kappa` counts the common
//! downward paths originating at the pair, and `common_paths_peak` counts
//! the common paths whose topmost node is the pair (straight descents plus
//! ordered through-paths over two distinct child branches, decayed by
//! `lambda`). The kernel sums `1 + H(u, v)` over semantically matching node
//! pairs; non-matching pairs contribute nothing (the literal all-pairs
//! variant, where they contribute 1 each, is available behind
//! [`KernelConfig::all_pairs_literal`]).
//!
//! Node matching is the semantic operator from [`crate::embeddings`]; every
//! function here is pure, so evaluating one query against many documents in
//! parallel needs no shared mutable state.

pub mod oracle;

use crate::corpus::DepTree;
use crate::embeddings::{sem_eq, SemEqConfig, Table};
use crate::num::Real;

/// Kernel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig<F> {
    /// Path decay in (0, 1]; through-path contributions scale with
    /// `sqrt(lambda)` and `lambda`.
    pub lambda: F,
    pub sem_eq: SemEqConfig<F>,
    /// Compute the normalized score `raw / sqrt(K(q,q) * K(d,d))`.
    pub normalize: bool,
    /// Literal reading of the kernel sum in which non-matching node pairs
    /// contribute 1 each. Kept for comparison runs; inflates scores with
    /// tree size.
    pub all_pairs_literal: bool,
}

impl<F: Real> Default for KernelConfig<F> {
    fn default() -> Self {
        KernelConfig {
            lambda: F::one(),
            sem_eq: SemEqConfig::default(),
            normalize: true,
            all_pairs_literal: false,
        }
    }
}

impl<F: Real> KernelConfig<F> {
    /// Exact-lemma matching, no normalization changes; convenient for tests
    /// and oracles.
    pub fn exact() -> Self {
        KernelConfig {
            lambda: F::one(),
            sem_eq: SemEqConfig::exact(),
            normalize: true,
            all_pairs_literal: false,
        }
    }
}

/// Outcome of one kernel evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelResult<F> {
    /// Unnormalized kernel value, `>= 0`.
    pub raw: F,
    /// `raw / sqrt(K(q,q) * K(d,d))`; `None` when normalization was not
    /// requested or either self-kernel is zero.
    pub normalized: Option<F>,
    /// 1-based token index of the document node with the highest total
    /// peaked-path mass against the query (ties break toward the smallest
    /// token index); `None` when no pair has positive mass.
    pub anchor: Option<usize>,
}

impl<F: Real> KernelResult<F> {
    /// Score used for match decisions: the normalized value when available,
    /// zero when normalization is undefined, raw otherwise.
    pub fn match_score(&self, cfg: &KernelConfig<F>) -> F {
        if cfg.normalize {
            self.normalized.unwrap_or_else(F::zero)
        } else {
            self.raw
        }
    }
}

/// Pairwise evaluation state for one (query, document) pair.
struct PairEval<'a, F: Real> {
    q: &'a DepTree,
    d: &'a DepTree,
    lambda: F,
    /// `matches[u * d.len() + v]`
    matches: Vec<bool>,
    kappa_memo: Vec<Option<F>>,
}

impl<'a, F: Real> PairEval<'a, F> {
    fn new(q: &'a DepTree, d: &'a DepTree, cfg: &KernelConfig<F>, table: &Table<F>) -> Self {
        let (nq, nd) = (q.len(), d.len());
        let mut matches = vec![false; nq * nd];
        for u in 0..nq {
            for v in 0..nd {
                matches[u * nd + v] = sem_eq(q.node(u), d.node(v), &cfg.sem_eq, table);
            }
        }
        PairEval {
            q,
            d,
            lambda: cfg.lambda,
            matches,
            kappa_memo: vec![None; nq * nd],
        }
    }

    fn matched(&self, u: usize, v: usize) -> bool {
        self.matches[u * self.d.len() + v]
    }

    /// Common downward paths originating at `(u, v)`.
    fn kappa(&mut self, u: usize, v: usize) -> F {
        let slot = u * self.d.len() + v;
        if let Some(x) = self.kappa_memo[slot] {
            return x;
        }
        let mut sum = F::zero();
        let d_children: Vec<usize> = self.d.children(v).to_vec();
        for &mu in self.q.children(u) {
            for &eta in &d_children {
                if self.matched(mu, eta) {
                    sum = sum + F::one() + self.kappa(mu, eta);
                }
            }
        }
        self.kappa_memo[slot] = Some(sum);
        sum
    }

    /// Common paths peaked at `(u, v)`: `kappa` plus ordered through-path
    /// contributions `sqrt(l) + l*x + l*y + l*x*y` over matching pairs of
    /// distinct child branches.
    fn peak(&mut self, u: usize, v: usize) -> F {
        let mut r = self.kappa(u, v);
        let l = self.lambda;
        let sqrt_l = l.sqrt();
        let qc: Vec<usize> = self.q.children(u).to_vec();
        let dc: Vec<usize> = self.d.children(v).to_vec();
        for (i, &ci) in qc.iter().enumerate() {
            for (j, &cj) in qc.iter().enumerate() {
                if i == j {
                    continue;
                }
                for (m, &cm) in dc.iter().enumerate() {
                    for (n, &cn) in dc.iter().enumerate() {
                        if m == n {
                            continue;
                        }
                        if self.matched(ci, cm) && self.matched(cj, cn) {
                            let x = self.kappa(ci, cm);
                            let y = self.kappa(cj, cn);
                            r = r + sqrt_l + l * x + l * y + l * x * y;
                        }
                    }
                }
            }
        }
        r
    }
}

/// Raw kernel value plus per-document-node peaked-path totals.
pub(crate) struct Evaluation<F> {
    pub raw: F,
    /// `anchor_mass[v]` = sum over query nodes of the peaked-path count at
    /// `(u, v)`; zero for nodes with no semantic match.
    pub anchor_mass: Vec<F>,
}

pub(crate) fn evaluate<F: Real>(
    q: &DepTree,
    d: &DepTree,
    cfg: &KernelConfig<F>,
    table: &Table<F>,
) -> Evaluation<F> {
    let mut pair = PairEval::new(q, d, cfg, table);
    let mut raw = F::zero();
    let mut anchor_mass = vec![F::zero(); d.len()];
    for u in 0..q.len() {
        for v in 0..d.len() {
            if pair.matched(u, v) {
                let h = pair.peak(u, v);
                raw = raw + F::one() + h;
                anchor_mass[v] = anchor_mass[v] + h;
            } else if cfg.all_pairs_literal {
                raw = raw + F::one();
            }
        }
    }
    Evaluation { raw, anchor_mass }
}

/// Number of common downward paths originating at query node `u` and
/// document node `v` (0-based positions). Zero for leaf pairs.
pub fn kappa<F: Real>(
    q: &DepTree,
    u: usize,
    d: &DepTree,
    v: usize,
    cfg: &KernelConfig<F>,
    table: &Table<F>,
) -> F {
    PairEval::new(q, d, cfg, table).kappa(u, v)
}

/// Number of common paths peaked at query node `u` and document node `v`
/// (0-based positions), with through-paths decayed by `lambda`.
pub fn common_paths_peak<F: Real>(
    q: &DepTree,
    u: usize,
    d: &DepTree,
    v: usize,
    cfg: &KernelConfig<F>,
    table: &Table<F>,
) -> F {
    PairEval::new(q, d, cfg, table).peak(u, v)
}

/// Self-similarity `K(t, t)` under the same configuration.
pub fn self_kernel<F: Real>(t: &DepTree, cfg: &KernelConfig<F>, table: &Table<F>) -> F {
    evaluate(t, t, cfg, table).raw
}

/// Full kernel between a query tree and a document tree.
pub fn kernel<F: Real>(
    q: &DepTree,
    d: &DepTree,
    cfg: &KernelConfig<F>,
    table: &Table<F>,
) -> KernelResult<F> {
    let self_q = if cfg.normalize {
        self_kernel(q, cfg, table)
    } else {
        F::zero()
    };
    let self_d = if cfg.normalize {
        self_kernel(d, cfg, table)
    } else {
        F::zero()
    };
    kernel_with_selfk(q, d, cfg, table, self_q, self_d)
}

/// Kernel evaluation with precomputed self-kernels, for callers matching one
/// query against many documents.
pub fn kernel_with_selfk<F: Real>(
    q: &DepTree,
    d: &DepTree,
    cfg: &KernelConfig<F>,
    table: &Table<F>,
    self_q: F,
    self_d: F,
) -> KernelResult<F> {
    let eval = evaluate(q, d, cfg, table);
    let normalized = if cfg.normalize && self_q > F::zero() && self_d > F::zero() {
        Some(eval.raw / (self_q * self_d).sqrt())
    } else {
        None
    };
    let anchor = best_anchor(&eval.anchor_mass, d);
    KernelResult {
        raw: eval.raw,
        normalized,
        anchor,
    }
}

/// Document node with the highest peaked-path mass; ties break toward the
/// smallest token index. `None` when all masses are zero.
fn best_anchor<F: Real>(anchor_mass: &[F], d: &DepTree) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (v, &mass) in anchor_mass.iter().enumerate() {
        if mass <= F::zero() {
            continue;
        }
        match best {
            Some((_, best_mass)) if mass <= best_mass => {}
            _ => best = Some((v, mass)),
        }
    }
    best.map(|(v, _)| d.node(v).index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{leaf_pair, tree};
    use approx::assert_relative_eq;

    fn exact() -> (KernelConfig<f64>, Table<f64>) {
        (KernelConfig::exact(), Table::empty())
    }

    #[test]
    fn matching_leaves_have_no_paths() {
        let (cfg, table) = exact();
        let (q, d) = leaf_pair("a", "a");
        assert_eq!(kappa(&q, 0, &d, 0, &cfg, &table), 0.0);
        assert_eq!(common_paths_peak(&q, 0, &d, 0, &cfg, &table), 0.0);
    }

    #[test]
    fn fork_tree_counts() {
        // a -> {b, c}
        let t = tree(&[("a", 0), ("b", 1), ("c", 1)]);
        let (cfg, table) = exact();
        assert_eq!(kappa(&t, 0, &t, 0, &cfg, &table), 2.0);
        assert_eq!(common_paths_peak(&t, 0, &t, 0, &cfg, &table), 4.0);
        let quarter = KernelConfig {
            lambda: 0.25,
            ..KernelConfig::exact()
        };
        assert_relative_eq!(common_paths_peak(&t, 0, &t, 0, &quarter, &table), 3.0);
    }

    #[test]
    fn chain_tree_counts() {
        // a -> b -> c
        let t = tree(&[("a", 0), ("b", 1), ("c", 2)]);
        let (cfg, table) = exact();
        assert_eq!(kappa(&t, 0, &t, 0, &cfg, &table), 2.0);
    }

    #[test]
    fn disjoint_trees_score_zero() {
        let (cfg, table) = exact();
        let q = tree(&[("a", 0), ("b", 1)]);
        let d = tree(&[("x", 0), ("y", 1)]);
        let res = kernel(&q, &d, &cfg, &table);
        assert_eq!(res.raw, 0.0);
        assert_eq!(res.normalized, Some(0.0));
        assert_eq!(res.anchor, None);
    }

    #[test]
    fn self_similarity_is_one() {
        let (cfg, table) = exact();
        let t = tree(&[("a", 0), ("b", 1), ("c", 1)]);
        let res = kernel(&t, &t, &cfg, &table);
        assert_relative_eq!(res.normalized.unwrap(), 1.0, epsilon = 1e-9);
        // raw = (1+4) + 1 + 1
        assert_eq!(res.raw, 7.0);
    }

    #[test]
    fn literal_all_pairs_adds_one_per_nonmatching_pair() {
        let table = Table::<f64>::empty();
        let cfg = KernelConfig {
            all_pairs_literal: true,
            ..KernelConfig::exact()
        };
        let q = tree(&[("a", 0), ("b", 1)]);
        let d = tree(&[("x", 0), ("y", 1)]);
        assert_eq!(kernel(&q, &d, &cfg, &table).raw, 4.0);
    }

    #[test]
    fn anchor_prefers_smallest_token_index_on_ties() {
        let (cfg, table) = exact();
        let q = tree(&[("a", 0), ("b", 1)]);
        // Two identical a->b branches under an unmatched root.
        let d = tree(&[("r", 0), ("a", 1), ("b", 2), ("a", 1), ("b", 4)]);
        let res = kernel(&q, &d, &cfg, &table);
        assert_eq!(res.anchor, Some(2));
    }

    #[test]
    fn monotone_in_lambda() {
        let table = Table::<f64>::empty();
        let t = tree(&[("a", 0), ("b", 1), ("c", 1), ("b", 2)]);
        let mut last = 0.0;
        for lambda in [0.1, 0.4, 0.7, 1.0] {
            let cfg = KernelConfig {
                lambda,
                ..KernelConfig::exact()
            };
            let raw = kernel(&t, &t, &cfg, &table).raw;
            assert!(raw >= last);
            last = raw;
        }
    }

    #[test]
    fn kernel_is_generic_over_f32() {
        let cfg: KernelConfig<f32> = KernelConfig::exact();
        let table: Table<f32> = Table::empty();
        let t = tree(&[("a", 0), ("b", 1), ("c", 1)]);
        let res = kernel(&t, &t, &cfg, &table);
        assert_eq!(res.raw, 7.0f32);
    }
}

//! Brute-force verification oracle for the tree kernel.
//!
//! Enumerates paths explicitly instead of recursing, so it shares no code
//! with the production implementation beyond the node matcher. At
//! `lambda = 1` the recursive kernel must agree with these counts exactly:
//!
//! - `kappa[u][v]` — matched pairs of equal-length downward paths starting
//!   at `u` in the query and `v` in the document.
//! - `peaks[u][v]` — matched pairs of paths whose topmost node is the pair:
//!   the downward pairs above plus `∧`-shaped paths over an ordered pair of
//!   distinct child branches (both orientations counted separately, matching
//!   the ordered iteration of the production algorithm).
//!
//! Restricted to small trees; callers exceeding the bound get an error
//! instead of a long wait.

use thiserror::Error;

use crate::corpus::DepTree;
use crate::embeddings::{sem_eq, Table};
use crate::num::Real;

use super::KernelConfig;

/// Largest tree the oracle accepts.
pub const MAX_ORACLE_NODES: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle refuses trees over {MAX_ORACLE_NODES} nodes (got {0})")]
    TooLarge(usize),
    #[error("oracle is defined at lambda = 1 only")]
    LambdaNotOne,
}

/// Exhaustive path counts for one tree pair.
#[derive(Debug, Clone)]
pub struct OracleTables {
    /// Common downward paths per origin pair, `[u][v]`.
    pub kappa: Vec<Vec<u64>>,
    /// Common peaked paths per peak pair, `[u][v]`.
    pub peaks: Vec<Vec<u64>>,
    /// Kernel value: sum of `1 + peaks[u][v]` over matching pairs.
    pub kernel_raw: u64,
}

/// All downward paths starting at `start` (the single-node path included),
/// as 0-based position sequences.
fn stubs(tree: &DepTree, start: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![start]];
    let mut i = 0;
    while i < out.len() {
        let last = *out[i].last().expect("paths are non-empty");
        for &child in tree.children(last) {
            let mut ext = out[i].clone();
            ext.push(child);
            out.push(ext);
        }
        i += 1;
    }
    out
}

/// A path peaked at a node: either a pure descent or a `∧` over two ordered
/// distinct child branches. Arms are stored top-down from the child.
#[derive(Debug)]
enum PeakedPath {
    Descent(Vec<usize>),
    Wedge { left: Vec<usize>, right: Vec<usize> },
}

fn peaked_paths(tree: &DepTree, peak: usize) -> Vec<PeakedPath> {
    let mut out = Vec::new();
    for p in stubs(tree, peak) {
        if p.len() >= 2 {
            out.push(PeakedPath::Descent(p[1..].to_vec()));
        }
    }
    let children = tree.children(peak);
    for (i, &ci) in children.iter().enumerate() {
        for (j, &cj) in children.iter().enumerate() {
            if i == j {
                continue;
            }
            for left in stubs(tree, ci) {
                for right in stubs(tree, cj) {
                    out.push(PeakedPath::Wedge {
                        left: left.clone(),
                        right,
                    });
                }
            }
        }
    }
    out
}

/// Exhaustively count common downward and peaked paths for every node pair.
pub fn brute_force_common_paths<F: Real>(
    q: &DepTree,
    d: &DepTree,
    cfg: &KernelConfig<F>,
    table: &Table<F>,
) -> Result<OracleTables, OracleError> {
    if q.len() > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(q.len()));
    }
    if d.len() > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(d.len()));
    }
    if cfg.lambda != F::one() {
        return Err(OracleError::LambdaNotOne);
    }

    let matched = |u: usize, v: usize| sem_eq(q.node(u), d.node(v), &cfg.sem_eq, table);
    let arms_match = |qa: &[usize], da: &[usize]| {
        qa.len() == da.len() && qa.iter().zip(da).all(|(&a, &b)| matched(a, b))
    };

    let (nq, nd) = (q.len(), d.len());
    let mut kappa = vec![vec![0u64; nd]; nq];
    let mut peaks = vec![vec![0u64; nd]; nq];
    let mut kernel_raw = 0u64;

    for u in 0..nq {
        let q_stubs = stubs(q, u);
        let q_peaked = peaked_paths(q, u);
        for v in 0..nd {
            if !matched(u, v) {
                continue;
            }
            let d_stubs = stubs(d, v);
            for qp in &q_stubs {
                if qp.len() < 2 {
                    continue;
                }
                for dp in &d_stubs {
                    if dp.len() == qp.len() && arms_match(&qp[1..], &dp[1..]) {
                        kappa[u][v] += 1;
                    }
                }
            }
            let d_peaked = peaked_paths(d, v);
            for qp in &q_peaked {
                for dp in &d_peaked {
                    let hit = match (qp, dp) {
                        (PeakedPath::Descent(a), PeakedPath::Descent(b)) => arms_match(a, b),
                        (
                            PeakedPath::Wedge { left: ql, right: qr },
                            PeakedPath::Wedge { left: dl, right: dr },
                        ) => arms_match(ql, dl) && arms_match(qr, dr),
                        _ => false,
                    };
                    if hit {
                        peaks[u][v] += 1;
                    }
                }
            }
            kernel_raw += 1 + peaks[u][v];
        }
    }

    Ok(OracleTables {
        kappa,
        peaks,
        kernel_raw,
    })
}

//! Affinity propagation over a precomputed similarity matrix.
//!
//! Standard responsibility/availability message passing with damping.
//! Exemplars are the points whose self responsibility plus availability is
//! positive after convergence; every other point is assigned to its most
//! similar exemplar. Deterministic: fixed iteration order, no randomness.

use crate::num::Real;

/// Self-similarity (preference) assigned to every point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preference<F> {
    /// Median of the off-diagonal similarities.
    MedianSimilarity,
    Fixed(F),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApConfig<F> {
    /// Damping factor in [0.5, 1).
    pub damping: F,
    pub max_iter: usize,
    /// Consecutive iterations with a stable exemplar set required to stop.
    pub convergence_iter: usize,
    pub preference: Preference<F>,
}

impl<F: Real> Default for ApConfig<F> {
    fn default() -> Self {
        ApConfig {
            damping: F::from_f64c(0.9),
            max_iter: 200,
            convergence_iter: 15,
            preference: Preference::MedianSimilarity,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApOutcome {
    /// Indices of the exemplar points, ascending.
    pub exemplars: Vec<usize>,
    /// `assignments[i]` = exemplar index that point `i` belongs to.
    pub assignments: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

fn median<F: Real>(values: &mut Vec<F>) -> F {
    values.sort_by(|a, b| a.partial_cmp(b).expect("similarities are finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / F::from_f64c(2.0)
    }
}

/// Hash-derived value in [-0.5, 0.5); used to break exact message-passing
/// symmetries the way reference implementations do with random noise, but
/// reproducibly.
fn jitter_unit(cell: u64) -> f64 {
    let mut z = cell.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Cluster a square similarity matrix.
///
/// An empty matrix yields an empty outcome; a single point is its own
/// exemplar. If message passing ends with no positive exemplar evidence
/// (degenerate inputs or non-convergence), the most central point by total
/// similarity is used as a single exemplar and `converged` is false.
pub fn affinity_propagation<F: Real>(sim: &[Vec<F>], cfg: &ApConfig<F>) -> ApOutcome {
    let n = sim.len();
    assert!(
        cfg.damping >= F::from_f64c(0.5) && cfg.damping < F::one(),
        "damping must be in [0.5, 1)"
    );
    if n == 0 {
        return ApOutcome {
            exemplars: vec![],
            assignments: vec![],
            converged: true,
            iterations: 0,
        };
    }
    if n == 1 {
        return ApOutcome {
            exemplars: vec![0],
            assignments: vec![0],
            converged: true,
            iterations: 0,
        };
    }

    let preference = match cfg.preference {
        Preference::Fixed(p) => p,
        Preference::MedianSimilarity => {
            let mut off: Vec<F> = Vec::with_capacity(n * (n - 1));
            for (i, row) in sim.iter().enumerate() {
                for (j, &s) in row.iter().enumerate() {
                    if i != j {
                        off.push(s);
                    }
                }
            }
            median(&mut off)
        }
    };

    let mut s = vec![vec![F::zero(); n]; n];
    let mut scale = F::one();
    for row in sim {
        for &x in row {
            scale = scale.max(x.abs());
        }
    }
    let tiny = F::from_f64c(1e-9) * scale;
    for i in 0..n {
        for j in 0..n {
            let base = if i == j { preference } else { sim[i][j] };
            // Symmetric inputs stall on perfectly tied exemplar candidates;
            // a reproducible sub-1e-9 jitter resolves them without moving
            // any real decision.
            s[i][j] = base + tiny * F::from_f64c(jitter_unit((i * n + j) as u64));
        }
    }

    let damp = cfg.damping;
    let fresh = F::one() - damp;
    let mut r = vec![vec![F::zero(); n]; n];
    let mut a = vec![vec![F::zero(); n]; n];
    let mut stable_for = 0usize;
    let mut last_exemplars: Vec<usize> = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        iterations += 1;

        // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k')).
        for i in 0..n {
            let mut max1 = F::neg_infinity();
            let mut max2 = F::neg_infinity();
            let mut arg1 = 0usize;
            for k in 0..n {
                let v = a[i][k] + s[i][k];
                if v > max1 {
                    max2 = max1;
                    max1 = v;
                    arg1 = k;
                } else if v > max2 {
                    max2 = v;
                }
            }
            for k in 0..n {
                let competitor = if k == arg1 { max2 } else { max1 };
                let fresh_r = s[i][k] - competitor;
                r[i][k] = damp * r[i][k] + fresh * fresh_r;
            }
        }

        // Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)));
        // a(k,k) = sum_{i' != k} max(0, r(i',k)).
        for k in 0..n {
            let mut pos_sum = F::zero();
            for i in 0..n {
                if i != k {
                    pos_sum = pos_sum + r[i][k].max(F::zero());
                }
            }
            for i in 0..n {
                let fresh_a = if i == k {
                    pos_sum
                } else {
                    (r[k][k] + pos_sum - r[i][k].max(F::zero())).min(F::zero())
                };
                a[i][k] = damp * a[i][k] + fresh * fresh_a;
            }
        }

        let exemplars: Vec<usize> = (0..n)
            .filter(|&k| r[k][k] + a[k][k] > F::zero())
            .collect();
        if !exemplars.is_empty() && exemplars == last_exemplars {
            stable_for += 1;
            if stable_for >= cfg.convergence_iter {
                converged = true;
                break;
            }
        } else {
            stable_for = 0;
            last_exemplars = exemplars;
        }
    }

    let mut flagged: Vec<usize> = (0..n)
        .filter(|&k| r[k][k] + a[k][k] > F::zero())
        .collect();
    if flagged.is_empty() {
        // Degenerate outcome; fall back to the most central point.
        let mut best = 0usize;
        let mut best_total = F::neg_infinity();
        for k in 0..n {
            let total: F = (0..n).map(|i| s[i][k]).sum();
            if total > best_total {
                best_total = total;
                best = k;
            }
        }
        flagged = vec![best];
        converged = false;
    }

    // Medoid refinement (Frey/Dueck reference procedure): assign points to
    // the flagged exemplars, replace each exemplar by its cluster's most
    // central member, then assign again.
    let assign = |exemplars: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if exemplars.contains(&i) {
                    return i;
                }
                let mut best = exemplars[0];
                let mut best_sim = F::neg_infinity();
                for &k in exemplars {
                    if s[i][k] > best_sim {
                        best_sim = s[i][k];
                        best = k;
                    }
                }
                best
            })
            .collect()
    };
    let coarse = assign(&flagged);
    let mut exemplars: Vec<usize> = flagged
        .iter()
        .map(|&k| {
            let members: Vec<usize> = (0..n).filter(|&i| coarse[i] == k).collect();
            let mut medoid = k;
            let mut best_total = F::neg_infinity();
            for &j in &members {
                let total: F = members.iter().map(|&i| s[i][j]).sum();
                if total > best_total {
                    best_total = total;
                    medoid = j;
                }
            }
            medoid
        })
        .collect();
    exemplars.sort_unstable();
    exemplars.dedup();
    let assignments = assign(&exemplars);

    ApOutcome {
        exemplars,
        assignments,
        converged,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine_matrix(vecs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = vecs.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = crate::embeddings::cosine(&vecs[i], &vecs[j]).unwrap();
            }
        }
        m
    }

    #[test]
    fn two_well_separated_groups() {
        let vecs = vec![
            vec![1.0, 0.05, 0.0],
            vec![1.0, -0.05, 0.02],
            vec![0.98, 0.1, 0.01],
            vec![0.0, 0.03, 1.0],
            vec![0.02, -0.04, 1.0],
        ];
        let out = affinity_propagation(&cosine_matrix(&vecs), &ApConfig::default());
        assert_eq!(out.exemplars.len(), 2);
        // Membership matches the planted split {0,1,2} / {3,4}.
        assert_eq!(out.assignments[0], out.assignments[1]);
        assert_eq!(out.assignments[1], out.assignments[2]);
        assert_eq!(out.assignments[3], out.assignments[4]);
        assert_ne!(out.assignments[0], out.assignments[3]);
        assert!(out.converged);
    }

    #[test]
    fn exemplars_belong_to_their_clusters() {
        let vecs = vec![
            vec![1.0, 0.1],
            vec![1.0, -0.1],
            vec![-0.1, 1.0],
            vec![0.1, 1.0],
        ];
        let out = affinity_propagation(&cosine_matrix(&vecs), &ApConfig::default());
        for &e in &out.exemplars {
            assert_eq!(out.assignments[e], e);
        }
        for &label in &out.assignments {
            assert!(out.exemplars.contains(&label));
        }
    }

    #[test]
    fn trivial_sizes() {
        let out = affinity_propagation::<f64>(&[], &ApConfig::default());
        assert!(out.exemplars.is_empty());
        let out = affinity_propagation(&[vec![0.0]], &ApConfig::default());
        assert_eq!(out.exemplars, vec![0]);
        assert_eq!(out.assignments, vec![0]);
    }

    #[test]
    fn generic_over_f32() {
        let sim: Vec<Vec<f32>> = vec![vec![0.0, 0.9], vec![0.9, 0.0]];
        let out = affinity_propagation(&sim, &ApConfig::<f32>::default());
        assert!(!out.exemplars.is_empty());
    }

    #[test]
    fn deterministic_across_runs() {
        let vecs = vec![
            vec![1.0, 0.2, 0.1],
            vec![0.9, 0.3, 0.0],
            vec![0.1, 1.0, 0.2],
            vec![0.0, 0.9, 0.1],
            vec![0.3, 0.3, 0.9],
        ];
        let m = cosine_matrix(&vecs);
        let a = affinity_propagation(&m, &ApConfig::default());
        let b = affinity_propagation(&m, &ApConfig::default());
        assert_eq!(a.exemplars, b.exemplars);
        assert_eq!(a.assignments, b.assignments);
    }
}

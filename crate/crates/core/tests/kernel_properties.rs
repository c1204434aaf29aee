//! Randomized properties of the tree kernel against the exhaustive path
//! oracle.

use ced_core::depkernel::oracle::brute_force_common_paths;
use ced_core::depkernel::{common_paths_peak, kappa, kernel, KernelConfig};
use ced_core::embeddings::Table;
use ced_core::testkit::{random_tree, SplitMix64};

const ALPHABET: [&str; 5] = ["a", "b", "c", "d", "e"];

#[test]
fn recursive_kernel_equals_path_enumeration() {
    let cfg: KernelConfig<f64> = KernelConfig::exact();
    let table = Table::empty();
    let mut rng = SplitMix64::new(0xCED_0001);
    for case in 0..400 {
        let q = random_tree(&mut rng, 8, &ALPHABET);
        let d = random_tree(&mut rng, 8, &ALPHABET);
        let oracle = brute_force_common_paths(&q, &d, &cfg, &table).unwrap();
        for u in 0..q.len() {
            for v in 0..d.len() {
                if q.node(u).lemma != d.node(v).lemma {
                    continue;
                }
                assert_eq!(
                    kappa(&q, u, &d, v, &cfg, &table),
                    oracle.kappa[u][v] as f64,
                    "kappa mismatch case {case} at ({u},{v})"
                );
                assert_eq!(
                    common_paths_peak(&q, u, &d, v, &cfg, &table),
                    oracle.peaks[u][v] as f64,
                    "peak mismatch case {case} at ({u},{v})"
                );
            }
        }
        assert_eq!(
            kernel(&q, &d, &cfg, &table).raw,
            oracle.kernel_raw as f64,
            "kernel mismatch case {case}"
        );
    }
}

#[test]
fn kernel_is_symmetric() {
    let cfg: KernelConfig<f64> = KernelConfig::exact();
    let table = Table::empty();
    let mut rng = SplitMix64::new(0xCED_0002);
    for _ in 0..300 {
        let q = random_tree(&mut rng, 8, &ALPHABET);
        let d = random_tree(&mut rng, 8, &ALPHABET);
        assert_eq!(
            kernel(&q, &d, &cfg, &table).raw,
            kernel(&d, &q, &cfg, &table).raw
        );
    }
}

#[test]
fn normalized_self_similarity_is_one() {
    let cfg: KernelConfig<f64> = KernelConfig::exact();
    let table = Table::empty();
    let mut rng = SplitMix64::new(0xCED_0003);
    for _ in 0..200 {
        let t = random_tree(&mut rng, 8, &ALPHABET);
        let res = kernel(&t, &t, &cfg, &table);
        let n = res.normalized.expect("self kernel is positive");
        assert!((n - 1.0).abs() <= 1e-9, "normalized self = {n}");
    }
}

#[test]
fn raw_kernel_is_monotone_in_lambda() {
    let table = Table::empty();
    let mut rng = SplitMix64::new(0xCED_0004);
    for _ in 0..100 {
        let q = random_tree(&mut rng, 8, &ALPHABET);
        let d = random_tree(&mut rng, 8, &ALPHABET);
        let mut last = f64::NEG_INFINITY;
        for lambda in [0.05, 0.25, 0.5, 0.75, 1.0] {
            let cfg = KernelConfig {
                lambda,
                ..KernelConfig::exact()
            };
            let raw = kernel(&q, &d, &cfg, &table).raw;
            assert!(
                raw >= last - 1e-12,
                "lambda {lambda}: raw {raw} after {last}"
            );
            last = raw;
        }
    }
}

#[test]
fn anchor_is_stable_across_repeat_evaluations() {
    let cfg: KernelConfig<f64> = KernelConfig::exact();
    let table = Table::empty();
    let mut rng = SplitMix64::new(0xCED_0005);
    for _ in 0..100 {
        let q = random_tree(&mut rng, 6, &ALPHABET);
        let d = random_tree(&mut rng, 8, &ALPHABET);
        let a = kernel(&q, &d, &cfg, &table).anchor;
        let b = kernel(&q, &d, &cfg, &table).anchor;
        assert_eq!(a, b);
        if let Some(idx) = a {
            assert!(idx >= 1 && idx <= d.len());
        }
    }
}

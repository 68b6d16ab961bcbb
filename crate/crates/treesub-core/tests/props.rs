//! Property tests for the deterministic kernels.

use proptest::prelude::*;
use treesub_core::coded_tree::{subordinate_distance, CodingFunction, SubordinationInput, TreeView};
use treesub_core::levy::{discrete_height, discrete_height_brute, SkipFreeWalk};
use treesub_core::looptree::sim_classes;

/// Random excursion-shaped coding function on n+1 points.
fn coding_strategy(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..8.0, 1..max_n).prop_map(|mut interior| {
        let mut h = vec![0.0];
        h.append(&mut interior);
        h.push(0.0);
        h
    })
}

/// A monotone-along-ancestry grid function: the running max of h over the
/// ancestral stack, scaled pointwise. Built per-index as a function of the
/// ancestor records only, so it is constant on coded-point classes.
fn monotone_g(h: &[f64]) -> Vec<f64> {
    // g = height of the nearest dyadic level below h, which is constant on
    // classes (depends on h only) and nondecreasing along ancestry.
    h.iter().map(|&x| (x * 2.0).floor() / 2.0).collect()
}

proptest! {
    #[test]
    fn four_point_condition_for_subordinate_distance(h in coding_strategy(40), idx in prop::collection::vec(0usize..1000, 4)) {
        let tree = TreeView::new(CodingFunction::new(1.0, h.clone()).unwrap());
        let g = monotone_g(&h);
        let gin = SubordinationInput::new(g.clone()).unwrap();
        prop_assume!(tree.check_monotone(&gin).unwrap());
        let n = h.len();
        let a: Vec<usize> = idx.iter().map(|&i| i % n).collect();
        let d = |i: usize, j: usize| subordinate_distance(&g, a[i], a[j]);
        let s12_34 = d(0, 1) + d(2, 3);
        let s13_24 = d(0, 2) + d(1, 3);
        let s14_23 = d(0, 3) + d(1, 2);
        prop_assert!(s12_34 <= s13_24.max(s14_23) + 1e-12);
    }

    #[test]
    fn subordinate_coding_distance_equals_mrca_formula(h in coding_strategy(24)) {
        let tree = TreeView::new(CodingFunction::new(1.0, h.clone()).unwrap());
        let g = monotone_g(&h);
        let gin = SubordinationInput::new(g.clone()).unwrap();
        prop_assume!(tree.check_monotone(&gin).unwrap());
        let sub = TreeView::new(tree.subordinate_coding(&gin).unwrap());
        let n = h.len();
        for i in 0..n {
            for j in 0..n {
                let mrca = tree.mrca(i, j).unwrap();
                let want = g[i] + g[j] - 2.0 * g[mrca];
                let got = sub.tree_distance(i, j).unwrap();
                prop_assert!((got - want).abs() <= 1e-12, "i={} j={} got {} want {}", i, j, got, want);
            }
        }
    }

    #[test]
    fn height_process_matches_brute_force(incs in prop::collection::vec(-1i64..=2, 1..64)) {
        let w = SkipFreeWalk::from_increments(incs);
        let fast = discrete_height(&w);
        prop_assert_eq!(fast.heights(), &discrete_height_brute(&w)[..]);
    }

    #[test]
    fn ancestry_is_interval_minimum(h in coding_strategy(24)) {
        let tree = TreeView::new(CodingFunction::new(1.0, h.clone()).unwrap());
        let n = h.len();
        for i in 0..n {
            for j in 0..n {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                let min = h[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert_eq!(tree.is_ancestor(i, j).unwrap(), h[i] == min);
            }
        }
    }

    #[test]
    fn sim_pairs_match_quadratic_definition(h in prop::collection::vec(0.0f64..4.0, 2..40)) {
        let sc = sim_classes(&h, 0.0);
        let n = h.len();
        let mut want_loop = vec![];
        let mut want_face = vec![];
        for s in 0..n {
            for t in (s + 1)..n {
                if h[s] != h[t] {
                    continue;
                }
                if (s + 1..t).all(|r| h[r] > h[s]) {
                    want_loop.push((s, t));
                }
                if (s + 1..t).all(|r| h[r] < h[s]) {
                    want_face.push((s, t));
                }
            }
        }
        let mut got_loop: Vec<(usize, usize)> = sc.loop_pairs.iter().map(|p| (p.left, p.right)).collect();
        let mut got_face: Vec<(usize, usize)> = sc.facing_pairs.iter().map(|p| (p.left, p.right)).collect();
        got_loop.sort_unstable();
        got_face.sort_unstable();
        want_loop.sort_unstable();
        want_face.sort_unstable();
        prop_assert_eq!(got_loop, want_loop);
        prop_assert_eq!(got_face, want_face);
    }
}

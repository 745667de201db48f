use std::collections::HashSet;

use proptest::prelude::*;
use wocp_core::patterns::{cluster_patterns, gini};

// Independent oracles: hash-set Jaccard, Warshall transitive closure, and the
// literal double sum for the Gini coefficient.

fn jaccard_distance_oracle(a: &[String], b: &[String]) -> f64 {
    let a: HashSet<&String> = a.iter().collect();
    let b: HashSet<&String> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(&b).count() as f64 / union as f64
}

fn closure_oracle(comments: &[Vec<String>], threshold: f64) -> Vec<Vec<bool>> {
    let n = comments.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = i == j || jaccard_distance_oracle(&comments[i], &comments[j]) <= threshold;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

fn gini_oracle(xs: &[usize]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<usize>() as f64 / n;
    let mut s = 0.0;
    for &a in xs {
        for &b in xs {
            s += (a as f64 - b as f64).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

fn comment() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 0..5)
        .prop_map(|ts| ts.into_iter().map(String::from).collect())
}

fn comments(max: usize) -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(comment(), 0..=max)
}

fn threshold() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.5), Just(1.0), 0.0f64..=1.0]
}

fn sorted_sizes(sizes: &[usize]) -> Vec<usize> {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s
}

#[test]
fn gini_fixtures() {
    assert_eq!(gini(&[1, 1, 1, 1]).unwrap(), 0.0);
    assert!((gini(&[1, 3]).unwrap() - 0.25).abs() <= 1e-9);
    assert!((gini(&[1, 1, 8]).unwrap() - 0.4667).abs() <= 5e-5);
    assert!((gini(&[1, 1, 8]).unwrap() - gini_oracle(&[1, 1, 8])).abs() <= 1e-9);
    assert!((gini_oracle(&[1, 3]) - 0.25).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn clustering_matches_transitive_closure(cs in comments(8), t in threshold()) {
        let p = cluster_patterns(&cs, t).unwrap();
        let reach = closure_oracle(&cs, t);
        for (i, row) in reach.iter().enumerate() {
            for (j, &linked) in row.iter().enumerate() {
                prop_assert_eq!(p.assignments[i] == p.assignments[j], linked, "i={} j={}", i, j);
            }
        }
        prop_assert_eq!(p.sizes.iter().sum::<usize>(), cs.len());
        if !cs.is_empty() {
            prop_assert!(p.n_patterns() >= 1 && p.n_patterns() <= cs.len());
            // patterns numbered by first appearance
            prop_assert_eq!(p.assignments[0], 0);
        }
    }

    #[test]
    fn pattern_sizes_survive_shuffling(cs in comments(12), t in threshold(), seed in any::<u64>()) {
        let mut shuffled = cs.clone();
        // deterministic Fisher-Yates driven by an LCG
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        let a = cluster_patterns(&cs, t).unwrap();
        let b = cluster_patterns(&shuffled, t).unwrap();
        prop_assert_eq!(sorted_sizes(&a.sizes), sorted_sizes(&b.sizes));
    }

    #[test]
    fn threshold_extremes(cs in comments(10)) {
        let distinct: HashSet<Vec<String>> = cs
            .iter()
            .map(|c| {
                let mut s: Vec<String> = c.clone();
                s.sort();
                s.dedup();
                s
            })
            .collect();
        prop_assert_eq!(cluster_patterns(&cs, 0.0).unwrap().n_patterns(), distinct.len());
        let expected_one = usize::from(!cs.is_empty());
        prop_assert_eq!(cluster_patterns(&cs, 1.0).unwrap().n_patterns(), expected_one);
    }

    #[test]
    fn gini_matches_pairwise_definition(xs in prop::collection::vec(1usize..200, 1..40)) {
        let g = gini(&xs).unwrap();
        prop_assert!((g - gini_oracle(&xs)).abs() <= 1e-9);
        prop_assert!((0.0..1.0).contains(&g));
    }

    #[test]
    fn gini_is_scale_invariant(xs in prop::collection::vec(1usize..100, 1..30), k in 1usize..50) {
        let scaled: Vec<usize> = xs.iter().map(|x| x * k).collect();
        prop_assert!((gini(&xs).unwrap() - gini(&scaled).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn gini_zero_for_equal_sizes(x in 1usize..1000, n in 1usize..50) {
        prop_assert_eq!(gini(&vec![x; n]).unwrap(), 0.0);
    }
}

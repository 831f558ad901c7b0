//! Randomized invariants of the metric and scoring layers.

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use spectral_echo::echometric::{per_source_distance, synthesize, DistanceMatrix, NormSpec, SynthesisRule, TimeNorm};
use spectral_echo::eigen::{graph_basis, Solver};
use spectral_echo::embed::{clustering_accuracy, step_fit_score, Embedding, EmbeddingSource};
use spectral_echo::graph::{LaplacianVariant, WeightedGraph};
use spectral_echo::propagator::{initial_datum, propagate, PropagationOptions, SelfWeight, SymbolSpec, TimeGrid};

/// Connected weighted graph from a weight vector over the upper triangle;
/// a ring of unit edges guarantees connectivity.
fn graph_from(n: usize, upper: &[f64]) -> WeightedGraph {
    let mut w = Array2::zeros((n, n));
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut v = upper[k];
            k += 1;
            if j == i + 1 || (i == 0 && j == n - 1) {
                v += 1.0;
            }
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    WeightedGraph::new(w, false).unwrap()
}

fn graph_strategy() -> impl Strategy<Value = WeightedGraph> {
    (4usize..9).prop_flat_map(|n| {
        proptest::collection::vec(prop_oneof![Just(0.0), 0.0..1.5f64], n * (n - 1) / 2).prop_map(move |u| graph_from(n, &u))
    })
}

fn distances(g: &WeightedGraph, source: usize, symbol: &SymbolSpec, norms: &NormSpec) -> DistanceMatrix {
    let b = graph_basis(g, LaplacianVariant::SymNormalized, g.n(), Solver::Dense).unwrap();
    let grid = TimeGrid::new(3.0, 60).unwrap();
    let f = propagate(&b, &initial_datum(g, source, SelfWeight::Unit).unwrap(), symbol, &grid, PropagationOptions::default()).unwrap();
    per_source_distance(&f, norms, &grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_is_symmetric_with_zero_diagonal(g in graph_strategy(), s in 0usize..4) {
        for symbol in [SymbolSpec::wave(0.3), SymbolSpec::airy()] {
            let d = distances(&g, s, &symbol, &NormSpec::default());
            for i in 0..g.n() {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..g.n() {
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    prop_assert!(d.get(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn relabeling_permutes_distances(g in graph_strategy(), s in 0usize..4, shift in 1usize..4) {
        let n = g.n();
        // perm[i] is the new label of vertex i
        let perm: Vec<usize> = (0..n).map(|i| (i * (2 * shift + 1) + shift) % n).collect();
        let mut seen = perm.clone();
        seen.sort();
        seen.dedup();
        prop_assume!(seen.len() == n);
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                w[[perm[i], perm[j]]] = g.weight(i, j);
            }
        }
        let h = WeightedGraph::new(w, false).unwrap();
        let norms = NormSpec { x_norm: TimeNorm::L2, y_norm: Some(TimeNorm::L1), alpha: 2.0, beta: 1.0 };
        let a = distances(&g, s, &SymbolSpec::wave(0.2), &norms);
        let b = distances(&h, perm[s], &SymbolSpec::wave(0.2), &norms);
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (a.get(i, j), b.get(perm[i], perm[j]));
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn min_never_exceeds_mean(g in graph_strategy()) {
        let per: Vec<_> = (0..3).map(|s| distances(&g, s, &SymbolSpec::wave(0.5), &NormSpec::default())).collect();
        let lo = synthesize(&per, SynthesisRule::Min).unwrap();
        let hi = synthesize(&per, SynthesisRule::Mean).unwrap();
        for (a, b) in lo.as_array().iter().zip(hi.as_array()) {
            prop_assert!(*a <= *b * (1.0 + 1e-15));
        }
    }

    #[test]
    fn step_fit_is_affine_invariant(
        v in proptest::collection::vec(-3.0..3.0f64, 5..40),
        a in prop_oneof![-10.0..-0.1f64, 0.1..10.0f64],
        c in -5.0..5.0f64,
    ) {
        let t: Vec<f64> = v.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
        let w: Vec<f64> = v.iter().map(|x| a * x + c).collect();
        let s0 = step_fit_score(&v, &t).unwrap();
        let s1 = step_fit_score(&w, &t).unwrap();
        prop_assert!((s0 - s1).abs() <= 1e-10, "{} vs {}", s0, s1);
    }

    #[test]
    fn accuracy_ignores_label_names_and_rotations(theta in 0.0..std::f64::consts::TAU, off in -50i64..50, seed in 0u64..1000) {
        let mut coords = Array2::zeros((60, 2));
        let mut labels = Vec::new();
        for i in 0..60 {
            let c = (i % 3) as f64;
            coords[[i, 0]] = 10.0 * c + 0.01 * (i as f64 % 7.0);
            coords[[i, 1]] = -5.0 * c + 0.01 * (i as f64 % 5.0);
            // one deliberately misplaced label per class
            labels.push(if i < 3 { ((i + 1) % 3) as i64 } else { (i % 3) as i64 });
        }
        let emb = |c: Array2<f64>| Embedding { coords: c, source: EmbeddingSource::RawEigenmap, zero_multiplicity: 1 };
        let base = clustering_accuracy(&emb(coords.clone()), &labels, 3, seed).unwrap();
        let (s, co) = theta.sin_cos();
        let rot = ndarray::array![[co, -s], [s, co]];
        let rotated = clustering_accuracy(&emb(coords.dot(&rot)), &labels, 3, seed).unwrap();
        let renamed: Vec<i64> = labels.iter().map(|l| 7 * (2 - l) + off).collect();
        let relabeled = clustering_accuracy(&emb(coords), &renamed, 3, seed).unwrap();
        prop_assert_eq!(base, 57.0 / 60.0);
        prop_assert_eq!(rotated, base);
        prop_assert_eq!(relabeled, base);
    }
}

#[test]
fn datum_scaling_is_homogeneous() {
    let g = graph_from(6, &[0.3; 15]);
    let b = graph_basis(&g, LaplacianVariant::SymNormalized, 6, Solver::Dense).unwrap();
    let grid = TimeGrid::new(2.0, 80).unwrap();
    let f = Array1::from_vec(vec![1.0, 0.5, 0.0, 0.2, 0.0, 0.3]);
    let s = 2.5;
    let norms = NormSpec { x_norm: TimeNorm::L2, y_norm: None, alpha: 3.0, beta: 0.0 };
    let d = |v: Array1<f64>| {
        let datum = spectral_echo::propagator::InitialDatum::new(0, v).unwrap();
        let field = propagate(&b, &datum, &SymbolSpec::wave(0.1), &grid, PropagationOptions::default()).unwrap();
        per_source_distance(&field, &norms, &grid).unwrap()
    };
    let (a, c) = (d(f.clone()), d(f * s));
    for (x, y) in a.as_array().iter().zip(c.as_array()) {
        assert!((y - s.powi(3) * x).abs() <= 1e-10 * y.abs().max(1e-300));
    }
}

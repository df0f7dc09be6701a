use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tree_entropy::distributions::{heavy_tail_x, Lattice, RootedDistribution};
use tree_entropy::entropy::{entropy_series, SeriesOptions};
use tree_entropy::graph::{Edge, RootedGraph, WeightedMultigraph};
use tree_entropy::resistance::resistance;
use tree_entropy::walk::{return_probs, return_probs_rational};

fn connected_graph(seed: u64, max_n: usize) -> WeightedMultigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push(Edge::new(rng.random_range(0..v), v, rng.random_range(0.5..3.0)));
    }
    for _ in 0..rng.random_range(0..n) {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        edges.push(Edge::new(u, v, rng.random_range(0.5..3.0)));
    }
    WeightedMultigraph::new(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_weights_and_killing_together_scales_resistance(
        seed in any::<u64>(), s in 0.01f64..10.0, c in 0.2f64..5.0,
    ) {
        let g = connected_graph(seed, 12);
        let base = RootedGraph::new(g.clone(), 0).unwrap();
        let scaled = RootedGraph::new(g.scaled(c).unwrap(), 0).unwrap();
        let r = resistance(&base, s, 1e-13).unwrap().value;
        let rc = resistance(&scaled, c * s, 1e-13).unwrap().value;
        prop_assert!((rc - r / c).abs() <= 1e-9 * r, "{rc} vs {}", r / c);
    }

    #[test]
    fn adding_an_edge_never_raises_resistance(seed in any::<u64>(), s in 0.01f64..10.0) {
        let g = connected_graph(seed, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let n = g.vertex_count();
        let e = Edge::new(rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0.1..4.0));
        let low = RootedGraph::new(g.clone(), 0).unwrap();
        let high = RootedGraph::new(g.with_edge(e).unwrap(), 0).unwrap();
        let a = resistance(&high, s, 1e-13).unwrap().value;
        let b = resistance(&low, s, 1e-13).unwrap().value;
        prop_assert!(a <= b * (1.0 + 1e-10), "{a} > {b}");
    }

    #[test]
    fn return_probabilities_depend_only_on_the_ball(seed in any::<u64>(), r in 1usize..4) {
        let g = connected_graph(seed, 10);
        let g = WeightedMultigraph::new(
            g.vertex_count(),
            g.edges().iter().map(|e| Edge::new(e.u, e.v, e.weight.round().max(1.0))).collect(),
        ).unwrap();
        let rooted = RootedGraph::new(g, 0).unwrap();
        let small = return_probs_rational(&rooted.local_ball(r), 2 * r).unwrap();
        let large = return_probs_rational(&rooted.local_ball(r + 3), 2 * r).unwrap();
        prop_assert_eq!(small, large);
    }

    #[test]
    fn aperiodic_walks_converge_to_stationarity(seed in any::<u64>()) {
        let g = connected_graph(seed, 8).with_edge(Edge::new(0, 0, 1.0)).unwrap();
        let pi = g.walk_degree(0) / (0..g.vertex_count()).map(|v| g.walk_degree(v)).sum::<f64>();
        let rooted = RootedGraph::new(g, 0).unwrap();
        let rs = return_probs(&rooted.local_ball(usize::MAX), 10_000, false).unwrap();
        prop_assert!((rs.p(10_000) - pi).abs() <= 1e-6);
    }

    #[test]
    fn uniform_root_series_shifts_by_log_factor(seed in any::<u64>(), c in 1.1f64..4.0) {
        let g = connected_graph(seed, 7);
        let n = g.vertex_count() as f64;
        let opts = SeriesOptions { k_max: 4096, ..Default::default() };
        let est = |g: WeightedMultigraph| {
            let e = entropy_series(&RootedDistribution::uniform_root(g, "g").enumerated(), &opts).unwrap();
            (e.value.finite().unwrap(), e.error_bar)
        };
        let (a, ea) = est(g.clone());
        let (b, eb) = est(g.scaled(c).unwrap());
        // tau picks up c^(n-1)
        let expected = (n - 1.0) / n * c.ln();
        prop_assert!((b - a - expected).abs() <= ea + eb + 1e-9, "{} vs {expected}", b - a);
    }
}

#[test]
fn doubling_weights_on_the_line_adds_log_two() {
    let opts = SeriesOptions::default();
    let z = RootedDistribution::lattice(Lattice::Z);
    let a = entropy_series(&z, &opts).unwrap();
    let b = entropy_series(&z.with_weight_scale(2.0).unwrap(), &opts).unwrap();
    let shift = b.value.finite().unwrap() - a.value.finite().unwrap();
    assert!((shift - 2f64.ln()).abs() <= a.error_bar + b.error_bar + 1e-12, "{shift}");
}

#[test]
fn minimum_of_two_heavy_tail_draws_has_harmonic_tail() {
    // P[min(X, X') >= m] = 1/m, so E[min] diverges like the harmonic series
    let draws = 100_000i64;
    for m in [2u64, 5, 10] {
        let hits = (0..draws)
            .filter(|&i| heavy_tail_x(3, 0, 2 * i + 1).min(heavy_tail_x(3, 0, 2 * i + 2)) >= m)
            .count() as f64;
        let p = 1.0 / m as f64;
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        let z = (hits / draws as f64 - p) / sd;
        assert!(z.abs() <= 4.0, "m={m}: z={z}");
    }
}

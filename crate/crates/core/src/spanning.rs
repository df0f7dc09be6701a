//! Weighted spanning-tree counts.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedMultigraph;
use crate::linalg::{det_exact, exact_rational, laplacian_exact, laplacian_of, ln_rational, logdet_spd};

/// Largest reduced-Laplacian dimension for which the exact count is formed.
pub const EXACT_DIMENSION_LIMIT: usize = 400;

/// Largest edge count the brute-force enumerator accepts.
pub const BRUTE_FORCE_EDGE_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeCount {
    /// Exact weighted count; integral for integer weights.
    pub exact: Option<BigRational>,
    /// Natural log of the weighted count.
    pub log_value: f64,
}

impl TreeCount {
    /// Exact value as a decimal string for integers, `p/q` otherwise.
    pub fn exact_string(&self) -> Option<String> {
        self.exact.as_ref().map(|q| {
            if q.is_integer() {
                q.numer().to_string()
            } else {
                format!("{}/{}", q.numer(), q.denom())
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
struct TreeCountJson {
    exact: Option<String>,
    log_value: f64,
}

impl Serialize for TreeCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeCountJson {
            exact: self.exact_string(),
            log_value: self.log_value,
        }
        .serialize(s)
    }
}

/// Weighted spanning-tree count by the matrix-tree theorem (reduced at vertex 0).
///
/// The exact value is formed when `exact` is set and the reduced dimension is
/// at most [`EXACT_DIMENSION_LIMIT`].
pub fn tau(g: &WeightedMultigraph, exact: bool) -> Result<TreeCount> {
    tau_reduced_at(g, 0, exact)
}

/// As [`tau`], deleting row and column `vertex` instead of 0.
pub fn tau_reduced_at(g: &WeightedMultigraph, vertex: usize, exact: bool) -> Result<TreeCount> {
    if vertex >= g.vertex_count() {
        return Err(Error::RootOutOfRange {
            root: vertex,
            vertex_count: g.vertex_count(),
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let dim = g.vertex_count() - 1;
    if dim == 0 {
        return Ok(TreeCount {
            exact: Some(BigRational::one()),
            log_value: 0.0,
        });
    }
    let exact = (exact && dim <= EXACT_DIMENSION_LIMIT)
        .then(|| det_exact(&laplacian_exact(g).without_index(vertex)));
    let log_value = match &exact {
        Some(q) => ln_rational(q),
        None => logdet_spd(&laplacian_of(g).without_index(vertex))?,
    };
    Ok(TreeCount { exact, log_value })
}

/// Sum over all spanning trees of the product of edge weights, by
/// enumerating every `(|V|-1)`-subset of edges.
pub fn tau_bruteforce(g: &WeightedMultigraph) -> Result<BigRational> {
    let m = g.edge_count();
    if m > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::TooManyEdges {
            edges: m,
            limit: BRUTE_FORCE_EDGE_LIMIT,
        });
    }
    let n = g.vertex_count();
    let need = n - 1;
    let weights: Vec<BigRational> = g.edges().iter().map(|e| exact_rational(e.weight)).collect();
    let mut total = BigRational::zero();
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut acyclic = true;
        for (i, e) in g.edges().iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a == b {
                acyclic = false;
                break;
            }
            parent[a] = b;
        }
        if acyclic {
            total += (0..m)
                .filter(|i| mask & (1 << i) != 0)
                .fold(BigRational::one(), |acc, i| acc * &weights[i]);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::graph::Edge;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn small_examples() {
        let k4 = tau(&families::complete(4).unwrap(), true).unwrap();
        assert_eq!(k4.exact, Some(int(16)));
        assert_eq!(k4.exact_string().unwrap(), "16");
        assert_eq!(tau(&families::cycle(5).unwrap(), true).unwrap().exact, Some(int(5)));
        let edge = WeightedMultigraph::from_triples(2, &[(0, 1, 7.0)]).unwrap();
        let t = tau(&edge, true).unwrap();
        assert_eq!(t.exact, Some(int(7)));
        assert_abs_diff_eq!(t.log_value, 7f64.ln(), epsilon = 1e-15);
        let single = WeightedMultigraph::from_triples(1, &[(0, 0, 2.0)]).unwrap();
        assert_eq!(tau(&single, true).unwrap().log_value, 0.0);
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(tau_bruteforce(&families::cycle(3).unwrap()).unwrap(), int(3));
        let parallel = WeightedMultigraph::from_triples(2, &[(0, 1, 1.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(tau_bruteforce(&parallel).unwrap(), int(2));
        let tri =
            WeightedMultigraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0)]).unwrap();
        assert_eq!(tau_bruteforce(&tri).unwrap(), int(11));
        // Cayley: n^(n-2)
        for n in 2..=7 {
            let kn = families::complete(n).unwrap();
            assert_eq!(tau_bruteforce(&kn).unwrap(), int((n as i64).pow(n as u32 - 2)));
        }
    }

    #[test]
    fn brute_force_refuses_large_inputs() {
        let g = families::complete(8).unwrap();
        assert!(matches!(tau_bruteforce(&g), Err(Error::TooManyEdges { edges: 28, .. })));
    }

    #[test]
    fn disconnected_is_an_error() {
        let g = WeightedMultigraph::from_triples(3, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(tau(&g, true), Err(Error::Disconnected));
    }

    #[test]
    fn large_complete_graph_matches_cayley() {
        let g = families::complete(100).unwrap();
        let t = tau(&g, false).unwrap();
        assert!(t.exact.is_none());
        assert_abs_diff_eq!(t.log_value, 98.0 * 100f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn exact_skipped_above_dimension_limit() {
        let g = families::cycle(EXACT_DIMENSION_LIMIT + 2).unwrap();
        let t = tau(&g, true).unwrap();
        assert!(t.exact.is_none());
        assert_abs_diff_eq!(t.log_value, ((EXACT_DIMENSION_LIMIT + 2) as f64).ln(), epsilon = 1e-9);
    }

    fn random_connected(seed: u64) -> WeightedMultigraph {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let mut triples = Vec::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            triples.push((u, v, rng.random_range(1..=5) as f64));
        }
        let extra = rng.random_range(0..=(10 - triples.len()));
        for _ in 0..extra {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            triples.push((u, v, rng.random_range(1..=5) as f64));
        }
        WeightedMultigraph::from_triples(n, &triples).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_vertex_is_irrelevant(seed in any::<u64>()) {
            let g = random_connected(seed);
            let reference = tau(&g, true).unwrap().exact.unwrap();
            for v in 1..g.vertex_count() {
                prop_assert_eq!(tau_reduced_at(&g, v, true).unwrap().exact.unwrap(), reference.clone());
            }
        }

        #[test]
        fn loops_never_change_the_count(seed in any::<u64>(), w in 1u32..10) {
            let g = random_connected(seed);
            let x = (seed % g.vertex_count() as u64) as usize;
            let looped = g.with_edge(Edge::new(x, x, w as f64)).unwrap();
            prop_assert_eq!(tau(&g, true).unwrap().exact, tau(&looped, true).unwrap().exact);
        }

        #[test]
        fn deletion_contraction(seed in any::<u64>()) {
            let g = random_connected(seed);
            let pick = (seed >> 8) as usize % g.edge_count();
            let e = *g.edge(pick);
            prop_assume!(!e.is_loop());
            let whole = tau(&g, true).unwrap().exact.unwrap();
            let contracted = tau(&g.contract_edge(pick).unwrap(), true).unwrap().exact.unwrap();
            let deleted = g.without_edge(pick).unwrap();
            let without = if deleted.is_connected() {
                tau(&deleted, true).unwrap().exact.unwrap()
            } else {
                BigRational::zero()
            };
            prop_assert_eq!(whole, without + exact_rational(e.weight) * contracted);
        }

        #[test]
        fn heavier_edges_mean_more_trees(seed in any::<u64>()) {
            let g = random_connected(seed);
            let pick = (seed >> 8) as usize % g.edge_count();
            prop_assume!(!g.edge(pick).is_loop());
            let e = *g.edge(pick);
            let heavier = g
                .without_edge(pick)
                .unwrap()
                .with_edge(Edge::new(e.u, e.v, e.weight + 0.5))
                .unwrap();
            prop_assert!(tau(&heavier, false).unwrap().log_value > tau(&g, false).unwrap().log_value);
        }

        #[test]
        fn exact_and_log_paths_agree(seed in any::<u64>()) {
            let g = random_connected(seed);
            let exact = tau(&g, true).unwrap();
            let float = tau(&g, false).unwrap();
            let q = exact.exact.unwrap();
            prop_assert!((ln_rational(&q) - float.log_value).abs() <= 1e-9 * float.log_value.abs().max(1.0));
        }
    }
}

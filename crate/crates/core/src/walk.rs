//! Return probabilities of the network random walk and the regularized
//! series `sum_k p_k / k`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::LocalBall;
use crate::linalg::exact_rational;

/// A real number or the `-inf` sentinel. Only comparisons are supported.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum EntropyValue {
    NegInfinity,
    Finite(f64),
}

impl EntropyValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            EntropyValue::Finite(v) => Some(v),
            EntropyValue::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(self) -> bool {
        self == EntropyValue::NegInfinity
    }
}

impl std::fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntropyValue::Finite(v) => write!(f, "{v}"),
            EntropyValue::NegInfinity => f.write_str("-inf"),
        }
    }
}

impl Serialize for EntropyValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EntropyValue::Finite(v) => s.serialize_f64(*v),
            EntropyValue::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnSeries {
    /// `p_k` for `k = 1..=K`.
    pub probabilities: Vec<f64>,
    pub root_walk_degree: f64,
    pub root_laplacian_diagonal: f64,
    /// Largest `k` for which `p_k` is exact for the underlying graph;
    /// `None` when the ball is the whole component.
    pub exactness_radius: Option<usize>,
    /// Stationary mass of the root, for whole finite components.
    pub stationary: Option<f64>,
    /// Two-colourable whole component (then `p_k` oscillates forever).
    pub bipartite: bool,
    /// A bound `rho` with `p_k <= rho^k`, when known.
    pub spectral_radius_bound: Option<f64>,
    /// Constant added to `sum_k p_k / k`; set by [`ReturnSeries::centered`].
    pub offset: f64,
    /// The terms are known to decay geometrically (centered finite series).
    pub decays_geometrically: bool,
}

impl ReturnSeries {
    pub fn new(probabilities: Vec<f64>, root_walk_degree: f64) -> Self {
        ReturnSeries {
            probabilities,
            root_walk_degree,
            root_laplacian_diagonal: root_walk_degree,
            exactness_radius: None,
            stationary: None,
            bipartite: false,
            spectral_radius_bound: None,
            offset: 0.0,
            decays_geometrically: false,
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// `p_k` for `k >= 1`.
    pub fn p(&self, k: usize) -> f64 {
        self.probabilities[k - 1]
    }

    pub fn with_spectral_radius_bound(mut self, rho: Option<f64>) -> Self {
        self.spectral_radius_bound = rho;
        self
    }

    /// For a whole finite component, the series with the limiting
    /// behaviour removed: `p_k - pi(o)`, or `p_k - pi(o) (1 + (-1)^k)` on
    /// bipartite components with the removed alternating part carried in
    /// `offset`. The original series otherwise.
    pub fn centered(&self) -> ReturnSeries {
        let Some(pi) = self.stationary else {
            return self.clone();
        };
        let probabilities = self
            .probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let even = (i + 1) % 2 == 0;
                match (self.bipartite, even) {
                    (false, _) => p - pi,
                    (true, true) => p - 2.0 * pi,
                    (true, false) => *p,
                }
            })
            .collect();
        // sum_k pi (-1)^k / k = -pi log 2
        let offset = if self.bipartite { -pi * std::f64::consts::LN_2 } else { 0.0 };
        ReturnSeries {
            probabilities,
            stationary: None,
            spectral_radius_bound: None,
            offset: self.offset + offset,
            decays_geometrically: true,
            ..self.clone()
        }
    }
}

/// Transition rows: for each ball vertex, `(neighbour, probability)` pairs.
/// Mass sent through the boundary is dropped.
fn transitions(ball: &LocalBall) -> Vec<Vec<(usize, f64)>> {
    (0..ball.vertex_count())
        .map(|x| {
            let d = ball.walk_degree(x);
            ball.graph().neighbors(x).map(|(y, w)| (y, w / d)).collect()
        })
        .collect()
}

/// `p_k(o)` for `k = 1..=k_max`, from the root indicator by repeated
/// application of the transition operator.
///
/// With `demand_exact`, rejects `k_max` beyond twice the ball radius unless
/// the ball is the whole component.
pub fn return_probs(ball: &LocalBall, k_max: usize, demand_exact: bool) -> Result<ReturnSeries> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("need at least one return probability".into()));
    }
    let exactness_radius = (!ball.is_complete()).then(|| 2 * ball.radius());
    if let Some(limit) = exactness_radius {
        if demand_exact && k_max > limit {
            return Err(Error::NotExact {
                radius: ball.radius(),
                exact_up_to: limit,
                requested: k_max,
            });
        }
    }
    let rows = transitions(ball);
    let n = ball.vertex_count();
    let mut q = vec![0.0; n];
    let mut next = vec![0.0; n];
    q[0] = 1.0;
    let mut probabilities = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        // mass further than k_max - k from the root cannot come back in time
        let reach = (k - 1).min(k_max + 1 - k);
        let sources = ball.count_within(reach);
        let targets = ball.count_within(reach + 1);
        next[..targets].fill(0.0);
        for x in 0..sources {
            let qx = q[x];
            if qx != 0.0 {
                for &(y, p) in &rows[x] {
                    next[y] += qx * p;
                }
            }
        }
        std::mem::swap(&mut q, &mut next);
        probabilities.push(q[0]);
    }
    let stationary = ball
        .is_complete()
        .then(|| ball.walk_degree(0) / ball.total_walk_degree());
    Ok(ReturnSeries {
        probabilities,
        root_walk_degree: ball.walk_degree(0),
        root_laplacian_diagonal: ball.laplacian_diagonal(0),
        exactness_radius,
        stationary,
        bipartite: ball.is_complete() && is_bipartite(ball),
        spectral_radius_bound: None,
        offset: 0.0,
        decays_geometrically: false,
    })
}

fn is_bipartite(ball: &LocalBall) -> bool {
    let g = ball.graph();
    let mut colour = vec![u8::MAX; g.vertex_count()];
    let mut stack = vec![0];
    colour[0] = 0;
    while let Some(x) = stack.pop() {
        for (y, _) in g.neighbors(x) {
            if colour[y] == u8::MAX {
                colour[y] = 1 - colour[x];
                stack.push(y);
            } else if colour[y] == colour[x] {
                return false;
            }
        }
    }
    true
}

/// Exact rational `p_k(o)`, `k = 1..=k_max`, with weights read as the exact
/// rationals their doubles represent.
pub fn return_probs_rational(ball: &LocalBall, k_max: usize) -> Result<Vec<BigRational>> {
    if let Some(limit) = (!ball.is_complete()).then(|| 2 * ball.radius()) {
        if k_max > limit {
            return Err(Error::NotExact {
                radius: ball.radius(),
                exact_up_to: limit,
                requested: k_max,
            });
        }
    }
    let n = ball.vertex_count();
    let rows: Vec<Vec<(usize, BigRational)>> = (0..n)
        .map(|x| {
            let g = ball.graph();
            let d: BigRational = g
                .incident(x)
                .iter()
                .map(|&i| exact_rational(g.edge(i).weight))
                .fold(exact_rational(ball.boundary()[x]), |a, b| a + b);
            g.neighbors(x)
                .map(|(y, w)| (y, exact_rational(w) / &d))
                .collect()
        })
        .collect();
    let mut q = vec![BigRational::zero(); n];
    q[0] = BigRational::one();
    let mut out = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        let mut next = vec![BigRational::zero(); n];
        for (x, qx) in q.iter().enumerate() {
            if !qx.is_zero() {
                for (y, p) in &rows[x] {
                    next[*y] += qx * p;
                }
            }
        }
        q = next;
        out.push(q[0].clone());
    }
    Ok(out)
}

/// `c = 1 - 2^-j` for `j = 3..=12`.
pub fn default_abel_grid() -> Vec<f64> {
    (3..=12).map(|j| 1.0 - (0.5f64).powi(j)).collect()
}

/// Largest truncation error tolerated for an Abel point to enter the
/// extrapolation.
const ABEL_TAIL_LIMIT: f64 = 1e-12;
/// Tail bound below which the plain partial sum is used directly.
const PARTIAL_SUM_TAIL_LIMIT: f64 = 1e-8;
/// Terms below this size count as vanished for a decaying series.
const SETTLED_TERM_LIMIT: f64 = 1e-14;
/// Extrapolation uses at most this many of the finest reliable points.
const EXTRAPOLATION_POINTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMethod {
    /// Partial sum with a provable tail bound.
    PartialSum,
    /// Partial sum of a geometrically decaying series whose last terms
    /// have vanished to rounding level.
    Settled,
    /// Abel partials extrapolated to `c = 1`.
    Extrapolated,
    /// Too few reliable Abel points; plain partial sum, tail unknown.
    Truncated,
    /// Divergence detector fired.
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesEntropyTerm {
    /// `log D(o) - sum_k p_k / k`.
    pub value: EntropyValue,
    pub log_degree: f64,
    /// Abel partial sums `(c, sum_k c^k p_k / k)` over the grid.
    pub abel_values: Vec<(f64, f64)>,
    /// Provable bound on the neglected tail, when one exists.
    pub tail_bound: Option<f64>,
    /// Error estimate for the limit of the series.
    pub error: f64,
    pub method: SeriesMethod,
}

fn abel_partial(rs: &ReturnSeries, c: f64) -> f64 {
    let mut ck = 1.0;
    let mut acc = 0.0;
    for (i, p) in rs.probabilities.iter().enumerate() {
        ck *= c;
        acc += ck * p / (i + 1) as f64;
    }
    acc
}

/// Bound on `sum_{k > K} (c rho)^k / k` for `|p_k| <= rho^k`.
fn tail_bound(k_max: usize, c: f64, rho: f64) -> f64 {
    let x = c * rho;
    if x >= 1.0 {
        return f64::INFINITY;
    }
    x.powi(k_max as i32 + 1) / ((k_max + 1) as f64 * (1.0 - x))
}

/// Value at 0 of the polynomial through `(t_i, y_i)`.
fn neville_at_zero(ts: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = ts.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (ts[i + m] * p[i] - ts[i] * p[i + 1]) / (ts[i + m] - ts[i]);
        }
    }
    p[0]
}

/// The heuristic divergence detector: the Abel partials keep growing by a
/// non-vanishing, non-decaying amount over the last three grid refinements.
fn looks_divergent(values: &[f64]) -> bool {
    if values.len() < 4 {
        return false;
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let last = &d[d.len() - 3..];
    last.iter().all(|&x| x >= 0.05) && last.windows(2).all(|w| w[1] >= 0.8 * w[0])
}

/// `log D(o) - lim_{c -> 1} sum_k c^k p_k / k`.
///
/// Uses the plain partial sum when a provable tail bound is below `1e-8`.
/// Otherwise the Abel partials at grid points whose truncation error is
/// negligible are extrapolated to `c = 1` as a polynomial in `sqrt(1 - c)`;
/// the extrapolation is inconclusive when dropping the finest point moves
/// it by more than `tol`.
pub fn series_entropy_term(rs: &ReturnSeries, grid: &[f64], tol: f64) -> Result<SeriesEntropyTerm> {
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(Error::InvalidArgument(
            "Abel grid must be strictly increasing inside (0, 1)".into(),
        ));
    }
    if rs.is_empty() {
        return Err(Error::InvalidArgument("empty return series".into()));
    }
    let log_degree = rs.root_walk_degree.ln();
    let k_max = rs.len();
    let abel_values: Vec<(f64, f64)> = grid.iter().map(|&c| (c, abel_partial(rs, c))).collect();
    let partial_sum: f64 = rs
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, p)| p / (i + 1) as f64)
        .sum::<f64>()
        + rs.offset;

    if rs.decays_geometrically {
        // the last quarter of the terms has died out: the sum has settled
        let last = rs.probabilities[k_max - k_max / 4 - 1..]
            .iter()
            .fold(0.0f64, |m, p| m.max(p.abs()));
        if last <= SETTLED_TERM_LIMIT {
            let estimate = last * k_max as f64;
            return Ok(SeriesEntropyTerm {
                value: EntropyValue::Finite(log_degree - partial_sum),
                log_degree,
                abel_values,
                tail_bound: None,
                error: estimate,
                method: SeriesMethod::Settled,
            });
        }
    }

    if let Some(rho) = rs.spectral_radius_bound.filter(|&r| r < 1.0) {
        let bound = tail_bound(k_max, 1.0, rho);
        if bound <= PARTIAL_SUM_TAIL_LIMIT {
            return Ok(SeriesEntropyTerm {
                value: EntropyValue::Finite(log_degree - partial_sum),
                log_degree,
                abel_values,
                tail_bound: Some(bound),
                error: bound,
                method: SeriesMethod::PartialSum,
            });
        }
    }

    let raw: Vec<f64> = abel_values.iter().map(|&(_, a)| a).collect();
    if looks_divergent(&raw) {
        return Ok(SeriesEntropyTerm {
            value: EntropyValue::NegInfinity,
            log_degree,
            abel_values,
            tail_bound: None,
            error: f64::INFINITY,
            method: SeriesMethod::Diverged,
        });
    }

    let rho = rs.spectral_radius_bound.unwrap_or(1.0);
    let reliable: Vec<(f64, f64)> = abel_values
        .iter()
        .copied()
        .filter(|&(c, _)| tail_bound(k_max, c, rho) <= ABEL_TAIL_LIMIT)
        .collect();
    if reliable.len() < 3 {
        return Ok(SeriesEntropyTerm {
            value: EntropyValue::Finite(log_degree - partial_sum),
            log_degree,
            abel_values,
            tail_bound: None,
            error: f64::INFINITY,
            method: SeriesMethod::Truncated,
        });
    }
    let extrapolate = |points: &[(f64, f64)]| {
        let points = &points[points.len().saturating_sub(EXTRAPOLATION_POINTS)..];
        let ts: Vec<f64> = points.iter().map(|&(c, _)| (1.0 - c).sqrt()).collect();
        let ys: Vec<f64> = points.iter().map(|&(_, a)| a).collect();
        neville_at_zero(&ts, &ys)
    };
    let finest = extrapolate(&reliable);
    let coarser = extrapolate(&reliable[..reliable.len() - 1]);
    let difference = (finest - coarser).abs();
    if difference > tol {
        return Err(Error::Inconclusive {
            difference,
            tolerance: tol,
        });
    }
    Ok(SeriesEntropyTerm {
        value: EntropyValue::Finite(log_degree - finest - rs.offset),
        log_degree,
        abel_values,
        tail_bound: None,
        error: difference,
        method: SeriesMethod::Extrapolated,
    })
}

//! Distributions of rooted networks: uniformly rooted finite graphs, fixed
//! infinite graphs given by nested balls, Monte Carlo samplers, and coupled
//! pairs with domination witnesses.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    families, DominationWitness, Edge, LocalBall, RootedGraph, VertexId, WeightedMultigraph,
};

/// Anything that can hand out balls around a fixed root.
pub trait BallSource: Sync {
    /// Ball of `radius` around the root, numbered in BFS order.
    fn ball(&self, radius: usize) -> Result<LocalBall>;

    /// A bound `rho < 1` with `p_k(o) <= rho^k`, when one is known.
    fn spectral_radius_bound(&self) -> Option<f64> {
        None
    }

    /// Return probabilities are known to decay geometrically.
    fn returns_decay_geometrically(&self) -> bool {
        false
    }
}

impl BallSource for RootedGraph {
    fn ball(&self, radius: usize) -> Result<LocalBall> {
        Ok(self.local_ball(radius))
    }
}

const ROOT_STREAM: u64 = 1;
const HEAVY_TAIL_STREAM: u64 = 2;
const PGW_STREAM: u64 = 3;
const GRAPH_STREAM: u64 = 4;

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed from the distribution seed, a stream tag and a counter.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    Z,
    Z2,
    /// `Z` with extra edges between points at distance 2.
    ZNextNearest,
    /// `Z^2` plus one diagonal per square.
    Triangular,
}

impl Lattice {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Lattice::Z => &[(1, 0), (-1, 0)],
            Lattice::Z2 => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Lattice::ZNextNearest => &[(1, 0), (-1, 0), (2, 0), (-2, 0)],
            Lattice::Triangular => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)],
        }
    }

    pub fn degree(self) -> usize {
        self.offsets().len()
    }

    fn vertex_limit(self) -> usize {
        20_000_000
    }

    fn name(self) -> &'static str {
        match self {
            Lattice::Z => "z",
            Lattice::Z2 => "z2",
            Lattice::ZNextNearest => "z_next_nearest",
            Lattice::Triangular => "triangular",
        }
    }

    fn ball_size(self, radius: usize) -> usize {
        let r = radius.min(1 << 40);
        match self {
            Lattice::Z => 2 * r + 1,
            Lattice::ZNextNearest => 4 * r + 1,
            Lattice::Z2 => 2 * r * r + 2 * r + 1,
            Lattice::Triangular => 3 * r * r + 3 * r + 1,
        }
    }
}

/// Ball of the lattice around the origin, with the coordinates of each
/// ball vertex. Every vertex has unit-weight edges to its lattice
/// neighbours.
pub fn lattice_ball(lattice: Lattice, radius: usize) -> Result<(LocalBall, Vec<(i64, i64)>)> {
    let size = lattice.ball_size(radius);
    if size > lattice.vertex_limit() {
        return Err(Error::RadiusTooLarge {
            family: lattice.name().into(),
            requested: radius,
            limit: (1..).find(|&r| lattice.ball_size(r) > lattice.vertex_limit()).unwrap() - 1,
        });
    }
    let offsets = lattice.offsets();
    let mut label: HashMap<(i64, i64), usize> = HashMap::with_capacity(size);
    let mut coords = Vec::with_capacity(size);
    let mut depth = Vec::with_capacity(size);
    label.insert((0, 0), 0);
    coords.push((0, 0));
    depth.push(0usize);
    let mut head = 0;
    while head < coords.len() {
        let (x, y) = coords[head];
        let d = depth[head];
        head += 1;
        if d == radius {
            continue;
        }
        for &(dx, dy) in offsets {
            let p = (x + dx, y + dy);
            if let std::collections::hash_map::Entry::Vacant(e) = label.entry(p) {
                e.insert(coords.len());
                coords.push(p);
                depth.push(d + 1);
            }
        }
    }
    let n = coords.len();
    let mut boundary = vec![0.0; n];
    let mut edges = Vec::with_capacity(n * offsets.len() / 2);
    for (i, &(x, y)) in coords.iter().enumerate() {
        for &(dx, dy) in offsets {
            match label.get(&(x + dx, y + dy)) {
                Some(&j) if i < j => edges.push(Edge::new(i, j, 1.0)),
                Some(_) => {}
                None => boundary[i] += 1.0,
            }
        }
    }
    let graph = WeightedMultigraph::new(n, edges)?;
    let ball = LocalBall::from_parts(RootedGraph::new(graph, 0)?, radius, boundary, None)?;
    Ok((ball, coords))
}

const WEIGHT_LIMIT: f64 = 1e300;

/// A radial quotient that is a path: level `i` has mass `masses[i]`, the
/// edge between levels `i` and `i + 1` has total weight `weights[i]`.
fn lumped_path(
    family: &str,
    radius: usize,
    weight: impl Fn(usize) -> f64,
    mass: impl Fn(usize) -> f64,
    root_loop: Option<f64>,
) -> Result<LocalBall> {
    let outer = weight(radius);
    if !(outer.is_finite() && outer <= WEIGHT_LIMIT) {
        let limit = (0..radius).rev().find(|&r| weight(r) <= WEIGHT_LIMIT).unwrap_or(0);
        return Err(Error::RadiusTooLarge {
            family: family.into(),
            requested: radius,
            limit,
        });
    }
    let mut edges: Vec<Edge> = (0..radius).map(|i| Edge::new(i, i + 1, weight(i))).collect();
    if let Some(w) = root_loop {
        edges.push(Edge::new(0, 0, w));
    }
    let graph = WeightedMultigraph::new(radius + 1, edges)?;
    let mut boundary = vec![0.0; radius + 1];
    boundary[radius] = outer;
    let masses = (0..=radius).map(mass).collect();
    LocalBall::from_parts(RootedGraph::new(graph, 0)?, radius, boundary, Some(masses))
}

/// Radial quotient of the ball in the `d`-regular tree.
pub fn regular_tree_ball(d: usize, radius: usize) -> Result<LocalBall> {
    let (d, b) = (d as f64, (d - 1) as f64);
    lumped_path(
        "regular_tree",
        radius,
        |i| d * b.powi(i as i32),
        |i| if i == 0 { 1.0 } else { d * b.powi(i as i32 - 1) },
        None,
    )
}

/// Radial quotient of the ball in the path `o - a - b` with a `d`-regular
/// tree rooted at `b`, optionally with a unit loop at `o`.
pub fn loop_path_ball(d: usize, with_loop: bool, radius: usize) -> Result<LocalBall> {
    let (d, b) = (d as f64, (d - 1) as f64);
    lumped_path(
        "loop_path",
        radius,
        |i| if i < 2 { 1.0 } else { d * b.powi(i as i32 - 2) },
        |i| if i < 3 { 1.0 } else { d * b.powi(i as i32 - 3) },
        with_loop.then_some(1.0),
    )
}

/// Explicit ball of a spherically symmetric tree in which every vertex at
/// depth `i` has `branching(i)` children. Returns the ball and the children
/// of each ball vertex.
pub fn explicit_radial_tree(
    branching: impl Fn(usize) -> usize,
    radius: usize,
    root_loop: Option<f64>,
) -> Result<(LocalBall, Vec<Vec<VertexId>>)> {
    let mut depth = vec![0usize];
    let mut children: Vec<Vec<VertexId>> = vec![Vec::new()];
    let mut edges = Vec::new();
    let mut boundary = vec![0.0];
    let mut head = 0;
    while head < depth.len() {
        let dv = depth[head];
        let k = branching(dv);
        if dv == radius {
            boundary[head] = k as f64;
        } else {
            for _ in 0..k {
                let c = depth.len();
                depth.push(dv + 1);
                children.push(Vec::new());
                boundary.push(0.0);
                children[head].push(c);
                edges.push(Edge::new(head, c, 1.0));
            }
            if depth.len() > 5_000_000 {
                return Err(Error::RadiusTooLarge {
                    family: "explicit_tree".into(),
                    requested: radius,
                    limit: dv,
                });
            }
        }
        head += 1;
    }
    if let Some(w) = root_loop {
        edges.push(Edge::new(0, 0, w));
    }
    let graph = WeightedMultigraph::new(depth.len(), edges)?;
    let ball = LocalBall::from_parts(RootedGraph::new(graph, 0)?, radius, boundary, None)?;
    Ok((ball, children))
}

fn regular_branching(d: usize) -> impl Fn(usize) -> usize {
    move |i| if i == 0 { d } else { d - 1 }
}

fn loop_path_branching(d: usize) -> impl Fn(usize) -> usize {
    move |i| match i {
        0 | 1 => 1,
        2 => d,
        _ => d - 1,
    }
}

/// The heavy-tailed variable `X_m` of one sample: `floor(U^-2)` for a
/// uniform `U` in `(0, 1]`, so `P[X >= m] = 1/sqrt(m)` for integers `m >= 1`.
pub fn heavy_tail_x(seed: u64, index: u64, m: i64) -> u64 {
    let key = derive_seed(seed, HEAVY_TAIL_STREAM, index);
    let h = splitmix(key ^ splitmix(m as u64));
    let u = ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    (1.0 / (u * u)).floor() as u64
}

/// Exponents beyond this are clamped when forming the weight `e^-X`.
pub const HEAVY_TAIL_EXPONENT_CAP: u64 = 700;

fn heavy_tail_weight(seed: u64, index: u64, x: i64) -> f64 {
    // edge (x, x + 1): unit when x is even, e^-X_m on (2m - 1, 2m)
    if x.rem_euclid(2) == 0 {
        1.0
    } else {
        let m = (x + 1) / 2;
        let exponent = heavy_tail_x(seed, index, m).min(HEAVY_TAIL_EXPONENT_CAP);
        (-(exponent as f64)).exp()
    }
}

const HEAVY_TAIL_RADIUS_LIMIT: usize = 1 << 22;

fn heavy_tail_ball(seed: u64, index: u64, radius: usize) -> Result<LocalBall> {
    if radius > HEAVY_TAIL_RADIUS_LIMIT {
        return Err(Error::RadiusTooLarge {
            family: "heavy_tail_z".into(),
            requested: radius,
            limit: HEAVY_TAIL_RADIUS_LIMIT,
        });
    }
    let r = radius as i64;
    let label = |x: i64| if x > 0 { (2 * x - 1) as usize } else { (-2 * x) as usize };
    let edges = (-r..r)
        .map(|x| Edge::new(label(x), label(x + 1), heavy_tail_weight(seed, index, x)))
        .collect();
    let n = 2 * radius + 1;
    let mut boundary = vec![0.0; n];
    boundary[label(r)] += heavy_tail_weight(seed, index, r);
    boundary[label(-r)] += heavy_tail_weight(seed, index, -r - 1);
    let graph = WeightedMultigraph::new(n, edges)?;
    LocalBall::from_parts(RootedGraph::new(graph, 0)?, radius, boundary, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PgwConditioning {
    None,
    /// Reject samples whose tree dies out before the working radius.
    SurvivalAttempted,
}

const PGW_VERTEX_LIMIT: usize = 4_000_000;
const PGW_ATTEMPT_LIMIT: u64 = 10_000;

/// Augmented Poisson Galton-Watson tree to `radius`: every vertex, the root
/// included, has Poisson(`mean`) children. Child counts are drawn in BFS
/// order, so balls of different radii from one stream are nested.
fn pgw_ball(mean: f64, stream: u64, radius: usize) -> Result<LocalBall> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let poisson = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut depth = vec![0usize];
    let mut boundary = vec![0.0];
    let mut edges = Vec::new();
    let mut head = 0;
    while head < depth.len() {
        let k = poisson.sample(&mut rng) as usize;
        if depth[head] == radius {
            boundary[head] = k as f64;
        } else {
            for _ in 0..k {
                edges.push(Edge::new(head, depth.len(), 1.0));
                depth.push(depth[head] + 1);
                boundary.push(0.0);
            }
            if depth.len() > PGW_VERTEX_LIMIT {
                return Err(Error::RadiusTooLarge {
                    family: "pgw".into(),
                    requested: radius,
                    limit: depth[head],
                });
            }
        }
        head += 1;
    }
    let graph = WeightedMultigraph::new(depth.len(), edges)?;
    LocalBall::from_parts(RootedGraph::new(graph, 0)?, radius, boundary, None)
}

fn pgw_survives(mean: f64, stream: u64, working_radius: usize) -> Result<bool> {
    let ball = pgw_ball(mean, stream, working_radius)?;
    Ok(ball.layer_ends().len() == working_radius + 1)
}

/// Uniformly random simple connected `d`-regular graph on `n` vertices, by
/// the configuration model with rejection.
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<WeightedMultigraph> {
    if d == 0 || d >= n || (n * d) % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    for _ in 0..10_000 {
        stubs.shuffle(&mut rng);
        let mut seen = std::collections::HashSet::with_capacity(n * d / 2);
        let simple = stubs.chunks(2).all(|p| {
            let (u, v) = (p[0].min(p[1]), p[0].max(p[1]));
            u != v && seen.insert((u, v))
        });
        if !simple {
            continue;
        }
        let edges = stubs.chunks(2).map(|p| Edge::new(p[0], p[1], 1.0)).collect();
        let g = WeightedMultigraph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidArgument(format!(
        "configuration model found no simple connected {d}-regular graph on {n} vertices"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Star { leaves: usize },
    Torus { n: usize },
    RandomRegular { n: usize, d: usize },
    /// A graph supplied by the caller.
    Explicit { label: String },
    Z,
    Z2,
    ZNextNearest,
    Triangular,
    RegularTree { d: usize },
    LoopPath { d: usize, with_loop: bool },
    HeavyTailZ,
    Pgw {
        mean: f64,
        conditioning: PgwConditioning,
        working_radius: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    FiniteUniformRoot,
    FixedGenerator,
    Sampler,
}

#[derive(Clone, Debug)]
pub struct RootedDistribution {
    family: Family,
    weight_scale: f64,
    seed: u64,
    enumerate: bool,
    finite: Option<Arc<WeightedMultigraph>>,
}

#[derive(Serialize)]
struct Descriptor<'a> {
    #[serde(flatten)]
    family: &'a Family,
    weight_scale: f64,
    seed: u64,
    enumerate_roots: bool,
}

impl RootedDistribution {
    pub fn new(family: Family, seed: u64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let finite = match &family {
            Family::Cycle { n } if *n < 3 => return bad(format!("cycle needs n >= 3, got {n}")),
            Family::Cycle { n } => Some(families::cycle(*n)?),
            Family::Path { n } => Some(families::path(*n)?),
            Family::Complete { n } => Some(families::complete(*n)?),
            Family::Star { leaves } => Some(families::star(*leaves)?),
            Family::Torus { n } if *n < 3 => return bad(format!("torus needs n >= 3, got {n}")),
            Family::Torus { n } => Some(families::torus(*n)?),
            Family::RandomRegular { n, d } => Some(random_regular_graph(
                *n,
                *d,
                derive_seed(seed, GRAPH_STREAM, 0),
            )?),
            Family::Explicit { .. } => {
                return bad("explicit graphs are built with uniform_root".into())
            }
            Family::RegularTree { d } | Family::LoopPath { d, .. } if *d < 3 => {
                return bad(format!("tree degree must be at least 3, got {d}"))
            }
            Family::Pgw { mean, .. } if !(*mean > 0.0 && mean.is_finite()) => {
                return bad(format!("PGW mean must be positive, got {mean}"))
            }
            _ => None,
        };
        Ok(RootedDistribution {
            family,
            weight_scale: 1.0,
            seed,
            enumerate: false,
            finite: finite.map(Arc::new),
        })
    }

    /// `g` rooted at a uniformly random vertex.
    pub fn uniform_root(g: WeightedMultigraph, label: impl Into<String>) -> Self {
        RootedDistribution {
            family: Family::Explicit {
                label: label.into(),
            },
            weight_scale: 1.0,
            seed: 0,
            enumerate: false,
            finite: Some(Arc::new(g)),
        }
    }

    pub fn lattice(lattice: Lattice) -> Self {
        let family = match lattice {
            Lattice::Z => Family::Z,
            Lattice::Z2 => Family::Z2,
            Lattice::ZNextNearest => Family::ZNextNearest,
            Lattice::Triangular => Family::Triangular,
        };
        Self::new(family, 0).expect("lattices need no validation")
    }

    pub fn regular_tree(d: usize) -> Result<Self> {
        Self::new(Family::RegularTree { d }, 0)
    }

    pub fn heavy_tail_z(seed: u64) -> Self {
        Self::new(Family::HeavyTailZ, seed).expect("no parameters")
    }

    pub fn pgw(mean: f64, conditioning: PgwConditioning, working_radius: usize, seed: u64) -> Result<Self> {
        Self::new(
            Family::Pgw {
                mean,
                conditioning,
                working_radius,
            },
            seed,
        )
    }

    /// Same law with every weight multiplied by `factor`.
    pub fn with_weight_scale(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight scale must be positive, got {factor}"
            )));
        }
        self.weight_scale *= factor;
        Ok(self)
    }

    /// Average over every root instead of sampling (finite graphs only).
    pub fn enumerated(mut self) -> Self {
        self.enumerate = self.finite.is_some();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    pub fn finite_graph(&self) -> Option<&WeightedMultigraph> {
        self.finite.as_deref()
    }

    pub fn kind(&self) -> DistKind {
        match self.family {
            _ if self.finite.is_some() => DistKind::FiniteUniformRoot,
            Family::HeavyTailZ | Family::Pgw { .. } => DistKind::Sampler,
            _ => DistKind::FixedGenerator,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite.is_some()
    }

    /// Every root sees the same network: vertex-transitive graphs.
    pub fn is_transitive(&self) -> bool {
        matches!(
            self.family,
            Family::Cycle { .. }
                | Family::Complete { .. }
                | Family::Torus { .. }
                | Family::Z
                | Family::Z2
                | Family::ZNextNearest
                | Family::Triangular
                | Family::RegularTree { .. }
        )
    }

    /// A single sample represents the whole law.
    pub fn is_deterministic(&self) -> bool {
        self.kind() == DistKind::FixedGenerator || (self.is_finite() && self.is_transitive())
    }

    /// [`samples`](Self::samples) covers the whole law, so its mean has no
    /// sampling error.
    pub fn is_exhaustive(&self) -> bool {
        self.is_deterministic() || self.enumerate
    }

    pub fn spectral_radius_bound(&self) -> Option<f64> {
        match self.family {
            Family::RegularTree { d } => Some(2.0 * ((d - 1) as f64).sqrt() / d as f64),
            _ => None,
        }
    }

    /// Degree of every vertex when the law is concentrated on a regular graph.
    pub fn regular_degree(&self) -> Option<usize> {
        match self.family {
            Family::Cycle { .. } => Some(2),
            Family::Complete { n } => Some(n - 1),
            Family::Torus { .. } => Some(4),
            Family::RandomRegular { d, .. } | Family::RegularTree { d } => Some(d),
            Family::Z => Some(2),
            Family::Z2 | Family::ZNextNearest => Some(4),
            Family::Triangular => Some(6),
            _ => None,
        }
    }

    /// JSON block identifying the law for result records.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(Descriptor {
            family: &self.family,
            weight_scale: self.weight_scale,
            seed: self.seed,
            enumerate_roots: self.enumerate,
        })
        .expect("descriptor serializes")
    }

    /// Sample number `index`; deterministic laws ignore the index.
    pub fn sample(&self, index: u64) -> Result<Sample> {
        let source = match (&self.family, &self.finite) {
            (_, Some(g)) => {
                let root = if self.is_transitive() {
                    0
                } else {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, ROOT_STREAM, index));
                    rng.random_range(0..g.vertex_count())
                };
                SampleSource::Rooted(RootedGraph::new((**g).clone(), root)?)
            }
            (Family::Z, _) => SampleSource::Lattice(Lattice::Z),
            (Family::Z2, _) => SampleSource::Lattice(Lattice::Z2),
            (Family::ZNextNearest, _) => SampleSource::Lattice(Lattice::ZNextNearest),
            (Family::Triangular, _) => SampleSource::Lattice(Lattice::Triangular),
            (Family::RegularTree { d }, _) => SampleSource::RegularTree { d: *d },
            (&Family::LoopPath { d, with_loop }, _) => SampleSource::LoopPath { d, with_loop },
            (Family::HeavyTailZ, _) => SampleSource::HeavyTail {
                seed: self.seed,
                index,
            },
            (
                &Family::Pgw {
                    mean,
                    conditioning,
                    working_radius,
                },
                _,
            ) => {
                let mut attempts = 0;
                let stream = loop {
                    let stream =
                        derive_seed(derive_seed(self.seed, PGW_STREAM, index), PGW_STREAM, attempts);
                    attempts += 1;
                    if conditioning == PgwConditioning::None
                        || pgw_survives(mean, stream, working_radius)?
                    {
                        break stream;
                    }
                    if attempts >= PGW_ATTEMPT_LIMIT {
                        return Err(Error::InvalidArgument(format!(
                            "no PGW({mean}) tree survived to radius {working_radius} in {attempts} attempts"
                        )));
                    }
                };
                SampleSource::Pgw {
                    mean,
                    stream,
                    attempts,
                }
            }
            (Family::Cycle { .. }, None)
            | (Family::Path { .. }, None)
            | (Family::Complete { .. }, None)
            | (Family::Star { .. }, None)
            | (Family::Torus { .. }, None)
            | (Family::RandomRegular { .. }, None)
            | (Family::Explicit { .. }, None) => unreachable!("finite families carry their graph"),
        };
        Ok(Sample {
            source,
            scale: self.weight_scale,
            index,
        })
    }

    /// The samples an estimator should average over when `requested` are
    /// asked for: one for deterministic laws, every root in enumeration mode.
    pub fn samples(&self, requested: usize) -> Result<Vec<Sample>> {
        if self.is_deterministic() {
            return Ok(vec![self.sample(0)?]);
        }
        if self.enumerate {
            let g = self.finite.as_ref().expect("enumeration needs a finite graph");
            return (0..g.vertex_count())
                .map(|root| {
                    Ok(Sample {
                        source: SampleSource::Rooted(RootedGraph::new((**g).clone(), root)?),
                        scale: self.weight_scale,
                        index: root as u64,
                    })
                })
                .collect();
        }
        (0..requested as u64).map(|i| self.sample(i)).collect()
    }
}

/// Fraction of PGW attempts rejected by the survival condition over the
/// first `samples` samples.
pub fn pgw_rejection_rate(dist: &RootedDistribution, samples: usize) -> Result<f64> {
    let mut attempts = 0u64;
    let mut accepted = 0u64;
    for i in 0..samples as u64 {
        match dist.sample(i) {
            Ok(s) => {
                attempts += s.attempts();
                accepted += 1;
            }
            Err(Error::InvalidArgument(_)) => attempts += PGW_ATTEMPT_LIMIT,
            Err(e) => return Err(e),
        }
    }
    Ok(1.0 - accepted as f64 / attempts as f64)
}

#[derive(Clone, Debug)]
enum SampleSource {
    Rooted(RootedGraph),
    Lattice(Lattice),
    RegularTree { d: usize },
    LoopPath { d: usize, with_loop: bool },
    HeavyTail { seed: u64, index: u64 },
    Pgw { mean: f64, stream: u64, attempts: u64 },
}

/// One rooted network drawn from a distribution.
#[derive(Clone, Debug)]
pub struct Sample {
    source: SampleSource,
    scale: f64,
    index: u64,
}

impl Sample {
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Attempts spent by rejection sampling (1 without conditioning).
    pub fn attempts(&self) -> u64 {
        match self.source {
            SampleSource::Pgw { attempts, .. } => attempts,
            _ => 1,
        }
    }

    /// The finite rooted graph, for uniformly rooted finite laws.
    pub fn rooted_graph(&self) -> Option<&RootedGraph> {
        match &self.source {
            SampleSource::Rooted(g) => Some(g),
            _ => None,
        }
    }

    /// Ball without radial lumping, with per-vertex children lists when the
    /// network is a spherically symmetric tree.
    pub fn explicit_ball(&self, radius: usize) -> Result<(LocalBall, ExplicitLayout)> {
        let (ball, layout) = match &self.source {
            SampleSource::Lattice(l) => {
                let (ball, coords) = lattice_ball(*l, radius)?;
                (ball, ExplicitLayout::Coordinates(coords))
            }
            SampleSource::RegularTree { d } => {
                let (ball, children) = explicit_radial_tree(regular_branching(*d), radius, None)?;
                (ball, ExplicitLayout::Children(children))
            }
            SampleSource::LoopPath { d, with_loop } => {
                let (ball, children) = explicit_radial_tree(
                    loop_path_branching(*d),
                    radius,
                    with_loop.then_some(1.0),
                )?;
                (ball, ExplicitLayout::Children(children))
            }
            _ => (self.unscaled_ball(radius)?, ExplicitLayout::Plain),
        };
        Ok((self.apply_scale(ball)?, layout))
    }

    fn unscaled_ball(&self, radius: usize) -> Result<LocalBall> {
        match &self.source {
            SampleSource::Rooted(g) => Ok(g.local_ball(radius)),
            SampleSource::Lattice(l) => Ok(lattice_ball(*l, radius)?.0),
            SampleSource::RegularTree { d } => regular_tree_ball(*d, radius),
            SampleSource::LoopPath { d, with_loop } => loop_path_ball(*d, *with_loop, radius),
            SampleSource::HeavyTail { seed, index } => heavy_tail_ball(*seed, *index, radius),
            SampleSource::Pgw { mean, stream, .. } => pgw_ball(*mean, *stream, radius),
        }
    }

    fn apply_scale(&self, ball: LocalBall) -> Result<LocalBall> {
        if self.scale == 1.0 {
            Ok(ball)
        } else {
            ball.scaled(self.scale)
        }
    }
}

/// Extra structure of an explicit ball, used to build embeddings.
#[derive(Clone, Debug, PartialEq)]
pub enum ExplicitLayout {
    Plain,
    Coordinates(Vec<(i64, i64)>),
    Children(Vec<Vec<VertexId>>),
}

impl BallSource for Sample {
    fn ball(&self, radius: usize) -> Result<LocalBall> {
        self.apply_scale(self.unscaled_ball(radius)?)
    }

    fn spectral_radius_bound(&self) -> Option<f64> {
        match self.source {
            SampleSource::RegularTree { d } => Some(2.0 * ((d - 1) as f64).sqrt() / d as f64),
            _ => None,
        }
    }

    fn returns_decay_geometrically(&self) -> bool {
        matches!(
            self.source,
            SampleSource::RegularTree { .. } | SampleSource::LoopPath { .. }
        )
    }
}

/// How the low network embeds into the high one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    /// Same vertices and edges; the high side may add loops or weight.
    Identity,
    /// `Z` as the horizontal axis of `Z^2` (or of the triangular lattice).
    Coordinates,
    /// `Z` as a bi-infinite geodesic through the root of a tree.
    LineInTree,
    /// A spherically symmetric tree into one with at least as many children
    /// per vertex.
    TreeInTree,
}

/// Two laws with a per-sample domination witness; `high` dominates `low`.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub label: String,
    pub high: RootedDistribution,
    pub low: RootedDistribution,
    pub embedding: Embedding,
    /// The two laws differ, so strict entropy ordering is expected when both
    /// are unimodular.
    pub strict: bool,
    pub unimodular: bool,
}

impl CoupledPair {
    /// Witness that the radius-`radius` ball of high sample `index`
    /// dominates the corresponding ball of the low sample.
    pub fn witness(&self, index: u64, radius: usize) -> Result<DominationWitness> {
        let (small, small_layout) = self.low.sample(index)?.explicit_ball(radius)?;
        let (large, large_layout) = self.high.sample(index)?.explicit_ball(radius)?;
        let vertex_map = match (self.embedding, &small_layout, &large_layout) {
            (Embedding::Identity, _, _) => (0..small.vertex_count()).collect(),
            (Embedding::Coordinates, ExplicitLayout::Coordinates(a), ExplicitLayout::Coordinates(b)) => {
                let index: HashMap<(i64, i64), usize> =
                    b.iter().enumerate().map(|(i, &p)| (p, i)).collect();
                a.iter()
                    .map(|p| {
                        index.get(p).copied().ok_or_else(|| {
                            Error::InvalidWitness(format!("point {p:?} missing from the large ball"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            (Embedding::LineInTree, ExplicitLayout::Coordinates(a), ExplicitLayout::Children(ch)) => {
                let walk = |first: usize, steps: usize| {
                    let mut v = ch[0][first];
                    for _ in 1..steps {
                        v = ch[v][0];
                    }
                    v
                };
                a.iter()
                    .map(|&(x, _)| match x {
                        0 => 0,
                        x if x > 0 => walk(0, x as usize),
                        x => walk(1, (-x) as usize),
                    })
                    .collect()
            }
            (Embedding::TreeInTree, ExplicitLayout::Children(a), ExplicitLayout::Children(b)) => {
                let mut map = vec![usize::MAX; a.len()];
                map[0] = 0;
                for v in 0..a.len() {
                    for (k, &c) in a[v].iter().enumerate() {
                        map[c] = *b[map[v]].get(k).ok_or_else(|| {
                            Error::InvalidWitness(format!("vertex {v} has too few children to host"))
                        })?;
                    }
                }
                map
            }
            _ => {
                return Err(Error::InvalidWitness(format!(
                    "embedding {:?} does not apply to these layouts",
                    self.embedding
                )))
            }
        };
        let edge_map = match_edges(small.graph(), large.graph(), &vertex_map)?;
        Ok(DominationWitness {
            small: small.rooted().clone(),
            large: large.rooted().clone(),
            vertex_map,
            edge_map,
        })
    }
}

/// Map each edge of `small` to a distinct edge of `large` joining the image
/// endpoints, preferring one at least as heavy.
fn match_edges(
    small: &WeightedMultigraph,
    large: &WeightedMultigraph,
    vertex_map: &[VertexId],
) -> Result<Vec<usize>> {
    let mut by_ends: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (j, e) in large.edges().iter().enumerate() {
        by_ends.entry((e.u.min(e.v), e.u.max(e.v))).or_default().push(j);
    }
    let mut used = vec![false; large.edge_count()];
    small
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (a, b) = (vertex_map[e.u], vertex_map[e.v]);
            let candidates = by_ends.get(&(a.min(b), a.max(b))).map_or(&[][..], |v| v);
            let pick = candidates
                .iter()
                .copied()
                .find(|&j| !used[j] && large.edge(j).weight >= e.weight)
                .or_else(|| candidates.iter().copied().find(|&j| !used[j]))
                .ok_or_else(|| Error::InvalidWitness(format!("edge {i} has no image")))?;
            used[pick] = true;
            Ok(pick)
        })
        .collect()
}

/// Path `o - a - b` with a `d`-regular tree at `b`, without and with a unit
/// loop at the root.
pub fn loop_counterexample_pair(d: usize) -> Result<CoupledPair> {
    Ok(CoupledPair {
        label: format!("loop_path(d={d})"),
        high: RootedDistribution::new(Family::LoopPath { d, with_loop: true }, 0)?,
        low: RootedDistribution::new(Family::LoopPath { d, with_loop: false }, 0)?,
        embedding: Embedding::Identity,
        strict: true,
        unimodular: false,
    })
}

/// `base` against `base` with all weights multiplied by `factor > 1`.
pub fn coupled_weight_scaling(base: &RootedDistribution, factor: f64) -> Result<CoupledPair> {
    if !(factor > 1.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scaling factor must exceed 1, got {factor}"
        )));
    }
    Ok(CoupledPair {
        label: format!("{} x{factor}", base.descriptor()["family"].as_str().unwrap_or("?")),
        high: base.clone().with_weight_scale(factor)?,
        low: base.clone(),
        embedding: Embedding::Identity,
        strict: true,
        unimodular: true,
    })
}

/// Subgraph embeddings between fixed generators: `Z` in `Z^2`, `Z` in the
/// next-nearest-neighbour line, `Z^2` in the triangular lattice, `Z` in
/// `T_d`, and `T_d` in `T_{d+1}`.
pub fn embedding_pairs(d: usize) -> Result<Vec<CoupledPair>> {
    let z = RootedDistribution::lattice(Lattice::Z);
    let z2 = RootedDistribution::lattice(Lattice::Z2);
    let pair = |label: &str, high, low, embedding| CoupledPair {
        label: label.into(),
        high,
        low,
        embedding,
        strict: true,
        unimodular: true,
    };
    Ok(vec![
        pair("z in z2", z2.clone(), z.clone(), Embedding::Coordinates),
        pair(
            "z in z_next_nearest",
            RootedDistribution::lattice(Lattice::ZNextNearest),
            z.clone(),
            Embedding::Coordinates,
        ),
        pair(
            "z2 in triangular",
            RootedDistribution::lattice(Lattice::Triangular),
            z2,
            Embedding::Coordinates,
        ),
        pair(
            &format!("z in tree({d})"),
            RootedDistribution::regular_tree(d)?,
            z,
            Embedding::LineInTree,
        ),
        pair(
            &format!("tree({d}) in tree({})", d + 1),
            RootedDistribution::regular_tree(d + 1)?,
            RootedDistribution::regular_tree(d)?,
            Embedding::TreeInTree,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::verify_domination;
    use approx::assert_abs_diff_eq;

    fn induced_prefix_matches(small: &LocalBall, large: &LocalBall) {
        let n = small.vertex_count();
        let mut inner: Vec<(usize, usize, u64)> = large
            .graph()
            .edges()
            .iter()
            .filter(|e| e.u < n && e.v < n)
            .map(|e| (e.u.min(e.v), e.u.max(e.v), e.weight.to_bits()))
            .collect();
        let mut own: Vec<(usize, usize, u64)> = small
            .graph()
            .edges()
            .iter()
            .map(|e| (e.u.min(e.v), e.u.max(e.v), e.weight.to_bits()))
            .collect();
        inner.sort_unstable();
        own.sort_unstable();
        assert_eq!(own, inner);
        assert_eq!(large.count_within(small.radius()), n);
        assert_eq!(small.masses(), large.masses().map(|m| &m[..n]));
    }

    #[test]
    fn lattice_ball_examples() {
        let (z, coords) = lattice_ball(Lattice::Z, 2).unwrap();
        assert_eq!((z.vertex_count(), z.graph().edge_count()), (5, 4));
        assert_eq!(coords[0], (0, 0));
        let (z2, _) = lattice_ball(Lattice::Z2, 1).unwrap();
        assert_eq!((z2.vertex_count(), z2.graph().edge_count()), (5, 4));
        assert_eq!(z2.boundary().iter().sum::<f64>(), 12.0);
        let (tri, _) = lattice_ball(Lattice::Triangular, 1).unwrap();
        assert_eq!(tri.vertex_count(), 7);
        for r in 0..6 {
            assert_eq!(lattice_ball(Lattice::Z2, r).unwrap().0.vertex_count(), Lattice::Z2.ball_size(r));
            assert_eq!(
                lattice_ball(Lattice::Triangular, r).unwrap().0.vertex_count(),
                Lattice::Triangular.ball_size(r)
            );
        }
    }

    #[test]
    fn explicit_tree_counts() {
        let (t, _) = explicit_radial_tree(regular_branching(3), 2, None).unwrap();
        assert_eq!((t.vertex_count(), t.graph().edge_count()), (10, 9));
        assert_eq!(t.boundary().iter().sum::<f64>(), 12.0);
    }

    #[test]
    fn lumped_tree_matches_explicit_counts() {
        let lumped = regular_tree_ball(4, 3).unwrap();
        let (explicit, _) = explicit_radial_tree(regular_branching(4), 3, None).unwrap();
        assert_eq!(lumped.total_mass(), explicit.vertex_count() as f64);
        assert_eq!(lumped.total_walk_degree(), explicit.total_walk_degree());
        assert_eq!(lumped.walk_degree(0), 4.0);
        for level in 1..=3 {
            assert_eq!(lumped.walk_degree(level), 4.0 * lumped.mass(level));
        }
        assert!(regular_tree_ball(3, 2000).is_err());
    }

    #[test]
    fn lumped_loop_path_degrees() {
        let b = loop_path_ball(20, true, 5).unwrap();
        assert_eq!(b.walk_degree(0), 2.0);
        assert_eq!(b.laplacian_diagonal(0), 1.0);
        assert_eq!(b.walk_degree(1), 2.0);
        assert_eq!(b.walk_degree(2), 21.0);
        assert_eq!(b.walk_degree(4), 20.0 * b.mass(4));
    }

    #[test]
    fn lumped_return_probabilities_match_explicit() {
        use crate::walk::return_probs;
        for (lumped, explicit) in [
            (
                regular_tree_ball(3, 5).unwrap(),
                explicit_radial_tree(regular_branching(3), 5, None).unwrap().0,
            ),
            (
                loop_path_ball(4, true, 5).unwrap(),
                explicit_radial_tree(loop_path_branching(4), 5, Some(1.0)).unwrap().0,
            ),
        ] {
            let a = return_probs(&lumped, 10, true).unwrap();
            let b = return_probs(&explicit, 10, true).unwrap();
            for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fixed_generators_nest() {
        for dist in [
            RootedDistribution::lattice(Lattice::Z),
            RootedDistribution::lattice(Lattice::Z2),
            RootedDistribution::lattice(Lattice::ZNextNearest),
            RootedDistribution::lattice(Lattice::Triangular),
            RootedDistribution::regular_tree(3).unwrap(),
            RootedDistribution::new(Family::LoopPath { d: 5, with_loop: true }, 0).unwrap(),
            RootedDistribution::heavy_tail_z(11),
            RootedDistribution::pgw(2.0, PgwConditioning::None, 4, 3).unwrap(),
        ] {
            let s = dist.sample(2).unwrap();
            for r in 0..6 {
                induced_prefix_matches(&s.ball(r).unwrap(), &s.ball(r + 1).unwrap());
            }
        }
    }

    #[test]
    fn heavy_tail_structure() {
        let s = RootedDistribution::heavy_tail_z(5).sample(0).unwrap();
        let b = s.ball(3).unwrap();
        assert_eq!(b.vertex_count(), 7);
        // edge (0, 1) is a unit edge; (-1, 0) carries e^-X_0
        let w01 = b.graph().edges().iter().find(|e| (e.u, e.v) == (0, 1) || (e.u, e.v) == (1, 0)).unwrap();
        assert_eq!(w01.weight, 1.0);
        let expect = (-(heavy_tail_x(5, 0, 0).min(HEAVY_TAIL_EXPONENT_CAP) as f64)).exp();
        assert_eq!(b.walk_degree(0), 1.0 + expect);
        assert!(b.graph().edges().iter().all(|e| e.weight <= 1.0));
        assert!((1..1000).all(|m| heavy_tail_x(5, 0, m) >= 1));
    }

    #[test]
    fn samplers_are_reproducible() {
        let a = RootedDistribution::pgw(2.0, PgwConditioning::SurvivalAttempted, 6, 9).unwrap();
        let b = RootedDistribution::pgw(2.0, PgwConditioning::SurvivalAttempted, 6, 9).unwrap();
        for i in 0..5 {
            assert_eq!(a.sample(i).unwrap().ball(7).unwrap(), b.sample(i).unwrap().ball(7).unwrap());
        }
        let c = RootedDistribution::pgw(2.0, PgwConditioning::SurvivalAttempted, 6, 10).unwrap();
        let differ = (0..5).any(|i| a.sample(i).unwrap().ball(7).unwrap() != c.sample(i).unwrap().ball(7).unwrap());
        assert!(differ);
    }

    #[test]
    fn pgw_root_degree_mean() {
        let dist = RootedDistribution::pgw(2.0, PgwConditioning::None, 0, 1).unwrap();
        let n = 10_000;
        let total: f64 = (0..n)
            .map(|i| dist.sample(i).unwrap().ball(1).unwrap().walk_degree(0))
            .sum();
        let mean = total / n as f64;
        // Poisson(2): sigma = sqrt(2)
        assert!((mean - 2.0).abs() <= 3.0 * (2.0f64 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn subcritical_pgw_is_mostly_rejected() {
        let dist = RootedDistribution::pgw(0.5, PgwConditioning::SurvivalAttempted, 8, 2).unwrap();
        let rate = pgw_rejection_rate(&dist, 3).unwrap();
        assert!(rate > 0.95, "rate {rate}");
    }

    #[test]
    fn uniform_root_examples() {
        let star = RootedDistribution::uniform_root(families::star(3).unwrap(), "star");
        let centre = (0..4000).filter(|&i| star.sample(i).unwrap().rooted_graph().unwrap().root() == 0).count();
        assert!((centre as f64 / 4000.0 - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / 4000.0).sqrt());

        let p3 = RootedDistribution::uniform_root(families::path(3).unwrap(), "p3").enumerated();
        let samples = p3.samples(1).unwrap();
        assert_eq!(samples.len(), 3);
        let mean: f64 = samples
            .iter()
            .map(|s| s.ball(usize::MAX).unwrap().laplacian_diagonal(0))
            .sum::<f64>()
            / 3.0;
        assert_abs_diff_eq!(mean, 4.0 / 3.0, epsilon = 1e-15);

        let torus = RootedDistribution::new(Family::Torus { n: 5 }, 0).unwrap();
        assert!(torus.is_deterministic());
        assert_eq!(torus.samples(100).unwrap().len(), 1);
    }

    #[test]
    fn random_regular_graph_is_simple_and_regular() {
        let g = random_regular_graph(200, 3, 7).unwrap();
        assert!((0..200).all(|v| g.walk_degree(v) == 3.0));
        assert!(!g.has_loops());
        assert!(g.is_connected());
        assert_eq!(g, random_regular_graph(200, 3, 7).unwrap());
        assert!(random_regular_graph(5, 3, 0).is_err());
    }

    #[test]
    fn descriptors_are_json() {
        let d = RootedDistribution::pgw(2.0, PgwConditioning::SurvivalAttempted, 5, 42).unwrap();
        let v = d.descriptor();
        assert_eq!(v["family"], "pgw");
        assert_eq!(v["seed"], 42);
        assert_eq!(v["conditioning"], "survival_attempted");
        let back: Family = serde_json::from_value(serde_json::json!({"family": "regular_tree", "d": 3})).unwrap();
        assert_eq!(back, Family::RegularTree { d: 3 });
    }

    #[test]
    fn witnesses_verify() {
        let mut pairs = embedding_pairs(3).unwrap();
        pairs.push(loop_counterexample_pair(20).unwrap());
        pairs.push(coupled_weight_scaling(&RootedDistribution::lattice(Lattice::Z), 2.0).unwrap());
        pairs.push(
            coupled_weight_scaling(&RootedDistribution::heavy_tail_z(3), 1.5).unwrap(),
        );
        for p in &pairs {
            for r in [0, 1, 3] {
                let w = p.witness(1, r).unwrap();
                let verdict = verify_domination(&w);
                assert!(verdict.holds, "{}: {:?}", p.label, verdict.diagnostic);
            }
        }
        // the reverse direction of a strict embedding is rejected
        let p = &pairs[0];
        let reversed = CoupledPair {
            high: p.low.clone(),
            low: p.high.clone(),
            ..p.clone()
        };
        assert!(reversed.witness(0, 2).is_err());
    }

    #[test]
    fn scaling_rejects_factor_one() {
        assert!(coupled_weight_scaling(&RootedDistribution::lattice(Lattice::Z), 1.0).is_err());
    }

    #[test]
    fn heavy_tail_law_at_small_m() {
        let n = 20_000u64;
        for m in [1u64, 2, 4] {
            let hits = (0..n).filter(|&i| heavy_tail_x(1, i, 0) >= m).count() as f64 / n as f64;
            let p = 1.0 / (m as f64).sqrt();
            assert!((hits - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12);
        }
    }
}

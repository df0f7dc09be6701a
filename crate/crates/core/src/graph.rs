//! Weighted multigraphs, rooted graphs, balls and wired quotients.
//!
//! Vertex ids are dense `0..n`. Parallel edges and loops are kept exactly as
//! given. Loops never enter the Laplacian; they count once toward the walk
//! degree, so `D (I - P)` is still the loopless Laplacian.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: f64,
}

impl Edge {
    pub fn new(u: VertexId, v: VertexId, weight: f64) -> Self {
        Edge { u, v, weight }
    }

    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    /// The endpoint opposite `x`; for a loop this is `x` itself.
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMultigraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

impl WeightedMultigraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut incident = vec![Vec::new(); vertex_count];
        for (index, e) in edges.iter().enumerate() {
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidWeight {
                    index,
                    weight: e.weight,
                });
            }
            for vertex in [e.u, e.v] {
                if vertex >= vertex_count {
                    return Err(Error::EndpointOutOfRange {
                        index,
                        vertex,
                        vertex_count,
                    });
                }
            }
            incident[e.u].push(index);
            if !e.is_loop() {
                incident[e.v].push(index);
            }
        }
        Ok(WeightedMultigraph {
            vertex_count,
            edges,
            incident,
        })
    }

    /// Convenience constructor from `(u, v, w)` triples.
    pub fn from_triples(vertex_count: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = triples.iter().map(|&(u, v, w)| Edge::new(u, v, w)).collect();
        Self::new(vertex_count, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &Edge {
        &self.edges[index]
    }

    /// Ids of the edges incident to `x`; a loop appears once.
    pub fn incident(&self, x: VertexId) -> &[usize] {
        &self.incident[x]
    }

    /// Neighbours of `x` with edge weights, following incidence order.
    pub fn neighbors(&self, x: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.incident[x].iter().map(move |&i| {
            let e = &self.edges[i];
            (e.other(x), e.weight)
        })
    }

    /// The Laplacian diagonal: total weight of non-loop edges at `x`.
    pub fn laplacian_diagonal(&self, x: VertexId) -> f64 {
        self.incident[x]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| !e.is_loop())
            .map(|e| e.weight)
            .sum()
    }

    /// Total weight of all edges at `x`, loops counted once.
    pub fn walk_degree(&self, x: VertexId) -> f64 {
        self.incident[x].iter().map(|&i| self.edges[i].weight).sum()
    }

    pub fn loop_weight(&self, x: VertexId) -> f64 {
        self.incident[x]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| e.is_loop())
            .map(|e| e.weight)
            .sum()
    }

    pub fn degree_report(&self) -> DegreeReport {
        let n = self.vertex_count;
        DegreeReport {
            laplacian_diagonal: (0..n).map(|x| self.laplacian_diagonal(x)).collect(),
            walk_degree: (0..n).map(|x| self.walk_degree(x)).collect(),
        }
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(Edge::is_loop)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Hop distances from `source`; `None` for other components.
    pub fn distances_from(&self, source: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].unwrap();
            for (y, _) in self.neighbors(x) {
                if dist[y].is_none() {
                    dist[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(Option::is_some)
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.u, e.v, e.weight * factor))
            .collect();
        Self::new(self.vertex_count, edges)
    }

    pub fn with_edge(&self, edge: Edge) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.push(edge);
        Self::new(self.vertex_count, edges)
    }

    pub fn without_edge(&self, index: usize) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.remove(index);
        Self::new(self.vertex_count, edges)
    }

    /// Contract edge `index`: its endpoints merge, the edge itself disappears
    /// and parallel copies become loops.
    pub fn contract_edge(&self, index: usize) -> Result<Self> {
        let e = self.edges[index];
        if e.is_loop() {
            return self.without_edge(index);
        }
        let (keep, gone) = (e.u.min(e.v), e.u.max(e.v));
        let relabel = |x: usize| -> usize {
            match x.cmp(&gone) {
                std::cmp::Ordering::Equal => keep,
                std::cmp::Ordering::Greater => x - 1,
                std::cmp::Ordering::Less => x,
            }
        };
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != index)
            .map(|(_, f)| Edge::new(relabel(f.u), relabel(f.v), f.weight))
            .collect();
        Self::new(self.vertex_count - 1, edges)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub laplacian_diagonal: Vec<f64>,
    pub walk_degree: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootedGraph {
    graph: WeightedMultigraph,
    root: VertexId,
}

impl RootedGraph {
    pub fn new(graph: WeightedMultigraph, root: VertexId) -> Result<Self> {
        if root >= graph.vertex_count() {
            return Err(Error::RootOutOfRange {
                root,
                vertex_count: graph.vertex_count(),
            });
        }
        Ok(RootedGraph { graph, root })
    }

    pub fn graph(&self) -> &WeightedMultigraph {
        &self.graph
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn into_parts(self) -> (WeightedMultigraph, VertexId) {
        (self.graph, self.root)
    }

    /// Induced ball of hop radius `radius`, relabelled in BFS order so the
    /// root becomes vertex 0.
    pub fn ball(&self, radius: usize) -> RootedGraph {
        self.local_ball(radius).rooted
    }

    /// Ball plus the weight of edges leaving it, for root-local computations.
    pub fn local_ball(&self, radius: usize) -> LocalBall {
        self.local_ball_with_origin(radius).0
    }

    /// As [`local_ball`](Self::local_ball); also returns the original id of
    /// each ball vertex.
    pub fn local_ball_with_origin(&self, radius: usize) -> (LocalBall, Vec<VertexId>) {
        let g = &self.graph;
        let n = g.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut order = vec![self.root];
        let mut depth = vec![0usize];
        label[self.root] = 0;
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            let dx = depth[head];
            head += 1;
            if dx == radius {
                continue;
            }
            for (y, _) in g.neighbors(x) {
                if label[y] == usize::MAX {
                    label[y] = order.len();
                    order.push(y);
                    depth.push(dx + 1);
                }
            }
        }
        let m = order.len();
        let mut boundary = vec![0.0; m];
        let mut edges = Vec::new();
        for e in g.edges() {
            match (label[e.u] != usize::MAX, label[e.v] != usize::MAX) {
                (true, true) => edges.push(Edge::new(label[e.u], label[e.v], e.weight)),
                (true, false) => boundary[label[e.u]] += e.weight,
                (false, true) => boundary[label[e.v]] += e.weight,
                (false, false) => {}
            }
        }
        let graph = WeightedMultigraph::new(m, edges).expect("induced subgraph is valid");
        let rooted = RootedGraph { graph, root: 0 };
        let ball = LocalBall::from_parts(rooted, radius, boundary, None)
            .expect("BFS labelling yields a valid ball");
        (ball, order)
    }

    /// Ball of `radius` plus a wiring vertex `z`: every edge leaving the ball
    /// is redirected to `z` with its weight, and each ball vertex gets one
    /// extra edge of weight `s` to `z` (omitted when `s == 0`).
    pub fn wired_quotient(&self, radius: usize, s: f64) -> Result<(RootedGraph, VertexId)> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "killing conductance must be finite and non-negative, got {s}"
            )));
        }
        let (ball, origin) = self.local_ball_with_origin(radius);
        let m = ball.vertex_count();
        let mut label = vec![usize::MAX; self.graph.vertex_count()];
        for (i, &x) in origin.iter().enumerate() {
            label[x] = i;
        }
        let z = m;
        let mut edges: Vec<Edge> = ball.graph().edges().to_vec();
        let mut crossing = 0usize;
        for e in self.graph.edges() {
            match (label[e.u] != usize::MAX, label[e.v] != usize::MAX) {
                (true, false) => {
                    edges.push(Edge::new(label[e.u], z, e.weight));
                    crossing += 1;
                }
                (false, true) => {
                    edges.push(Edge::new(label[e.v], z, e.weight));
                    crossing += 1;
                }
                _ => {}
            }
        }
        if crossing == 0 && s == 0.0 {
            return Err(Error::NoBoundary { radius });
        }
        if s > 0.0 {
            edges.extend((0..m).map(|x| Edge::new(x, z, s)));
        }
        let graph = WeightedMultigraph::new(m + 1, edges)?;
        Ok((RootedGraph { graph, root: 0 }, z))
    }
}

/// A finite piece of a (possibly infinite) rooted network around its root.
///
/// Vertices are numbered in non-decreasing hop distance from the root, which
/// is vertex 0. `boundary[x]` is the total weight of edges from `x` to
/// vertices outside the ball. When `masses` is present the ball is a radial
/// quotient: vertex `x` stands for `masses[x]` vertices of the underlying
/// graph, and edge weights are totals between classes. The root always has
/// mass 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalBall {
    rooted: RootedGraph,
    radius: usize,
    boundary: Vec<f64>,
    masses: Option<Vec<f64>>,
    layer_ends: Vec<usize>,
}

impl LocalBall {
    pub fn from_parts(
        rooted: RootedGraph,
        radius: usize,
        boundary: Vec<f64>,
        masses: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = rooted.graph.vertex_count();
        if rooted.root != 0 {
            return Err(Error::InvalidArgument("ball root must be vertex 0".into()));
        }
        if boundary.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: boundary.len(),
            });
        }
        if boundary.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidArgument(
                "boundary weights must be finite and non-negative".into(),
            ));
        }
        if let Some(m) = &masses {
            if m.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.len(),
                });
            }
            if m.iter().any(|x| !(x.is_finite() && *x > 0.0)) || m[0] != 1.0 {
                return Err(Error::InvalidArgument(
                    "masses must be positive with root mass 1".into(),
                ));
            }
        }
        let dist = rooted.graph.distances_from(0);
        let mut layer_ends = Vec::new();
        let mut previous = 0usize;
        for (x, d) in dist.iter().enumerate() {
            let d = d.ok_or_else(|| {
                Error::InvalidArgument(format!("ball vertex {x} is not connected to the root"))
            })?;
            if d < previous || d > radius {
                return Err(Error::InvalidArgument(format!(
                    "ball vertex {x} at distance {d} breaks BFS order (radius {radius})"
                )));
            }
            while layer_ends.len() < d {
                layer_ends.push(x);
            }
            previous = d;
        }
        layer_ends.push(n);
        Ok(LocalBall {
            rooted,
            radius,
            boundary,
            masses,
            layer_ends,
        })
    }

    pub fn rooted(&self) -> &RootedGraph {
        &self.rooted
    }

    pub fn graph(&self) -> &WeightedMultigraph {
        &self.rooted.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.rooted.graph.vertex_count()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    pub fn masses(&self) -> Option<&[f64]> {
        self.masses.as_deref()
    }

    pub fn mass(&self, x: VertexId) -> f64 {
        self.masses.as_ref().map_or(1.0, |m| m[x])
    }

    /// True when no edge leaves the ball: it is the root's whole component.
    pub fn is_complete(&self) -> bool {
        self.boundary.iter().all(|&b| b == 0.0)
    }

    /// `layer_ends()[d]` is the number of vertices at distance at most `d`.
    pub fn layer_ends(&self) -> &[usize] {
        &self.layer_ends
    }

    /// Number of vertices within hop distance `d` of the root.
    pub fn count_within(&self, d: usize) -> usize {
        self.layer_ends[d.min(self.layer_ends.len() - 1)]
    }

    pub fn walk_degree(&self, x: VertexId) -> f64 {
        self.rooted.graph.walk_degree(x) + self.boundary[x]
    }

    pub fn laplacian_diagonal(&self, x: VertexId) -> f64 {
        self.rooted.graph.laplacian_diagonal(x) + self.boundary[x]
    }

    /// Sum of walk degrees over the underlying (unlumped) vertices.
    pub fn total_walk_degree(&self) -> f64 {
        (0..self.vertex_count()).map(|x| self.walk_degree(x)).sum()
    }

    /// Total number of underlying vertices.
    pub fn total_mass(&self) -> f64 {
        match &self.masses {
            Some(m) => m.iter().sum(),
            None => self.vertex_count() as f64,
        }
    }

    /// The same ball with every edge and boundary weight multiplied by
    /// `factor`.
    pub fn scaled(&self, factor: f64) -> Result<LocalBall> {
        let graph = self.rooted.graph.scaled(factor)?;
        Ok(LocalBall {
            rooted: RootedGraph { graph, root: 0 },
            radius: self.radius,
            boundary: self.boundary.iter().map(|b| b * factor).collect(),
            masses: self.masses.clone(),
            layer_ends: self.layer_ends.clone(),
        })
    }

    /// Explicit wired network `H`: the ball plus a vertex `z` that receives
    /// the boundary weight of each vertex and a killing edge of weight
    /// `s * mass` from each vertex.
    pub fn wired(&self, s: f64) -> Result<(RootedGraph, VertexId)> {
        if self.is_complete() && s == 0.0 {
            return Err(Error::NoBoundary {
                radius: self.radius,
            });
        }
        let n = self.vertex_count();
        let z = n;
        let mut edges = self.graph().edges().to_vec();
        for x in 0..n {
            if self.boundary[x] > 0.0 {
                edges.push(Edge::new(x, z, self.boundary[x]));
            }
            if s > 0.0 {
                edges.push(Edge::new(x, z, s * self.mass(x)));
            }
        }
        let graph = WeightedMultigraph::new(n + 1, edges)?;
        Ok((RootedGraph { graph, root: 0 }, z))
    }
}

/// Certificate that `large` dominates `small`: an injective, root-preserving
/// embedding with edgewise weights no smaller on the large side.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationWitness {
    pub small: RootedGraph,
    pub large: RootedGraph,
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<usize>,
}

impl DominationWitness {
    pub fn identity(g: &RootedGraph) -> Self {
        DominationWitness {
            small: g.clone(),
            large: g.clone(),
            vertex_map: (0..g.graph.vertex_count()).collect(),
            edge_map: (0..g.graph.edge_count()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominationVerdict {
    pub holds: bool,
    /// The first failed condition when `holds` is false.
    pub diagnostic: Option<String>,
}

impl DominationVerdict {
    fn fail(message: String) -> Self {
        DominationVerdict {
            holds: false,
            diagnostic: Some(message),
        }
    }
}

/// Check a witness; no search is performed.
pub fn verify_domination(w: &DominationWitness) -> DominationVerdict {
    let (gs, gl) = (&w.small.graph, &w.large.graph);
    if w.vertex_map.len() != gs.vertex_count() {
        return DominationVerdict::fail(format!(
            "vertex map has {} entries for {} vertices",
            w.vertex_map.len(),
            gs.vertex_count()
        ));
    }
    let mut seen = vec![false; gl.vertex_count()];
    for (x, &y) in w.vertex_map.iter().enumerate() {
        if y >= gl.vertex_count() {
            return DominationVerdict::fail(format!("vertex {x} maps outside the large graph"));
        }
        if std::mem::replace(&mut seen[y], true) {
            return DominationVerdict::fail(format!("vertex map is not injective at image {y}"));
        }
    }
    if w.vertex_map[w.small.root] != w.large.root {
        return DominationVerdict::fail("root is not mapped to root".into());
    }
    if w.edge_map.len() != gs.edge_count() {
        return DominationVerdict::fail(format!(
            "edge map has {} entries for {} edges",
            w.edge_map.len(),
            gs.edge_count()
        ));
    }
    let mut used = vec![false; gl.edge_count()];
    for (i, &j) in w.edge_map.iter().enumerate() {
        if j >= gl.edge_count() {
            return DominationVerdict::fail(format!("edge {i} maps outside the large graph"));
        }
        if std::mem::replace(&mut used[j], true) {
            return DominationVerdict::fail(format!("edge map is not injective at image {j}"));
        }
        let (es, el) = (gs.edge(i), gl.edge(j));
        let (a, b) = (w.vertex_map[es.u], w.vertex_map[es.v]);
        let matches = (a == el.u && b == el.v) || (a == el.v && b == el.u);
        if !matches {
            return DominationVerdict::fail(format!(
                "edge {i} ({}, {}) maps to edge {j} ({}, {}) with mismatched endpoints",
                es.u, es.v, el.u, el.v
            ));
        }
        if es.weight > el.weight {
            return DominationVerdict::fail(format!(
                "edge {i} has weight {} above its image's {}",
                es.weight, el.weight
            ));
        }
    }
    DominationVerdict {
        holds: true,
        diagnostic: None,
    }
}

/// Serialize in the line-oriented graph format. Weights use Rust's shortest
/// round-trip representation, so parsing restores them bit-exactly.
pub fn write_graph(g: &RootedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "graph {} {} root={}",
        g.graph.vertex_count(),
        g.graph.edge_count(),
        g.root
    );
    for e in g.graph.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.weight);
    }
    out
}

pub fn parse_graph(text: &str) -> Result<RootedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "graph" {
        return Err(parse_err(
            hline,
            "expected `graph <vertex_count> <edge_count> root=<id>`".into(),
        ));
    }
    let n: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad vertex count `{}`", fields[1])))?;
    let m: usize = fields[2]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad edge count `{}`", fields[2])))?;
    let root: usize = fields[3]
        .strip_prefix("root=")
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| parse_err(hline, format!("bad root field `{}`", fields[3])))?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(line, "expected `u v w`".into()));
        }
        let u = f[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad endpoint `{}`", f[0])))?;
        let v = f[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad endpoint `{}`", f[1])))?;
        let w = f[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad weight `{}`", f[2])))?;
        edges.push(Edge::new(u, v, w));
    }
    if edges.len() != m {
        return Err(parse_err(
            hline,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    RootedGraph::new(WeightedMultigraph::new(n, edges)?, root)
}

/// Standard finite families.
pub mod families {
    use super::{Edge, WeightedMultigraph};
    use crate::error::Result;

    pub fn path(n: usize) -> Result<WeightedMultigraph> {
        let edges = (1..n).map(|i| Edge::new(i - 1, i, 1.0)).collect();
        WeightedMultigraph::new(n, edges)
    }

    pub fn cycle(n: usize) -> Result<WeightedMultigraph> {
        let edges = (0..n).map(|i| Edge::new(i, (i + 1) % n, 1.0)).collect();
        WeightedMultigraph::new(n, edges)
    }

    pub fn complete(n: usize) -> Result<WeightedMultigraph> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge::new(i, j, 1.0));
            }
        }
        WeightedMultigraph::new(n, edges)
    }

    pub fn star(leaves: usize) -> Result<WeightedMultigraph> {
        let edges = (1..=leaves).map(|i| Edge::new(0, i, 1.0)).collect();
        WeightedMultigraph::new(leaves + 1, edges)
    }

    /// The `n x n` discrete torus; vertex `(i, j)` is `i * n + j`.
    pub fn torus(n: usize) -> Result<WeightedMultigraph> {
        let mut edges = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let x = i * n + j;
                edges.push(Edge::new(x, i * n + (j + 1) % n, 1.0));
                edges.push(Edge::new(x, ((i + 1) % n) * n + j, 1.0));
            }
        }
        WeightedMultigraph::new(n * n, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c6() -> RootedGraph {
        RootedGraph::new(families::cycle(6).unwrap(), 3).unwrap()
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 1, 0.0)]),
            Err(Error::InvalidWeight { index: 0, .. })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 1, f64::INFINITY)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 1, 1.0), (0, 2, 1.0)]),
            Err(Error::EndpointOutOfRange { index: 1, vertex: 2, .. })
        ));
        assert_eq!(WeightedMultigraph::new(0, vec![]), Err(Error::EmptyGraph));
    }

    #[test]
    fn build_preserves_multiplicity_and_loops() {
        let g = WeightedMultigraph::from_triples(1, &[]).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 0));

        let g = WeightedMultigraph::from_triples(2, &[(0, 1, 1.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.incident(0).len(), 2);

        let g = WeightedMultigraph::from_triples(1, &[(0, 0, 2.5)]).unwrap();
        assert_eq!(g.laplacian_diagonal(0), 0.0);
        assert_eq!(g.walk_degree(0), 2.5);
    }

    #[test]
    fn degrees_agree_without_loops() {
        let g = families::torus(4).unwrap();
        let r = g.degree_report();
        assert_eq!(r.laplacian_diagonal, r.walk_degree);
        let g = g.with_edge(Edge::new(2, 2, 0.75)).unwrap();
        let r = g.degree_report();
        assert_eq!(r.walk_degree[2] - r.laplacian_diagonal[2], 0.75);
    }

    #[test]
    fn ball_of_radius_zero_keeps_root_loops() {
        let g = families::cycle(5)
            .unwrap()
            .with_edge(Edge::new(2, 2, 3.0))
            .unwrap();
        let b = RootedGraph::new(g, 2).unwrap().ball(0);
        assert_eq!(b.graph().vertex_count(), 1);
        assert_eq!(b.graph().edges(), &[Edge::new(0, 0, 3.0)]);
    }

    #[test]
    fn ball_of_cycle_is_centered_path() {
        let b = c6().local_ball(2);
        assert_eq!(b.vertex_count(), 5);
        assert_eq!(b.graph().edge_count(), 4);
        let dist = b.graph().distances_from(0);
        let ends: Vec<_> = (0..5).filter(|&x| b.graph().incident(x).len() == 1).collect();
        assert_eq!(ends.len(), 2);
        assert!(ends.iter().all(|&x| dist[x] == Some(2)));
        // both ends touch the antipodal vertex
        assert_eq!(b.boundary().iter().sum::<f64>(), 2.0);
        assert_eq!(b.layer_ends(), &[1, 3, 5]);
    }

    #[test]
    fn balls_are_nested() {
        let g = RootedGraph::new(families::torus(7).unwrap(), 10).unwrap();
        for r in 0..6 {
            let (small, o1) = g.local_ball_with_origin(r);
            let (big, o2) = g.local_ball_with_origin(r + 1);
            assert_eq!(&o2[..small.vertex_count()], &o1[..]);
            assert!(small.vertex_count() <= big.vertex_count());
        }
    }

    #[test]
    fn wired_quotient_on_path_segment() {
        // vertices 0..=4 model -2..=2; root at the middle
        let g = RootedGraph::new(families::path(5).unwrap(), 2).unwrap();
        let (h, z) = g.wired_quotient(1, 0.0).unwrap();
        assert_eq!(h.graph().vertex_count(), 4);
        assert_eq!(z, 3);
        let to_z: Vec<_> = h
            .graph()
            .edges()
            .iter()
            .filter(|e| e.v == z || e.u == z)
            .collect();
        assert_eq!(to_z.len(), 2);
        assert!(to_z.iter().all(|e| e.weight == 1.0 && e.u != 0));

        let (h, z) = g.wired_quotient(1, 1.0).unwrap();
        let at_z: f64 = h.graph().walk_degree(z);
        assert_eq!(at_z, 2.0 + 3.0);
    }

    #[test]
    fn wired_quotient_radius_zero() {
        let g = RootedGraph::new(families::star(3).unwrap(), 0).unwrap();
        let (h, z) = g.wired_quotient(0, 2.0).unwrap();
        assert_eq!(h.graph().vertex_count(), 2);
        assert_eq!(h.graph().edge_count(), 4);
        assert_eq!(h.graph().walk_degree(z), 5.0);
    }

    #[test]
    fn wired_quotient_needs_boundary_or_killing() {
        let g = RootedGraph::new(families::cycle(4).unwrap(), 0).unwrap();
        assert_eq!(
            g.wired_quotient(5, 0.0),
            Err(Error::NoBoundary { radius: 5 })
        );
        assert!(g.wired_quotient(5, 0.5).is_ok());
    }

    #[test]
    fn domination_identity_and_chord() {
        let c4 = RootedGraph::new(families::cycle(4).unwrap(), 0).unwrap();
        assert!(verify_domination(&DominationWitness::identity(&c4)).holds);

        let chorded = RootedGraph::new(
            families::cycle(4)
                .unwrap()
                .with_edge(Edge::new(0, 2, 1.0))
                .unwrap(),
            0,
        )
        .unwrap();
        let w = DominationWitness {
            small: c4.clone(),
            large: chorded,
            vertex_map: vec![0, 1, 2, 3],
            edge_map: vec![0, 1, 2, 3],
        };
        assert!(verify_domination(&w).holds);
    }

    #[test]
    fn domination_rejects_heavier_small_edge() {
        let small =
            RootedGraph::new(WeightedMultigraph::from_triples(2, &[(0, 1, 2.0)]).unwrap(), 0)
                .unwrap();
        let large =
            RootedGraph::new(WeightedMultigraph::from_triples(2, &[(0, 1, 1.0)]).unwrap(), 0)
                .unwrap();
        let w = DominationWitness {
            small,
            large,
            vertex_map: vec![0, 1],
            edge_map: vec![0],
        };
        let v = verify_domination(&w);
        assert!(!v.holds);
        assert!(v.diagnostic.unwrap().contains("weight"));
    }

    #[test]
    fn domination_rejects_bad_maps() {
        let c4 = RootedGraph::new(families::cycle(4).unwrap(), 0).unwrap();
        let mut w = DominationWitness::identity(&c4);
        w.vertex_map = vec![1, 0, 2, 3];
        assert!(!verify_domination(&w).holds);
        let mut w = DominationWitness::identity(&c4);
        w.edge_map = vec![0, 0, 2, 3];
        assert!(!verify_domination(&w).holds);
        let mut w = DominationWitness::identity(&c4);
        w.edge_map = vec![1, 0, 2, 3];
        assert!(!verify_domination(&w).holds);
    }

    #[test]
    fn contraction_and_deletion() {
        let g = WeightedMultigraph::from_triples(3, &[(0, 1, 1.0), (0, 1, 2.0), (1, 2, 3.0)])
            .unwrap();
        let c = g.contract_edge(0).unwrap();
        assert_eq!(c.vertex_count(), 2);
        assert!(c.edges().contains(&Edge::new(0, 0, 2.0)));
        assert!(c.edges().contains(&Edge::new(0, 1, 3.0)));
        assert_eq!(g.without_edge(1).unwrap().edge_count(), 2);
    }

    #[test]
    fn file_format_round_trip() {
        let g = WeightedMultigraph::from_triples(
            3,
            &[(0, 1, 0.1), (1, 2, 1.0 / 3.0), (2, 2, 2.5e-300), (0, 1, 7.0)],
        )
        .unwrap();
        let rooted = RootedGraph::new(g, 1).unwrap();
        let text = write_graph(&rooted);
        assert!(text.starts_with("graph 3 4 root=1\n"));
        let back = parse_graph(&text).unwrap();
        assert_eq!(back, rooted);
    }

    #[test]
    fn file_format_errors_carry_line() {
        let err = parse_graph("graph 2 1 root=0\n0 1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_graph("graph 2 2 root=0\n0 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_graph("# comment\n\ngraph 1 1 root=0\n0 0 1.5\n").is_ok());
    }
}

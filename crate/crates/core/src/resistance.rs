//! Effective resistance from the root to infinity with a killing edge of
//! conductance `s` (times the vertex mass) from every vertex.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::{BallSource, CoupledPair};
use crate::error::{Error, Result};
use crate::graph::{verify_domination, LocalBall};
use crate::linalg::{solve_spd_from, SparseSymmetric};
use crate::walk::ReturnSeries;

/// Largest radius the exhaustion tries; radii grow from 4 by half each step.
pub const MAX_RADIUS: usize = 1 << 14;
const FIRST_RADIUS: usize = 4;
const CG_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceValue {
    pub s: f64,
    pub value: f64,
    /// `value - 1/(d + s)`, computed without cancellation.
    pub excess: f64,
    pub radius_used: usize,
    /// Change between the last two radii.
    pub cauchy_gap: f64,
    /// Laplacian diagonal of the root, boundary included.
    pub root_diagonal: f64,
}

/// Excess resistance `u_o` of a single wired ball and the root diagonal.
#[derive(Clone, Debug)]
struct BallSolve {
    excess: f64,
    root_diagonal: f64,
    /// Full correction vector, for warm starts (empty on the tree path).
    u: Vec<f64>,
}

fn is_tree(ball: &LocalBall) -> bool {
    let g = ball.graph();
    let proper = g.edges().iter().filter(|e| !e.is_loop()).count();
    proper + 1 == g.vertex_count()
}

/// Leaves-to-root conductance recursion. Vertices are in BFS order, so the
/// parent of each edge is its lower endpoint.
fn tree_excess(ball: &LocalBall, s: f64) -> (f64, f64) {
    let g = ball.graph();
    let n = g.vertex_count();
    let mut acc: Vec<f64> = (0..n).map(|x| s * ball.mass(x) + ball.boundary()[x]).collect();
    let mut parent_edge: Vec<Option<(usize, f64)>> = vec![None; n];
    for e in g.edges().iter().filter(|e| !e.is_loop()) {
        let (p, c) = (e.u.min(e.v), e.u.max(e.v));
        parent_edge[c] = Some((p, e.weight));
    }
    let d = ball.laplacian_diagonal(0);
    let mut delta = 0.0;
    for c in (1..n).rev() {
        let (p, w) = parent_edge[c].expect("tree vertices have parents");
        let share = acc[c] / (w + acc[c]);
        if p == 0 {
            delta += w * (1.0 - share);
        }
        acc[p] += w * share;
    }
    let ds = d + s;
    (delta / (ds * (ds - delta)), d)
}

fn wired_operator(ball: &LocalBall, s: f64) -> Result<SparseSymmetric> {
    let g = ball.graph();
    let n = g.vertex_count();
    let diag = (0..n).map(|x| (x, x, ball.laplacian_diagonal(x) + s * ball.mass(x)));
    let off = g
        .edges()
        .iter()
        .filter(|e| !e.is_loop())
        .map(|e| (e.u, e.v, -e.weight));
    SparseSymmetric::from_triplets(n, diag.chain(off))
}

fn solve_ball(ball: &LocalBall, s: f64, warm: Option<&[f64]>) -> Result<BallSolve> {
    if s == 0.0 && ball.is_complete() {
        return Err(Error::NoBoundary {
            radius: ball.radius(),
        });
    }
    if is_tree(ball) {
        let (excess, root_diagonal) = tree_excess(ball, s);
        return Ok(BallSolve {
            excess,
            root_diagonal,
            u: Vec::new(),
        });
    }
    let a = wired_operator(ball, s)?;
    let d = ball.laplacian_diagonal(0);
    let mut b = vec![0.0; ball.vertex_count()];
    for (y, w) in ball.graph().neighbors(0) {
        if y != 0 {
            b[y] += w / (d + s);
        }
    }
    let guess = warm.map(|w| {
        let mut g = w.to_vec();
        g.resize(b.len(), 0.0);
        g
    });
    let out = solve_spd_from(&a, &b, CG_TOLERANCE, guess.as_deref())?;
    Ok(BallSolve {
        excess: out.x[0],
        root_diagonal: d,
        u: out.x,
    })
}

/// Resistance of a single ball's wired network, without exhaustion.
pub fn wired_resistance(ball: &LocalBall, s: f64) -> Result<ResistanceValue> {
    let solve = solve_ball(ball, s, None)?;
    let base = 1.0 / (solve.root_diagonal + s);
    Ok(ResistanceValue {
        s,
        value: base + solve.excess,
        excess: solve.excess,
        radius_used: ball.radius(),
        cauchy_gap: 0.0,
        root_diagonal: solve.root_diagonal,
    })
}

/// `R(s)` by exhaustion: radii grow until consecutive resistances differ by
/// at most `tol`. The wired resistance cannot decrease with the radius; a
/// decrease beyond round-off is reported as an error.
pub fn resistance<B: BallSource + ?Sized>(source: &B, s: f64, tol: f64) -> Result<ResistanceValue> {
    resistance_with_cap(source, s, tol, MAX_RADIUS)
}

pub fn resistance_with_cap<B: BallSource + ?Sized>(
    source: &B,
    s: f64,
    tol: f64,
    max_radius: usize,
) -> Result<ResistanceValue> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("s must be finite and non-negative, got {s}")));
    }
    let mut radius = FIRST_RADIUS.min(max_radius);
    // (solve, radius, resistance) at the previous radius
    let mut previous: Option<(BallSolve, usize, f64)> = None;
    let mut before: Option<f64> = None;
    loop {
        let ball = match source.ball(radius) {
            Ok(b) => b,
            Err(Error::RadiusTooLarge { .. }) if previous.is_some() => {
                let (_, r, last) = previous.unwrap();
                return Err(Error::ResistanceNonConvergence {
                    radius: r,
                    previous: before.unwrap_or(f64::NAN),
                    last,
                });
            }
            Err(e) => return Err(e),
        };
        let complete = ball.is_complete();
        let solve = solve_ball(&ball, s, previous.as_ref().map(|(p, _, _)| p.u.as_slice()))?;
        let r_now = 1.0 / (solve.root_diagonal + s) + solve.excess;
        let done = |gap: f64| ResistanceValue {
            s,
            value: r_now,
            excess: solve.excess,
            radius_used: radius,
            cauchy_gap: gap,
            root_diagonal: solve.root_diagonal,
        };
        if complete {
            return Ok(done(0.0));
        }
        if let Some((_, _, r_prev)) = previous {
            let slack = 1e-10 * r_now.abs() + 1e-14;
            if r_now < r_prev - slack {
                return Err(Error::ExhaustionNotMonotone {
                    radius,
                    previous: r_prev,
                    last: r_now,
                });
            }
            let gap = (r_now - r_prev).abs();
            if gap <= tol {
                return Ok(done(gap));
            }
            if radius >= max_radius {
                return Err(Error::ResistanceNonConvergence {
                    radius,
                    previous: r_prev,
                    last: r_now,
                });
            }
            before = Some(r_prev);
        }
        previous = Some((solve, radius, r_now));
        radius = (radius + (radius / 2).max(FIRST_RADIUS)).min(max_radius);
    }
}

/// `R(s)` at every point of `s_values`.
pub fn resistance_curve<B: BallSource + ?Sized>(
    source: &B,
    s_values: &[f64],
    tol: f64,
) -> Result<Vec<ResistanceValue>> {
    s_values.iter().map(|&s| resistance(source, s, tol)).collect()
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// Default plotting grid: 48 points in `[1e-4, 1e4]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 48)
}

pub fn write_curve_csv<W: Write>(mut out: W, curve: &[ResistanceValue]) -> Result<()> {
    writeln!(out, "s,R,radius,gap")?;
    for v in curve {
        writeln!(out, "{},{},{},{}", v.s, v.value, v.radius_used, v.cauchy_gap)?;
    }
    Ok(())
}

/// `sum_k p_k d^k / (d+s)^(k+1)` for a `d`-regular network with return
/// probabilities `rs` (`p_0 = 1`). Fails when the untruncated tail, bounded
/// with `p_k <= rho^k`, may exceed `1e-12`.
pub fn regular_closed_form(d: f64, rs: &ReturnSeries, s: f64, rho: f64) -> Result<f64> {
    let q = d / (d + s);
    let mut total = 1.0 / (d + s);
    let mut factor = 1.0 / (d + s);
    for &p in &rs.probabilities {
        factor *= q;
        total += p * factor;
    }
    let ratio = rho * q;
    let tail_bound = if ratio < 1.0 {
        ratio.powi(rs.len() as i32 + 1) / ((d + s) * (1.0 - ratio))
    } else {
        f64::INFINITY
    };
    if tail_bound >= 1e-12 {
        return Err(Error::InsufficientTerms {
            available: rs.len(),
            s,
            tail_bound,
        });
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct RayleighViolation {
    pub s: f64,
    pub high: f64,
    pub low: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RayleighReport {
    pub checked: usize,
    pub violations: Vec<RayleighViolation>,
}

impl RayleighReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `R_high(s) <= R_low(s)` at each `s`, allowing for the two
/// exhaustion gaps.
pub fn rayleigh_check<H, L>(high: &H, low: &L, s_values: &[f64], tol: f64) -> Result<RayleighReport>
where
    H: BallSource + ?Sized,
    L: BallSource + ?Sized,
{
    let mut violations = Vec::new();
    for &s in s_values {
        let a = resistance(high, s, tol)?;
        let b = resistance(low, s, tol)?;
        let slack = 2.0 * (a.cauchy_gap + b.cauchy_gap) + 1e-12 * b.value.abs();
        if a.value > b.value + slack {
            violations.push(RayleighViolation {
                s,
                high: a.value,
                low: b.value,
                slack,
            });
        }
    }
    Ok(RayleighReport {
        checked: s_values.len(),
        violations,
    })
}

/// Verify the coupling witness of sample `index` at `witness_radius`, then
/// run [`rayleigh_check`] on the coupled samples.
pub fn rayleigh_check_coupled(
    pair: &CoupledPair,
    index: u64,
    witness_radius: usize,
    s_values: &[f64],
    tol: f64,
) -> Result<RayleighReport> {
    let verdict = verify_domination(&pair.witness(index, witness_radius)?);
    if !verdict.holds {
        return Err(Error::InvalidWitness(
            verdict.diagnostic.unwrap_or_else(|| "witness rejected".into()),
        ));
    }
    rayleigh_check(&pair.high.sample(index)?, &pair.low.sample(index)?, s_values, tol)
}

//! Tree entropy estimators: the return-probability series, the resistance
//! integral, a truncated spectral measure, and limits of finite graphs.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::distributions::{BallSource, Family, RootedDistribution, Sample};
use crate::error::{Error, Result};
use crate::graph::{LocalBall, WeightedMultigraph};
use crate::linalg::{eig_small, SparseSymmetric};
use crate::quad::{adaptive_simpson, adaptive_simpson_batched, SimpsonOptions};
use crate::resistance::{resistance_with_cap, ResistanceValue, MAX_RADIUS};
use crate::spanning::tau;
use crate::walk::{
    default_abel_grid, return_probs, series_entropy_term, EntropyValue, SeriesEntropyTerm,
    SeriesMethod,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Series,
    Resistance,
    Spectral,
    FiniteLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub method: EstimatorKind,
    pub value: EntropyValue,
    /// 95% half-width from sampling plus the numerical error estimate;
    /// infinite (null in JSON) when some sample has no error estimate.
    pub error_bar: f64,
    pub samples: usize,
    pub diagnostics: serde_json::Value,
}

/// Sum in a fixed tree order, so results do not depend on thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// 95% half-width of the sample mean.
fn sampling_half_width(dist: &RootedDistribution, xs: &[f64]) -> f64 {
    if dist.is_exhaustive() {
        return 0.0;
    }
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (xs.len() - 1) as f64;
    1.96 * (var / xs.len() as f64).sqrt()
}

#[derive(Clone, Debug)]
pub struct SeriesOptions {
    /// Number of return probabilities `K`.
    pub k_max: usize,
    pub samples: usize,
    /// Tolerance on the extrapolation to `c = 1`.
    pub tol: f64,
    pub grid: Vec<f64>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            k_max: 1 << 14,
            samples: 100,
            tol: 1e-5,
            grid: default_abel_grid(),
        }
    }
}

/// Per-root series value of one sample.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesSample {
    pub index: u64,
    pub value: EntropyValue,
    pub term: SeriesEntropyTerm,
    /// Return probabilities actually used.
    pub k_used: usize,
    /// The root's component was finite and the series was centered.
    pub finite_component: bool,
}

/// Ball of `radius` or, if the generator refuses, of the largest radius it
/// accepts.
fn ball_up_to<B: BallSource + ?Sized>(source: &B, radius: usize) -> Result<LocalBall> {
    let mut r = radius;
    loop {
        match source.ball(r) {
            Err(Error::RadiusTooLarge { limit, .. }) if r > 0 => r = limit.min(r - 1),
            other => return other,
        }
    }
}

/// `log D(o) - sum_k p_k / k` for one sample. When the root's component is
/// finite the series is centered at the stationary distribution and
/// `log(sum D) / |V|` is subtracted, so that the mean over roots is
/// `log tau / |V|`.
pub fn series_sample(sample: &Sample, opts: &SeriesOptions) -> Result<SeriesSample> {
    let ball = match sample.rooted_graph() {
        Some(g) => g.local_ball(usize::MAX),
        None => ball_up_to(sample, opts.k_max.div_ceil(2))?,
    };
    let finite = ball.is_complete();
    if ball.walk_degree(0) == 0.0 {
        // an isolated root: one spanning tree on one vertex
        let term = SeriesEntropyTerm {
            value: EntropyValue::Finite(0.0),
            log_degree: f64::NEG_INFINITY,
            abel_values: Vec::new(),
            tail_bound: Some(0.0),
            error: 0.0,
            method: SeriesMethod::Settled,
        };
        return Ok(SeriesSample {
            index: sample.index(),
            value: term.value,
            term,
            k_used: 0,
            finite_component: true,
        });
    }
    let k_used = if finite {
        opts.k_max
    } else {
        opts.k_max.min(2 * ball.radius())
    };
    let rs = return_probs(&ball, k_used, true)?;
    let (value, term) = if finite {
        let term = series_entropy_term(&rs.centered(), &opts.grid, opts.tol)?;
        let shift = ball.total_walk_degree().ln() / ball.total_mass();
        let value = match term.value {
            EntropyValue::Finite(v) => EntropyValue::Finite(v - shift),
            EntropyValue::NegInfinity => EntropyValue::NegInfinity,
        };
        (value, term)
    } else {
        let mut rs = rs.with_spectral_radius_bound(sample.spectral_radius_bound());
        rs.decays_geometrically = sample.returns_decay_geometrically();
        let term = series_entropy_term(&rs, &opts.grid, opts.tol)?;
        (term.value, term)
    };
    Ok(SeriesSample {
        index: sample.index(),
        value,
        term,
        k_used,
        finite_component: finite,
    })
}

fn method_counts<'a>(methods: impl Iterator<Item = &'a SeriesMethod>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for m in methods {
        let key = serde_json::to_value(m).unwrap().as_str().unwrap().to_string();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Series estimator averaged over samples of `dist`.
pub fn entropy_series(dist: &RootedDistribution, opts: &SeriesOptions) -> Result<EntropyEstimate> {
    let samples = dist.samples(opts.samples)?;
    let results: Vec<Result<SeriesSample>> =
        samples.par_iter().map(|s| series_sample(s, opts)).collect();
    // a diverged sample makes the mean -inf whatever the others are, since
    // every per-root value is bounded above by log D(o)
    let any_diverged = results
        .iter()
        .any(|r| matches!(r, Ok(p) if p.value.is_neg_infinity()));
    let inconclusive = results
        .iter()
        .filter(|r| matches!(r, Err(Error::Inconclusive { .. })))
        .count();
    let per: Vec<SeriesSample> = if any_diverged {
        results
            .into_iter()
            .filter(|r| !matches!(r, Err(Error::Inconclusive { .. })))
            .collect::<Result<_>>()?
    } else {
        results.into_iter().collect::<Result<_>>()?
    };
    let diverged = per.iter().filter(|p| p.value.is_neg_infinity()).count();
    let methods = method_counts(per.iter().map(|p| &p.term.method));
    let k_used = per.iter().map(|p| p.k_used).min().unwrap_or(0);
    let truncated = per
        .iter()
        .filter(|p| p.term.method == SeriesMethod::Truncated)
        .count();
    let mut diagnostics = json!({
        "k_requested": opts.k_max,
        "k_used_min": k_used,
        "methods": methods,
        "diverged_samples": diverged,
        "finite_components": per.iter().filter(|p| p.finite_component).count(),
        "inconclusive_samples": inconclusive,
    });
    if truncated > 0 {
        diagnostics["warning"] = json!("some samples were truncated without a tail estimate");
    }
    if diverged > 0 {
        diagnostics["detector"] = json!("heuristic: Abel partials growing by >= 0.05 per refinement");
        return Ok(EntropyEstimate {
            method: EstimatorKind::Series,
            value: EntropyValue::NegInfinity,
            error_bar: 0.0,
            samples: per.len() + inconclusive,
            diagnostics,
        });
    }
    let values: Vec<f64> = per.iter().map(|p| p.value.finite().unwrap()).collect();
    // a truncated sample has no error estimate, so neither does the mean
    let numerical: Vec<f64> = per.iter().map(|p| p.term.error).collect();
    let value = mean(&values);
    Ok(EntropyEstimate {
        method: EstimatorKind::Series,
        value: EntropyValue::Finite(value),
        error_bar: sampling_half_width(dist, &values) + mean(&numerical),
        samples: per.len(),
        diagnostics,
    })
}

#[derive(Clone, Debug)]
pub struct ResistanceOptions {
    pub samples: usize,
    /// Quadrature tolerance on the integral.
    pub tol: f64,
    /// Below this `s` the resistance is extrapolated as a power law.
    pub s_floor: f64,
    pub max_radius: usize,
}

impl ResistanceOptions {
    /// Tolerance on each resistance (before the `1/(1+s^2)` scaling): a
    /// tenth of the quadrature tolerance.
    pub fn resistance_tol(&self) -> f64 {
        self.tol / 10.0
    }
}

impl Default for ResistanceOptions {
    fn default() -> Self {
        ResistanceOptions {
            samples: 32,
            tol: 1e-6,
            s_floor: 1e-4,
            max_radius: MAX_RADIUS,
        }
    }
}

/// Power-law fit `R(s) ~ A s^-alpha` on `[s0, 10 s0]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailFit {
    pub alpha: f64,
    /// `1/2 log(1 + s0^2) - int_0^s0 R`, or `None` when the fitted power
    /// makes the integral diverge.
    pub contribution: Option<f64>,
    /// Spread between fits on `[s0, 10 s0]` and `[s0, sqrt(10) s0]`.
    pub error: f64,
}

/// Exponents at or above this are treated as a non-integrable singularity.
pub const DIVERGENT_ALPHA: f64 = 0.99;

struct NodeValue {
    value: f64,
    /// Exhaustion gap carried into the integrand.
    gap: f64,
    converged: bool,
}

fn resistance_lenient<B: BallSource + ?Sized>(
    source: &B,
    s: f64,
    tol: f64,
    max_radius: usize,
) -> Result<NodeValue> {
    match resistance_with_cap(source, s, tol, max_radius) {
        Ok(ResistanceValue {
            value, cauchy_gap, ..
        }) => Ok(NodeValue {
            value,
            gap: cauchy_gap,
            converged: true,
        }),
        Err(Error::ResistanceNonConvergence { previous, last, .. }) if last.is_finite() => {
            Ok(NodeValue {
                value: last,
                gap: if previous.is_finite() {
                    (last - previous).abs()
                } else {
                    last.abs()
                },
                converged: false,
            })
        }
        Err(e) => Err(e),
    }
}

/// Integrand in `theta = atan(s)`: `(1 + s^2) (s/(1+s^2) - R(s))`.
fn theta_integrand<B: BallSource + ?Sized>(
    source: &B,
    theta: f64,
    opts: &ResistanceOptions,
) -> Result<NodeValue> {
    let (sin, cos) = theta.sin_cos();
    let s = sin / cos;
    let tol = (opts.resistance_tol() * cos * cos).max(1e-14 / (1.0 + s));
    let r = resistance_with_cap(source, s, tol, opts.max_radius);
    let (excess, d, gap, converged) = match r {
        Ok(v) => (v.excess, v.root_diagonal, v.cauchy_gap, true),
        Err(Error::ResistanceNonConvergence { .. }) => {
            let n = resistance_lenient(source, s, tol, opts.max_radius)?;
            let d = source.ball(1)?.laplacian_diagonal(0);
            (n.value - 1.0 / (d + s), d, n.gap, false)
        }
        Err(e) => return Err(e),
    };
    let value = (d * sin - cos) / (d * cos + sin) - excess / (cos * cos);
    Ok(NodeValue {
        value,
        gap: gap / (cos * cos),
        converged,
    })
}

pub fn tail_fit<B: BallSource + ?Sized>(source: &B, opts: &ResistanceOptions) -> Result<TailFit> {
    let s0 = opts.s_floor;
    let r = |s: f64| resistance_lenient(source, s, opts.resistance_tol(), opts.max_radius).map(|v| v.value);
    let (r0, r_mid, r_hi) = (r(s0)?, r(10f64.sqrt() * s0)?, r(10.0 * s0)?);
    let alpha = ((r0 / r_hi).ln() / 10f64.ln()).max(0.0);
    let alpha_near = ((r0 / r_mid).ln() / 10f64.sqrt().ln()).max(0.0);
    if alpha >= DIVERGENT_ALPHA || alpha_near >= DIVERGENT_ALPHA {
        return Ok(TailFit {
            alpha: alpha.max(alpha_near),
            contribution: None,
            error: 0.0,
        });
    }
    let integral = |a: f64| r0 * s0 / (1.0 - a);
    Ok(TailFit {
        alpha,
        contribution: Some(0.5 * s0.mul_add(s0, 1.0).ln() - integral(alpha)),
        error: (integral(alpha) - integral(alpha_near)).abs(),
    })
}

/// Laws whose per-root resistance integral averages to the entropy.
fn resistance_applies(dist: &RootedDistribution) -> Result<()> {
    if dist.is_finite() {
        return Err(Error::InvalidArgument(
            "the resistance estimator needs infinite networks; use the series or finite-limit estimator"
                .into(),
        ));
    }
    if matches!(dist.family(), Family::LoopPath { .. }) {
        return Err(Error::InvalidArgument(
            "the resistance integral equals the entropy only for unimodular laws".into(),
        ));
    }
    Ok(())
}

/// Resistance estimator: the integral of `s/(1+s^2) - E R(s)` over
/// `s > 0`, taken in `theta = atan(s)` on `[atan(s_floor), pi/2]` with a
/// power-law tail below `s_floor`.
pub fn entropy_resistance(
    dist: &RootedDistribution,
    opts: &ResistanceOptions,
) -> Result<EntropyEstimate> {
    resistance_applies(dist)?;
    let samples = dist.samples(opts.samples)?;
    let tails: Vec<TailFit> = samples
        .par_iter()
        .map(|s| tail_fit(s, opts))
        .collect::<Result<_>>()?;
    let mut diagnostics = json!({
        "s_floor": opts.s_floor,
        "tail_alpha": tails.iter().map(|t| t.alpha).collect::<Vec<_>>(),
    });
    if tails.iter().any(|t| t.contribution.is_none()) {
        diagnostics["divergent_samples"] = json!(tails.iter().filter(|t| t.contribution.is_none()).count());
        return Ok(EntropyEstimate {
            method: EstimatorKind::Resistance,
            value: EntropyValue::NegInfinity,
            error_bar: 0.0,
            samples: samples.len(),
            diagnostics,
        });
    }

    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let gaps = Mutex::new((0.0f64, 0usize));
    let integrand = |thetas: &[f64]| -> Vec<Vec<f64>> {
        let jobs: Vec<(usize, usize)> = (0..thetas.len())
            .flat_map(|j| (0..samples.len()).map(move |i| (j, i)))
            .collect();
        let vals: Vec<f64> = jobs
            .par_iter()
            .map(|&(j, i)| match theta_integrand(&samples[i], thetas[j], opts) {
                Ok(v) => {
                    if !v.converged || v.gap > 0.0 {
                        let mut g = gaps.lock().unwrap();
                        g.0 = g.0.max(v.gap);
                        g.1 += usize::from(!v.converged);
                    }
                    v.value
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    0.0
                }
            })
            .collect();
        vals.chunks(samples.len()).map(|c| c.to_vec()).collect()
    };
    let theta0 = opts.s_floor.atan();
    let q = adaptive_simpson_batched(
        integrand,
        theta0,
        std::f64::consts::FRAC_PI_2,
        SimpsonOptions::new(opts.tol),
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let (max_gap, unconverged) = gaps.into_inner().unwrap();
    let values: Vec<f64> = q
        .values
        .iter()
        .zip(&tails)
        .map(|(v, t)| v + t.contribution.unwrap())
        .collect();
    let tail_error = mean(&tails.iter().map(|t| t.error).collect::<Vec<_>>());
    let exhaustion_error = max_gap * (std::f64::consts::FRAC_PI_2 - theta0);
    diagnostics["quadrature_error"] = json!(q.error);
    diagnostics["quadrature_converged"] = json!(q.converged);
    diagnostics["evaluations"] = json!(q.evaluations);
    diagnostics["tail_error"] = json!(tail_error);
    diagnostics["unconverged_resistances"] = json!(unconverged);
    diagnostics["exhaustion_error"] = json!(exhaustion_error);
    Ok(EntropyEstimate {
        method: EstimatorKind::Resistance,
        value: EntropyValue::Finite(mean(&values)),
        error_bar: sampling_half_width(dist, &values) + q.error + tail_error + exhaustion_error,
        samples: values.len(),
        diagnostics,
    })
}

/// Atoms of the spectral measure of a ball operator at the root.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralMeasureApprox {
    /// `(lambda, mass)` pairs, ascending in `lambda`.
    pub atoms: Vec<(f64, f64)>,
    pub total_mass: f64,
}

impl SpectralMeasureApprox {
    pub fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(l, m)| m * f(l)).sum()
    }

    pub fn mass_below(&self, floor: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 <= floor).map(|a| a.1).sum()
    }

    /// `int log lambda` over atoms above `floor`; `-inf` when every atom
    /// is at or below it.
    pub fn log_moment(&self, floor: f64) -> EntropyValue {
        if self.atoms.iter().all(|a| a.0 <= floor) {
            return EntropyValue::NegInfinity;
        }
        EntropyValue::Finite(
            self.atoms
                .iter()
                .filter(|a| a.0 > floor)
                .map(|&(l, m)| m * l.ln())
                .sum(),
        )
    }
}

/// Eigenvalues at or below this are treated as kernel.
pub const SPECTRAL_FLOOR: f64 = 1e-9;

/// Spectral measure at the root of `M^-1/2 (L + diag(boundary)) M^-1/2` on
/// the ball: boundary edges are grounded, as in the wired network at
/// `s = 0`.
pub fn spectral_measure(ball: &LocalBall) -> Result<SpectralMeasureApprox> {
    let g = ball.graph();
    let n = ball.vertex_count();
    let diag = (0..n).map(|x| (x, x, ball.laplacian_diagonal(x)));
    let off = g
        .edges()
        .iter()
        .filter(|e| !e.is_loop())
        .map(|e| (e.u, e.v, -e.weight));
    let a = SparseSymmetric::from_triplets(n, diag.chain(off))?;
    let scale: Vec<f64> = (0..n).map(|x| 1.0 / ball.mass(x).sqrt()).collect();
    let eig = eig_small(&a.congruence(&scale), 0)?;
    let atoms: Vec<(f64, f64)> = eig
        .eigenvalues
        .into_iter()
        .zip(eig.masses_at_vector)
        .collect();
    let total_mass = atoms.iter().map(|a| a.1).sum();
    Ok(SpectralMeasureApprox { atoms, total_mass })
}

pub fn entropy_spectral(
    dist: &RootedDistribution,
    samples: usize,
    radius: usize,
) -> Result<EntropyEstimate> {
    let samples = dist.samples(samples)?;
    let per: Vec<(SpectralMeasureApprox, f64)> = samples
        .par_iter()
        .map(|s| {
            let ball = ball_up_to(s, radius)?;
            Ok((spectral_measure(&ball)?, ball.laplacian_diagonal(0)))
        })
        .collect::<Result<_>>()?;
    let first_moment_error = per
        .iter()
        .map(|(mu, d)| (mu.moment(|l| l) - d).abs())
        .fold(0.0, f64::max);
    let below = mean(&per.iter().map(|(mu, _)| mu.mass_below(SPECTRAL_FLOOR)).collect::<Vec<_>>());
    let atoms = per.iter().map(|(mu, _)| mu.atoms.len()).sum::<usize>();
    let mut diagnostics = json!({
        "radius": radius,
        "biased": "boundary effects: grounded boundary raises the estimate",
        "atoms": atoms,
        "mass_below_floor": below,
        "first_moment_error": first_moment_error,
        "total_mass_error": per.iter().map(|(mu, _)| (mu.total_mass - 1.0).abs()).fold(0.0, f64::max),
    });
    let logs: Vec<EntropyValue> = per.iter().map(|(mu, _)| mu.log_moment(SPECTRAL_FLOOR)).collect();
    if logs.iter().any(|v| v.is_neg_infinity()) {
        diagnostics["warning"] = json!("all spectral mass below the floor for some sample");
        return Ok(EntropyEstimate {
            method: EstimatorKind::Spectral,
            value: EntropyValue::NegInfinity,
            error_bar: 0.0,
            samples: per.len(),
            diagnostics,
        });
    }
    let values: Vec<f64> = logs.iter().map(|v| v.finite().unwrap()).collect();
    Ok(EntropyEstimate {
        method: EstimatorKind::Spectral,
        value: EntropyValue::Finite(mean(&values)),
        error_bar: sampling_half_width(dist, &values),
        samples: values.len(),
        diagnostics,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteLimitPoint {
    pub label: String,
    pub vertices: usize,
    /// `log tau / |V|`.
    pub value: f64,
}

/// `log tau(G_n) / |V(G_n)|` along a sequence; the estimate is the last
/// value with the last increment as its error bar.
pub fn entropy_finite_limit(
    graphs: &[(String, WeightedMultigraph)],
) -> Result<(Vec<FiniteLimitPoint>, EntropyEstimate)> {
    if graphs.is_empty() {
        return Err(Error::InvalidArgument("empty graph sequence".into()));
    }
    if graphs.windows(2).any(|w| w[1].1.vertex_count() <= w[0].1.vertex_count()) {
        return Err(Error::InvalidArgument("graph sizes must increase along the sequence".into()));
    }
    let points: Vec<FiniteLimitPoint> = graphs
        .par_iter()
        .map(|(label, g)| {
            Ok(FiniteLimitPoint {
                label: label.clone(),
                vertices: g.vertex_count(),
                value: tau(g, false)?.log_value / g.vertex_count() as f64,
            })
        })
        .collect::<Result<_>>()?;
    let last = points.last().unwrap().value;
    let step = match points.len() {
        1 => 0.0,
        n => (last - points[n - 2].value).abs(),
    };
    let increasing = points.windows(2).all(|w| w[1].value > w[0].value);
    let estimate = EntropyEstimate {
        method: EstimatorKind::FiniteLimit,
        value: EntropyValue::Finite(last),
        error_bar: step,
        samples: points.len(),
        diagnostics: json!({ "increasing": increasing, "sizes": points.iter().map(|p| p.vertices).collect::<Vec<_>>() }),
    };
    Ok((points, estimate))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityCheck {
    pub lambda: f64,
    /// Quadrature of the log integrand minus `log lambda`.
    pub log_error: f64,
    /// Quadrature of its positive part minus `log(1 + lambda^2) / 2`.
    pub positive_part_error: f64,
}

/// Quadrature checks of the two logarithm integrals at 25 values of
/// `lambda` in `[1e-3, 1e3]`, in `theta = atan(s)`.
pub fn identity_checks() -> Vec<IdentityCheck> {
    crate::resistance::log_grid(1e-3, 1e3, 25)
        .into_iter()
        .map(|lambda| {
            let f = |t: f64| {
                let (sin, cos) = t.sin_cos();
                (lambda * sin - cos) / (lambda * cos + sin)
            };
            let half_pi = std::f64::consts::FRAC_PI_2;
            let whole = adaptive_simpson(f, 0.0, half_pi, 1e-12).mean();
            // the integrand changes sign where s = 1/lambda
            let positive = adaptive_simpson(f, (1.0 / lambda).atan(), half_pi, 1e-12).mean();
            IdentityCheck {
                lambda,
                log_error: whole - lambda.ln(),
                positive_part_error: positive - 0.5 * lambda.mul_add(lambda, 1.0).ln(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Lattice, PgwConditioning};
    use crate::graph::families;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_abs_diff_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>(), epsilon = 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn identities_hold() {
        for c in identity_checks() {
            assert!(c.log_error.abs() < 1e-8, "{c:?}");
            assert!(c.positive_part_error.abs() < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn series_on_cycles_gives_log_n_over_n() {
        for n in [5usize, 6, 9] {
            let dist = RootedDistribution::new(Family::Cycle { n }, 0).unwrap();
            let opts = SeriesOptions {
                k_max: 4000,
                ..Default::default()
            };
            let est = entropy_series(&dist, &opts).unwrap();
            assert_abs_diff_eq!(est.value.finite().unwrap(), (n as f64).ln() / n as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn series_on_star_matches_tau() {
        // every root enumerated; the star is a tree, so log tau = 0
        let dist = RootedDistribution::uniform_root(families::star(4).unwrap(), "star").enumerated();
        let opts = SeriesOptions {
            k_max: 2000,
            ..Default::default()
        };
        let est = entropy_series(&dist, &opts).unwrap();
        assert_eq!(est.samples, 5);
        assert_abs_diff_eq!(est.value.finite().unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn regular_tree_series_and_resistance_agree() {
        let dist = RootedDistribution::regular_tree(3).unwrap();
        let series = entropy_series(&dist, &SeriesOptions::default()).unwrap();
        let opts = ResistanceOptions {
            s_floor: 1e-6,
            ..Default::default()
        };
        let res = entropy_resistance(&dist, &opts).unwrap();
        let (a, b) = (series.value.finite().unwrap(), res.value.finite().unwrap());
        assert_abs_diff_eq!(a, b, epsilon = 1e-5);
    }

    #[test]
    fn resistance_rejects_finite_and_loop_laws() {
        let c = RootedDistribution::new(Family::Cycle { n: 5 }, 0).unwrap();
        assert!(entropy_resistance(&c, &ResistanceOptions::default()).is_err());
        let lp = RootedDistribution::new(Family::LoopPath { d: 5, with_loop: false }, 0).unwrap();
        assert!(entropy_resistance(&lp, &ResistanceOptions::default()).is_err());
    }

    #[test]
    fn spectral_first_moment_is_degree() {
        let z = RootedDistribution::lattice(Lattice::Z);
        let est = entropy_spectral(&z, 1, 64).unwrap();
        assert!(est.diagnostics["first_moment_error"].as_f64().unwrap() < 1e-10);
        let t = RootedDistribution::regular_tree(4).unwrap();
        let mu = spectral_measure(&t.sample(0).unwrap().ball(30).unwrap()).unwrap();
        assert_abs_diff_eq!(mu.moment(|l| l), 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mu.total_mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_single_vertex_is_neg_infinity() {
        let g = WeightedMultigraph::new(1, vec![]).unwrap();
        let dist = RootedDistribution::uniform_root(g, "point");
        let est = entropy_spectral(&dist, 1, 3).unwrap();
        assert!(est.value.is_neg_infinity());
        assert_eq!(est.diagnostics["mass_below_floor"], 1.0);
    }

    #[test]
    fn spectral_torus_matches_log_tau_plus_log_n() {
        let dist = RootedDistribution::new(Family::Torus { n: 12 }, 0).unwrap();
        let est = entropy_spectral(&dist, 1, 100).unwrap();
        let n = 144.0;
        let tau = tau(&families::torus(12).unwrap(), false).unwrap().log_value;
        assert_abs_diff_eq!(est.value.finite().unwrap(), (tau + f64::ln(n)) / n, epsilon = 1e-9);
    }

    #[test]
    fn finite_limit_of_cycles() {
        let seq: Vec<(String, WeightedMultigraph)> = [4usize, 8, 16]
            .iter()
            .map(|&n| (format!("c{n}"), families::cycle(n).unwrap()))
            .collect();
        let (points, est) = entropy_finite_limit(&seq).unwrap();
        for (p, n) in points.iter().zip([4.0f64, 8.0, 16.0]) {
            assert_abs_diff_eq!(p.value, n.ln() / n, epsilon = 1e-12);
        }
        assert_eq!(est.diagnostics["increasing"], false);
        let mut backwards = seq.clone();
        backwards.reverse();
        assert!(entropy_finite_limit(&backwards).is_err());
    }

    #[test]
    fn extinct_pgw_trees_have_zero_entropy() {
        // subcritical trees are finite; their spanning-tree count is 1
        let dist = RootedDistribution::pgw(0.5, PgwConditioning::None, 0, 4).unwrap();
        let opts = SeriesOptions {
            k_max: 3000,
            samples: 200,
            ..Default::default()
        };
        let est = entropy_series(&dist, &opts).unwrap();
        assert_eq!(est.diagnostics["finite_components"], 200);
        let v = est.value.finite().unwrap();
        assert!(v.abs() <= est.error_bar, "{v} +- {}", est.error_bar);
    }
}

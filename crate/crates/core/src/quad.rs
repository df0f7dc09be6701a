//! Adaptive Simpson quadrature, refined level by level so that all new nodes
//! of a level can be evaluated in one batch.

#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    /// One integral per integrand component.
    pub values: Vec<f64>,
    /// Estimated error of the component mean.
    pub error: f64,
    pub evaluations: usize,
    /// False when some interval hit the depth limit unconverged.
    pub converged: bool,
}

impl Quadrature {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimpsonOptions {
    pub tol: f64,
    /// Levels refined unconditionally (the first level has `2^min_level` panels).
    pub min_level: u32,
    pub max_level: u32,
}

impl SimpsonOptions {
    pub fn new(tol: f64) -> Self {
        SimpsonOptions {
            tol,
            min_level: 3,
            max_level: 40,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: Vec<f64>,
    fm: Vec<f64>,
    fb: Vec<f64>,
    whole: Vec<f64>,
    level: u32,
}

fn simpson(h: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((a, m), b)| h / 6.0 * (a + 4.0 * m + b))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Integrate a vector-valued function over `[a, b]`.
///
/// `f` receives a batch of abscissae and returns one vector per point; all
/// vectors must share a length. Refinement decisions use the component
/// mean, so every component is integrated on the same nodes.
pub fn adaptive_simpson_batched<F>(f: F, a: f64, b: f64, opts: SimpsonOptions) -> Quadrature
where
    F: Fn(&[f64]) -> Vec<Vec<f64>>,
{
    let panels0 = 1usize << opts.min_level;
    let h = (b - a) / panels0 as f64;
    let mut xs: Vec<f64> = (0..=2 * panels0).map(|i| a + 0.5 * h * i as f64).collect();
    *xs.last_mut().unwrap() = b;
    let mut evaluations = xs.len();
    let fx = f(&xs);
    let width = fx[0].len();
    let mut active: Vec<Panel> = (0..panels0)
        .map(|i| {
            let (pa, pb) = (xs[2 * i], xs[2 * i + 2]);
            let whole = simpson(pb - pa, &fx[2 * i], &fx[2 * i + 1], &fx[2 * i + 2]);
            Panel {
                a: pa,
                b: pb,
                fa: fx[2 * i].clone(),
                fm: fx[2 * i + 1].clone(),
                fb: fx[2 * i + 2].clone(),
                whole,
                level: opts.min_level,
            }
        })
        .collect();
    let mut values = vec![0.0; width];
    let mut error = 0.0;
    let mut converged = true;
    let total = b - a;
    while !active.is_empty() {
        let nodes: Vec<f64> = active
            .iter()
            .flat_map(|p| [0.75 * p.a + 0.25 * p.b, 0.25 * p.a + 0.75 * p.b])
            .collect();
        evaluations += nodes.len();
        let fq = f(&nodes);
        let mut next = Vec::new();
        for (i, p) in active.into_iter().enumerate() {
            let m = 0.5 * (p.a + p.b);
            let (fl, fr) = (&fq[2 * i], &fq[2 * i + 1]);
            let left = simpson(m - p.a, &p.fa, fl, &p.fm);
            let right = simpson(p.b - m, &p.fm, fr, &p.fb);
            let halves: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
            let delta = mean(&halves) - mean(&p.whole);
            let allowed = 15.0 * opts.tol * (p.b - p.a) / total;
            let finite = delta.is_finite();
            if (delta.abs() <= allowed && finite) || p.level >= opts.max_level {
                if !(delta.abs() <= allowed) {
                    converged = false;
                }
                for (k, v) in values.iter_mut().enumerate() {
                    *v += halves[k] + (halves[k] - p.whole[k]) / 15.0;
                }
                error += delta.abs() / 15.0;
            } else {
                next.push(Panel {
                    a: p.a,
                    b: m,
                    fa: p.fa,
                    fm: fl.clone(),
                    fb: p.fm.clone(),
                    whole: left,
                    level: p.level + 1,
                });
                next.push(Panel {
                    a: m,
                    b: p.b,
                    fa: p.fm,
                    fm: fr.clone(),
                    fb: p.fb,
                    whole: right,
                    level: p.level + 1,
                });
            }
        }
        active = next;
    }
    Quadrature {
        values,
        error,
        evaluations,
        converged,
    }
}

/// Scalar convenience wrapper.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Quadrature
where
    F: Fn(f64) -> f64,
{
    adaptive_simpson_batched(
        |xs| xs.iter().map(|&x| vec![f(x)]).collect(),
        a,
        b,
        SimpsonOptions::new(tol),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact() {
        let q = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(q.mean(), 0.0, epsilon = 1e-13);
        assert!(q.converged);
    }

    #[test]
    fn sharp_features_are_resolved() {
        let q = adaptive_simpson(|x| 1.0 / (1e-3 + x), 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(q.mean(), (1.001f64 / 1e-3).ln(), epsilon = 1e-9);
    }

    #[test]
    fn components_share_nodes() {
        let q = adaptive_simpson_batched(
            |xs| xs.iter().map(|&x| vec![x.sin(), x.cos(), 1.0]).collect(),
            0.0,
            std::f64::consts::PI,
            SimpsonOptions::new(1e-10),
        );
        assert_abs_diff_eq!(q.values[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q.values[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q.values[2], std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn depth_limit_is_reported() {
        let q = adaptive_simpson_batched(
            |xs| xs.iter().map(|&x| vec![if x < 0.3 { 0.0 } else { 1.0 }]).collect(),
            0.0,
            1.0,
            SimpsonOptions {
                tol: 1e-14,
                min_level: 2,
                max_level: 8,
            },
        );
        assert!(!q.converged);
    }
}

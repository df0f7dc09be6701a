//! Exact and floating-point linear algebra for graph Laplacians.
//!
//! The exact path (fraction-free elimination over big integers) serves
//! spanning-tree counting on small graphs. The float path has a sparse
//! `LDL^T` with minimum-degree ordering for log-determinants, a
//! Jacobi-preconditioned conjugate-gradient solver, and a dense symmetric
//! eigensolver that tracks one distinguished coordinate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::WeightedMultigraph;

/// Symmetric sparse matrix in compressed-row form, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Assemble from `(row, col, value)` contributions. An off-diagonal
    /// triple contributes to both `(row, col)` and `(col, row)`; duplicates
    /// are summed and exact zeros dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i.max(j) + 1,
                });
            }
            entries.push((i, j, v));
            if i != j {
                entries.push((j, i, v));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut k = 0;
        while k < entries.len() {
            let (i, j, mut v) = entries[k];
            k += 1;
            while k < entries.len() && entries[k].0 == i && entries[k].1 == j {
                v += entries[k].2;
                k += 1;
            }
            if v != 0.0 {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseSymmetric {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
        .expect("diagonal indices are in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored entries (both triangles).
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(p) => self.vals[span.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Upper-triangle entries `(row, col, value)` with `row <= col`.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            self.row(i)
                .filter(move |&(j, _)| j >= i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.dim) {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec(x, &mut y);
        y
    }

    /// `diag(scale) * self * diag(scale)`.
    pub fn congruence(&self, scale: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for p in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.vals[p] *= scale[i] * scale[out.cols[p]];
            }
        }
        out
    }

    /// Matrix with vertex `k`'s row and column removed.
    pub fn without_index(&self, k: usize) -> Self {
        let shift = |j: usize| if j > k { j - 1 } else { j };
        let triplets = self
            .nonzeros()
            .filter(|&(i, j, _)| i != k && j != k)
            .map(|(i, j, v)| (shift(i), shift(j), v));
        Self::from_triplets(self.dim - 1, triplets).expect("indices shrink with the dimension")
    }

    /// Largest absolute row sum; an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                d[i][j] = v;
            }
        }
        d
    }
}

/// Graph Laplacian; loops contribute nothing.
pub fn laplacian_of(g: &WeightedMultigraph) -> SparseSymmetric {
    let triplets = g.edges().iter().filter(|e| !e.is_loop()).flat_map(|e| {
        [
            (e.u, e.u, e.weight),
            (e.v, e.v, e.weight),
            (e.u.min(e.v), e.u.max(e.v), -e.weight),
        ]
    });
    SparseSymmetric::from_triplets(g.vertex_count(), triplets).expect("edge endpoints are valid")
}

/// Dense square matrix of exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrixExact {
    dim: usize,
    entries: Vec<BigRational>,
}

impl DenseMatrixExact {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrixExact {
            dim,
            entries: vec![BigRational::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, BigRational::from_integer(v.into()));
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn row_sum(&self, i: usize) -> BigRational {
        (0..self.dim).fold(BigRational::zero(), |acc, j| acc + self.get(i, j))
    }

    /// Principal minor with row and column `k` removed.
    pub fn without_index(&self, k: usize) -> Self {
        let keep: Vec<usize> = (0..self.dim).filter(|&i| i != k).collect();
        let mut m = Self::zeros(self.dim - 1);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                m.set(a, b, self.get(i, j).clone());
            }
        }
        m
    }
}

/// Exact rational value of a finite double.
pub fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite weight")
}

/// Laplacian with exact rational entries.
pub fn laplacian_exact(g: &WeightedMultigraph) -> DenseMatrixExact {
    let mut m = DenseMatrixExact::zeros(g.vertex_count());
    for e in g.edges().iter().filter(|e| !e.is_loop()) {
        let w = exact_rational(e.weight);
        let idx = |i: usize, j: usize| i * g.vertex_count() + j;
        m.entries[idx(e.u, e.u)] += &w;
        m.entries[idx(e.v, e.v)] += &w;
        m.entries[idx(e.u, e.v)] -= &w;
        m.entries[idx(e.v, e.u)] -= &w;
    }
    m
}

/// Exact determinant by Bareiss fraction-free elimination. Rational input is
/// first scaled to integers by the common denominator.
pub fn det_exact(m: &DenseMatrixExact) -> BigRational {
    let n = m.dim;
    if n == 0 {
        return BigRational::one();
    }
    let scale = m
        .entries
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let mut a: Vec<BigInt> = m
        .entries
        .iter()
        .map(|q| q.numer() * (&scale / q.denom()))
        .collect();
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k * n + k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i * n + k].is_zero()) else {
                return BigRational::zero();
            };
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            negate = !negate;
        }
        let pivot = a[k * n + k].clone();
        for i in k + 1..n {
            let aik = a[i * n + k].clone();
            for j in k + 1..n {
                let v = (&a[i * n + j] * &pivot - &aik * &a[k * n + j]) / &prev;
                a[i * n + j] = v;
            }
            a[i * n + k] = BigInt::zero();
        }
        prev = pivot;
    }
    let mut det = a[n * n - 1].clone();
    if negate {
        det = -det;
    }
    BigRational::new(det, num_traits::pow(scale, n))
}

/// Sparse `LDL^T` factorization of a symmetric positive definite matrix.
///
/// Pivots are chosen by minimum degree; once the cheapest remaining pivot
/// would touch a quarter of the remaining rows the Schur complement is
/// finished densely.
#[derive(Clone, Debug)]
pub struct LdlFactor {
    dim: usize,
    sparse_order: Vec<usize>,
    sparse_pivots: Vec<f64>,
    sparse_columns: Vec<Vec<(usize, f64)>>,
    dense_index: Vec<usize>,
    // Cholesky factor of the dense tail, row-major lower triangle.
    dense_chol: Vec<f64>,
}

impl LdlFactor {
    pub fn new(m: &SparseSymmetric) -> Result<Self> {
        let n = m.dim();
        let mut diag = vec![0.0; n];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in m.row(i) {
                if i == j {
                    diag[i] = v;
                } else {
                    rows[i].push((j, v));
                }
            }
        }
        let mut eliminated = vec![false; n];
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(usize, usize)>> =
            (0..n).map(|i| std::cmp::Reverse((rows[i].len(), i))).collect();
        let mut remaining = n;
        let mut factor = LdlFactor {
            dim: n,
            sparse_order: Vec::new(),
            sparse_pivots: Vec::new(),
            sparse_columns: Vec::new(),
            dense_index: Vec::new(),
            dense_chol: Vec::new(),
        };
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        while let Some(std::cmp::Reverse((deg, k))) = heap.pop() {
            if eliminated[k] || deg != rows[k].len() {
                continue;
            }
            if remaining > 64 && 4 * (deg + 1) >= remaining {
                break;
            }
            let pivot = diag[k];
            if !(pivot > 0.0 && pivot.is_finite()) {
                return Err(Error::NotPositiveDefinite {
                    index: k,
                    value: pivot,
                });
            }
            eliminated[k] = true;
            remaining -= 1;
            let column = std::mem::take(&mut rows[k]);
            for &(i, aki) in &column {
                diag[i] -= aki * aki / pivot;
                // row_i <- row_i - (a_ki / pivot) * column, dropping k and i
                let factor_i = aki / pivot;
                scratch.clear();
                let row_i = &rows[i];
                let (mut p, mut q) = (0, 0);
                while p < row_i.len() || q < column.len() {
                    let a = row_i.get(p).map_or(usize::MAX, |e| e.0);
                    let b = column.get(q).map_or(usize::MAX, |e| e.0);
                    if a < b {
                        if a != k {
                            scratch.push(row_i[p]);
                        }
                        p += 1;
                    } else if b < a {
                        if b != i {
                            scratch.push((b, -factor_i * column[q].1));
                        }
                        q += 1;
                    } else {
                        if a != k && a != i {
                            scratch.push((a, row_i[p].1 - factor_i * column[q].1));
                        }
                        p += 1;
                        q += 1;
                    }
                }
                std::mem::swap(&mut rows[i], &mut scratch);
                heap.push(std::cmp::Reverse((rows[i].len(), i)));
            }
            factor.sparse_order.push(k);
            factor.sparse_pivots.push(pivot);
            factor.sparse_columns.push(
                column
                    .into_iter()
                    .map(|(i, aki)| (i, aki / pivot))
                    .collect(),
            );
        }
        let index: Vec<usize> = (0..n).filter(|&i| !eliminated[i]).collect();
        let m = index.len();
        let mut position = vec![usize::MAX; n];
        for (a, &i) in index.iter().enumerate() {
            position[i] = a;
        }
        let mut dense = vec![0.0; m * m];
        for (a, &i) in index.iter().enumerate() {
            dense[a * m + a] = diag[i];
            for &(j, v) in &rows[i] {
                dense[a * m + position[j]] = v;
            }
        }
        cholesky_in_place(&mut dense, m).map_err(|a| Error::NotPositiveDefinite {
            index: index[a.0],
            value: a.1,
        })?;
        factor.dense_index = index;
        factor.dense_chol = dense;
        Ok(factor)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sum of the logarithms of all pivots.
    pub fn logdet(&self) -> f64 {
        let m = self.dense_index.len();
        let sparse: f64 = self.sparse_pivots.iter().map(|p| p.ln()).sum();
        let dense: f64 = (0..m).map(|a| 2.0 * self.dense_chol[a * m + a].ln()).sum();
        sparse + dense
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        for (k, col) in self.sparse_order.iter().zip(&self.sparse_columns) {
            let xk = x[*k];
            for &(i, l) in col {
                x[i] -= l * xk;
            }
        }
        let m = self.dense_index.len();
        let l = &self.dense_chol;
        let mut y: Vec<f64> = self.dense_index.iter().map(|&i| x[i]).collect();
        for a in 0..m {
            let s: f64 = (0..a).map(|b| l[a * m + b] * y[b]).sum();
            y[a] = (y[a] - s) / l[a * m + a];
        }
        for a in (0..m).rev() {
            let s: f64 = (a + 1..m).map(|b| l[b * m + a] * y[b]).sum();
            y[a] = (y[a] - s) / l[a * m + a];
        }
        for (a, &i) in self.dense_index.iter().enumerate() {
            x[i] = y[a];
        }
        for ((k, col), pivot) in self
            .sparse_order
            .iter()
            .zip(&self.sparse_columns)
            .zip(&self.sparse_pivots)
            .rev()
        {
            let s: f64 = col.iter().map(|&(i, l)| l * x[i]).sum();
            x[*k] = x[*k] / pivot - s;
        }
        x
    }
}

/// Lower Cholesky factor in place (row-major). On failure returns the local
/// index and value of the offending pivot.
fn cholesky_in_place(a: &mut [f64], m: usize) -> std::result::Result<(), (usize, f64)> {
    for j in 0..m {
        let (head, tail) = a.split_at_mut(j * m);
        let row_j = &mut tail[..m];
        for i in 0..j {
            let row_i = &head[i * m..i * m + m];
            let s: f64 = row_i[..i].iter().zip(&row_j[..i]).map(|(x, y)| x * y).sum();
            row_j[i] = (row_j[i] - s) / row_i[i];
        }
        let d = row_j[j] - row_j[..j].iter().map(|x| x * x).sum::<f64>();
        if !(d > 0.0 && d.is_finite()) {
            return Err((j, d));
        }
        row_j[j] = d.sqrt();
        for v in &mut row_j[j + 1..] {
            *v = 0.0;
        }
    }
    Ok(())
}

/// `log det` of a symmetric positive definite matrix.
pub fn logdet_spd(m: &SparseSymmetric) -> Result<f64> {
    Ok(LdlFactor::new(m)?.logdet())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||m x - rhs|| / ||rhs||`, recomputed from scratch.
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients, to `||m x - rhs|| <= tol ||rhs||`.
pub fn solve_spd(m: &SparseSymmetric, rhs: &[f64], tol: f64) -> Result<SolveOutcome> {
    solve_spd_from(m, rhs, tol, None)
}

/// As [`solve_spd`], starting from `guess` when given.
pub fn solve_spd_from(
    m: &SparseSymmetric,
    rhs: &[f64],
    tol: f64,
    guess: Option<&[f64]>,
) -> Result<SolveOutcome> {
    let n = m.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    let inv_diag: Vec<f64> = m
        .diagonal_entries()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite { index: i, value: d })
            }
        })
        .collect::<Result<_>>()?;
    let b_norm = norm(rhs);
    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    if b_norm == 0.0 {
        return Ok(SolveOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let cap = 10 * n.max(1);
    let target = tol * b_norm;
    let mut iterations = 0;
    let mut ap = vec![0.0; n];
    loop {
        // (re)start from the true residual
        m.mul_vec(&x, &mut ap);
        let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
        let true_residual = norm(&r);
        if true_residual <= target {
            return Ok(SolveOutcome {
                x,
                iterations,
                relative_residual: true_residual / b_norm,
            });
        }
        if iterations >= cap {
            return Err(Error::SolverNonConvergence {
                iterations,
                residual: true_residual / b_norm,
            });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < cap {
            m.mul_vec(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    index: iterations,
                    value: pap,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if norm(&r) <= 0.5 * target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Spectral data of a symmetric matrix seen from one coordinate vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    /// Distinct eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Squared norm of the projection of the distinguished basis vector onto
    /// each eigenspace.
    pub masses_at_vector: Vec<f64>,
}

pub const EIG_DENSE_LIMIT: usize = 4096;

/// Full symmetric eigendecomposition restricted to what the spectral
/// measure at `distinguished` needs.
///
/// Householder tridiagonalization leaves the distinguished coordinate fixed,
/// so the implicit QL sweeps only have to track the first row of the
/// eigenvector matrix.
pub fn eig_small(m: &SparseSymmetric, distinguished: usize) -> Result<EigenDecomposition> {
    let n = m.dim();
    if n > EIG_DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dimension: n,
            limit: EIG_DENSE_LIMIT,
        });
    }
    if distinguished >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: distinguished + 1,
        });
    }
    // swap the distinguished coordinate into position 0
    let perm = |i: usize| {
        if i == distinguished {
            0
        } else if i == 0 {
            distinguished
        } else {
            i
        }
    };
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in m.row(i) {
            a[perm(i) * n + perm(j)] = v;
        }
    }
    let (mut d, mut e) = tridiagonalize_fixing_first(&mut a, n);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    implicit_ql(&mut d, &mut e, &mut z)?;

    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = m.norm_inf().max(f64::MIN_POSITIVE);
    let mut eigenvalues: Vec<f64> = Vec::with_capacity(n);
    let mut masses: Vec<f64> = Vec::with_capacity(n);
    let mut group: Vec<f64> = Vec::new();
    for (lambda, mass) in pairs {
        if let Some(&last) = group.last() {
            if lambda - last > 1e-10 * scale {
                flush_group(&mut group, &mut eigenvalues);
            }
        }
        if group.is_empty() {
            masses.push(0.0);
        }
        group.push(lambda);
        *masses.last_mut().unwrap() += mass;
    }
    flush_group(&mut group, &mut eigenvalues);
    Ok(EigenDecomposition {
        eigenvalues,
        masses_at_vector: masses,
    })
}

fn flush_group(group: &mut Vec<f64>, out: &mut Vec<f64>) {
    if !group.is_empty() {
        out.push(group.iter().sum::<f64>() / group.len() as f64);
        group.clear();
    }
}

/// Reduce `a` (row-major, symmetric) to tridiagonal form with reflectors
/// acting on indices `>= 1` only. Returns the diagonal and the
/// superdiagonal (padded with a trailing zero).
fn tridiagonalize_fixing_first(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let lo = k + 1;
        let tail_norm: f64 = (lo + 1..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        let x0 = a[lo * n + k];
        if tail_norm == 0.0 {
            e[k] = x0;
            continue;
        }
        let alpha = -x0.signum() * (x0 * x0 + tail_norm * tail_norm).sqrt();
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        v[lo] -= alpha;
        let vnorm = (v[lo..n].iter().map(|x| x * x).sum::<f64>()).sqrt();
        for x in &mut v[lo..n] {
            *x /= vnorm;
        }
        e[k] = alpha;
        // p = B v on the trailing block
        for i in lo..n {
            let row = &a[i * n + lo..i * n + n];
            p[i] = row.iter().zip(&v[lo..n]).map(|(x, y)| x * y).sum();
        }
        let kv: f64 = (lo..n).map(|i| v[i] * p[i]).sum();
        for i in lo..n {
            p[i] -= kv * v[i];
        }
        for i in lo..n {
            let (vi, pi) = (2.0 * v[i], 2.0 * p[i]);
            let row = &mut a[i * n + lo..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                *x -= vi * p[lo + j] + pi * v[lo + j];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    d[n - 1] = a[n * n - 1];
    e[n - 1] = 0.0;
    (d, e)
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix,
/// rotating the row vector `z` alongside.
fn implicit_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 100 {
                return Err(Error::SolverNonConvergence {
                    iterations,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Natural log of a positive big integer, accurate to double precision.
pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "logarithm of a non-positive integer");
    let bits = x.bits();
    if bits <= 1000 {
        let f: f64 = num_traits::ToPrimitive::to_f64(x).unwrap();
        return f.ln();
    }
    let shift = bits - 64;
    let top: f64 = num_traits::ToPrimitive::to_f64(&(x >> shift)).unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(q: &BigRational) -> f64 {
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{families, WeightedMultigraph};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn laplacian_small_cases() {
        let g = WeightedMultigraph::from_triples(2, &[(0, 1, 3.0)]).unwrap();
        assert_eq!(laplacian_of(&g).to_dense(), vec![vec![3.0, -3.0], vec![-3.0, 3.0]]);

        let g = WeightedMultigraph::from_triples(1, &[(0, 0, 4.0)]).unwrap();
        let l = laplacian_of(&g);
        assert_eq!((l.dim(), l.nnz()), (1, 0));

        let l = laplacian_of(&families::cycle(3).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(i, j), if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn exact_laplacian_rows_sum_to_zero() {
        let g = WeightedMultigraph::from_triples(
            4,
            &[(0, 1, 0.1), (1, 2, 1.0 / 3.0), (2, 3, 7.5), (3, 0, 1e-7), (2, 2, 5.0)],
        )
        .unwrap();
        let l = laplacian_exact(&g);
        for i in 0..4 {
            assert!(l.row_sum(i).is_zero());
        }
    }

    #[test]
    fn det_exact_examples() {
        assert_eq!(det_exact(&DenseMatrixExact::identity(5)), rat(1));
        let m = DenseMatrixExact::from_integers(&[vec![2, -1], vec![-1, 2]]).unwrap();
        assert_eq!(det_exact(&m), rat(3));
        let k4 = laplacian_exact(&families::complete(4).unwrap()).without_index(0);
        assert_eq!(det_exact(&k4), rat(16));
        // needs a row swap
        let m = DenseMatrixExact::from_integers(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(det_exact(&m), rat(-1));
        let m = DenseMatrixExact::from_integers(&[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(det_exact(&m), rat(0));
    }

    #[test]
    fn det_exact_rational_entries() {
        let mut m = DenseMatrixExact::zeros(2);
        m.set(0, 0, BigRational::new(1.into(), 2.into()));
        m.set(1, 1, BigRational::new(2.into(), 3.into()));
        m.set(0, 1, BigRational::new(1.into(), 5.into()));
        m.set(1, 0, BigRational::new(1.into(), 7.into()));
        let expected = BigRational::new(1.into(), 3.into()) - BigRational::new(1.into(), 35.into());
        assert_eq!(det_exact(&m), expected);
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_spd(&SparseSymmetric::identity(7)).unwrap(), 0.0);
        let d = SparseSymmetric::diagonal(&[2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(logdet_spd(&d).unwrap(), 24f64.ln(), epsilon = 1e-14);
        let c5 = laplacian_of(&families::cycle(5).unwrap()).without_index(0);
        assert_abs_diff_eq!(logdet_spd(&c5).unwrap(), 5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn logdet_reports_failing_pivot() {
        let m = SparseSymmetric::diagonal(&[1.0, -2.0, 3.0]);
        assert!(matches!(
            logdet_spd(&m),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let m = SparseSymmetric::from_triplets(2, [(0, 0, 1.0), (1, 1, 1.0), (0, 1, 2.0)])
            .unwrap();
        assert!(matches!(
            logdet_spd(&m),
            Err(Error::NotPositiveDefinite { value, .. }) if value < 0.0
        ));
    }

    #[test]
    fn ldl_solve_matches_residual() {
        let g = families::torus(9).unwrap();
        let mut l = laplacian_of(&g);
        l = SparseSymmetric::from_triplets(
            l.dim(),
            l.nonzeros().chain((0..l.dim()).map(|i| (i, i, 0.3))),
        )
        .unwrap();
        let f = LdlFactor::new(&l).unwrap();
        let b: Vec<f64> = (0..l.dim()).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r: Vec<f64> = l.apply(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm(&r) < 1e-12 * norm(&b));
    }

    #[test]
    fn solve_examples() {
        let out = solve_spd(&SparseSymmetric::identity(3), &[1.0, 0.0, 0.0], 1e-12).unwrap();
        assert_eq!(out.x, vec![1.0, 0.0, 0.0]);

        let out = solve_spd(&SparseSymmetric::diagonal(&[2.0, 4.0]), &[1.0, 1.0], 1e-12).unwrap();
        assert_abs_diff_eq!(out.x[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.x[1], 0.25, epsilon = 1e-15);

        let m = SparseSymmetric::from_triplets(2, [(0, 0, 2.0), (1, 1, 2.0), (0, 1, -1.0)])
            .unwrap();
        let out = solve_spd(&m, &[1.0, 0.0], 1e-13).unwrap();
        assert_abs_diff_eq!(out.x[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.x[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_reports_non_convergence() {
        // indefinite matrix with positive diagonal
        let m = SparseSymmetric::from_triplets(2, [(0, 0, 1.0), (1, 1, 1.0), (0, 1, 3.0)])
            .unwrap();
        assert!(solve_spd(&m, &[1.0, 0.0], 1e-12).is_err());
    }

    #[test]
    fn eig_examples() {
        let z = SparseSymmetric::from_triplets(1, []).unwrap();
        let e = eig_small(&z, 0).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0]);
        assert_eq!(e.masses_at_vector, vec![1.0]);

        let edge = laplacian_of(&WeightedMultigraph::from_triples(2, &[(0, 1, 1.0)]).unwrap());
        let e = eig_small(&edge, 0).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.masses_at_vector[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e.masses_at_vector[1], 0.5, epsilon = 1e-14);

        let p3 = laplacian_of(&families::path(3).unwrap());
        let e = eig_small(&p3, 1).unwrap();
        let expect = [(0.0, 1.0 / 3.0), (1.0, 0.0), (3.0, 2.0 / 3.0)];
        assert_eq!(e.eigenvalues.len(), 3);
        for (k, (lambda, mass)) in expect.iter().enumerate() {
            assert_abs_diff_eq!(e.eigenvalues[k], lambda, epsilon = 1e-12);
            assert_abs_diff_eq!(e.masses_at_vector[k], mass, epsilon = 1e-12);
        }
    }

    #[test]
    fn eig_merges_degenerate_eigenspaces() {
        // the 4-cycle has eigenvalue 2 with multiplicity 2
        let l = laplacian_of(&families::cycle(4).unwrap());
        let e = eig_small(&l, 0).unwrap();
        assert_eq!(e.eigenvalues.len(), 3);
        assert_abs_diff_eq!(e.masses_at_vector[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn eig_rejects_large_dimension() {
        let m = SparseSymmetric::identity(EIG_DENSE_LIMIT + 1);
        assert!(matches!(eig_small(&m, 0), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn ln_bigint_handles_huge_values() {
        let x = num_traits::pow(BigInt::from(3), 2000);
        assert_abs_diff_eq!(ln_bigint(&x), 2000.0 * 3f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(ln_bigint(&BigInt::from(16)), 16f64.ln(), epsilon = 1e-15);
    }

    fn random_spd_integer(seed: u64, n: usize) -> Vec<Vec<i64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..i {
                if rng.random_bool(0.3) {
                    let v = rng.random_range(-3i64..=3);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
        }
        for i in 0..n {
            let off: i64 = a[i].iter().map(|v| v.abs()).sum();
            a[i][i] = (off + rng.random_range(1i64..=3)).min(10).max(off + 1);
        }
        a
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_and_float_log_determinants_agree(seed in any::<u64>(), n in 1usize..50) {
            let a = random_spd_integer(seed, n);
            let exact = det_exact(&DenseMatrixExact::from_integers(&a).unwrap());
            let sparse = SparseSymmetric::from_triplets(
                n,
                (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[i][j] as f64)),
            ).unwrap();
            let float = logdet_spd(&sparse).unwrap();
            prop_assert!((ln_rational(&exact) - float).abs() <= 1e-8);
        }

        #[test]
        fn eig_moments_match_matrix(seed in any::<u64>(), n in 2usize..40, pick in 0usize..40) {
            let a = random_spd_integer(seed, n);
            let o = pick % n;
            let m = SparseSymmetric::from_triplets(
                n,
                (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[i][j] as f64)),
            ).unwrap();
            let e = eig_small(&m, o).unwrap();
            let total: f64 = e.masses_at_vector.iter().sum();
            let first: f64 = e.eigenvalues.iter().zip(&e.masses_at_vector).map(|(l, w)| l * w).sum();
            let second: f64 = e.eigenvalues.iter().zip(&e.masses_at_vector).map(|(l, w)| l * l * w).sum();
            let row_sq: f64 = m.row(o).map(|(_, v)| v * v).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!((first - m.get(o, o)).abs() <= 1e-9);
            prop_assert!((second - row_sq).abs() <= 1e-8);
        }

        #[test]
        fn cg_meets_its_residual_contract(seed in any::<u64>(), n in 1usize..60) {
            let a = random_spd_integer(seed, n);
            let m = SparseSymmetric::from_triplets(
                n,
                (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[i][j] as f64)),
            ).unwrap();
            let rhs: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
            let tol = 1e-10;
            let out = solve_spd(&m, &rhs, tol).unwrap();
            let r: Vec<f64> = m.apply(&out.x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
            prop_assert!(norm(&r) <= tol * norm(&rhs));
        }
    }
}

//! Symmetric banded operators: storage, pivoted band LU, a matrix-free
//! MINRES fallback, and smallest-magnitude eigenpairs by inverse
//! subspace iteration with Rayleigh–Ritz extraction.
//!
//! Every discrete Neumann operator in this crate assembles to a
//! [`BandMatrix`]; the bandwidth is `order` on an interval and
//! `order · nx` on a rectangle, so a banded direct factorization stays
//! cheap at the grid sizes in scope.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::smallmat::{sym_eig_small, SymMat};

/// Apply contract shared by assembled and matrix-free operators.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// A norm-like magnitude used to scale tolerances.
    fn scale_estimate(&self) -> f64;

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// A symmetric matrix with half-bandwidth `hb`, stored as full band
/// (both triangles): entry `(i, j)` with `|i − j| <= hb` lives at
/// `data[i * (2*hb + 1) + (j − i + hb)]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    dim: usize,
    hb: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(dim: usize, hb: usize) -> Self {
        assert!(dim > 0);
        Self {
            dim,
            hb,
            data: vec![0.0; dim * (2 * hb + 1)],
        }
    }

    pub fn half_bandwidth(&self) -> usize {
        self.hb
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.dim && j < self.dim);
        debug_assert!(i.abs_diff(j) <= self.hb);
        i * (2 * self.hb + 1) + (j + self.hb - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.hb {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Set `(i, j)` and `(j, i)` together.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
        let s = self.slot(j, i);
        self.data[s] = v;
    }

    /// Add `v` to `(i, j)` and, when `i != j`, to `(j, i)`.
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
        if i != j {
            let s = self.slot(j, i);
            self.data[s] += v;
        }
    }

    /// Infinity norm (max absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            let lo = i.saturating_sub(self.hb);
            let hi = (i + self.hb).min(self.dim - 1);
            let sum: f64 = (lo..=hi).map(|j| self.get(i, j).abs()).sum();
            worst = worst.max(sum);
        }
        worst
    }

    /// Dense copy for the small-problem eigen path.
    fn to_symmat(&self) -> SymMat {
        let mut m = SymMat::zeros(self.dim);
        for i in 0..self.dim {
            let lo = i.saturating_sub(self.hb);
            for j in lo..=i {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    /// Band LU with partial pivoting. `pivot_floor > 0` replaces tiny
    /// pivots by `±pivot_floor` instead of failing, which is exactly
    /// what inverse iteration on a (near-)singular operator wants.
    pub fn factorize(&self, pivot_floor: f64) -> BandLu {
        let n = self.dim;
        let hb = self.hb;
        let width = 3 * hb + 1;
        // Row i holds columns [i − hb, i + 2hb]; fill-in from pivoting
        // lands in the extra hb superdiagonals.
        let mut w = vec![0.0; n * width];
        for i in 0..n {
            let lo = i.saturating_sub(hb);
            let hi = (i + hb).min(n - 1);
            for j in lo..=hi {
                w[i * width + (j + hb - i)] = self.get(i, j);
            }
        }
        let at = |i: usize, j: usize| i * width + (j + hb - i);

        let mut piv = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let rmax = (k + hb).min(n - 1);
            let mut r = k;
            let mut best = w[at(k, k)].abs();
            for cand in (k + 1)..=rmax {
                let v = w[at(cand, k)].abs();
                if v > best {
                    best = v;
                    r = cand;
                }
            }
            piv[k] = r;
            if r != k {
                let jmax = (k + 2 * hb).min(n - 1);
                for j in k..=jmax {
                    w.swap(at(k, j), at(r, j));
                }
            }
            let mut pivot = w[at(k, k)];
            min_pivot = min_pivot.min(pivot.abs());
            if pivot.abs() < pivot_floor {
                pivot = if pivot >= 0.0 { pivot_floor } else { -pivot_floor };
                w[at(k, k)] = pivot;
            }
            let jmax = (k + 2 * hb).min(n - 1);
            for rr in (k + 1)..=rmax {
                let m = w[at(rr, k)] / pivot;
                w[at(rr, k)] = m;
                if m != 0.0 {
                    for j in (k + 1)..=jmax {
                        w[at(rr, j)] -= m * w[at(k, j)];
                    }
                }
            }
        }
        BandLu {
            dim: n,
            hb,
            w,
            piv,
            min_pivot,
        }
    }

    /// Direct solve with a singularity check: the smallest pivot must
    /// exceed `1e-12` times the operator scale.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let scale = self.inf_norm().max(f64::MIN_POSITIVE);
        let lu = self.factorize(0.0);
        if lu.min_pivot() < 1e-12 * scale {
            return Err(Error::SingularOperator(format!(
                "smallest pivot {:.3e} below 1e-12 × operator scale {:.3e}",
                lu.min_pivot(),
                scale
            )));
        }
        let mut x = lu.solve(rhs);
        // One step of iterative refinement tightens the residual to the
        // 1e-10·‖rhs‖ contract on mildly conditioned systems.
        let mut r = rhs.to_vec();
        let ax = self.apply_vec(&x);
        for i in 0..self.dim {
            r[i] -= ax[i];
        }
        let dx = lu.solve(&r);
        for i in 0..self.dim {
            x[i] += dx[i];
        }
        Ok(x)
    }
}

impl SymmetricOperator for BandMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim;
        let hb = self.hb;
        for i in 0..n {
            let lo = i.saturating_sub(hb);
            let hi = (i + hb).min(n - 1);
            let row = &self.data[i * (2 * hb + 1)..];
            let mut s = 0.0;
            for j in lo..=hi {
                s += row[j + hb - i] * x[j];
            }
            y[i] = s;
        }
    }

    fn scale_estimate(&self) -> f64 {
        self.inf_norm()
    }
}

/// A purely apply-defined symmetric operator; solved by MINRES.
pub struct MatrixFreeOperator<F: Fn(&[f64], &mut [f64])> {
    pub dim: usize,
    pub scale: f64,
    pub op: F,
}

impl<F: Fn(&[f64], &mut [f64])> SymmetricOperator for MatrixFreeOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.op)(x, y)
    }

    fn scale_estimate(&self) -> f64 {
        self.scale
    }
}

/// Factored band matrix: `P A = L U` in the usual banded in-place form.
pub struct BandLu {
    dim: usize,
    hb: usize,
    w: Vec<f64>,
    piv: Vec<usize>,
    min_pivot: f64,
}

impl BandLu {
    /// Smallest pivot magnitude seen before any flooring.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let hb = self.hb;
        let width = 3 * hb + 1;
        let at = |i: usize, j: usize| i * width + (j + hb - i);
        let mut x = rhs.to_vec();
        for k in 0..n {
            if self.piv[k] != k {
                x.swap(k, self.piv[k]);
            }
            let rmax = (k + hb).min(n - 1);
            for rr in (k + 1)..=rmax {
                let m = self.w[at(rr, k)];
                if m != 0.0 {
                    x[rr] -= m * x[k];
                }
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + 2 * hb).min(n - 1);
            let mut s = x[k];
            for j in (k + 1)..=jmax {
                s -= self.w[at(k, j)] * x[j];
            }
            x[k] = s / self.w[at(k, k)];
        }
        x
    }
}

/// Direct solve of `op · x = rhs` for assembled operators.
///
/// Fails with [`Error::SingularOperator`] when the operator is singular
/// at working tolerance — for the Neumann operators this is the
/// resonant-linearization signal callers must handle.
pub fn solve_linear(op: &BandMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    op.solve(rhs)
}

/// MINRES for symmetric (possibly indefinite) systems; the solver for
/// operators that only offer `apply`.
pub fn solve_minres<O: SymmetricOperator>(
    op: &O,
    rhs: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = op.dim();
    let norm_b = norm2(rhs);
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();

    let mut v_prev = vec![0.0; n];
    let mut v = r.clone();
    let mut beta = norm_b;
    scale_in(&mut v, 1.0 / beta);

    let (mut c_prev, mut s_prev) = (1.0, 0.0);
    let (mut c, mut s) = (1.0, 0.0);
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut eta = beta;

    for _ in 0..max_iter {
        // Lanczos step.
        let mut av = op.apply_vec(&v);
        let alpha = dot(&v, &av);
        for i in 0..n {
            av[i] -= alpha * v[i] + beta * v_prev[i];
        }
        let beta_next = norm2(&av);

        // Two previous Givens rotations applied to the new column.
        let delta = c * alpha - c_prev * s * beta;
        let rho2 = s * alpha + c_prev * c * beta;
        let rho3 = s_prev * beta;
        let rho1 = (delta * delta + beta_next * beta_next).sqrt();
        if rho1 == 0.0 {
            break;
        }

        let c_next = delta / rho1;
        let s_next = beta_next / rho1;

        let mut w_next = v.clone();
        for i in 0..n {
            w_next[i] = (v[i] - rho2 * w[i] - rho3 * w_prev[i]) / rho1;
        }
        for i in 0..n {
            x[i] += c_next * eta * w_next[i];
        }
        eta = -s_next * eta;

        // Shift the recurrences.
        w_prev = std::mem::replace(&mut w, w_next);
        c_prev = c;
        s_prev = s;
        c = c_next;
        s = s_next;

        if beta_next == 0.0 || eta.abs() <= rtol * norm_b {
            // Direct residual check before declaring victory.
            let ax = op.apply_vec(&x);
            for i in 0..n {
                r[i] = rhs[i] - ax[i];
            }
            if norm2(&r) <= rtol * norm_b * 10.0 {
                return Ok(x);
            }
        }

        v_prev = std::mem::replace(&mut v, av);
        scale_in(&mut v, 1.0 / beta_next);
        beta = beta_next;
    }
    let ax = op.apply_vec(&x);
    for i in 0..n {
        r[i] = rhs[i] - ax[i];
    }
    if norm2(&r) <= rtol * norm_b * 10.0 {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!(
            "MINRES stalled at relative residual {:.3e}",
            norm2(&r) / norm_b
        )))
    }
}

/// Options for [`smallest_eigenpairs`].
#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Seed for the deterministic starting block.
    pub seed: u64,
    /// Residual target relative to the operator scale.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra subspace vectors beyond `count`.
    pub extra: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: 1e-9,
            max_iter: 400,
            extra: 4,
        }
    }
}

/// One converged eigenpair.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// The `count` eigenpairs of smallest magnitude of a symmetric banded
/// operator.
///
/// Shift-invert inverse iteration at shift 0, run on a block with
/// Rayleigh–Ritz extraction (the block plays the role of deflation and
/// keeps ±-magnitude pairs resolvable). Singular operators are handled
/// by flooring the tiny pivots of the band factorization, which only
/// accelerates convergence to the null vector. Deterministic for a
/// fixed seed.
pub fn smallest_eigenpairs(
    op: &BandMatrix,
    count: usize,
    opts: &EigOptions,
) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if count == 0 || count > n {
        return Err(Error::DimensionMismatch(format!(
            "requested {count} eigenpairs of a dimension-{n} operator"
        )));
    }
    let scale = op.inf_norm().max(f64::MIN_POSITIVE);

    // Small problems: dense Jacobi, then pick by magnitude.
    if n <= 64 {
        let e = op.to_symmat().eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (ka, kb) = (e.values[a].abs(), e.values[b].abs());
            ka.partial_cmp(&kb)
                .unwrap()
                .then(e.values[a].partial_cmp(&e.values[b]).unwrap())
        });
        return Ok(order[..count]
            .iter()
            .map(|&k| {
                let vector = e.vector(k).to_vec();
                let mv = op.apply_vec(&vector);
                let residual = mv
                    .iter()
                    .zip(&vector)
                    .map(|(a, b)| (a - e.values[k] * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                EigenPair {
                    value: e.values[k],
                    vector,
                    residual,
                }
            })
            .collect());
    }

    let block = (count + opts.extra).min(n);
    let lu = op.factorize(1e-13 * scale);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut basis, &mut rng);

    for iter in 0..opts.max_iter {
        // Inverse power step on the whole block.
        for col in basis.iter_mut() {
            *col = lu.solve(col);
        }
        orthonormalize(&mut basis, &mut rng);

        // Rayleigh–Ritz: project, solve the small problem, rotate.
        let applied: Vec<Vec<f64>> = basis.iter().map(|c| op.apply_vec(c)).collect();
        let mut h = SymMat::zeros(block);
        for i in 0..block {
            for j in 0..=i {
                h.set(i, j, dot(&basis[i], &applied[j]));
            }
        }
        let small = sym_eig_small(&h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| {
            let (ka, kb) = (small.values[a].abs(), small.values[b].abs());
            ka.partial_cmp(&kb)
                .unwrap()
                .then(small.values[a].partial_cmp(&small.values[b]).unwrap())
        });

        let mut rotated: Vec<Vec<f64>> = Vec::with_capacity(block);
        for &k in &order {
            let w = small.vector(k);
            let mut col = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                let wi = w[i];
                if wi != 0.0 {
                    for (c, bv) in col.iter_mut().zip(b) {
                        *c += wi * bv;
                    }
                }
            }
            rotated.push(col);
        }
        let values: Vec<f64> = order.iter().map(|&k| small.values[k]).collect();

        // Residuals of the leading `count` Ritz pairs.
        let mut pairs = Vec::with_capacity(count);
        let mut all_ok = true;
        for j in 0..count {
            let mv = op.apply_vec(&rotated[j]);
            let residual = mv
                .iter()
                .zip(&rotated[j])
                .map(|(a, b)| (a - values[j] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual > opts.tol * scale {
                all_ok = false;
            }
            pairs.push(EigenPair {
                value: values[j],
                vector: rotated[j].clone(),
                residual,
            });
        }
        basis = rotated;
        if all_ok && iter > 0 {
            return Ok(pairs);
        }
    }
    Err(Error::NoConvergence(format!(
        "inverse subspace iteration did not reach tol {:.1e}·scale in {} iterations",
        opts.tol, opts.max_iter
    )))
}

/// Max relative self-adjointness defect `|⟨Mu,v⟩ − ⟨u,Mv⟩|` over seeded
/// random probe pairs.
pub fn self_adjointness_defect<O: SymmetricOperator>(op: &O, probes: usize, seed: u64) -> f64 {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = op.scale_estimate().max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for _ in 0..probes {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = op.apply_vec(&u);
        let mv = op.apply_vec(&v);
        let a = dot(&mu, &v);
        let b = dot(&u, &mv);
        worst = worst.max((a - b).abs() / (scale * norm2(&u) * norm2(&v)));
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale_in(a: &mut [f64], c: f64) {
    for v in a {
        *v *= c;
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass; degenerate
/// columns are re-seeded deterministically from `rng`.
fn orthonormalize(cols: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let k = cols.len();
    for j in 0..k {
        loop {
            for _pass in 0..2 {
                for i in 0..j {
                    // Split borrow: previous columns are immutable here.
                    let (head, tail) = cols.split_at_mut(j);
                    let proj = dot(&head[i], &tail[0]);
                    for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                        *t -= proj * h;
                    }
                }
            }
            let nrm = norm2(&cols[j]);
            if nrm > 1e-12 {
                scale_in(&mut cols[j], 1.0 / nrm);
                break;
            }
            let n = cols[j].len();
            cols[j] = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> BandMatrix {
        let mut m = BandMatrix::zeros(n, 1);
        for i in 0..n {
            m.set_sym(i, i, d);
            if i + 1 < n {
                m.set_sym(i, i + 1, (lo + up) / 2.0);
            }
        }
        m
    }

    /// One-sided symmetric Neumann Laplacian `(−Δ̃)` whose null vector is
    /// the constant: rows `(v0 − v1)/h²`, interior `(−v[i−1] + 2v[i] − v[i+1])/h²`.
    /// Eigenvalues are only first-order accurate at the boundary.
    fn neumann_laplacian_fem(m: usize, length: f64) -> BandMatrix {
        let h = length / (m - 1) as f64;
        let c = 1.0 / (h * h);
        let mut a = BandMatrix::zeros(m, 1);
        for i in 0..m {
            let d = if i == 0 || i == m - 1 { c } else { 2.0 * c };
            a.set_sym(i, i, d);
            if i + 1 < m {
                a.set_sym(i, i + 1, -c);
            }
        }
        a
    }

    /// Ghost-point Neumann Laplacian after the symmetrizing diagonal
    /// similarity: eigenvalues `(4/h²) sin²(jπ/(2(m−1)))`, second-order
    /// approximations of `j²π²/L²`.
    fn neumann_laplacian_ghost(m: usize, length: f64) -> BandMatrix {
        let h = length / (m - 1) as f64;
        let c = 1.0 / (h * h);
        let mut a = BandMatrix::zeros(m, 1);
        for i in 0..m {
            a.set_sym(i, i, 2.0 * c);
        }
        for i in 0..m - 1 {
            let boundary = i == 0 || i + 1 == m - 1;
            let v = if boundary { -c * 2.0_f64.sqrt() } else { -c };
            a.set_sym(i, i + 1, v);
        }
        a
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let mut id = BandMatrix::zeros(4, 0);
        for i in 0..4 {
            id.set_sym(i, i, 1.0);
        }
        let rhs = vec![3.0, -1.0, 0.5, 2.0];
        assert_eq!(solve_linear(&id, &rhs).unwrap(), rhs);

        let mut d = BandMatrix::zeros(2, 0);
        d.set_sym(0, 0, 2.0);
        d.set_sym(1, 1, 4.0);
        let x = solve_linear(&d, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_shifted_neumann_recovers_constant() {
        // (−Δ̃ + 1)·1 = 1 exactly: row sums of the Laplacian vanish.
        let m = 101;
        let mut a = neumann_laplacian_fem(m, 1.0);
        for i in 0..m {
            let v = a.get(i, i);
            a.set_sym(i, i, v + 1.0);
        }
        let one = vec![1.0; m];
        let applied = a.apply_vec(&one);
        for v in &applied {
            assert!((v - 1.0).abs() < 1e-10);
        }
        let x = solve_linear(&a, &one).unwrap();
        for v in &x {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn solve_matches_dense_elimination_on_random_bands() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..30 {
            let n = 5 + trial % 20;
            let hb = 1 + trial % 3;
            let mut m = BandMatrix::zeros(n, hb);
            for i in 0..n {
                m.set_sym(i, i, rng.gen_range(1.0..4.0) * if trial % 4 == 0 { -1.0 } else { 1.0 });
                for j in i.saturating_sub(hb)..i {
                    m.set_sym(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            match solve_linear(&m, &rhs) {
                Ok(x) => {
                    let ax = m.apply_vec(&x);
                    let res: f64 = ax
                        .iter()
                        .zip(&rhs)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let nb: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!(res <= 1e-10 * nb.max(1e-30), "residual {res} on trial {trial}");
                }
                Err(Error::SingularOperator(_)) => {} // unlucky draw, fine
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn singular_operator_reported() {
        let m = neumann_laplacian_fem(64, 1.0);
        let rhs = vec![1.0; 64];
        match solve_linear(&m, &rhs) {
            Err(Error::SingularOperator(_)) => {}
            other => panic!("expected singular operator, got {other:?}"),
        }
    }

    #[test]
    fn minres_agrees_with_direct_solve() {
        let m = tridiag(40, -1.0, 3.0, -1.0);
        let rhs: Vec<f64> = (0..40).map(|i| ((i as f64) * 0.3).sin()).collect();
        let direct = solve_linear(&m, &rhs).unwrap();
        let free = MatrixFreeOperator {
            dim: 40,
            scale: m.inf_norm(),
            op: |x: &[f64], y: &mut [f64]| m.apply(x, y),
        };
        let via_minres = solve_minres(&free, &rhs, 1e-12, 2000).unwrap();
        for (a, b) in direct.iter().zip(&via_minres) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn smallest_eigen_diagonal_by_magnitude() {
        let mut d = BandMatrix::zeros(3, 0);
        d.set_sym(0, 0, -3.0);
        d.set_sym(1, 1, 0.5);
        d.set_sym(2, 2, 10.0);
        let pairs = smallest_eigenpairs(&d, 2, &EigOptions::default()).unwrap();
        assert!((pairs[0].value - 0.5).abs() < 1e-12);
        assert!((pairs[1].value + 3.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_eigen_neumann_laplacian() {
        // L = π: eigenvalues j² with O(h²) error.
        let m = 201;
        let a = neumann_laplacian_ghost(m, std::f64::consts::PI);
        let pairs = smallest_eigenpairs(&a, 2, &EigOptions::default()).unwrap();
        assert!(pairs[0].value.abs() < 1e-9);
        let h = std::f64::consts::PI / (m - 1) as f64;
        assert!((pairs[1].value - 1.0).abs() < 4.0 * h * h);
    }

    #[test]
    fn exact_zero_mode_with_constant_eigenvector() {
        let a = neumann_laplacian_fem(101, std::f64::consts::PI);
        let pairs = smallest_eigenpairs(&a, 1, &EigOptions::default()).unwrap();
        assert!(pairs[0].value.abs() <= 1e-10);
        let v = &pairs[0].vector;
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        for x in v {
            assert!((x - mean).abs() < 1e-7 * mean.abs().max(1e-3));
        }
    }

    #[test]
    fn plus_minus_magnitude_pair_is_resolved() {
        // Eigenvalues {−1, 1, 5, …}: the ± pair defeats single-vector
        // inverse iteration; the block handles it.
        let n = 80;
        let mut d = BandMatrix::zeros(n, 0);
        d.set_sym(0, 0, -1.0);
        d.set_sym(1, 1, 1.0);
        for i in 2..n {
            d.set_sym(i, i, 5.0 + i as f64);
        }
        let pairs = smallest_eigenpairs(&d, 2, &EigOptions::default()).unwrap();
        let mut got: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((got[0] + 1.0).abs() < 1e-9);
        assert!((got[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = neumann_laplacian_fem(151, 1.0);
        let p1 = smallest_eigenpairs(&a, 3, &EigOptions::default()).unwrap();
        let p2 = smallest_eigenpairs(&a, 3, &EigOptions::default()).unwrap();
        for (x, y) in p1.iter().zip(&p2) {
            assert_eq!(x.value, y.value);
            assert_eq!(x.vector, y.vector);
        }
    }

    #[test]
    fn self_adjointness_probe() {
        let a = neumann_laplacian_fem(120, 2.0);
        assert!(self_adjointness_defect(&a, 50, 0) <= 1e-10);
    }
}

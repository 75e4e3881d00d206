//! Small dense symmetric matrices and their eigendecomposition.
//!
//! The pointwise coefficient blocks are tiny (order ≤ 8, occasionally a
//! few dozen for projected subspace problems), so the eigensolver is a
//! cyclic Jacobi sweep: unconditionally convergent for symmetric
//! matrices and dependency-free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symmetric matrix stored as the packed lower triangle,
/// `entries[i*(i+1)/2 + j]` for `j <= i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    order: usize,
    entries: Vec<f64>,
}

impl SymMat {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            entries: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn scaled_identity(order: usize, c: f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.set(i, i, c);
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Build from full rows; fails if the rows are not symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch("ragged matrix rows".into()));
            }
            for (j, v) in row.iter().enumerate() {
                if j <= i {
                    m.set(i, j, *v);
                } else if (v - rows[j][i]).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::InvalidValue(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(j <= i);
        i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        self.entries[Self::idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        self.entries[Self::idx(i, j)] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry; the scale used by tolerance checks.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &SymMat) -> Result<SymMat> {
        self.check_order(other)?;
        Ok(SymMat {
            order: self.order,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SymMat) -> Result<SymMat> {
        self.check_order(other)?;
        Ok(SymMat {
            order: self.order,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> SymMat {
        SymMat {
            order: self.order,
            entries: self.entries.iter().map(|v| c * v).collect(),
        }
    }

    fn check_order(&self, other: &SymMat) -> Result<()> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "matrix orders differ: {} vs {}",
                self.order, other.order
            )));
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn determinant(&self) -> f64 {
        let e = self.eigen();
        e.values.iter().product()
    }

    /// Smallest eigenvalue; the positive semi-definiteness slack.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        let e = self.eigen();
        e.values
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Full eigendecomposition by cyclic Jacobi rotations. Eigenvalues
    /// ascend; eigenvectors are the orthonormal columns of `vectors`.
    pub fn eigen(&self) -> EigenDecomp {
        sym_eig_small(self)
    }
}

/// Eigendecomposition of a [`SymMat`]: `M = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column-major orthonormal eigenvectors: `vectors[k*n..(k+1)*n]`
    /// is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

impl EigenDecomp {
    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.values.len();
        &self.vectors[k * n..(k + 1) * n]
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Rotations annihilate off-diagonal entries in row-cyclic order until
/// the off-diagonal Frobenius mass drops below `1e-15` of the matrix
/// scale; quadratic convergence makes ~8 sweeps plenty for order ≤ 64.
pub fn sym_eig_small(m: &SymMat) -> EigenDecomp {
    let n = m.order();
    // Full working copy (row-major) plus accumulated rotations.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = m.get(i, j);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[i * n + j].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e12 {
                    0.5 / theta
                } else {
                    let s = theta.signum();
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- Jᵀ A J on rows/columns p and q.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Sort ascending, permute the eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (k, &col) in order.iter().enumerate() {
        for i in 0..n {
            vectors[k * n + i] = v[i * n + col];
        }
    }
    EigenDecomp { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn residual(m: &SymMat, e: &EigenDecomp) -> f64 {
        let n = m.order();
        let mut worst = 0.0_f64;
        for k in 0..n {
            let v = e.vector(k);
            let mv = m.mul_vec(v);
            let mut r = 0.0;
            for i in 0..n {
                r += (mv[i] - e.values[k] * v[i]).powi(2);
            }
            worst = worst.max(r.sqrt());
        }
        worst
    }

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMat {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let e = SymMat::identity(3).eigen();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[a, b], [b, a]] has eigenvalues a ± b.
        let m = SymMat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = m.eigen();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_5x5_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = random_sym(5, &mut rng);
            let e = m.eigen();
            assert!(residual(&m, &e) <= 1e-10 * m.max_abs().max(1e-30));
            // Ascending order.
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_sym(6, &mut rng);
        let e = m.eigen();
        for i in 0..6 {
            for j in 0..6 {
                let dot: f64 = e.vector(i).iter().zip(e.vector(j)).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction_on_thousand_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..1000 {
            let n = 1 + trial % 6;
            let m = random_sym(n, &mut rng);
            let e = m.eigen();
            // ‖M − VΛVᵀ‖ entrywise.
            let mut worst = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += e.vector(k)[i] * e.values[k] * e.vector(k)[j];
                    }
                    worst = worst.max((m.get(i, j) - s).abs());
                }
            }
            assert!(
                worst <= 1e-9 * m.max_abs().max(1e-30),
                "reconstruction error {worst} at trial {trial}"
            );
        }
    }

    #[test]
    fn determinant_and_trace() {
        let m = SymMat::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((m.determinant() - 1.0).abs() < 1e-12);
        assert_eq!(m.trace(), 3.0);
    }
}

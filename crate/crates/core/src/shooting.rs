//! Second 1D oracle: the fundamental-matrix shooting determinant.
//!
//! Integrate the first-order system for the `n×n` blocks
//! `Y' = Z`, `Z' = −A(x)·Y` with `(Y, Z)(0) = (I, 0)` — every column
//! satisfies the left Neumann condition — and return `det Z(L)`.
//! A nontrivial Neumann solution exists exactly when some combination
//! of the columns has zero derivative at `L`, i.e. when the
//! determinant vanishes. Sign changes along coefficient sweeps locate
//! resonances independently of the finite-difference spectrum.

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::smallmat::SymMat;

/// `det u'(L)` over the fundamental columns with `(u, u')(0) = (I, 0)`.
///
/// Classical fixed-step fourth-order integration on the grid nodes;
/// midpoint coefficient values are linear interpolants of the samples
/// (exact for affine coefficients).
pub fn shooting_determinant(a: &MatrixField) -> Result<f64> {
    let grid = a.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch(
            "the shooting oracle is defined on intervals only".into(),
        ));
    }
    let n = a.order();
    let m = grid.node_count();
    let h = grid.axis(0).spacing();
    if h < 1e-12 {
        return Err(Error::InvalidValue(format!(
            "integration step {h} underflows"
        )));
    }

    // Row-major n×n blocks.
    let mut y = vec![0.0; n * n];
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        y[i * n + i] = 1.0;
    }

    let mul = |mat: &SymMat, b: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += mat.get(i, k) * b[k * n + j];
                }
                out[i * n + j] = s;
            }
        }
        out
    };
    let axpy = |alpha: f64, x: &[f64], out: &mut [f64]| {
        for (o, v) in out.iter_mut().zip(x) {
            *o += alpha * v;
        }
    };

    for step in 0..m - 1 {
        let a0 = a.sample(step);
        let a1 = a.sample(step + 1);
        let amid = a0.add(a1)?.scaled(0.5);

        // k = (Y', Z') at the four RK4 stages.
        let ky1 = z.clone();
        let kz1 = mul(a0, &y).iter().map(|v| -v).collect::<Vec<_>>();

        let mut y2 = y.clone();
        axpy(0.5 * h, &ky1, &mut y2);
        let mut z2 = z.clone();
        axpy(0.5 * h, &kz1, &mut z2);
        let ky2 = z2.clone();
        let kz2 = mul(&amid, &y2).iter().map(|v| -v).collect::<Vec<_>>();

        let mut y3 = y.clone();
        axpy(0.5 * h, &ky2, &mut y3);
        let mut z3 = z.clone();
        axpy(0.5 * h, &kz2, &mut z3);
        let ky3 = z3.clone();
        let kz3 = mul(&amid, &y3).iter().map(|v| -v).collect::<Vec<_>>();

        let mut y4 = y.clone();
        axpy(h, &ky3, &mut y4);
        let mut z4 = z.clone();
        axpy(h, &kz3, &mut z4);
        let ky4 = z4.clone();
        let kz4 = mul(a1, &y4).iter().map(|v| -v).collect::<Vec<_>>();

        for i in 0..n * n {
            y[i] += h / 6.0 * (ky1[i] + 2.0 * ky2[i] + 2.0 * ky3[i] + ky4[i]);
            z[i] += h / 6.0 * (kz1[i] + 2.0 * kz2[i] + 2.0 * kz3[i] + kz4[i]);
        }
    }

    Ok(dense_determinant(&mut z, n))
}

/// Determinant of a small dense row-major matrix by partially pivoted
/// elimination; destroys the input.
fn dense_determinant(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let mut r = k;
        let mut best = m[k * n + k].abs();
        for cand in (k + 1)..n {
            if m[cand * n + k].abs() > best {
                best = m[cand * n + k].abs();
                r = cand;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if r != k {
            for j in 0..n {
                m.swap(k * n + j, r * n + j);
            }
            det = -det;
        }
        let pivot = m[k * n + k];
        det *= pivot;
        for rr in (k + 1)..n {
            let f = m[rr * n + k] / pivot;
            if f != 0.0 {
                for j in k..n {
                    m[rr * n + j] -= f * m[k * n + j];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn constant_scalar(l: f64, m: usize, s: f64) -> MatrixField {
        let g = Grid::line(l, m).unwrap();
        MatrixField::constant(&g, SymMat::diagonal(&[s]))
    }

    #[test]
    fn constant_coefficient_matches_closed_form() {
        // u(0)=1, u'(0)=0, u'' + s·u = 0 → u'(L) = −√s · sin(√s·L).
        for &s in &[0.3_f64, 0.7, 2.5, 3.9] {
            let det = shooting_determinant(&constant_scalar(PI, 513, s)).unwrap();
            let exact = -s.sqrt() * (s.sqrt() * PI).sin();
            assert!(
                (det - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                "s = {s}: det {det} vs exact {exact}"
            );
        }
    }

    #[test]
    fn zeros_at_square_integers() {
        // Sign changes bracket s = 1 and s = 4.
        let f = |s: f64| shooting_determinant(&constant_scalar(PI, 257, s)).unwrap();
        assert!(f(0.9) * f(1.1) < 0.0);
        assert!(f(3.9) * f(4.1) < 0.0);
        assert!(f(1.5) * f(2.5) > 0.0);
    }

    #[test]
    fn zero_coefficient_flags_the_constant_kernel() {
        // u'' = 0 with u'(0) = 0 gives constants: u'(L) = 0 identically.
        let det = shooting_determinant(&constant_scalar(1.0, 65, 0.0)).unwrap();
        assert!(det.abs() < 1e-12);
    }

    #[test]
    fn diagonal_system_determinant_is_product() {
        let g = Grid::line(PI, 257).unwrap();
        let a = MatrixField::constant(&g, SymMat::diagonal(&[0.5, 2.0]));
        let det = shooting_determinant(&a).unwrap();
        let d1 = -0.5_f64.sqrt() * (0.5_f64.sqrt() * PI).sin();
        let d2 = -2.0_f64.sqrt() * (2.0_f64.sqrt() * PI).sin();
        assert!((det - d1 * d2).abs() < 1e-6 * (1.0 + (d1 * d2).abs()));
    }

    #[test]
    fn rejects_rectangles() {
        let g = Grid::rectangle((1.0, 1.0), (5, 5)).unwrap();
        let a = MatrixField::constant(&g, SymMat::diagonal(&[1.0]));
        assert!(shooting_determinant(&a).is_err());
    }

    #[test]
    fn variable_coefficient_self_convergence() {
        // With node-sampled coefficients the midpoint interpolation
        // limits the scheme to second order; check that, not more.
        let build = |m: usize| {
            let g = Grid::line(1.0, m).unwrap();
            MatrixField::from_fn(&g, 1, |x| {
                let mut s = SymMat::zeros(1);
                s.set(0, 0, 2.0 + (3.0 * x[0]).sin());
                s
            })
            .unwrap()
        };
        let d1 = shooting_determinant(&build(129)).unwrap();
        let d2 = shooting_determinant(&build(257)).unwrap();
        let d3 = shooting_determinant(&build(513)).unwrap();
        let order = ((d1 - d3).abs() / (d2 - d3).abs()).log2();
        assert!(order > 1.7, "self-convergence order {order}");
        assert!((d2 - d3).abs() < 1e-4 * (1.0 + d3.abs()));
    }
}

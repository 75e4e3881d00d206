//! Independent ground truth for the certificates: the discrete Neumann
//! operator `L_A u = −u″ − A(x)u` (or `−Δu − A(x)u` on a rectangle),
//! its smallest-magnitude spectrum, the nontrivial-kernel flag, and the
//! forced linear solve.
//!
//! Neumann conditions enter by ghost-point reflection, which is
//! second-order and leaves the operator exactly symmetric after a
//! diagonal similarity by the square roots of the (normalized)
//! trapezoid weights. The similarity preserves the spectrum, so every
//! eigenvalue reported here is an eigenvalue of the plain
//! finite-difference operator.

use std::sync::Arc;

use crate::band::{smallest_eigenpairs, BandMatrix, EigOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::grid::Grid;
use crate::gridfn::VectorFunction;

/// The assembled, symmetrized discrete Neumann operator of a
/// coefficient field `A`.
pub struct NeumannOperator {
    grid: Arc<Grid>,
    order: usize,
    matrix: BandMatrix,
    /// Per-node `√(normalized weight)`; maps raw grid functions to the
    /// symmetrized unknowns and back.
    dscale: Vec<f64>,
    /// `1 + max_x ρ(A(x))`, the coefficient scale for kernel tolerances.
    coeff_scale: f64,
}

impl NeumannOperator {
    /// Assemble `−(second differences) − A(x)` with ghost-point Neumann
    /// closure, node-major unknown ordering (`node * order + component`).
    pub fn assemble(a: &MatrixField) -> Self {
        let grid = Arc::clone(a.grid());
        let n = a.order();
        let m = grid.node_count();
        let dim = m * n;

        let dscale: Vec<f64> = (0..m)
            .map(|node| normalized_weight(&grid, node).sqrt())
            .collect();

        let hb = match grid.dim() {
            1 => n,
            _ => n * grid.axis(0).node_count(),
        };
        let mut mat = BandMatrix::zeros(dim, hb);

        // Diagonal Laplacian contribution and the −A(x) blocks.
        let diag = match grid.dim() {
            1 => {
                let h = grid.axis(0).spacing();
                2.0 / (h * h)
            }
            _ => {
                let hx = grid.axis(0).spacing();
                let hy = grid.axis(1).spacing();
                2.0 / (hx * hx) + 2.0 / (hy * hy)
            }
        };
        for node in 0..m {
            let block = a.sample(node);
            for c in 0..n {
                for d in 0..=c {
                    let lap = if c == d { diag } else { 0.0 };
                    mat.set_sym(node * n + c, node * n + d, lap - block.get(c, d));
                }
            }
        }

        // Edge couplings. A boundary-touching edge carries the ghost
        // doubling on one side and the half-weight scaling on the other;
        // the symmetrized value is −√2/h² there and −1/h² inside.
        match grid.dim() {
            1 => {
                let h = grid.axis(0).spacing();
                let c0 = -1.0 / (h * h);
                for i in 0..m - 1 {
                    let v = if i == 0 || i + 1 == m - 1 {
                        c0 * std::f64::consts::SQRT_2
                    } else {
                        c0
                    };
                    for c in 0..n {
                        mat.set_sym(i * n + c, (i + 1) * n + c, v);
                    }
                }
            }
            _ => {
                let nx = grid.axis(0).node_count();
                let ny = grid.axis(1).node_count();
                let hx = grid.axis(0).spacing();
                let hy = grid.axis(1).spacing();
                let cx = -1.0 / (hx * hx);
                let cy = -1.0 / (hy * hy);
                for iy in 0..ny {
                    for ix in 0..nx - 1 {
                        let v = if ix == 0 || ix + 1 == nx - 1 {
                            cx * std::f64::consts::SQRT_2
                        } else {
                            cx
                        };
                        let p = grid.index2(ix, iy);
                        let q = grid.index2(ix + 1, iy);
                        for c in 0..n {
                            mat.set_sym(p * n + c, q * n + c, v);
                        }
                    }
                }
                for ix in 0..nx {
                    for iy in 0..ny - 1 {
                        let v = if iy == 0 || iy + 1 == ny - 1 {
                            cy * std::f64::consts::SQRT_2
                        } else {
                            cy
                        };
                        let p = grid.index2(ix, iy);
                        let q = grid.index2(ix, iy + 1);
                        for c in 0..n {
                            mat.set_sym(p * n + c, q * n + c, v);
                        }
                    }
                }
            }
        }

        NeumannOperator {
            grid,
            order: n,
            matrix: mat,
            dscale,
            coeff_scale: 1.0 + a.max_spectral_radius(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The symmetrized band matrix (same spectrum as the raw operator).
    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn coeff_scale(&self) -> f64 {
        self.coeff_scale
    }

    /// Default kernel tolerance: `10·h²·(1 + max_x ρ(A(x)))`. A true
    /// continuum kernel perturbs the discrete eigenvalue by O(h²); the
    /// factor 10 absorbs the constants. Recorded in every report.
    pub fn default_kernel_tol(&self) -> f64 {
        10.0 * self.grid.max_spacing().powi(2) * self.coeff_scale
    }

    /// Apply the raw (unsymmetrized) operator to a raw vector function.
    pub fn apply_raw(&self, u: &VectorFunction) -> VectorFunction {
        let n = self.order;
        let mut scaled = u.flat().to_vec();
        for (node, d) in self.dscale.iter().enumerate() {
            for c in 0..n {
                scaled[node * n + c] *= d;
            }
        }
        let mut out = vec![0.0; scaled.len()];
        self.matrix.apply(&scaled, &mut out);
        for (node, d) in self.dscale.iter().enumerate() {
            for c in 0..n {
                out[node * n + c] /= d;
            }
        }
        VectorFunction::from_flat(Arc::clone(&self.grid), n, out)
            .expect("operator output stays finite")
    }

    /// Smallest-magnitude eigenpairs with eigenvectors mapped back to
    /// raw grid functions (normalized to unit maximum amplitude).
    pub fn eigenpairs(&self, count: usize, opts: &EigOptions) -> Result<Vec<(f64, VectorFunction)>> {
        let pairs = smallest_eigenpairs(&self.matrix, count, opts)?;
        let n = self.order;
        pairs
            .into_iter()
            .map(|p| {
                let mut raw = p.vector;
                for (node, d) in self.dscale.iter().enumerate() {
                    for c in 0..n {
                        raw[node * n + c] /= d;
                    }
                }
                let amp = raw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if amp > 0.0 {
                    for v in &mut raw {
                        *v /= amp;
                    }
                }
                Ok((
                    p.value,
                    VectorFunction::from_flat(Arc::clone(&self.grid), n, raw)?,
                ))
            })
            .collect()
    }

    /// Solve `L_A u = f`. Fails with [`Error::SingularOperator`] when
    /// the coefficient is resonant at working tolerance.
    pub fn solve(&self, f: &VectorFunction) -> Result<VectorFunction> {
        if f.order() != self.order || f.grid() != &self.grid {
            return Err(Error::DimensionMismatch(
                "forcing does not match the operator's grid/order".into(),
            ));
        }
        let n = self.order;
        let mut rhs = f.flat().to_vec();
        for (node, d) in self.dscale.iter().enumerate() {
            for c in 0..n {
                rhs[node * n + c] *= d;
            }
        }
        let mut w = self.matrix.solve(&rhs)?;
        for (node, d) in self.dscale.iter().enumerate() {
            for c in 0..n {
                w[node * n + c] /= d;
            }
        }
        VectorFunction::from_flat(Arc::clone(&self.grid), n, w)
    }
}

fn normalized_weight(grid: &Grid, node: usize) -> f64 {
    // Weight divided by the cell volume: 1 inside, 1/2 on faces, 1/4 at
    // 2D corners.
    let cell: f64 = (0..grid.dim()).map(|k| grid.axis(k).spacing()).product();
    grid.weight(node) / cell
}

/// Smallest-magnitude spectrum of `L_A` and the nontrivial-kernel flag.
#[derive(Debug, Clone)]
pub struct KernelReport {
    /// `(eigenvalue, eigenvector)`, ascending magnitude; eigenvectors
    /// are raw grid functions scaled to unit max amplitude.
    pub pairs: Vec<(f64, VectorFunction)>,
    /// `min |eigenvalue| <= kernel_tol`.
    pub nontrivial: bool,
    /// The tolerance actually used.
    pub kernel_tol: f64,
}

impl KernelReport {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.0.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Assemble `L_A`, compute the `count` smallest-magnitude eigenpairs and
/// flag a (numerically) nontrivial kernel.
///
/// `kernel_tol = None` uses the operator's calibrated default,
/// `10·h²·(1 + max ρ(A))`.
pub fn kernel_report(
    a: &MatrixField,
    count: usize,
    kernel_tol: Option<f64>,
) -> Result<KernelReport> {
    kernel_report_with(a, count, kernel_tol, &EigOptions::default())
}

/// [`kernel_report`] with explicit eigensolver options (seed etc.).
pub fn kernel_report_with(
    a: &MatrixField,
    count: usize,
    kernel_tol: Option<f64>,
    opts: &EigOptions,
) -> Result<KernelReport> {
    if count == 0 {
        return Err(Error::DimensionMismatch(
            "kernel report needs count >= 1".into(),
        ));
    }
    let op = NeumannOperator::assemble(a);
    let tol = kernel_tol.unwrap_or_else(|| op.default_kernel_tol());
    let pairs = op.eigenpairs(count, opts)?;
    let min_abs = pairs
        .iter()
        .map(|p| p.0.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(KernelReport {
        pairs,
        nontrivial: min_abs <= tol,
        kernel_tol: tol,
    })
}

/// Solve the forced linear Neumann problem `L_A u = f`, i.e. the
/// discrete form of `u″ + A(x)u + f = 0` rearranged as
/// `−u″ − A(x)u = f`. The caller is responsible for having certified
/// (or kernel-checked) that `A` is nonresonant.
pub fn solve_linear_bvp(a: &MatrixField, f: &VectorFunction) -> Result<VectorFunction> {
    NeumannOperator::assemble(a).solve(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::self_adjointness_defect;
    use crate::gridfn::GridFunction;
    use crate::smallmat::SymMat;
    use std::f64::consts::PI;

    fn scalar_field(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> MatrixField {
        MatrixField::from_fn(grid, 1, |x| {
            let mut m = SymMat::zeros(1);
            m.set(0, 0, f(x));
            m
        })
        .unwrap()
    }

    #[test]
    fn zero_coefficient_spectrum() {
        let g = Grid::line(PI, 257).unwrap();
        let a = scalar_field(&g, |_| 0.0);
        let rep = kernel_report(&a, 2, None).unwrap();
        let eigs = rep.eigenvalues();
        assert!(eigs[0].abs() < 1e-9);
        let h = PI / 256.0;
        assert!((eigs[1] - 1.0).abs() < 4.0 * h * h);
        // The zero mode is exact: constants solve u'' = 0 with Neumann.
        assert!(rep.nontrivial);
    }

    #[test]
    fn constant_shift_commutes() {
        let g = Grid::line(PI, 129).unwrap();
        let c = 0.37;
        let base = kernel_report(&scalar_field(&g, |_| 0.0), 3, None).unwrap();
        let shifted = kernel_report(&scalar_field(&g, |_| c), 3, None).unwrap();
        let mut a: Vec<f64> = base.eigenvalues().iter().map(|v| v - c).collect();
        let mut b = shifted.eigenvalues();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "shifted spectrum mismatch: {x} vs {y}");
        }
    }

    #[test]
    fn operator_is_self_adjoint() {
        let g = Grid::rectangle((1.0, 1.3), (17, 13)).unwrap();
        let a = MatrixField::from_fn(&g, 2, |x| {
            SymMat::from_rows(&[
                vec![x[0].sin(), 0.2 * x[1]],
                vec![0.2 * x[1], 1.0 - x[0]],
            ])
            .unwrap()
        })
        .unwrap();
        let op = NeumannOperator::assemble(&a);
        assert!(self_adjointness_defect(op.matrix(), 50, 0) <= 1e-10);
    }

    #[test]
    fn exact_resonance_is_flagged_with_cosine_kernel() {
        let g = Grid::line(1.0, 513).unwrap();
        let a = scalar_field(&g, |_| PI * PI);
        let rep = kernel_report(&a, 2, None).unwrap();
        assert!(rep.nontrivial);
        let (lam, vec) = &rep.pairs[0];
        assert!(lam.abs() <= rep.kernel_tol);
        let cos = GridFunction::from_fn(&g, |x| (PI * x[0]).cos());
        let corr = vec.component(0).correlation(&cos).unwrap();
        assert!(corr >= 0.999, "kernel correlation {corr}");
    }

    #[test]
    fn nonresonant_constant_has_clear_gap() {
        let g = Grid::line(1.0, 257).unwrap();
        let a = scalar_field(&g, |_| 0.5 * PI * PI);
        let rep = kernel_report(&a, 2, None).unwrap();
        assert!(!rep.nontrivial);
        // min |λ_j − a| = a at j = 0 here? 0 − a = −a vs π² − a = a·(π²/a − 1):
        // a = π²/2 so both gaps equal π²/2.
        assert!((rep.min_abs_eigenvalue() - 0.5 * PI * PI).abs() < 0.05);
    }

    #[test]
    fn block_decoupling_detects_single_component_resonance() {
        let g = Grid::line(1.0, 257).unwrap();
        let a = MatrixField::constant(&g, SymMat::diagonal(&[PI * PI, 0.25]));
        let rep = kernel_report(&a, 2, None).unwrap();
        assert!(rep.nontrivial);
        let (_, v) = &rep.pairs[0];
        // Second component stays quiet.
        assert!(v.component(1).max_abs() < 1e-6);
    }

    #[test]
    fn solve_identity_shift() {
        // A = −I gives L_A = −Δ + 1 and u ≡ 1 for f ≡ 1.
        let g = Grid::line(1.0, 101).unwrap();
        let a = scalar_field(&g, |_| -1.0);
        let f = VectorFunction::from_components(&[GridFunction::constant(&g, 1.0)]).unwrap();
        let u = solve_linear_bvp(&a, &f).unwrap();
        for v in u.flat() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn manufactured_solution_second_order() {
        // u* = cos(πx/L), a ≡ 0.5, f = −u*'' − a·u*; the discrete
        // solution converges at O(h²).
        let mut errs = Vec::new();
        for &m in &[65usize, 129, 257] {
            let g = Grid::line(1.0, m).unwrap();
            let a = scalar_field(&g, |_| 0.5);
            let exact = GridFunction::from_fn(&g, |x| (PI * x[0]).cos());
            let f = GridFunction::from_fn(&g, |x| {
                let u = (PI * x[0]).cos();
                PI * PI * u - 0.5 * u
            });
            let u = solve_linear_bvp(&a, &VectorFunction::from_components(&[f]).unwrap()).unwrap();
            let err = u
                .component(0)
                .values()
                .iter()
                .zip(exact.values())
                .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
            errs.push(err);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.8 && order1 < 2.2, "order {order1}");
        assert!(order2 > 1.8 && order2 < 2.2, "order {order2}");
    }

    #[test]
    fn zero_forcing_gives_zero_for_nonresonant_coefficient() {
        let g = Grid::line(1.0, 129).unwrap();
        let a = scalar_field(&g, |_| 2.0);
        let f = VectorFunction::zeros(&g, 1);
        let u = solve_linear_bvp(&a, &f).unwrap();
        assert!(u.max_abs() == 0.0);
    }

    #[test]
    fn resonant_solve_is_rejected() {
        let g = Grid::line(1.0, 257).unwrap();
        // Use the exactly-resonant discrete eigenvalue so the pivot test
        // sees a genuinely singular matrix.
        let rep = kernel_report(&scalar_field(&g, |_| 0.0), 2, None).unwrap();
        let lam1 = rep.eigenvalues()[1];
        let a = scalar_field(&g, |_| lam1);
        let f = VectorFunction::from_components(&[GridFunction::constant(&g, 1.0)]).unwrap();
        match solve_linear_bvp(&a, &f) {
            Err(Error::SingularOperator(_)) => {}
            other => panic!("expected a singular-operator error, got {other:?}"),
        }
    }

    #[test]
    fn eigenvalue_convergence_order_over_refinement() {
        let mut errs = Vec::new();
        for &m in &[129usize, 257, 513] {
            let g = Grid::line(1.0, m).unwrap();
            let rep = kernel_report(&scalar_field(&g, |_| 0.0), 3, None).unwrap();
            let mut eigs = rep.eigenvalues();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let exact1 = PI * PI;
            let exact2 = 4.0 * PI * PI;
            errs.push(((eigs[1] - exact1).abs(), (eigs[2] - exact2).abs()));
        }
        for j in 0..2 {
            let e: Vec<f64> = errs.iter().map(|t| if j == 0 { t.0 } else { t.1 }).collect();
            let o1 = (e[0] / e[1]).log2();
            let o2 = (e[1] / e[2]).log2();
            assert!(o1 > 1.8 && o1 < 2.2, "mode {j} order {o1}");
            assert!(o2 > 1.8 && o2 < 2.2, "mode {j} order {o2}");
        }
    }
}

//! The optimal constants β_p: the minimum of the constrained quotient
//!
//! ```text
//!          ∫ |∇v|²
//! I_p(v) = ────────   over the admissible class X_p ∖ {0},
//!          ‖v‖_s²     s = 2p/(p−1)
//! ```
//!
//! where `X_p` pins the translation degree of freedom: zero mean for
//! `p = ∞`, `max v + min v = 0` for `p = 1`, and `∫ |v|^{2/(p−1)} v = 0`
//! for finite `p > 1`. On an interval every `p ∈ [1, ∞]` is admissible;
//! on a rectangle the theory needs `p > N/2 = 1`.
//!
//! Routes to the value:
//! * `p = ∞` — the first strictly positive Neumann eigenvalue of the
//!   assembled discrete operator (same matrix as the kernel oracle).
//! * finite `p` — projected gradient descent on the quotient with the
//!   two-step projection (constraint shift, then denominator
//!   renormalization) and seeded random restarts ([`descent`]).
//! * an independent Euler–Lagrange shooting oracle for interior `p`
//!   ([`euler_lagrange`]), used by the acceptance suite to cross-check
//!   the descent value with an unrelated discretization.

mod descent;
mod euler_lagrange;

pub use euler_lagrange::beta_by_shooting;

use std::sync::Arc;

use crate::band::EigOptions;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::field::MatrixField;
use crate::grid::Grid;
use crate::gridfn::{pow_abs, GridFunction};
use crate::oracle::NeumannOperator;
use crate::smallmat::SymMat;

/// Result of projecting a function onto the admissible class by a
/// constant shift.
#[derive(Debug, Clone)]
pub struct ShiftOutcome {
    /// The shift `k` with `v + k` admissible.
    pub shift: f64,
    pub shifted: GridFunction,
    /// A constant input shifts to the zero function, which is not in
    /// `X_p ∖ {0}`.
    pub degenerate: bool,
}

/// Shift `v` by the unique constant that lands it in `X_p`.
///
/// * `p = 1`: `k = −(max v + min v)/2`.
/// * `p = ∞`: `k = −(∫v)/|Ω|`.
/// * finite `p`: the root of the strictly increasing
///   `g(k) = ∫ |v+k|^{2/(p−1)} (v+k)`, bracketed by `[−max v, −min v]`.
pub fn shift_to_admissible(v: &GridFunction, p: Exponent) -> Result<ShiftOutcome> {
    let max = v.max_value();
    let min = v.min_value();
    if max == min {
        return Ok(ShiftOutcome {
            shift: -max,
            shifted: GridFunction::zeros(v.grid()),
            degenerate: true,
        });
    }
    let k = if p.is_one() {
        -(max + min) / 2.0
    } else if p.is_infinite() {
        -v.integrate() / v.grid().measure()
    } else {
        let weights: Vec<f64> = (0..v.len()).map(|i| v.grid().weight(i)).collect();
        constraint_shift_root(v.values(), &weights, p.constraint_exponent(), 0.0)
    };
    Ok(ShiftOutcome {
        shift: k,
        shifted: v.shifted(k),
        degenerate: false,
    })
}

/// Dimensionless residual of the `X_p` membership of `v`, in `[0, 1]`.
pub fn constraint_residual(v: &GridFunction, p: Exponent) -> f64 {
    if p.is_one() {
        let m = v.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        (v.max_value() + v.min_value()).abs() / (2.0 * m)
    } else if p.is_infinite() {
        let l2 = quad_norm(v, 2.0);
        if l2 == 0.0 {
            return 0.0;
        }
        v.integrate().abs() / (v.grid().measure().sqrt() * l2)
    } else {
        let q = p.constraint_exponent();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, x) in v.values().iter().enumerate() {
            let w = v.grid().weight(i);
            let a = pow_abs(*x, q);
            num += w * a * x;
            den += w * a * x.abs();
        }
        if den == 0.0 {
            0.0
        } else {
            num.abs() / den
        }
    }
}

/// Safeguarded Newton iteration for the constraint root `g(k) = 0`;
/// `hint` warm-starts the inner descent loops.
pub(crate) fn constraint_shift_root(values: &[f64], weights: &[f64], q: f64, hint: f64) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-max, -min);
    let g_and_slope = |k: f64| -> (f64, f64) {
        let (mut g, mut dg) = (0.0, 0.0);
        for (v, w) in values.iter().zip(weights) {
            let t = v + k;
            let a = pow_abs(t, q);
            g += w * a * t;
            dg += w * (q + 1.0) * a;
        }
        (g, dg)
    };
    let scale = {
        let amp = max.abs().max(min.abs()).max(f64::MIN_POSITIVE);
        let total: f64 = weights.iter().sum();
        total * pow_abs(amp, q) * amp
    };
    let mut k = hint.clamp(lo, hi);
    for _ in 0..128 {
        let (g, dg) = g_and_slope(k);
        if g.abs() <= 1e-14 * scale {
            return k;
        }
        if g > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
        let newton = if dg > 0.0 { k - g / dg } else { f64::NAN };
        k = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + k.abs()) {
            break;
        }
    }
    k
}

fn quad_norm(v: &GridFunction, s: f64) -> f64 {
    let sum: f64 = v
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| v.grid().weight(i) * pow_abs(*x, s))
        .sum();
    sum.powf(1.0 / s)
}

/// The constrained quotient `I_p(v)` for `v ∈ X_p` (checked to a loose
/// tolerance): discrete Dirichlet energy over the p-dependent
/// denominator.
pub fn rayleigh_quotient(v: &GridFunction, p: Exponent) -> Result<f64> {
    let residual = constraint_residual(v, p);
    if residual > 1e-6 {
        return Err(Error::InvalidValue(format!(
            "function is not admissible for p = {p}: constraint residual {residual:.2e}"
        )));
    }
    let denom = if p.is_one() {
        let m = v.max_abs();
        m * m
    } else {
        let s = p.denominator_exponent();
        let n = quad_norm(v, s);
        n * n
    };
    if denom <= f64::MIN_POSITIVE {
        return Err(Error::InvalidValue(
            "quotient undefined for the zero function".into(),
        ));
    }
    Ok(v.dirichlet_energy() / denom)
}

/// Closed-form endpoints on an interval: `β₁ = 4/L`, `β_∞ = π²/L²`.
pub fn closed_form_beta(p: Exponent, grid: &Grid) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::InvalidExponent(
            "closed forms are available on intervals only".into(),
        ));
    }
    let l = grid.axis(0).length();
    if p.is_one() {
        Ok(4.0 / l)
    } else if p.is_infinite() {
        Ok(std::f64::consts::PI.powi(2) / (l * l))
    } else {
        Err(Error::InvalidExponent(format!(
            "no closed form for p = {p}; use the numerical minimizer"
        )))
    }
}

/// Options for [`compute_beta`].
#[derive(Debug, Clone)]
pub struct BetaOptions {
    pub seed: u64,
    /// Number of descent restarts for finite `p` (the first restart is
    /// the low-mode cosine profile, the rest are seeded random mixes).
    pub restarts: usize,
    /// Iteration cap per restart.
    pub max_iter: usize,
    /// Stop when the relative quotient decrease over 20 iterations
    /// falls below this.
    pub tol: f64,
}

impl Default for BetaOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 20,
            max_iter: 2000,
            tol: 1e-10,
        }
    }
}

/// A computed optimal constant with its minimizer and provenance.
#[derive(Debug, Clone)]
pub struct BetaConstant {
    pub p: Exponent,
    pub grid: Arc<Grid>,
    pub value: f64,
    /// The minimizer, normalized so the denominator functional is 1;
    /// `rayleigh_quotient(extremal, p) == value`.
    pub extremal: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// `4/L` or `π²/L²` when applicable (1D, p ∈ {1, ∞}).
    pub closed_form: Option<f64>,
    /// `|value − closed_form| / closed_form`.
    pub relative_gap: Option<f64>,
    pub seed: u64,
}

impl BetaConstant {
    /// The lightweight handle certificates consume.
    pub fn value_ref(&self) -> BetaValue {
        BetaValue {
            p: self.p,
            value: self.value,
            closed_form: false,
        }
    }
}

/// A β value paired with its exponent; `closed_form` records whether it
/// is the exact interval constant (which certificates at `p = 1` may
/// match with equality).
#[derive(Debug, Clone, Copy)]
pub struct BetaValue {
    pub p: Exponent,
    pub value: f64,
    pub closed_form: bool,
}

impl BetaValue {
    pub fn from_closed_form(p: Exponent, grid: &Grid) -> Result<Self> {
        Ok(Self {
            p,
            value: closed_form_beta(p, grid)?,
            closed_form: true,
        })
    }

    pub fn computed(p: Exponent, value: f64) -> Self {
        Self {
            p,
            value,
            closed_form: false,
        }
    }
}

/// Minimize `I_p` over the discretized admissible class.
///
/// `p = ∞` reduces to the first strictly positive eigenvalue of the
/// assembled Neumann operator; finite `p` runs the restarted projected
/// descent. On intervals with `p ∈ {1, ∞}` the closed form and the
/// relative gap to it are recorded alongside.
pub fn compute_beta(grid: &Arc<Grid>, p: Exponent, opts: &BetaOptions) -> Result<BetaConstant> {
    if grid.dim() == 2 && !(p.get() > 1.0) {
        return Err(Error::InvalidExponent(format!(
            "on a rectangle the admissible exponents are p > 1, got {p}"
        )));
    }

    let mut result = if p.is_infinite() {
        beta_infinity(grid, opts)?
    } else {
        descent::minimize(grid, p, opts)?
    };

    if grid.dim() == 1 && (p.is_one() || p.is_infinite()) {
        let cf = closed_form_beta(p, grid)?;
        result.closed_form = Some(cf);
        result.relative_gap = Some((result.value - cf).abs() / cf);
    }
    Ok(result)
}

fn beta_infinity(grid: &Arc<Grid>, opts: &BetaOptions) -> Result<BetaConstant> {
    let zero = MatrixField::constant(grid, SymMat::zeros(1));
    let op = NeumannOperator::assemble(&zero);
    let eig_opts = EigOptions {
        seed: opts.seed,
        ..EigOptions::default()
    };
    let pairs = op.eigenpairs(2, &eig_opts)?;
    // Smallest magnitude first: the exact zero mode, then λ₁.
    let (lam0, _) = &pairs[0];
    let (lam1, vec1) = &pairs[1];
    if lam0.abs() > lam1.abs() * 1e-6 {
        return Err(Error::NoConvergence(format!(
            "zero mode not resolved: |λ₀| = {:.3e}",
            lam0.abs()
        )));
    }
    // Normalize the denominator functional ∫v² to 1 and re-center the
    // mean exactly.
    let raw = vec1.component(0);
    let shifted = shift_to_admissible(&raw, Exponent::INFINITY)?.shifted;
    let norm = quad_norm(&shifted, 2.0);
    let extremal = shifted.scaled(1.0 / norm);
    Ok(BetaConstant {
        p: Exponent::INFINITY,
        grid: Arc::clone(grid),
        value: *lam1,
        extremal,
        iterations: 0,
        converged: true,
        restarts_used: 0,
        closed_form: None,
        relative_gap: None,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::EigOptions;
    use crate::oracle::kernel_report_with;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn line(l: f64, m: usize) -> Arc<Grid> {
        Grid::line(l, m).unwrap()
    }

    #[test]
    fn shift_mean_zero() {
        let g = line(1.0, 3);
        let v = GridFunction::from_values(Arc::clone(&g), vec![1.0, 2.0, 3.0]).unwrap();
        let out = shift_to_admissible(&v, Exponent::INFINITY).unwrap();
        assert_relative_eq!(out.shift, -2.0, max_relative = 1e-14);
        assert!(out.shifted.integrate().abs() < 1e-14);
    }

    #[test]
    fn shift_minimax() {
        let g = line(1.0, 5);
        let v = GridFunction::from_values(Arc::clone(&g), vec![3.0, 0.0, -1.0, 1.0, 2.0]).unwrap();
        let out = shift_to_admissible(&v, Exponent::ONE).unwrap();
        assert_relative_eq!(out.shift, -1.0);
        let s = &out.shifted;
        assert!((s.max_value() + s.min_value()).abs() < 1e-14);
    }

    #[test]
    fn odd_functions_need_no_shift() {
        let g = line(2.0, 41);
        let v = GridFunction::from_fn(&g, |x| (x[0] - 1.0).powi(3));
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            let p = Exponent::new(p).unwrap();
            let out = shift_to_admissible(&v, p).unwrap();
            assert!(
                out.shift.abs() < 1e-9,
                "p = {p}: expected no shift, got {}",
                out.shift
            );
        }
    }

    #[test]
    fn constant_input_is_degenerate() {
        let g = line(1.0, 9);
        let v = GridFunction::constant(&g, 3.0);
        let out = shift_to_admissible(&v, Exponent::new(2.0).unwrap()).unwrap();
        assert!(out.degenerate);
        assert!(out.shifted.max_abs() == 0.0);
    }

    #[test]
    fn shift_satisfies_constraint_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = line(1.7, 33);
        for trial in 0..200 {
            let vals: Vec<f64> = (0..33).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v = GridFunction::from_values(Arc::clone(&g), vals).unwrap();
            let p = [1.0, 1.3, 2.0, 4.0, 16.0, f64::INFINITY][trial % 6];
            let p = Exponent::new(p).unwrap();
            let out = shift_to_admissible(&v, p).unwrap();
            let tol = if p.is_one() || p.is_infinite() { 1e-12 } else { 1e-10 };
            assert!(
                constraint_residual(&out.shifted, p) <= tol,
                "trial {trial}, p = {p}"
            );
        }
    }

    #[test]
    fn quotient_of_cosine_at_p_infinity() {
        let g = line(PI, 2001);
        let v = GridFunction::from_fn(&g, |x| x[0].cos());
        let q = rayleigh_quotient(&v, Exponent::INFINITY).unwrap();
        assert!((q - 1.0).abs() <= 1e-4, "quotient {q}");
    }

    #[test]
    fn quotient_of_linear_extremal_at_p_one() {
        // v = x − 1/2 on [0, 1]: ∫v'² = 1, ‖v‖∞ = 1/2 → I₁ = 4.
        let g = line(1.0, 513);
        let v = GridFunction::from_fn(&g, |x| x[0] - 0.5);
        let q = rayleigh_quotient(&v, Exponent::ONE).unwrap();
        assert_relative_eq!(q, 4.0, max_relative = 1e-6);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let g = line(1.0, 65);
        let v = GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin() + 0.3 * x[0]);
        for p in [1.0, 2.0, f64::INFINITY] {
            let p = Exponent::new(p).unwrap();
            let w = shift_to_admissible(&v, p).unwrap().shifted;
            let a = rayleigh_quotient(&w, p).unwrap();
            let b = rayleigh_quotient(&w.scaled(7.0), p).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_forms() {
        let g1 = line(1.0, 9);
        assert_relative_eq!(closed_form_beta(Exponent::ONE, &g1).unwrap(), 4.0);
        let gpi = line(PI, 9);
        assert_relative_eq!(closed_form_beta(Exponent::INFINITY, &gpi).unwrap(), 1.0);
        let g2 = line(2.0, 9);
        assert_relative_eq!(
            closed_form_beta(Exponent::INFINITY, &g2).unwrap(),
            PI * PI / 4.0
        );
        assert!(closed_form_beta(Exponent::new(2.0).unwrap(), &g1).is_err());
        let sq = Grid::rectangle((1.0, 1.0), (5, 5)).unwrap();
        assert!(closed_form_beta(Exponent::ONE, &sq).is_err());
    }

    #[test]
    fn beta_infinity_on_interval() {
        let g = line(1.0, 1025);
        let b = compute_beta(&g, Exponent::INFINITY, &BetaOptions::default()).unwrap();
        let rel = (b.value - PI * PI).abs() / (PI * PI);
        assert!(rel <= 0.005, "relative error {rel}");
        assert!(b.relative_gap.unwrap() <= 0.005);
        // The stored extremal reproduces the value.
        let q = rayleigh_quotient(&b.extremal, Exponent::INFINITY).unwrap();
        assert_relative_eq!(q, b.value, max_relative = 1e-10);
        assert!(constraint_residual(&b.extremal, Exponent::INFINITY) <= 1e-8);
    }

    #[test]
    fn beta_infinity_matches_kernel_oracle_eigenvalue() {
        let g = line(1.0, 257);
        let opts = BetaOptions::default();
        let b = compute_beta(&g, Exponent::INFINITY, &opts).unwrap();
        let zero = MatrixField::constant(&g, SymMat::zeros(1));
        let eig = EigOptions {
            seed: opts.seed,
            ..EigOptions::default()
        };
        let rep = kernel_report_with(&zero, 2, None, &eig).unwrap();
        let lam1 = rep.pairs[1].0;
        assert!(
            (b.value - lam1).abs() <= 1e-10 * lam1,
            "{} vs {}",
            b.value,
            lam1
        );
    }

    #[test]
    fn beta_infinity_on_unit_square() {
        let g = Grid::rectangle((1.0, 1.0), (65, 65)).unwrap();
        let b = compute_beta(&g, Exponent::INFINITY, &BetaOptions::default()).unwrap();
        let rel = (b.value - PI * PI).abs() / (PI * PI);
        assert!(rel <= 0.01, "relative error {rel}");
    }

    #[test]
    fn rectangle_rejects_p_one() {
        let g = Grid::rectangle((1.0, 1.0), (9, 9)).unwrap();
        assert!(compute_beta(&g, Exponent::ONE, &BetaOptions::default()).is_err());
    }
}

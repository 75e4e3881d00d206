//! Independent cross-check for interior exponents: shoot the
//! Euler–Lagrange equation of the quotient.
//!
//! Stationary points of `I_p` on the interval satisfy
//! `−v″ = a·|v|^{s−2} v + b·|v|^{s−2}` with natural Neumann conditions,
//! `s = 2p/(p−1)`. The minimizer is odd about the midpoint, which
//! forces `b = 0` and leaves the one-parameter family
//!
//! ```text
//! −v″ = a |v|^{s−2} v,   v(0) = 1, v′(0) = 0.
//! ```
//!
//! Scanning `a` for the zeros of `v′(L)` recovers the Neumann branch;
//! the quotient of the integrated profile is an approximation of β_p
//! that shares nothing with the finite-difference descent path (RK4
//! time stepping instead of grid differences), which is what makes the
//! double-oracle acceptance check meaningful.

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::gridfn::pow_abs;

use super::constraint_shift_root;

/// β_p on `[0, length]` by Euler–Lagrange shooting, for finite `p > 1`.
///
/// `steps` is the fixed RK4 step count (the profile resolution is
/// independent of any grid used elsewhere).
pub fn beta_by_shooting(length: f64, p: Exponent, steps: usize) -> Result<f64> {
    if p.is_one() || p.is_infinite() {
        return Err(Error::InvalidExponent(
            "the shooting oracle covers finite p > 1; endpoints have closed forms".into(),
        ));
    }
    if !(length > 0.0) || steps < 64 {
        return Err(Error::InvalidValue(
            "need a positive length and at least 64 integration steps".into(),
        ));
    }
    let s = p.denominator_exponent();
    let lam1 = (std::f64::consts::PI / length).powi(2);

    // End derivative as a function of the stiffness parameter.
    let phi = |a: f64| integrate(a, s, length, steps).1[steps];

    // Locate the first two sign changes of φ (negative to positive):
    // the half-oscillation branch and the next one up.
    let mut roots = Vec::new();
    let a_lo = 0.05 * lam1;
    let a_hi = 4000.0 * lam1;
    let scan = 900usize;
    let ratio = (a_hi / a_lo).powf(1.0 / scan as f64);
    let mut a_prev = a_lo;
    let mut f_prev = phi(a_prev);
    for k in 1..=scan {
        let a = a_lo * ratio.powi(k as i32);
        let f = phi(a);
        if f_prev < 0.0 && f >= 0.0 {
            roots.push(bisect(&phi, a_prev, a));
            if roots.len() == 2 {
                break;
            }
        }
        a_prev = a;
        f_prev = f;
    }
    if roots.is_empty() {
        return Err(Error::NoConvergence(
            "no Neumann branch found in the scanned stiffness range".into(),
        ));
    }

    let mut best = f64::INFINITY;
    for a in roots {
        let (v, w) = integrate(a, s, length, steps);
        best = best.min(profile_quotient(&v, &w, length, s));
    }
    Ok(best)
}

/// RK4 for `v″ = −a |v|^{s−2} v` from `(1, 0)`; returns the node samples
/// of `v` and `v′`.
fn integrate(a: f64, s: f64, length: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let h = length / steps as f64;
    let f = |v: f64| -a * pow_abs(v, s - 2.0) * v;
    let mut v = vec![0.0; steps + 1];
    let mut w = vec![0.0; steps + 1];
    v[0] = 1.0;
    for i in 0..steps {
        let (y, z) = (v[i], w[i]);
        let k1v = z;
        let k1w = f(y);
        let k2v = z + 0.5 * h * k1w;
        let k2w = f(y + 0.5 * h * k1v);
        let k3v = z + 0.5 * h * k2w;
        let k3w = f(y + 0.5 * h * k2v);
        let k4v = z + h * k3w;
        let k4w = f(y + h * k3v);
        v[i + 1] = y + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w[i + 1] = z + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    (v, w)
}

fn bisect(phi: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Quotient of the integrated profile: trapezoid in the step variable,
/// derivative taken from the ODE (not differenced), constraint enforced
/// by the usual scalar shift.
fn profile_quotient(v: &[f64], w: &[f64], length: f64, s: f64) -> f64 {
    let n = v.len();
    let h = length / (n - 1) as f64;
    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;

    let k = constraint_shift_root(v, &weights, s - 2.0, 0.0);
    let num: f64 = weights.iter().zip(w).map(|(wt, d)| wt * d * d).sum();
    let den: f64 = weights
        .iter()
        .zip(v)
        .map(|(wt, x)| wt * pow_abs(x + k, s))
        .sum();
    num / den.powf(2.0 / s)
}

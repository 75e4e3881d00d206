//! Projected gradient descent on the quotient for finite `p`.
//!
//! Each step descends the quotient and re-projects with the two-step
//! rule: shift back into the admissible class, then renormalize the
//! denominator functional to 1 (so the objective is just the Dirichlet
//! energy). `p = 1` has a nonsmooth denominator `‖v‖∞²`; descent runs
//! on a log-sum-exp surrogate whose sharpness doubles over phases,
//! while every reported value is the exact quotient of the best
//! iterate.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::band::{BandMatrix, SymmetricOperator};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::grid::Grid;
use crate::gridfn::{pow_abs, GridFunction};

use super::{constraint_shift_root, rayleigh_quotient, BetaConstant, BetaOptions};

/// The matrix of the discrete Dirichlet energy: `v·(Sv)` equals
/// `GridFunction::dirichlet_energy` to rounding, so the minimizer and
/// the reported quotient use one quadratic form.
fn energy_matrix(grid: &Grid) -> BandMatrix {
    match grid.dim() {
        1 => {
            let m = grid.axis(0).node_count();
            let h = grid.axis(0).spacing();
            let c = 1.0 / h;
            let mut s = BandMatrix::zeros(m, 1);
            for i in 0..m - 1 {
                s.add_sym(i, i, c);
                s.add_sym(i + 1, i + 1, c);
                s.add_sym(i, i + 1, -c);
            }
            s
        }
        _ => {
            let (nx, ny) = (grid.axis(0).node_count(), grid.axis(1).node_count());
            let (hx, hy) = (grid.axis(0).spacing(), grid.axis(1).spacing());
            let (wx, wy) = (grid.axis(0).weights(), grid.axis(1).weights());
            let mut s = BandMatrix::zeros(nx * ny, nx);
            for iy in 0..ny {
                for ix in 0..nx - 1 {
                    let c = wy[iy] / hx;
                    let p = grid.index2(ix, iy);
                    let q = grid.index2(ix + 1, iy);
                    s.add_sym(p, p, c);
                    s.add_sym(q, q, c);
                    s.add_sym(p, q, -c);
                }
            }
            for ix in 0..nx {
                for iy in 0..ny - 1 {
                    let c = wx[ix] / hy;
                    let p = grid.index2(ix, iy);
                    let q = grid.index2(ix, iy + 1);
                    s.add_sym(p, p, c);
                    s.add_sym(q, q, c);
                    s.add_sym(p, q, -c);
                }
            }
            s
        }
    }
}

struct Workspace {
    grid: Arc<Grid>,
    stiffness: BandMatrix,
    weights: Vec<f64>,
    p: Exponent,
    /// Denominator norm exponent `s` (finite p > 1 path only).
    s: f64,
    /// Constraint exponent `q = s − 2`.
    q: f64,
    /// Log-sum-exp sharpness (p = 1 path only).
    kappa: f64,
}

impl Workspace {
    fn new(grid: &Arc<Grid>, p: Exponent) -> Self {
        let weights = (0..grid.node_count()).map(|i| grid.weight(i)).collect();
        let s = p.denominator_exponent();
        Self {
            grid: Arc::clone(grid),
            stiffness: energy_matrix(grid),
            weights,
            p,
            s,
            q: s - 2.0,
            kappa: 16.0,
        }
    }

    fn energy(&self, v: &[f64]) -> f64 {
        let sv = self.stiffness.apply_vec(v);
        v.iter().zip(&sv).map(|(a, b)| a * b).sum()
    }

    /// Shift into the admissible class, then normalize the denominator
    /// functional to 1. Returns false when the iterate collapsed to a
    /// constant.
    fn project(&self, v: &mut [f64], shift_hint: &mut f64) -> bool {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        if !(max > min) {
            return false;
        }
        let k = if self.p.is_one() {
            -(max + min) / 2.0
        } else {
            constraint_shift_root(v, &self.weights, self.q, *shift_hint)
        };
        *shift_hint = k;
        for x in v.iter_mut() {
            *x += k;
        }
        let norm = if self.p.is_one() {
            v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
        } else {
            let sum: f64 = v
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * pow_abs(*x, self.s))
                .sum();
            sum.powf(1.0 / self.s)
        };
        if norm <= 1e-300 {
            return false;
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        true
    }

    /// Descent objective of a projected iterate. For finite `p` the
    /// denominator is 1, so this is the energy; for `p = 1` it is
    /// `energy / M_κ²` with the smoothed maximum `M_κ ≥ ‖v‖∞ = 1`.
    fn objective(&self, v: &[f64]) -> f64 {
        let n = self.energy(v);
        if self.p.is_one() {
            let m = self.smooth_max(v);
            n / (m * m)
        } else {
            n
        }
    }

    /// Exact quotient of a projected iterate (denominator is 1).
    fn exact_quotient(&self, v: &[f64]) -> f64 {
        self.energy(v)
    }

    fn smooth_max(&self, v: &[f64]) -> f64 {
        // ‖v‖∞ = 1 after projection; the scaled form never overflows.
        let vmax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let sum: f64 = v
            .iter()
            .map(|x| (self.kappa * (x.abs() - vmax)).exp())
            .sum();
        vmax + sum.ln() / self.kappa
    }

    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let sv = self.stiffness.apply_vec(v);
        let n: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
        if self.p.is_one() {
            let vmax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let sigmas: Vec<f64> = v
                .iter()
                .map(|x| (self.kappa * (x.abs() - vmax)).exp())
                .collect();
            let total: f64 = sigmas.iter().sum();
            let m = vmax + total.ln() / self.kappa;
            let c1 = 2.0 / (m * m);
            let c2 = 2.0 * n / (m * m * m);
            v.iter()
                .zip(&sv)
                .zip(&sigmas)
                .map(|((x, s), sig)| c1 * s - c2 * (sig / total) * x.signum())
                .collect()
        } else {
            // On the normalized manifold: ∇(N/D) = 2Sv − N·∇D with
            // ∇D_i = 2 w_i |v_i|^{s−2} v_i.
            v.iter()
                .zip(&sv)
                .zip(&self.weights)
                .map(|((x, s), w)| 2.0 * s - n * 2.0 * w * pow_abs(*x, self.q) * x)
                .collect()
        }
    }
}

fn start_profile(grid: &Grid, restart: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    match grid.dim() {
        1 => {
            let l = grid.axis(0).length();
            (0..grid.node_count())
                .map(|i| {
                    let x = grid.coords(i)[0];
                    if restart == 0 {
                        (pi * x / l).cos()
                    } else {
                        (1..=6).map(|j| {
                            let xi: f64 = rng.gen_range(-1.0..1.0);
                            xi * (j as f64 * pi * x / l).cos()
                        })
                        .sum()
                    }
                })
                .collect()
        }
        _ => {
            let (lx, ly) = (grid.axis(0).length(), grid.axis(1).length());
            let coeffs: Vec<((usize, usize), f64)> = if restart == 0 {
                if lx >= ly {
                    vec![((1, 0), 1.0)]
                } else {
                    vec![((0, 1), 1.0)]
                }
            } else {
                let mut c = Vec::new();
                for jx in 0..3 {
                    for jy in 0..3 {
                        if jx + jy > 0 {
                            c.push(((jx, jy), rng.gen_range(-1.0..1.0)));
                        }
                    }
                }
                c
            };
            (0..grid.node_count())
                .map(|i| {
                    let xy = grid.coords(i);
                    coeffs
                        .iter()
                        .map(|((jx, jy), xi)| {
                            xi * (*jx as f64 * pi * xy[0] / lx).cos()
                                * (*jy as f64 * pi * xy[1] / ly).cos()
                        })
                        .sum()
                })
                .collect()
        }
    }
}

/// Coarse-to-fine grid hierarchy (finest last). Halving stops when a
/// node count stops being `2^k + 1`-compatible or drops below the
/// floor; the conditioning of the quotient grows like `h⁻²`, so the
/// hierarchy is what keeps fine-grid restarts cheap and convergent.
fn grid_hierarchy(grid: &Arc<Grid>) -> Vec<Arc<Grid>> {
    let floor = match grid.dim() {
        1 => 65,
        _ => 17,
    };
    let mut levels = vec![Arc::clone(grid)];
    loop {
        let last = levels.last().unwrap();
        let counts: Vec<usize> = (0..last.dim()).map(|k| last.axis(k).node_count()).collect();
        if counts.iter().any(|&c| (c - 1) % 2 != 0 || (c - 1) / 2 + 1 < floor) {
            break;
        }
        let halved: Vec<usize> = counts.iter().map(|&c| (c - 1) / 2 + 1).collect();
        let lengths: Vec<f64> = (0..last.dim()).map(|k| last.axis(k).length()).collect();
        levels.push(Grid::build(last.dim(), &lengths, &halved).expect("halved grid is valid"));
    }
    levels.reverse();
    levels
}

/// Linear (bilinear in 2D) interpolation of node values onto a finer
/// grid with the same lengths.
fn prolong(from: &Grid, to: &Grid, values: &[f64]) -> Vec<f64> {
    let interp1 = |axis: &crate::grid::Axis, vals: &dyn Fn(usize) -> f64, x: f64| -> f64 {
        let h = axis.spacing();
        let n = axis.node_count();
        let t = (x / h).floor();
        let i = (t as usize).min(n - 2);
        let w = (x - axis.nodes()[i]) / h;
        vals(i) * (1.0 - w) + vals(i + 1) * w
    };
    (0..to.node_count())
        .map(|node| {
            let c = to.coords(node);
            match from.dim() {
                1 => interp1(from.axis(0), &|i| values[i], c[0]),
                _ => {
                    let ax = from.axis(0);
                    let ay = from.axis(1);
                    let row = |iy: usize| interp1(ax, &|ix| values[from.index2(ix, iy)], c[0]);
                    let hy = ay.spacing();
                    let ny = ay.node_count();
                    let iy = ((c[1] / hy).floor() as usize).min(ny - 2);
                    let w = (c[1] - ay.nodes()[iy]) / hy;
                    row(iy) * (1.0 - w) + row(iy + 1) * w
                }
            }
        })
        .collect()
}

struct RestartOutcome {
    exact: f64,
    values: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn run_restart(
    ws: &mut Workspace,
    start: Vec<f64>,
    opts: &BetaOptions,
) -> Option<RestartOutcome> {
    let p1 = ws.p.is_one();
    let kappas: &[f64] = if p1 {
        &[16.0, 64.0, 256.0, 1024.0, 4096.0]
    } else {
        &[0.0]
    };
    let phase_iters = (opts.max_iter / kappas.len()).max(40);

    let mut v = start;
    let mut hint = 0.0;
    if !ws.project(&mut v, &mut hint) {
        return None;
    }
    let mut best_exact = ws.exact_quotient(&v);
    let mut best_v = v.clone();
    let mut iterations = 0;
    let mut converged = false;

    for &kappa in kappas {
        if p1 {
            ws.kappa = kappa;
        }
        let mut j = ws.objective(&v);
        let mut g = ws.gradient(&v);
        // Barzilai–Borwein steps with a nonmonotone (Grippo-style)
        // backtracking line search: the quotient Hessian has the grid
        // Laplacian's conditioning, where fixed-step descent crawls.
        let mut alpha = {
            let gn: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn > 0.0 {
                0.1 * vn.max(1e-12) / gn
            } else {
                1.0
            }
        };
        let alpha0 = alpha;
        let mut recent: Vec<f64> = vec![j];
        let mut window: Vec<f64> = vec![best_exact];

        for _ in 0..phase_iters {
            iterations += 1;
            let gnorm2: f64 = g.iter().map(|x| x * x).sum();
            if gnorm2 <= 1e-300 {
                converged = true;
                break;
            }
            let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut accepted = false;
            let mut a = alpha.clamp(1e-14 * alpha0, 1e14 * alpha0);
            let mut next = Vec::new();
            let mut next_j = j;
            for _ in 0..50 {
                let mut trial: Vec<f64> = v.iter().zip(&g).map(|(x, gi)| x - a * gi).collect();
                let mut trial_hint = hint;
                if ws.project(&mut trial, &mut trial_hint) {
                    let jt = ws.objective(&trial);
                    if jt.is_finite() && jt <= reference - 1e-4 * a * gnorm2 {
                        hint = trial_hint;
                        next = trial;
                        next_j = jt;
                        accepted = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            if !accepted {
                // Numerical stationarity: no admissible decrease left.
                converged = true;
                break;
            }

            // BB1 step from the accepted move.
            let g_next = ws.gradient(&next);
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..v.len() {
                let si = next[i] - v[i];
                let yi = g_next[i] - g[i];
                ss += si * si;
                sy += si * yi;
            }
            alpha = if sy > 1e-300 { ss / sy } else { a * 2.0 };
            v = next;
            g = g_next;
            j = next_j;

            recent.push(j);
            if recent.len() > 8 {
                recent.remove(0);
            }

            let exact = ws.exact_quotient(&v);
            if exact < best_exact {
                best_exact = exact;
                best_v = v.clone();
            }
            window.push(best_exact);
            if window.len() > 20 {
                let past = window[window.len() - 21];
                if past - best_exact <= opts.tol * best_exact.abs().max(1e-300) {
                    converged = true;
                    break;
                }
            }
        }
    }

    Some(RestartOutcome {
        exact: best_exact,
        values: best_v,
        iterations,
        converged,
    })
}

/// Restarted projected descent through the grid hierarchy; the
/// reported value re-evaluates the best fine-grid iterate with the
/// exact quotient.
pub(super) fn minimize(
    grid: &Arc<Grid>,
    p: Exponent,
    opts: &BetaOptions,
) -> Result<BetaConstant> {
    if opts.restarts == 0 {
        return Err(Error::InvalidValue("restart budget must be >= 1".into()));
    }
    let levels = grid_hierarchy(grid);
    let mut stack: Vec<Workspace> = levels.iter().map(|g| Workspace::new(g, p)).collect();

    let mut best: Option<RestartOutcome> = None;
    let mut total_iters = 0;
    let mut any_converged = false;

    for r in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let mut v = start_profile(&levels[0], r, &mut rng);
        let mut outcome: Option<RestartOutcome> = None;
        for (k, _) in levels.iter().enumerate() {
            let Some(out) = run_restart(&mut stack[k], v, opts) else {
                outcome = None;
                break;
            };
            v = if k + 1 < levels.len() {
                prolong(&levels[k], &levels[k + 1], &out.values)
            } else {
                Vec::new()
            };
            total_iters += out.iterations;
            outcome = Some(out);
        }
        let Some(out) = outcome else { continue };
        any_converged |= out.converged;
        let better = match &best {
            None => true,
            Some(b) => out.exact < b.exact,
        };
        if better {
            best = Some(out);
        }
    }

    let best = best.ok_or_else(|| {
        Error::NoConvergence("every descent restart collapsed to a constant".into())
    })?;
    if !any_converged {
        return Err(Error::NoConvergence(format!(
            "no restart met the descent tolerance within {} iterations per level",
            opts.max_iter
        )));
    }

    let extremal = GridFunction::from_values(Arc::clone(grid), best.values)?;
    let value = rayleigh_quotient(&extremal, p)?;
    Ok(BetaConstant {
        p,
        grid: Arc::clone(grid),
        value,
        extremal,
        iterations: total_iters,
        converged: best.converged,
        restarts_used: opts.restarts,
        closed_form: None,
        relative_gap: None,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::{compute_beta, constraint_residual};
    use std::f64::consts::PI;

    fn line(l: f64, m: usize) -> Arc<Grid> {
        Grid::line(l, m).unwrap()
    }

    #[test]
    fn energy_matrix_matches_dirichlet_energy() {
        for grid in [
            Grid::line(1.3, 17).unwrap(),
            Grid::rectangle((1.0, 2.0), (7, 9)).unwrap(),
        ] {
            let s = energy_matrix(&grid);
            let f = GridFunction::from_fn(&grid, |x| {
                (3.0 * x[0]).sin() + x.get(1).copied().unwrap_or(0.0).powi(2)
            });
            let quad = {
                let sv = s.apply_vec(f.values());
                f.values().iter().zip(&sv).map(|(a, b)| a * b).sum::<f64>()
            };
            let direct = f.dirichlet_energy();
            assert!(
                (quad - direct).abs() <= 1e-12 * (1.0 + direct),
                "{quad} vs {direct}"
            );
        }
    }

    #[test]
    fn beta_one_on_unit_interval() {
        // β₁ = 4/L with extremal c(x − L/2); the discrete minimum is
        // exactly 4 at every resolution.
        let g = line(1.0, 257);
        let opts = BetaOptions {
            restarts: 6,
            ..BetaOptions::default()
        };
        let b = compute_beta(&g, Exponent::ONE, &opts).unwrap();
        let rel = (b.value - 4.0).abs() / 4.0;
        assert!(rel <= 0.01, "β₁ = {}, relative error {rel}", b.value);
        let ramp = GridFunction::from_fn(&g, |x| x[0] - 0.5);
        let corr = b.extremal.correlation(&ramp).unwrap();
        assert!(corr >= 0.999, "extremal correlation {corr}");
        assert!(constraint_residual(&b.extremal, Exponent::ONE) <= 1e-8);
    }

    #[test]
    fn beta_two_bracketed_by_endpoints() {
        let g = line(1.0, 257);
        let opts = BetaOptions {
            restarts: 6,
            ..BetaOptions::default()
        };
        let p = Exponent::new(2.0).unwrap();
        let b = compute_beta(&g, p, &opts).unwrap();
        assert!(
            b.value > 4.0 && b.value < PI * PI,
            "β₂ = {} outside (β₁, β_∞)",
            b.value
        );
        // The stored extremal reproduces the value and is admissible.
        let q = rayleigh_quotient(&b.extremal, p).unwrap();
        assert!((q - b.value).abs() <= 1e-10 * b.value);
        assert!(constraint_residual(&b.extremal, p) <= 1e-8);
    }

    #[test]
    fn lower_bound_property_random_admissible_functions() {
        // Every admissible v has I_p(v) >= β_p − slack.
        let g = line(1.0, 257);
        let opts = BetaOptions {
            restarts: 6,
            ..BetaOptions::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for pval in [1.0, 2.0, f64::INFINITY] {
            let p = Exponent::new(pval).unwrap();
            let beta = compute_beta(&g, p, &opts).unwrap().value;
            for _ in 0..200 {
                let raw = GridFunction::from_fn(&g, |x| {
                    (1..=5)
                        .map(|j| {
                            let xi: f64 = rng.gen_range(-1.0..1.0);
                            xi * (j as f64 * PI * x[0]).cos()
                        })
                        .sum()
                });
                let shifted = crate::beta::shift_to_admissible(&raw, p).unwrap();
                if shifted.degenerate {
                    continue;
                }
                let q = rayleigh_quotient(&shifted.shifted, p).unwrap();
                assert!(
                    q >= beta * (1.0 - 0.02),
                    "p = {pval}: quotient {q} below β = {beta}"
                );
            }
        }
    }
}

//! Dense primal-dual interior-point solver for standard-form linear programs
//!
//! ```text
//!     minimize cᵀx  subject to  A x = b,  x ≥ 0
//! ```
//!
//! The method is Mehrotra's predictor-corrector applied to the normal
//! equations `A D Aᵀ Δλ = r`, `D = X S⁻¹`. `A` must have full row rank; the
//! callers in this crate reduce rows beforehand. After convergence the
//! iterate is purified onto the optimal face: the variables with `x_j > s_j`
//! are taken as the optimal partition and the primal is corrected to satisfy
//! `A_B x_B = b` exactly, which turns the interior limit into clean zeros
//! off the partition.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::lstsq;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Relative primal residual, dual residual and gap required to stop.
    pub tolerance: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: DVector<f64>,
    /// Equality multipliers `λ`, so that `Aᵀλ ≤ c` at optimality.
    pub dual: DVector<f64>,
    pub iterations: usize,
    /// Whether the optimal-face correction was accepted.
    pub purified: bool,
}

struct Residuals {
    primal: f64,
    dual: f64,
    gap: f64,
}

fn residuals(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    s: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, Residuals) {
    let rb = a * x - b;
    let rc = a.tr_mul(lambda) + s - c;
    let pobj = c.dot(x);
    let dobj = b.dot(lambda);
    let r = Residuals {
        primal: rb.norm() / (1.0 + b.norm()),
        dual: rc.norm() / (1.0 + c.norm()),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
    };
    (rb, rc, r)
}

/// Largest step in `[0, ∞)` keeping `v + t dv ≥ 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(vi, di)| -vi / di)
        .fold(f64::INFINITY, f64::min)
}

struct NormalEquations {
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl NormalEquations {
    fn factor(a: &DMatrix<f64>, d: &DVector<f64>) -> Option<Self> {
        let mut ad = a.clone();
        for (j, mut col) in ad.column_iter_mut().enumerate() {
            col *= d[j].sqrt();
        }
        let m = &ad * ad.transpose();
        let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut reg = 0.0;
        for _ in 0..6 {
            let mut mr = m.clone();
            if reg > 0.0 {
                for i in 0..mr.nrows() {
                    mr[(i, i)] += reg;
                }
            }
            if let Some(chol) = mr.cholesky() {
                return Some(Self { chol });
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

fn starting_point(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let nvar = a.ncols();
    let aat = NormalEquations::factor(a, &DVector::from_element(nvar, 1.0))?;
    let mut x = a.tr_mul(&aat.solve(b));
    let lambda = aat.solve(&(a * c));
    let mut s = c - a.tr_mul(&lambda);
    let dx = (-1.5 * x.min()).max(0.0);
    let ds = (-1.5 * s.min()).max(0.0);
    x.add_scalar_mut(dx);
    s.add_scalar_mut(ds);
    let xs = x.dot(&s);
    if xs > 0.0 && x.sum() > 0.0 && s.sum() > 0.0 {
        x.add_scalar_mut(0.5 * xs / s.sum());
        s.add_scalar_mut(0.5 * xs / x.sum());
    } else {
        x.add_scalar_mut(1.0);
        s.add_scalar_mut(1.0);
    }
    Some((x, lambda, s))
}

/// Solves the standard-form LP. `a` must have full row rank.
pub fn solve_standard_form(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    opts: &LpOptions,
) -> Result<LpSolution> {
    let (m, nvar) = a.shape();
    debug_assert_eq!(b.len(), m);
    debug_assert_eq!(c.len(), nvar);
    if m == 0 {
        // No constraints: bounded only if c ≥ 0, optimum at x = 0.
        if c.iter().any(|v| *v < 0.0) {
            return Err(Error::NotConverged { iterations: 0 });
        }
        return Ok(LpSolution { x: DVector::zeros(nvar), dual: DVector::zeros(0), iterations: 0, purified: true });
    }
    let (mut x, mut lambda, mut s) =
        starting_point(a, b, c).ok_or(Error::NotConverged { iterations: 0 })?;
    let nf = nvar as f64;
    let eta = 0.995;
    let mut iterations = 0;
    let mut converged = false;
    // Best iterate seen so far by its worst residual. Near the optimum the
    // normal equations become ill-conditioned and later iterates can drift.
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut since_best = 0;

    while iterations < opts.max_iterations {
        let (rb, rc, res) = residuals(a, b, c, &x, &lambda, &s);
        if res.primal < opts.tolerance && res.dual < opts.tolerance && res.gap < opts.tolerance {
            converged = true;
            break;
        }
        let merit = res.primal.max(res.dual).max(res.gap);
        if best.as_ref().is_none_or(|bst| merit < bst.0) {
            best = Some((merit, x.clone(), lambda.clone(), s.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= 8 {
                break;
            }
        }
        if x.amax() > 1e14 || lambda.amax() > 1e14 {
            break;
        }
        iterations += 1;
        let mu = x.dot(&s) / nf;
        let d = x.component_div(&s);
        let Some(ne) = NormalEquations::factor(a, &d) else { break };
        let a_drc = a * d.component_mul(&rc);

        // predictor
        let rhs = -&rb - &a_drc + a * &x;
        let dl_aff = ne.solve(&rhs);
        let ds_aff = -&rc - a.tr_mul(&dl_aff);
        let dx_aff = -&x - d.component_mul(&ds_aff);
        let ap = max_step(&x, &dx_aff).min(1.0);
        let ad = max_step(&s, &ds_aff).min(1.0);
        let mu_aff = (&x + &dx_aff * ap).dot(&(&s + &ds_aff * ad)) / nf;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut rxs = -x.component_mul(&s) - dx_aff.component_mul(&ds_aff);
        rxs.add_scalar_mut(sigma * mu);
        let rxs_over_s = rxs.component_div(&s);
        let rhs = -&rb - &a_drc - a * &rxs_over_s;
        let dl = ne.solve(&rhs);
        let ds = -&rc - a.tr_mul(&dl);
        let dx = &rxs_over_s - d.component_mul(&ds);
        let ap = (eta * max_step(&x, &dx)).min(1.0);
        let ad = (eta * max_step(&s, &ds)).min(1.0);
        if !(ap > 0.0 && ad > 0.0) || !dx.iter().chain(dl.iter()).all(|v| v.is_finite()) {
            break;
        }
        x += &dx * ap;
        lambda += &dl * ad;
        s += &ds * ad;
    }

    if !converged {
        // Accept a stalled iterate only if it is already nearly optimal; the
        // caller's certificate check decides the rest.
        let (_, _, res) = residuals(a, b, c, &x, &lambda, &s);
        let merit = res.primal.max(res.dual).max(res.gap);
        if let Some((m, bx, bl, bs)) = best {
            if m < merit {
                (x, lambda, s) = (bx, bl, bs);
            }
        }
        let (_, _, res) = residuals(a, b, c, &x, &lambda, &s);
        let loose = 1e3 * opts.tolerance;
        if !(res.primal < loose && res.dual < loose && res.gap < loose) {
            return Err(Error::NotConverged { iterations });
        }
    }

    let (x, lambda, purified) = purify(a, b, c, x, lambda, &s);
    Ok(LpSolution { x, dual: lambda, iterations, purified })
}

/// Corrects `x` restricted to `basic` so that `A_B x_B = b`, if the result stays nonnegative.
fn correct_on(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>, basic: &[usize]) -> Option<DVector<f64>> {
    let ab = a.select_columns(basic.iter());
    let xb: DVector<f64> = DVector::from_iterator(basic.len(), basic.iter().map(|&j| x[j]));
    let corrected = &xb + lstsq(&ab, &(b - &ab * &xb));
    let scale = 1.0 + corrected.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let residual = (&ab * &corrected - b).norm();
    let ok = corrected.iter().all(|v| v.is_finite() && *v >= -1e-12 * scale) && residual <= 1e-12 * (1.0 + b.norm());
    ok.then_some(corrected)
}

fn purify(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    x: DVector<f64>,
    lambda: DVector<f64>,
    s: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, bool) {
    // The strict partition can miss a small basic variable; fall back to the
    // `m` variables with the largest x_j / s_j.
    let strict: Vec<usize> = (0..x.len()).filter(|&j| x[j] > s[j]).collect();
    let mut ranked: Vec<usize> = (0..x.len()).collect();
    ranked.sort_by(|&i, &j| (x[j] / s[j]).total_cmp(&(x[i] / s[i])));
    ranked.truncate(a.nrows().min(x.len()));
    ranked.sort_unstable();
    let found = [strict, ranked]
        .into_iter()
        .find_map(|basic| correct_on(a, b, &x, &basic).map(|v| (basic, v)));
    let Some((basic, corrected)) = found else {
        return (x, lambda, false);
    };
    let ab = a.select_columns(basic.iter());
    let mut xp = DVector::zeros(x.len());
    for (k, &j) in basic.iter().enumerate() {
        xp[j] = corrected[k].max(0.0);
    }

    // Dual correction towards A_Bᵀλ = c_B, kept only if it does not worsen dual feasibility.
    let cb = DVector::from_iterator(basic.len(), basic.iter().map(|&j| c[j]));
    let lam_p = &lambda + lstsq(&ab.transpose(), &(&cb - ab.tr_mul(&lambda)));
    let infeas = |l: &DVector<f64>| (a.tr_mul(l) - c).max().max(0.0);
    let lam = if lam_p.iter().all(|v| v.is_finite()) && infeas(&lam_p) <= infeas(&lambda).max(1e-12) {
        lam_p
    } else {
        lambda
    };
    (xp, lam, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp_vertex() {
        // min -x1 - x2 s.t. x1 + 2 x2 + x3 = 4, 3 x1 + x2 + x4 = 6
        // optimum at x1 = 1.6, x2 = 1.2
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_column_slice(&[4.0, 6.0]);
        let c = DVector::from_column_slice(&[-1.0, -1.0, 0.0, 0.0]);
        let sol = solve_standard_form(&a, &b, &c, &LpOptions::default()).unwrap();
        assert!(sol.purified);
        assert!((sol.x[0] - 1.6).abs() < 1e-12);
        assert!((sol.x[1] - 1.2).abs() < 1e-12);
        assert_eq!(sol.x[2], 0.0);
        assert_eq!(sol.x[3], 0.0);
        assert!((b.dot(&sol.dual) - c.dot(&sol.x)).abs() < 1e-10);
    }

    #[test]
    fn degenerate_face_stays_feasible() {
        // min x1 + x2 s.t. x1 + x2 = 1: the whole segment is optimal
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0]);
        let c = DVector::from_column_slice(&[1.0, 1.0]);
        let sol = solve_standard_form(&a, &b, &c, &LpOptions::default()).unwrap();
        assert!((sol.x.sum() - 1.0).abs() < 1e-12);
        assert!(sol.x.min() >= 0.0);
        assert!((sol.dual[0] - 1.0).abs() < 1e-9);
    }
}

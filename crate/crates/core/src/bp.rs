//! Basis pursuit and its noise-dictionary extension as linear programs.
//!
//! Both problems are solved in the split form `β = β⁺ − β⁻`, `β± ≥ 0`,
//! minimizing `1ᵀ(β⁺ + β⁻)` subject to `B(β⁺ − β⁻) = y` where `B` is `X` or
//! `(X | G)`. Before the interior-point phase the constraints are reduced to
//! an orthonormal basis of `range(B)`; a response outside that range is
//! reported as infeasible, so no big-M artificial variables are needed.
//!
//! Every returned solution carries a dual vector `ν` with `‖Bᵀν‖∞ ≤ 1` and
//! `νᵀy = ‖β‖₁` up to tolerance, which certifies ℓ1-optimality.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{DMatrix, DVector};

use crate::design::{DesignMatrix, ResponseVector};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, range_basis};
use crate::lp::{solve_standard_form, LpOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToleranceConfig {
    /// Bound on `‖y − Bβ‖∞`.
    pub feas_tol: f64,
    /// Bound on dual infeasibility and on the relative duality gap.
    pub cert_tol: f64,
    /// Coefficients below `zero_tol · ‖y‖∞` in magnitude are set to exactly zero.
    pub zero_tol: f64,
    pub max_iterations: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { feas_tol: 1e-8, cert_tol: 1e-7, zero_tol: 1e-8, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BpSolution {
    pub beta: Vec<f64>,
    pub dual: Vec<f64>,
    /// `‖y − Xβ‖∞`
    pub residual_norm: f64,
    pub iterations: usize,
    /// `‖β‖₁`
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtendedBpSolution {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dual: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// `‖β‖₁ + ‖γ‖₁`
    pub objective: f64,
}

/// Maximum violations found by [`check_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateReport {
    pub feasibility: f64,
    /// `max(‖Bᵀν‖∞ − 1, 0)`
    pub dual_infeasibility: f64,
    /// `|νᵀy − objective|`
    pub gap: f64,
    pub feasible: bool,
    pub dual_feasible: bool,
    pub gap_closed: bool,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.feasible && self.dual_feasible && self.gap_closed
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Checks primal feasibility and the dual certificate of a (β, γ) pair.
/// Pass an empty `gamma` and `None` for plain basis pursuit.
pub fn check_certificate(
    x: &DesignMatrix,
    g: Option<&DMatrix<f64>>,
    y: &ResponseVector,
    beta: &[f64],
    gamma: &[f64],
    dual: &[f64],
    tol: &ToleranceConfig,
) -> CertificateReport {
    let xv = x.values();
    let yv = y.values();
    let mut fit = xv * DVector::from_column_slice(beta);
    if let Some(g) = g {
        if !gamma.is_empty() {
            fit += g * DVector::from_column_slice(gamma);
        }
    }
    let feasibility = (yv - fit).amax();
    let nu = DVector::from_column_slice(dual);
    let mut corr = xv.tr_mul(&nu).amax();
    if let Some(g) = g {
        if g.ncols() > 0 {
            corr = corr.max(g.tr_mul(&nu).amax());
        }
    }
    let objective = l1(beta) + l1(gamma);
    let gap = (nu.dot(yv) - objective).abs();
    let dual_infeasibility = (corr - 1.0).max(0.0);
    CertificateReport {
        feasibility,
        dual_infeasibility,
        gap,
        feasible: feasibility <= tol.feas_tol,
        dual_feasible: dual_infeasibility <= tol.cert_tol,
        gap_closed: gap <= tol.cert_tol * (1.0 + objective),
    }
}

struct RawSolution {
    coef: Vec<f64>,
    dual: Vec<f64>,
    iterations: usize,
}

/// `min ‖w‖₁ s.t. B w = y` for `B = [X | G]` given as a dense matrix.
fn solve_l1_equality(b: &DMatrix<f64>, y: &DVector<f64>, tol: &ToleranceConfig) -> Result<RawSolution> {
    let (n, m) = b.shape();
    let scale = y.amax();
    if scale == 0.0 {
        return Ok(RawSolution { coef: alloc::vec![0.0; m], dual: alloc::vec![0.0; n], iterations: 0 });
    }
    let u = range_basis(b);
    let outside = (y - &u * u.tr_mul(y)).amax();
    if u.ncols() == 0 || outside > tol.feas_tol {
        return Err(Error::Infeasible { residual: outside });
    }
    let reduced = u.tr_mul(b);
    let r = reduced.nrows();
    let mut a = DMatrix::zeros(r, 2 * m);
    a.view_mut((0, 0), (r, m)).copy_from(&reduced);
    a.view_mut((0, m), (r, m)).copy_from(&(-&reduced));
    let rhs = u.tr_mul(y) / scale;
    let c = DVector::from_element(2 * m, 1.0);
    let opts = LpOptions { max_iterations: tol.max_iterations, ..LpOptions::default() };
    let sol = solve_standard_form(&a, &rhs, &c, &opts)?;
    let raw: Vec<f64> = (0..m).map(|j| scale * (sol.x[j] - sol.x[m + j])).collect();
    let coef = snap(b, y, raw, tol.zero_tol * scale, tol.feas_tol);
    let dual = (&u * &sol.dual).iter().copied().collect();
    Ok(RawSolution { coef, dual, iterations: sol.iterations })
}

/// Zeroes coefficients below `cutoff`. A snapped entry can be a genuine (tiny)
/// basic coefficient; the survivors are then refitted, and if that cannot
/// restore feasibility the unsnapped vector is returned.
fn snap(b: &DMatrix<f64>, y: &DVector<f64>, raw: Vec<f64>, cutoff: f64, feas_tol: f64) -> Vec<f64> {
    let snapped: Vec<f64> = raw.iter().map(|v| if v.abs() < cutoff { 0.0 } else { *v }).collect();
    let resid = |w: &[f64]| y - b * DVector::from_column_slice(w);
    let r = resid(&snapped);
    if r.amax() <= 0.5 * feas_tol {
        return snapped;
    }
    let kept: Vec<usize> = (0..snapped.len()).filter(|&j| snapped[j] != 0.0).collect();
    if kept.is_empty() {
        return raw;
    }
    let delta = lstsq(&b.select_columns(kept.iter()), &r);
    let mut refit = snapped.clone();
    for (k, &j) in kept.iter().enumerate() {
        refit[j] += delta[k];
    }
    let same_signs = kept.iter().all(|&j| refit[j].signum() == snapped[j].signum());
    if same_signs && resid(&refit).amax() <= 0.5 * feas_tol {
        refit
    } else {
        raw
    }
}

/// Basis pursuit: `min ‖β‖₁ s.t. y = Xβ`.
pub fn solve_bp(x: &DesignMatrix, y: &ResponseVector, tol: &ToleranceConfig) -> Result<BpSolution> {
    y.check_matches(x)?;
    let raw = solve_l1_equality(x.values(), y.values(), tol)?;
    let report = check_certificate(x, None, y, &raw.coef, &[], &raw.dual, tol);
    if !report.passed() {
        return Err(Error::CertificateRejected {
            feasibility: report.feasibility,
            dual: report.dual_infeasibility,
            gap: report.gap,
        });
    }
    Ok(BpSolution {
        objective: l1(&raw.coef),
        beta: raw.coef,
        dual: raw.dual,
        residual_norm: report.feasibility,
        iterations: raw.iterations,
    })
}

/// Extended basis pursuit: `min ‖β‖₁ + ‖γ‖₁ s.t. y = Xβ + Gγ`.
/// A dictionary with zero columns reduces to [`solve_bp`].
pub fn solve_extended_bp(
    x: &DesignMatrix,
    g: &DMatrix<f64>,
    y: &ResponseVector,
    tol: &ToleranceConfig,
) -> Result<ExtendedBpSolution> {
    y.check_matches(x)?;
    let (n, p) = (x.nrows(), x.ncols());
    let q = g.ncols();
    if q > 0 && g.nrows() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "dictionary has {} rows, design has {n}",
            g.nrows()
        )));
    }
    let raw = if q == 0 {
        solve_l1_equality(x.values(), y.values(), tol)?
    } else {
        let mut b = DMatrix::zeros(n, p + q);
        b.view_mut((0, 0), (n, p)).copy_from(x.values());
        b.view_mut((0, p), (n, q)).copy_from(g);
        solve_l1_equality(&b, y.values(), tol)?
    };
    let (beta, gamma) = raw.coef.split_at(p);
    let report = check_certificate(x, Some(g), y, beta, gamma, &raw.dual, tol);
    if !report.passed() {
        return Err(Error::CertificateRejected {
            feasibility: report.feasibility,
            dual: report.dual_infeasibility,
            gap: report.gap,
        });
    }
    Ok(ExtendedBpSolution {
        objective: l1(beta) + l1(gamma),
        beta: beta.to_vec(),
        gamma: gamma.to_vec(),
        dual: raw.dual,
        residual_norm: report.feasibility,
        iterations: raw.iterations,
    })
}

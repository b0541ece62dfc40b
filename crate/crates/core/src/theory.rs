//! Exact small-instance oracles for the recovery guarantees: the stable null
//! space constant, the uniform irrepresentability constant, the sign
//! recovery guarantee of thresholded basis pursuit, the implication between
//! the two conditions, an ℓ0 oracle and least-squares FWER control.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::bp::{solve_bp, ToleranceConfig};
use crate::design::{DesignMatrix, ResponseVector};
use crate::error::{Error, Result};
use crate::lasso_zero::{LassoZeroConfig, Pipeline, ThresholdRule};
use crate::linalg::{kernel_basis, lstsq, rank};
use crate::lp::{solve_standard_form, LpOptions};
use crate::qut::known_sigma_threshold;
use crate::rng::{gaussian_vector, tags, SeededRng};

pub const MAX_KERNEL_DIM: usize = 12;
pub const MAX_SNSP_SUPPORT: usize = 8;
pub const MAX_L0_COLUMNS: usize = 20;
pub const MAX_L0_SPARSITY: usize = 6;

fn l1(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).sum()
}

fn complement(p: usize, s0: &[usize]) -> Vec<usize> {
    (0..p).filter(|j| !s0.contains(j)).collect()
}

fn check_support(p: usize, s0: &[usize]) -> Result<Vec<usize>> {
    let mut s: Vec<usize> = s0.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.iter().any(|&j| j >= p) {
        return Err(Error::Precondition(alloc::format!("support index out of range for p = {p}")));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnspReport {
    /// `max ‖β_S‖₁ / ‖β_Sᶜ‖₁` over nonzero kernel vectors; `+∞` when the kernel
    /// contains a nonzero vector supported inside `S`.
    pub rho_star: f64,
    pub kernel_dim: usize,
    /// Kernel vector attaining `rho_star`, normalized to `‖β_Sᶜ‖₁ = 1` when
    /// the ratio is finite. Empty for a trivial kernel.
    pub witness: Vec<f64>,
    /// Largest dual objective over the sign patterns, an upper bound on `rho_star`.
    pub upper_bound: f64,
}

impl SnspReport {
    /// Ratio realized by the witness, a lower bound on `rho_star`.
    pub fn witness_ratio(&self, s0: &[usize]) -> f64 {
        if self.witness.is_empty() {
            return 0.0;
        }
        let on: f64 = l1(s0.iter().map(|&j| self.witness[j]));
        let off = l1(self.witness.iter().copied()) - on;
        if off == 0.0 { f64::INFINITY } else { on / off }
    }
}

/// Smallest `ρ` with `‖β_S‖₁ ≤ ρ‖β_Sᶜ‖₁` for all `β ∈ ker X`.
///
/// With a kernel basis `N`, `β_Sᶜ = N_Sᶜ z` ranges over `V = range(N_Sᶜ)` and
/// `β_S = K v` with `K = N_S N_Sᶜ⁺`. For each sign pattern `s` (up to a global
/// flip) the LP `max sᵀK v` over `‖v‖₁ ≤ 1, v ∈ V` is solved; `rho_star` is the
/// largest value.
pub fn snsp_constant(x: &DesignMatrix, s0: &[usize]) -> Result<SnspReport> {
    let p = x.ncols();
    let s0 = check_support(p, s0)?;
    if s0.len() > MAX_SNSP_SUPPORT {
        return Err(Error::EnumerationTooLarge(alloc::format!(
            "|S0| = {} exceeds {MAX_SNSP_SUPPORT}",
            s0.len()
        )));
    }
    let n_basis = kernel_basis(x.values());
    let d = n_basis.ncols();
    if d > MAX_KERNEL_DIM {
        return Err(Error::EnumerationTooLarge(alloc::format!("kernel dimension {d} exceeds {MAX_KERNEL_DIM}")));
    }
    if d == 0 || s0.is_empty() {
        let witness = if d == 0 { Vec::new() } else { n_basis.column(0).iter().copied().collect() };
        return Ok(SnspReport { rho_star: 0.0, kernel_dim: d, witness, upper_bound: 0.0 });
    }
    let sc = complement(p, &s0);
    let n_s = n_basis.select_rows(s0.iter());
    let n_sc = n_basis.select_rows(sc.iter());

    if rank(&n_sc) < d {
        // some kernel direction vanishes off S
        let z = kernel_basis(&n_sc).column(0).into_owned();
        let w = &n_basis * z;
        return Ok(SnspReport {
            rho_star: f64::INFINITY,
            kernel_dim: d,
            witness: w.iter().copied().collect(),
            upper_bound: f64::INFINITY,
        });
    }

    let pinv = n_sc.clone().pseudo_inverse(1e-12).map_err(|_| Error::SingularGram)?;
    let k = &n_s * &pinv;
    // rows of q span the orthogonal complement of range(N_Sᶜ)
    let q = kernel_basis(&n_sc.transpose()).transpose();
    let m = sc.len();
    let rows = q.nrows() + 1;
    let mut a = DMatrix::zeros(rows, 2 * m + 1);
    if q.nrows() > 0 {
        a.view_mut((0, 0), (q.nrows(), m)).copy_from(&q);
        a.view_mut((0, m), (q.nrows(), m)).copy_from(&(-&q));
    }
    for j in 0..=2 * m {
        a[(rows - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(rows);
    b[rows - 1] = 1.0;

    let opts = LpOptions::default();
    let mut best = (f64::NEG_INFINITY, DVector::zeros(m));
    let mut upper = f64::NEG_INFINITY;
    let patterns = 1usize << (s0.len() - 1);
    for mask in 0..patterns {
        let s = DVector::from_iterator(s0.len(), (0..s0.len()).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }));
        let ks = k.tr_mul(&s);
        let mut c = DVector::zeros(2 * m + 1);
        for j in 0..m {
            c[j] = -ks[j];
            c[m + j] = ks[j];
        }
        let sol = solve_standard_form(&a, &b, &c, &opts)?;
        let v = DVector::from_iterator(m, (0..m).map(|j| sol.x[j] - sol.x[m + j]));
        let value = ks.dot(&v);
        upper = upper.max(-b.dot(&sol.dual));
        if value > best.0 {
            best = (value, v);
        }
    }
    let z = lstsq(&n_sc, &best.1);
    let mut w = &n_basis * z;
    let off = l1(sc.iter().map(|&j| w[j]));
    if off > 0.0 {
        w /= off;
    }
    Ok(SnspReport {
        rho_star: best.0.max(0.0),
        kernel_dim: d,
        witness: w.iter().copied().collect(),
        upper_bound: upper.max(0.0),
    })
}

/// `θ = max over sign vectors τ of ‖X_Sᶜᵀ X_S (X_SᵀX_S)⁻¹ τ‖∞`, which is the
/// largest row ℓ1-norm of `X_Sᶜᵀ X_S (X_SᵀX_S)⁻¹`.
pub fn uniform_ir_constant(x: &DesignMatrix, s0: &[usize]) -> Result<f64> {
    let p = x.ncols();
    let s0 = check_support(p, s0)?;
    let sc = complement(p, &s0);
    if s0.is_empty() || sc.is_empty() {
        return Ok(0.0);
    }
    let a = irrepresentable_matrix(x, &s0, &sc)?;
    Ok(a.row_iter().map(|r| l1(r.iter().copied())).fold(0.0, f64::max))
}

/// `X_Sᶜᵀ X_S (X_SᵀX_S)⁻¹`.
pub fn irrepresentable_matrix(x: &DesignMatrix, s0: &[usize], sc: &[usize]) -> Result<DMatrix<f64>> {
    let xs = x.values().select_columns(s0.iter());
    let xsc = x.values().select_columns(sc.iter());
    if rank(&xs) < s0.len() {
        return Err(Error::SingularGram);
    }
    let gram = xs.tr_mul(&xs);
    let inv = gram.cholesky().ok_or(Error::SingularGram)?.inverse();
    Ok(xsc.tr_mul(&xs) * inv)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Theorem1Record {
    pub rho_star: f64,
    pub c_rho: f64,
    pub beta_min: f64,
    /// `‖β̂^{ℓ1}(ε)‖₁`
    pub noise_l1: f64,
    pub premise_held: bool,
    pub constructive_tau: f64,
    pub constructive_tau_worked: bool,
    pub sweep_worked: bool,
}

impl Theorem1Record {
    /// Premise held but the constructive threshold failed.
    pub fn is_counterexample(&self) -> bool {
        self.premise_held && !self.constructive_tau_worked
    }
}

fn sign_recovered(beta_hat: &[f64], beta0: &[f64], tau: f64) -> bool {
    beta_hat.iter().zip(beta0).all(|(&b, &t)| {
        let thresholded = if b.abs() <= tau { 0.0 } else { b };
        let sign = |v: f64| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 };
        sign(thresholded) == sign(t)
    })
}

/// Checks sign recovery of thresholded basis pursuit on `y = Xβ⁰ + noise`
/// at `τ = (3+ρ)/(1−ρ)‖β̂^{ℓ1}(ε)‖₁` and over a sweep of thresholds.
pub fn verify_theorem1(x: &DesignMatrix, beta0: &[f64], noise: &[f64], tol: &ToleranceConfig) -> Result<Theorem1Record> {
    let (n, p) = (x.nrows(), x.ncols());
    if beta0.len() != p || noise.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "beta0 has {} entries and noise {}, expected {p} and {n}",
            beta0.len(),
            noise.len()
        )));
    }
    if rank(x.values()) != n {
        return Err(Error::Precondition("rank(X) must equal n".into()));
    }
    let s0: Vec<usize> = (0..p).filter(|&j| beta0[j] != 0.0).collect();
    let snsp = snsp_constant(x, &s0)?;
    let rho = snsp.rho_star;
    if !(rho < 1.0) {
        return Err(Error::Precondition(alloc::format!("stable null space constant {rho} is not below 1")));
    }
    let eps = ResponseVector::from_slice(noise)?;
    let noise_l1 = l1(solve_bp(x, &eps, tol)?.beta);
    let y = ResponseVector::new(x.values() * DVector::from_column_slice(beta0) + eps.values())?;
    let beta_hat = solve_bp(x, &y, tol)?.beta;

    let c_rho = 2.0 * (3.0 + rho) / (1.0 - rho);
    let beta_min = s0.iter().map(|&j| beta0[j].abs()).fold(f64::INFINITY, f64::min);
    let constructive_tau = (3.0 + rho) / (1.0 - rho) * noise_l1;

    let mut mags: Vec<f64> = beta_hat.iter().map(|b| b.abs()).collect();
    mags.push(0.0);
    mags.sort_unstable_by(f64::total_cmp);
    mags.dedup();
    let mut candidates = vec![0.0];
    candidates.extend(mags.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let sweep_worked = candidates.iter().any(|&t| sign_recovered(&beta_hat, beta0, t));

    Ok(Theorem1Record {
        rho_star: rho,
        c_rho,
        beta_min,
        noise_l1,
        premise_held: beta_min > c_rho * noise_l1,
        constructive_tau,
        constructive_tau_worked: sign_recovered(&beta_hat, beta0, constructive_tau),
        sweep_worked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Prop2Status {
    Holds,
    /// `θ ≥ 1`: nothing to check.
    Vacuous,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prop2Outcome {
    pub theta: f64,
    pub rho_star: f64,
    pub status: Prop2Status,
}

/// Uniform irrepresentability with `θ < 1` must imply `rho_star ≤ θ`.
pub fn verify_prop2(x: &DesignMatrix, s0: &[usize]) -> Result<Prop2Outcome> {
    let theta = uniform_ir_constant(x, s0)?;
    let rho_star = snsp_constant(x, s0)?.rho_star;
    let status = if theta >= 1.0 {
        Prop2Status::Vacuous
    } else if rho_star <= theta + 1e-6 {
        Prop2Status::Holds
    } else {
        Prop2Status::Violated
    };
    Ok(Prop2Outcome { theta, rho_star, status })
}

#[derive(Debug, Clone, PartialEq)]
pub struct L0Solution {
    pub support: Vec<usize>,
    pub beta: Vec<f64>,
}

/// Calls `f` on every `k`-subset of `0..p` in lexicographic order until it returns `true`.
fn for_each_subset(p: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > p {
        return false;
    }
    loop {
        if f(&idx) {
            return true;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < p - k + i) else { return false };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Sparsest exact solution of `y = Xβ` by exhaustive search over supports
/// of size `0..=k_max`.
pub fn l0_oracle(x: &DesignMatrix, y: &ResponseVector, k_max: usize) -> Result<L0Solution> {
    y.check_matches(x)?;
    let p = x.ncols();
    if p > MAX_L0_COLUMNS || k_max > MAX_L0_SPARSITY {
        return Err(Error::EnumerationTooLarge(alloc::format!(
            "l0 search needs p <= {MAX_L0_COLUMNS} and k_max <= {MAX_L0_SPARSITY}, got {p} and {k_max}"
        )));
    }
    let yv = y.values();
    let tol = 1e-8 * yv.norm().max(1.0);
    if yv.norm() <= tol {
        return Ok(L0Solution { support: Vec::new(), beta: vec![0.0; p] });
    }
    for k in 1..=k_max.min(p) {
        let mut found = None;
        for_each_subset(p, k, |s| {
            let xs = x.values().select_columns(s.iter());
            let coef = lstsq(&xs, yv);
            if (&xs * &coef - yv).norm() <= tol {
                found = Some((s.to_vec(), coef));
                true
            } else {
                false
            }
        });
        if let Some((support, coef)) = found {
            let mut beta = vec![0.0; p];
            for (c, &j) in coef.iter().zip(&support) {
                beta[j] = *c;
            }
            return Ok(L0Solution { support, beta });
        }
    }
    Err(Error::NotFound { k_max })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prop3Outcome {
    pub fwer: f64,
    /// Binomial standard error of `fwer`.
    pub se: f64,
    pub tau: f64,
    pub runs: usize,
    pub false_discovery_runs: usize,
}

/// Empirical FWER of Lasso-Zero with `q = 0, M = 1` (thresholded least
/// squares for full column rank `X`) at the known-σ threshold.
pub fn verify_prop3(
    x: &DesignMatrix,
    beta0: &[f64],
    sigma: f64,
    alpha: f64,
    calibration_runs: usize,
    runs: usize,
    seed: u64,
) -> Result<Prop3Outcome> {
    let (n, p) = (x.nrows(), x.ncols());
    if beta0.len() != p {
        return Err(Error::DimensionMismatch(alloc::format!("beta0 has {} entries, expected {p}", beta0.len())));
    }
    if rank(x.values()) != p {
        return Err(Error::Precondition("X must have full column rank".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidConfig("at least one run is required".into()));
    }
    let cfg = LassoZeroConfig { threshold_rule: ThresholdRule::Hard, seed, ..LassoZeroConfig::basis_pursuit() };
    let tau = known_sigma_threshold(x, &cfg, sigma, alpha, calibration_runs, seed)?.tau;
    let pipeline = Pipeline::new(x, &cfg)?;
    let signal = x.values() * DVector::from_column_slice(beta0);
    let base = SeededRng::new(seed).derive(tags::INSTANCE);
    let mut hits = 0;
    for r in 0..runs {
        let e = gaussian_vector(&base.derive(r as u64), n) * sigma;
        let y = ResponseVector::new(&signal + e)?;
        let fit = pipeline.replicates(&y, &pipeline.data_stream())?.threshold(tau, cfg.threshold_rule);
        if fit.support.iter().any(|&j| beta0[j] == 0.0) {
            hits += 1;
        }
    }
    let fwer = hits as f64 / runs as f64;
    Ok(Prop3Outcome { fwer, se: (fwer * (1.0 - fwer) / runs as f64).sqrt(), tau, runs, false_discovery_runs: hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;

    fn dm(n: usize, p: usize, rows: &[f64]) -> DesignMatrix {
        DesignMatrix::from_rows(n, p, rows).unwrap()
    }

    #[test]
    fn snsp_hand_examples() {
        let r = snsp_constant(&dm(1, 2, &[1.0, 1.0]), &[0]).unwrap();
        assert!((r.rho_star - 1.0).abs() < 1e-8);
        let r = snsp_constant(&dm(1, 2, &[1.0, 2.0]), &[1]).unwrap();
        assert!((r.rho_star - 0.5).abs() < 1e-8);
        assert!((r.witness_ratio(&[1]) - 0.5).abs() < 1e-8);
        let r = snsp_constant(&DesignMatrix::new(DMatrix::identity(3, 3)).unwrap(), &[0, 2]).unwrap();
        assert_eq!(r.rho_star, 0.0);
        assert_eq!(r.kernel_dim, 0);
    }

    #[test]
    fn snsp_infinite_when_kernel_inside_support() {
        // column 0 and 1 identical: (1, -1, 0) is in the kernel
        let r = snsp_constant(&dm(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 1.0]), &[0, 1]).unwrap();
        assert!(r.rho_star.is_infinite());
    }

    #[test]
    fn snsp_bounds_agree_and_witness_is_in_kernel() {
        for seed in 0..5 {
            let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(seed), 5, 9)).unwrap();
            let s0 = [1, 4, 6];
            let r = snsp_constant(&x, &s0).unwrap();
            let w = DVector::from_column_slice(&r.witness);
            assert!((x.values() * &w).amax() < 1e-8);
            assert!((r.witness_ratio(&s0) - r.rho_star).abs() < 1e-6);
            assert!((r.upper_bound - r.rho_star).abs() < 1e-6);
        }
    }

    #[test]
    fn snsp_matches_random_kernel_search() {
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(8), 3, 5)).unwrap();
        let s0 = [0, 3];
        let r = snsp_constant(&x, &s0).unwrap();
        let n = kernel_basis(x.values());
        let mut best: f64 = 0.0;
        for t in 0..20000 {
            let z = gaussian_vector(&SeededRng::new(1000 + t), n.ncols());
            let b = &n * z;
            best = best.max(l1(s0.iter().map(|&j| b[j])) / l1([b[1], b[2], b[4]]));
        }
        assert!(best <= r.rho_star + 1e-9);
        assert!(best > 0.9 * r.rho_star);
    }

    #[test]
    fn enumeration_bounds() {
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(1), 3, 20)).unwrap();
        assert!(matches!(snsp_constant(&x, &[0]), Err(Error::EnumerationTooLarge(_))));
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(1), 10, 12)).unwrap();
        assert!(matches!(snsp_constant(&x, &(0..9).collect::<Vec<_>>()), Err(Error::EnumerationTooLarge(_))));
    }

    #[test]
    fn ir_constant_examples() {
        let x = DesignMatrix::new(DMatrix::identity(4, 3)).unwrap();
        assert_eq!(uniform_ir_constant(&x, &[0]).unwrap(), 0.0);
        assert_eq!(uniform_ir_constant(&x, &[0, 1, 2]).unwrap(), 0.0);
        let phi: f64 = 0.7;
        let x = dm(2, 2, &[1.0, phi.cos(), 0.0, phi.sin()]);
        assert!((uniform_ir_constant(&x, &[0]).unwrap() - phi.cos()).abs() < 1e-12);
        let singular = dm(2, 3, &[1.0, 2.0, 0.0, 1.0, 2.0, 1.0]);
        assert_eq!(uniform_ir_constant(&singular, &[0, 1]), Err(Error::SingularGram));
    }

    #[test]
    fn ir_constant_equals_vertex_enumeration() {
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(3), 10, 8)).unwrap();
        let s0 = [1, 2, 5];
        let sc = complement(8, &s0);
        let a = irrepresentable_matrix(&x, &s0, &sc).unwrap();
        let mut best: f64 = 0.0;
        for mask in 0..8u32 {
            let t = DVector::from_iterator(3, (0..3).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }));
            best = best.max((&a * t).amax());
        }
        assert!((best - uniform_ir_constant(&x, &s0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn prop2_orthogonal_and_random() {
        let x = DesignMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let o = verify_prop2(&x, &[1]).unwrap();
        assert_eq!((o.theta, o.rho_star, o.status), (0.0, 0.0, Prop2Status::Holds));
        for seed in 0..10 {
            let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(seed), 10, 15)).unwrap();
            assert_ne!(verify_prop2(&x, &[2, 9]).unwrap().status, Prop2Status::Violated);
        }
        // nearly collinear columns make theta large
        let x = dm(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(verify_prop2(&x, &[0, 1]).unwrap().status, Prop2Status::Vacuous);
    }

    #[test]
    fn theorem1_noiseless_and_scaled() {
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(5), 8, 16)).unwrap();
        let mut beta0 = vec![0.0; 16];
        beta0[2] = 1.5;
        beta0[11] = -2.0;
        let rec = verify_theorem1(&x, &beta0, &[0.0; 8], &ToleranceConfig::default());
        if let Ok(rec) = rec {
            assert!(rec.premise_held && rec.constructive_tau_worked && rec.sweep_worked);
            assert_eq!(rec.constructive_tau, 0.0);
        }
    }

    #[test]
    fn theorem1_rejects_rank_deficient() {
        let x = dm(2, 3, &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert!(matches!(verify_theorem1(&x, &[1.0, 0.0, 0.0], &[0.0, 0.0], &ToleranceConfig::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn l0_examples() {
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(6), 5, 8)).unwrap();
        let y = ResponseVector::new(x.values().column(3) * 2.5).unwrap();
        let s = l0_oracle(&x, &y, 3).unwrap();
        assert_eq!(s.support, vec![3]);
        assert!((s.beta[3] - 2.5).abs() < 1e-10);
        assert!(l0_oracle(&x, &ResponseVector::new(DVector::zeros(5)).unwrap(), 3).unwrap().support.is_empty());

        let mut m = gaussian_matrix(&SeededRng::new(7), 5, 6);
        let sum = m.column(0) + m.column(1);
        m.set_column(4, &sum);
        let x = DesignMatrix::new(m).unwrap();
        let y = ResponseVector::new(sum).unwrap();
        assert_eq!(l0_oracle(&x, &y, 3).unwrap().support, vec![4]);
        let far = ResponseVector::new(gaussian_vector(&SeededRng::new(8), 5)).unwrap();
        assert_eq!(l0_oracle(&x, &far, 2), Err(Error::NotFound { k_max: 2 }));
    }

    #[test]
    fn subsets_are_enumerated_once() {
        let mut count = 0;
        for_each_subset(6, 3, |_| {
            count += 1;
            false
        });
        assert_eq!(count, 20);
    }

    #[test]
    fn prop3_is_thresholded_least_squares() {
        let x = DesignMatrix::new(gaussian_matrix(&SeededRng::new(9), 20, 4)).unwrap();
        let y = ResponseVector::new(gaussian_vector(&SeededRng::new(10), 20)).unwrap();
        let pipeline = Pipeline::new(&x, &LassoZeroConfig::basis_pursuit()).unwrap();
        let reps = pipeline.replicates(&y, &pipeline.data_stream()).unwrap();
        let ls = lstsq(x.values(), y.values());
        for j in 0..4 {
            assert!((reps.beta_l1[j] - ls[j]).abs() < 1e-8);
        }
        let null = verify_prop3(&x, &[0.0; 4], 1.0, 0.2, 400, 300, 1).unwrap();
        assert!((null.fwer - 0.2).abs() < 0.1, "{null:?}");
        let rank_def = DesignMatrix::new(DMatrix::from_fn(20, 3, |i, j| if j == 2 { i as f64 } else { (i + j) as f64 })).unwrap();
        assert!(matches!(verify_prop3(&rank_def, &[0.0; 3], 1.0, 0.05, 10, 10, 1), Err(Error::Precondition(_))));
    }
}

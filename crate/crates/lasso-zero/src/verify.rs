//! Randomized campaigns over the exact oracles, with a JSON report.

use lasso_zero_core::bp::{solve_bp, ToleranceConfig};
use lasso_zero_core::design::{DesignMatrix, ResponseVector};
use lasso_zero_core::rng::{gaussian_matrix, gaussian_vector, SeededRng};
use lasso_zero_core::theory::{
    snsp_constant, uniform_ir_constant, verify_prop2, verify_prop3, verify_theorem1, Prop2Status, Prop3Outcome,
    MAX_SNSP_SUPPORT,
};
use lasso_zero_core::{Error, Result};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

const THEOREM1_STREAM: u64 = 0x71;
const PROP2_STREAM: u64 = 0x72;
const PROP3_STREAM: u64 = 0x73;
const MAX_ATTEMPTS: u64 = 5000;

#[derive(Debug, Clone, Serialize)]
pub struct VerifySpec {
    pub seed: u64,
    pub theorem1_instances: usize,
    pub theorem1_n: usize,
    pub theorem1_p: usize,
    pub theorem1_support: usize,
    pub prop2_instances: usize,
    pub prop2_n: usize,
    pub prop2_p: usize,
    /// Support sizes cycled through by the instances.
    pub prop2_supports: Vec<usize>,
    pub prop3: Option<Prop3Spec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop3Spec {
    pub n: usize,
    pub p: usize,
    pub nonzeros: usize,
    pub amplitude: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub runs: usize,
    pub calibration_replications: usize,
}

impl Default for Prop3Spec {
    fn default() -> Self {
        Self { n: 50, p: 10, nonzeros: 3, amplitude: 1.0, sigma: 1.0, alpha: 0.05, runs: 500, calibration_replications: 2000 }
    }
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            seed: 0,
            theorem1_instances: 100,
            theorem1_n: 8,
            theorem1_p: 16,
            theorem1_support: 2,
            prop2_instances: 50,
            prop2_n: 10,
            prop2_p: 15,
            prop2_supports: vec![1, 2, 3],
            prop3: Some(Prop3Spec::default()),
        }
    }
}

impl VerifySpec {
    pub fn validate(&self) -> Result<()> {
        let sizes = std::iter::once(self.theorem1_support).chain(self.prop2_supports.iter().copied());
        if let Some(s) = sizes.clone().find(|&s| s > MAX_SNSP_SUPPORT) {
            return Err(Error::EnumerationTooLarge(format!("|S0| = {s} exceeds {MAX_SNSP_SUPPORT}")));
        }
        if self.theorem1_support > self.theorem1_p || self.prop2_supports.iter().any(|&s| s > self.prop2_p) {
            return Err(Error::InvalidConfig("support size exceeds p".into()));
        }
        if self.prop2_supports.is_empty() && self.prop2_instances > 0 {
            return Err(Error::InvalidConfig("no support sizes given".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceRecord {
    pub rho_star: f64,
    pub theta: Option<f64>,
    pub premise_held: bool,
    pub constructive_tau_worked: bool,
    pub sweep_worked: bool,
    pub attempts: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop2Record {
    pub support_size: usize,
    pub theta: f64,
    pub rho_star: f64,
    pub status: Prop2Status,
    pub attempts: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop3Record {
    #[serde(flatten)]
    pub outcome: Prop3Outcome,
    /// `fwer ≤ α + 3·sqrt(α(1−α)/runs)`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub theorem1: Vec<InstanceRecord>,
    pub theorem1_counterexamples: usize,
    pub theorem1_constructive_slack: usize,
    pub prop2: Vec<Prop2Record>,
    pub prop2_violations: usize,
    pub prop3: Option<Prop3Record>,
    /// Instances for which no admissible draw was found.
    pub skipped: usize,
}

impl VerifyReport {
    pub fn has_counterexample(&self) -> bool {
        self.theorem1_counterexamples > 0 || self.prop2_violations > 0
    }
}

fn random_support(rng: &SeededRng, p: usize, k: usize) -> Vec<usize> {
    let mut s = index::sample(&mut rng.generator(), p, k).into_vec();
    s.sort_unstable();
    s
}

/// One premise-satisfying instance: Gaussian `X`, random support with
/// `rho_star < 1`, unit noise, and `β⁰` scaled past `C_ρ‖β̂^{ℓ1}(ε)‖₁`.
pub fn theorem1_instance(spec: &VerifySpec, rng: &SeededRng) -> Result<Option<InstanceRecord>> {
    let (n, p, k) = (spec.theorem1_n, spec.theorem1_p, spec.theorem1_support);
    let tol = ToleranceConfig::default();
    for attempt in 0..MAX_ATTEMPTS {
        let a = rng.derive(attempt);
        let x = DesignMatrix::new(gaussian_matrix(&a.derive(1), n, p))?;
        let s0 = random_support(&a.derive(2), p, k);
        let rho = snsp_constant(&x, &s0)?.rho_star;
        if !(rho < 1.0) {
            continue;
        }
        let noise = gaussian_vector(&a.derive(3), n);
        let noise_l1: f64 = solve_bp(&x, &ResponseVector::new(noise.clone())?, &tol)?.beta.iter().map(|b| b.abs()).sum();
        let c_rho = 2.0 * (3.0 + rho) / (1.0 - rho);
        let mut g = a.derive(4).generator();
        let mut beta0 = vec![0.0; p];
        for &j in &s0 {
            let magnitude = c_rho * noise_l1 * g.random_range(1.05..3.0) + f64::MIN_POSITIVE;
            beta0[j] = if g.random::<bool>() { magnitude } else { -magnitude };
        }
        let rec = verify_theorem1(&x, &beta0, noise.as_slice(), &tol)?;
        return Ok(Some(InstanceRecord {
            rho_star: rec.rho_star,
            theta: uniform_ir_constant(&x, &s0).ok(),
            premise_held: rec.premise_held,
            constructive_tau_worked: rec.constructive_tau_worked,
            sweep_worked: rec.sweep_worked,
            attempts: attempt + 1,
        }));
    }
    Ok(None)
}

/// One instance with `θ < 1`.
pub fn prop2_instance(spec: &VerifySpec, k: usize, rng: &SeededRng) -> Result<Option<Prop2Record>> {
    for attempt in 0..MAX_ATTEMPTS {
        let a = rng.derive(attempt);
        let x = DesignMatrix::new(gaussian_matrix(&a.derive(1), spec.prop2_n, spec.prop2_p))?;
        let s0 = random_support(&a.derive(2), spec.prop2_p, k);
        let out = match verify_prop2(&x, &s0) {
            Err(Error::SingularGram) => continue,
            r => r?,
        };
        if out.status == Prop2Status::Vacuous {
            continue;
        }
        return Ok(Some(Prop2Record {
            support_size: k,
            theta: out.theta,
            rho_star: out.rho_star,
            status: out.status,
            attempts: attempt + 1,
        }));
    }
    Ok(None)
}

/// Runs the known-σ FWER check on `design`, or on a Gaussian design drawn from the seed.
pub fn prop3_check(spec: &Prop3Spec, design: Option<&DesignMatrix>, seed: u64) -> Result<Prop3Record> {
    let rng = SeededRng::new(seed).derive(PROP3_STREAM);
    let x = match design {
        Some(x) => x.clone(),
        None => DesignMatrix::new(gaussian_matrix(&rng.derive(1), spec.n, spec.p))?,
    };
    let p = x.ncols();
    let k = spec.nonzeros.min(p);
    let mut beta0 = vec![0.0; p];
    for j in random_support(&rng.derive(2), p, k) {
        beta0[j] = spec.amplitude;
    }
    let outcome = verify_prop3(&x, &beta0, spec.sigma, spec.alpha, spec.calibration_replications, spec.runs, seed)?;
    let bound = spec.alpha + 3.0 * (spec.alpha * (1.0 - spec.alpha) / spec.runs as f64).sqrt();
    Ok(Prop3Record { within_bound: outcome.fwer <= bound, outcome })
}

pub fn run_verify(spec: &VerifySpec, prop3_design: Option<&DesignMatrix>) -> Result<VerifyReport> {
    spec.validate()?;
    let base = SeededRng::new(spec.seed);
    let t1: Vec<Option<InstanceRecord>> = (0..spec.theorem1_instances)
        .into_par_iter()
        .map(|i| theorem1_instance(spec, &base.derive(THEOREM1_STREAM).derive(i as u64)))
        .collect::<Result<_>>()?;
    let p2: Vec<Option<Prop2Record>> = (0..spec.prop2_instances)
        .into_par_iter()
        .map(|i| {
            let k = spec.prop2_supports[i % spec.prop2_supports.len()];
            prop2_instance(spec, k, &base.derive(PROP2_STREAM).derive(i as u64))
        })
        .collect::<Result<_>>()?;
    let prop3 = match &spec.prop3 {
        Some(p3) => Some(prop3_check(p3, prop3_design, spec.seed)?),
        None => None,
    };
    let skipped = t1.iter().filter(|r| r.is_none()).count() + p2.iter().filter(|r| r.is_none()).count();
    let theorem1: Vec<InstanceRecord> = t1.into_iter().flatten().collect();
    let prop2: Vec<Prop2Record> = p2.into_iter().flatten().collect();
    Ok(VerifyReport {
        theorem1_counterexamples: theorem1.iter().filter(|r| r.premise_held && !r.constructive_tau_worked).count(),
        theorem1_constructive_slack: theorem1.iter().filter(|r| !r.constructive_tau_worked && r.sweep_worked).count(),
        prop2_violations: prop2.iter().filter(|r| r.status == Prop2Status::Violated).count(),
        theorem1,
        prop2,
        prop3,
        skipped,
    })
}

/// A rank-deficient design for exercising the FWER check precondition.
pub fn rank_deficient_design(n: usize, p: usize) -> DesignMatrix {
    let mut m = gaussian_matrix(&SeededRng::new(0), n, p);
    let c = m.column(0).clone_owned();
    m.set_column(p - 1, &c);
    DesignMatrix::new(m).expect("finite")
}


#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifySpec {
        VerifySpec {
            theorem1_instances: 6,
            prop2_instances: 6,
            prop3: Some(Prop3Spec { runs: 50, calibration_replications: 200, ..Prop3Spec::default() }),
            ..VerifySpec::default()
        }
    }

    #[test]
    fn small_suite_is_clean() {
        let r = run_verify(&small(), None).unwrap();
        assert!(!r.has_counterexample());
        assert_eq!(r.theorem1.len() + r.prop2.len() + r.skipped, 12);
        assert!(r.theorem1.iter().all(|i| i.premise_held && i.rho_star < 1.0));
    }

    #[test]
    fn oversized_support_rejected() {
        let spec = VerifySpec { theorem1_support: 9, ..small() };
        assert!(matches!(run_verify(&spec, None), Err(Error::EnumerationTooLarge(_))));
    }

    #[test]
    fn prop3_precondition() {
        let x = rank_deficient_design(30, 5);
        assert!(matches!(prop3_check(&Prop3Spec::default(), Some(&x), 0), Err(Error::Precondition(_))));
    }
}

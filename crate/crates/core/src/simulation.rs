//! Simulation settings, instance generation and support-recovery metrics.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index;
use rand::Rng;

use crate::design::{mean_center_projection, standardize, DesignMatrix, GroundTruth, ResponseVector};
use crate::error::{Error, Result};
use crate::rng::{gaussian_matrix, gaussian_vector, tags, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SettingKind {
    IidGaussian,
    CsvDesign,
    Segmentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SignRule {
    /// Independent fair signs.
    Random,
    FixedPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SupportRule {
    UniformRandom,
    Equispaced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationSetting {
    pub kind: SettingKind,
    pub n: usize,
    pub p: usize,
    pub s0: usize,
    pub amplitude: f64,
    pub sign_rule: SignRule,
    pub sigma: f64,
    pub support_rule: SupportRule,
    /// Draw a new design for every instance instead of once per campaign.
    pub regenerate_design: bool,
}

impl SimulationSetting {
    pub fn iid_gaussian(n: usize, p: usize, s0: usize, amplitude: f64, sigma: f64) -> Self {
        Self {
            kind: SettingKind::IidGaussian,
            n,
            p,
            s0,
            amplitude,
            sign_rule: SignRule::Random,
            sigma,
            support_rule: SupportRule::UniformRandom,
            regenerate_design: false,
        }
    }

    /// Change-point design with `p = n − 1` and equispaced jumps.
    pub fn segmentation(n: usize, s0: usize, amplitude: f64, sigma: f64) -> Self {
        Self {
            kind: SettingKind::Segmentation,
            n,
            p: n.saturating_sub(1),
            s0,
            amplitude,
            sign_rule: SignRule::Random,
            sigma,
            support_rule: SupportRule::Equispaced,
            regenerate_design: false,
        }
    }

    pub fn csv_design(n: usize, p: usize, s0: usize, amplitude: f64, sigma: f64) -> Self {
        Self { kind: SettingKind::CsvDesign, ..Self::iid_gaussian(n, p, s0, amplitude, sigma) }
    }

    pub fn with_s0(&self, s0: usize) -> Self {
        Self { s0, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: alloc::string::String| Err(Error::InvalidConfig(m));
        if self.n < 2 || self.p == 0 {
            return fail(alloc::format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p));
        }
        if self.s0 > self.p {
            return fail(alloc::format!("s0 = {} exceeds p = {}", self.s0, self.p));
        }
        if !(self.amplitude > 0.0) || !(self.sigma > 0.0) {
            return fail("amplitude and sigma must be positive".into());
        }
        if self.kind == SettingKind::Segmentation
            && (self.p != self.n - 1 || self.support_rule != SupportRule::Equispaced)
        {
            return fail("segmentation needs p = n - 1 and equispaced support".into());
        }
        Ok(())
    }
}

/// `X_{ij} = 1{i > j}` (1-based), `n × (n−1)`.
pub fn segmentation_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n.saturating_sub(1), |i, j| if i > j { 1.0 } else { 0.0 })
}

/// Builds the design of a setting. `IidGaussian` draws from `rng`; `CsvDesign`
/// needs the matrix from outside and fails here.
pub fn build_design(setting: &SimulationSetting, rng: &SeededRng) -> Result<DesignMatrix> {
    setting.validate()?;
    match setting.kind {
        SettingKind::IidGaussian => {
            standardize(&DesignMatrix::new(gaussian_matrix(&rng.derive(tags::DESIGN), setting.n, setting.p))?)
        }
        SettingKind::Segmentation => {
            let x = DesignMatrix::new(segmentation_matrix(setting.n))?;
            let zero = ResponseVector::new(DVector::zeros(setting.n))?;
            Ok(mean_center_projection(&x, &zero)?.0)
        }
        SettingKind::CsvDesign => Err(Error::InvalidConfig("a csv_design setting needs an external design".into())),
    }
}

/// 0-based equispaced support: positions `round(k·n/(s0+1))`, `k = 1..s0`,
/// counted from 1.
pub fn equispaced_support(n: usize, p: usize, s0: usize) -> Vec<usize> {
    (1..=s0)
        .map(|k| {
            let pos = libm::round(k as f64 * n as f64 / (s0 + 1) as f64) as usize;
            pos.clamp(1, p) - 1
        })
        .collect()
}

/// Draws one instance. The design is taken from `design` when given (a
/// campaign-wide matrix), otherwise built from `rng`.
pub fn generate_instance(
    setting: &SimulationSetting,
    design: Option<&DesignMatrix>,
    rng: &SeededRng,
) -> Result<(DesignMatrix, ResponseVector, GroundTruth)> {
    setting.validate()?;
    let x = match design {
        Some(x) => {
            if x.nrows() != setting.n || x.ncols() != setting.p {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "design is {}x{}, setting expects {}x{}",
                    x.nrows(),
                    x.ncols(),
                    setting.n,
                    setting.p
                )));
            }
            x.clone()
        }
        None => build_design(setting, rng)?,
    };
    let support = match setting.support_rule {
        SupportRule::Equispaced => equispaced_support(setting.n, setting.p, setting.s0),
        SupportRule::UniformRandom => {
            let mut s = index::sample(&mut rng.derive(tags::SUPPORT).generator(), setting.p, setting.s0).into_vec();
            s.sort_unstable();
            s
        }
    };
    let mut signs = rng.derive(tags::SIGNS).generator();
    let mut beta0 = vec![0.0; setting.p];
    for &j in &support {
        let sign = match setting.sign_rule {
            SignRule::FixedPositive => 1.0,
            SignRule::Random => {
                if signs.random::<bool>() { 1.0 } else { -1.0 }
            }
        };
        beta0[j] = sign * setting.amplitude;
    }
    let noise = gaussian_vector(&rng.derive(tags::NOISE), setting.n) * setting.sigma;
    let y = ResponseVector::new(x.values() * DVector::from_column_slice(&beta0) + noise)?;
    let truth = GroundTruth::new(beta0, setting.sigma)?;
    Ok((x, y, truth))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupportMetrics {
    pub fdp: f64,
    pub tpp: f64,
    pub any_false: bool,
    pub exact: bool,
}

/// False discovery and true positive proportions of an estimated support.
/// `fdp = |Ŝ \ S⁰| / max(|Ŝ|, 1)`; `tpp = |Ŝ ∩ S⁰| / |S⁰|`, or 1 when `S⁰ = ∅`.
pub fn score_support(estimated: &[usize], truth: &[usize]) -> SupportMetrics {
    let est: BTreeSet<usize> = estimated.iter().copied().collect();
    let s0: BTreeSet<usize> = truth.iter().copied().collect();
    let false_pos = est.difference(&s0).count();
    let true_pos = est.intersection(&s0).count();
    SupportMetrics {
        fdp: false_pos as f64 / est.len().max(1) as f64,
        tpp: if s0.is_empty() { 1.0 } else { true_pos as f64 / s0.len() as f64 },
        any_false: false_pos > 0,
        exact: est == s0,
    }
}

/// One row of a campaign table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CampaignRow {
    pub s0: usize,
    pub fdr: f64,
    pub fdr_se: f64,
    pub tpr: f64,
    pub tpr_se: f64,
    pub fwer: f64,
    pub p_exact: f64,
    pub p_exact_se: f64,
    pub replications: usize,
    pub failures: usize,
}

impl CampaignRow {
    /// Standard errors need at least two replications.
    pub fn se_defined(&self) -> bool {
        self.replications >= 2
    }
}

fn mean_se(v: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = v.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Averages per-instance metrics into a table row with Monte Carlo standard errors.
pub fn summarize(s0: usize, metrics: &[SupportMetrics], failures: usize) -> CampaignRow {
    let n = metrics.len();
    let b = |f: bool| if f { 1.0 } else { 0.0 };
    let (fdr, fdr_se) = mean_se(metrics.iter().map(|m| m.fdp), n);
    let (tpr, tpr_se) = mean_se(metrics.iter().map(|m| m.tpp), n);
    let (fwer, _) = mean_se(metrics.iter().map(|m| b(m.any_false)), n);
    let (p_exact, p_exact_se) = mean_se(metrics.iter().map(|m| b(m.exact)), n);
    CampaignRow { s0, fdr, fdr_se, tpr, tpr_se, fwer, p_exact, p_exact_se, replications: n, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segmentation_support_and_design() {
        assert_eq!(equispaced_support(300, 299, 3), vec![74, 149, 224]);
        let s = SimulationSetting::segmentation(300, 3, 1.0, 0.5);
        let (x, _, truth) = generate_instance(&s, None, &SeededRng::new(1)).unwrap();
        assert_eq!(truth.support, vec![74, 149, 224]);
        assert!(x.is_centered());
        assert_eq!(x.ncols(), 299);
        assert!(x.values().column(10).sum().abs() < 1e-9);
    }

    #[test]
    fn null_model_is_pure_noise() {
        let s = SimulationSetting::iid_gaussian(20, 30, 0, 0.75, 1.0);
        let rng = SeededRng::new(2);
        let (_, y, truth) = generate_instance(&s, None, &rng).unwrap();
        assert!(truth.support.is_empty());
        assert_eq!(y.values(), &gaussian_vector(&rng.derive(tags::NOISE), 20));
    }

    #[test]
    fn iid_amplitudes_and_fixed_design() {
        let s = SimulationSetting::iid_gaussian(20, 30, 6, 0.75, 1.0);
        let x = build_design(&s, &SeededRng::new(3)).unwrap();
        assert!(x.is_standardized());
        let (x2, _, truth) = generate_instance(&s, Some(&x), &SeededRng::new(4)).unwrap();
        assert_eq!(x2, x);
        assert_eq!(truth.support.len(), 6);
        assert!(truth.support.iter().all(|&j| truth.beta0[j].abs() == 0.75));
        let fixed = SimulationSetting { sign_rule: SignRule::FixedPositive, ..s };
        let (_, _, t) = generate_instance(&fixed, Some(&x), &SeededRng::new(4)).unwrap();
        assert!(t.support.iter().all(|&j| t.beta0[j] == 0.75));
    }

    #[test]
    fn invalid_settings() {
        assert!(SimulationSetting::iid_gaussian(10, 5, 6, 1.0, 1.0).validate().is_err());
        let bad = SimulationSetting { p: 5, ..SimulationSetting::segmentation(10, 2, 1.0, 1.0) };
        assert!(bad.validate().is_err());
        assert!(build_design(&SimulationSetting::csv_design(5, 3, 1, 1.0, 1.0), &SeededRng::new(0)).is_err());
    }

    #[test]
    fn metric_examples() {
        let m = score_support(&[0, 1], &[0, 1]);
        assert_eq!((m.fdp, m.tpp, m.any_false, m.exact), (0.0, 1.0, false, true));
        let m = score_support(&[], &[3]);
        assert_eq!((m.fdp, m.tpp), (0.0, 0.0));
        let m = score_support(&[1, 2], &[0, 1]);
        assert_eq!((m.fdp, m.tpp, m.any_false, m.exact), (0.5, 0.5, true, false));
        assert_eq!(score_support(&[], &[]).tpp, 1.0);
    }

    #[test]
    fn summary_rows() {
        let ms = [score_support(&[1], &[1]), score_support(&[1, 2], &[1])];
        let row = summarize(1, &ms, 0);
        assert_eq!(row.fdr, 0.25);
        assert_eq!(row.fwer, 0.5);
        assert!(row.fdr <= row.fwer);
        assert!((row.fdr_se - 0.25).abs() < 1e-12);
        let single = summarize(1, &ms[..1], 0);
        assert!(!single.se_defined() && single.fdr_se.is_nan());
    }
}

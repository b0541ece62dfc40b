//! Quantile universal threshold.
//!
//! Under the null model `y = ε` the threshold is the upper α-quantile of
//! `T = ‖β̂^{ℓ1}(ε)‖∞` when σ is known, or of the pivotal ratio
//! `P = ‖β̂^{ℓ1}(ε)‖∞ / s(ε)` otherwise, where `s` is the MAD of the nonzero
//! dictionary coefficients pooled over the replicates. In the pivotal case
//! the data-dependent threshold is `s(y) · q_α`.

use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::design::{DesignMatrix, ResponseVector};
use crate::error::{Error, Result};
use crate::gev::{fit_gev, GevParams};
use crate::lasso_zero::{LassoZeroConfig, LassoZeroFit, Pipeline, Replicates};
use crate::rng::{gaussian_vector, tags, SeededRng};
use crate::stats::{mad, upper_quantile_rank, upper_quantile_sorted};

/// Gaussian consistency factor of the MAD.
pub const MAD_CONSISTENCY: f64 = 1.4826;
/// Largest tolerated fraction of failed calibration replications.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// `s`: MAD (times [`MAD_CONSISTENCY`]) of the entries of `gammas` with
/// magnitude above `zero_tol`, pooled over all replicates.
pub fn noise_scale_s(gammas: &DMatrix<f64>, zero_tol: f64) -> Result<f64> {
    noise_scale_with_constant(gammas, zero_tol, MAD_CONSISTENCY)
}

pub fn noise_scale_with_constant(gammas: &DMatrix<f64>, zero_tol: f64, constant: f64) -> Result<f64> {
    let pooled: Vec<f64> = gammas.iter().copied().filter(|g| g.abs() > zero_tol).collect();
    if pooled.len() < 2 {
        return Err(Error::DegenerateNoiseFit { nonzero: pooled.len() });
    }
    let s = mad(&pooled, constant);
    if !(s > 0.0) {
        return Err(Error::DegenerateNoiseFit { nonzero: pooled.len() });
    }
    Ok(s)
}

/// Which null statistic is simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Statistic {
    /// `P = ‖β̂^{ℓ1}(ε)‖∞ / s(ε)` with `ε ~ N(0, I)`.
    Pivotal,
    /// `T = ‖β̂^{ℓ1}(ε)‖∞` with `ε ~ N(0, σ²I)`.
    KnownSigma { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QuantileEstimator {
    Empirical,
    Gev,
    /// Empirical when `R ≥ 20/α`, GEV otherwise.
    #[default]
    Auto,
}

/// The pivotal statistic of one set of null replicates.
pub fn pivotal_from_replicates(reps: &Replicates, mad_constant: f64) -> Result<f64> {
    Ok(reps.max_abs() / noise_scale_with_constant(&reps.gammas, 0.0, mad_constant)?)
}

/// Null-model simulator. Replication `r` draws its noise and its `M`
/// dictionaries from streams derived from `(seed, r)` alone, so replications
/// can run in any order or in parallel.
pub struct Calibrator<'a> {
    pipeline: Pipeline<'a>,
    statistic: Statistic,
    seed: u64,
}

impl<'a> Calibrator<'a> {
    pub fn new(x: &'a DesignMatrix, cfg: &LassoZeroConfig, statistic: Statistic, seed: u64) -> Result<Self> {
        match statistic {
            Statistic::Pivotal if cfg.dictionary_width(x.nrows()) == 0 => {
                return Err(Error::InvalidConfig("the pivotal statistic needs q >= 1".into()));
            }
            Statistic::KnownSigma { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::InvalidConfig(alloc::format!("sigma must be positive, got {sigma}")));
            }
            _ => {}
        }
        Ok(Self { pipeline: Pipeline::new(x, cfg)?, statistic, seed })
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn base(&self) -> SeededRng {
        SeededRng::new(self.seed).derive(tags::CALIBRATION)
    }

    /// Noise vector of replication `r` (already multiplied by σ for `KnownSigma`).
    pub fn noise(&self, r: usize) -> ResponseVector {
        let e = gaussian_vector(&self.base().derive(tags::NOISE).derive(r as u64), self.pipeline.design().nrows());
        let e = match self.statistic {
            Statistic::Pivotal => e,
            Statistic::KnownSigma { sigma } => e * sigma,
        };
        ResponseVector::new(e).expect("gaussian draws are finite")
    }

    /// Statistic on an arbitrary response, using replication `r`'s dictionaries.
    pub fn statistic_on(&self, e: &ResponseVector, r: usize) -> Result<f64> {
        let reps = self.pipeline.replicates(e, &self.base().derive(tags::DICTIONARY).derive(r as u64))?;
        match self.statistic {
            Statistic::Pivotal => pivotal_from_replicates(&reps, MAD_CONSISTENCY),
            Statistic::KnownSigma { .. } => Ok(reps.max_abs()),
        }
    }

    pub fn draw(&self, r: usize) -> Result<f64> {
        self.statistic_on(&self.noise(r), r)
    }
}

/// Successful draws, sorted ascending, and the indices of failed replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDraws {
    pub samples: Vec<f64>,
    pub failed: Vec<usize>,
}

/// Merges per-replication outcomes. Order of `outcomes` does not matter.
/// Fails with `TooManyFailures` above [`MAX_FAILURE_FRACTION`].
pub fn collect_draws(outcomes: impl IntoIterator<Item = (usize, Result<f64>)>) -> Result<CalibrationDraws> {
    let mut samples = Vec::new();
    let mut failed = Vec::new();
    for (r, out) in outcomes {
        match out {
            Ok(v) if v.is_finite() => samples.push(v),
            _ => failed.push(r),
        }
    }
    let total = samples.len() + failed.len();
    if total == 0 || failed.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures { failed: failed.len(), total });
    }
    samples.sort_unstable_by(f64::total_cmp);
    failed.sort_unstable();
    Ok(CalibrationDraws { samples, failed })
}

/// Runs `r` null replications sequentially.
pub fn simulate_pivotal(calibrator: &Calibrator<'_>, r: usize) -> Result<CalibrationDraws> {
    if r == 0 {
        return Err(Error::InvalidConfig("at least one calibration replication is required".into()));
    }
    collect_draws((0..r).map(|i| (i, calibrator.draw(i))))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PivotalCalibration {
    pub statistic: Statistic,
    pub seed: u64,
    /// Requested number of replications `R`.
    pub replications: usize,
    /// Realized statistics of the successful replications, ascending.
    pub samples: Vec<f64>,
    pub failed: Vec<usize>,
    pub alpha: f64,
    pub q_alpha_empirical: f64,
    pub gev: Option<GevParams>,
    pub q_alpha_gev: Option<f64>,
}

impl PivotalCalibration {
    /// Builds the calibration summary; the GEV fit is attempted when `with_gev`
    /// and left empty if it fails.
    pub fn from_draws(statistic: Statistic, seed: u64, draws: CalibrationDraws, alpha: f64, with_gev: bool) -> Result<Self> {
        check_alpha(alpha)?;
        if draws.samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFinite("calibration samples"));
        }
        let gev = if with_gev { fit_gev(&draws.samples).ok() } else { None };
        let replications = draws.samples.len() + draws.failed.len();
        Ok(Self {
            statistic,
            seed,
            replications,
            q_alpha_empirical: upper_quantile_sorted(&draws.samples, alpha),
            q_alpha_gev: gev.map(|g| g.upper_quantile(alpha)),
            gev,
            alpha,
            samples: draws.samples,
            failed: draws.failed,
        })
    }

    pub fn empirical_quantile(&self, alpha: f64) -> f64 {
        upper_quantile_sorted(&self.samples, alpha)
    }

    pub fn gev_quantile(&self, alpha: f64) -> Option<f64> {
        self.gev.map(|g| g.upper_quantile(alpha))
    }

    /// The estimator `Auto` resolves to at level `alpha`.
    pub fn resolve(&self, alpha: f64, estimator: QuantileEstimator) -> QuantileEstimator {
        match estimator {
            QuantileEstimator::Auto if self.samples.len() as f64 >= 20.0 / alpha || self.gev.is_none() => {
                QuantileEstimator::Empirical
            }
            QuantileEstimator::Auto => QuantileEstimator::Gev,
            e => e,
        }
    }

    pub fn quantile(&self, alpha: f64, estimator: QuantileEstimator) -> Result<f64> {
        check_alpha(alpha)?;
        match self.resolve(alpha, estimator) {
            QuantileEstimator::Gev => self.gev_quantile(alpha).ok_or(Error::FitFailed("no GEV fit available")),
            _ => Ok(self.empirical_quantile(alpha)),
        }
    }

    /// True when the empirical quantile at `alpha` is the sample maximum,
    /// i.e. the level is beyond the resolution of `R` draws.
    pub fn resolution_limited(&self, alpha: f64) -> bool {
        let r = self.samples.len();
        r == 0 || upper_quantile_rank(r, alpha) >= r && alpha * r as f64 <= 1.0
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Simulates and summarizes a calibration in one call.
pub fn calibrate(
    x: &DesignMatrix,
    cfg: &LassoZeroConfig,
    statistic: Statistic,
    replications: usize,
    seed: u64,
    alpha: f64,
    with_gev: bool,
) -> Result<PivotalCalibration> {
    check_alpha(alpha)?;
    let cal = Calibrator::new(x, cfg, statistic, seed)?;
    let draws = simulate_pivotal(&cal, replications)?;
    PivotalCalibration::from_draws(statistic, seed, draws, alpha, with_gev)
}

/// Threshold for a data fit: `s(y) · q_α` for the pivotal statistic, `q_α`
/// for the known-σ statistic.
pub fn threshold_from_calibration(
    cal: &PivotalCalibration,
    data: &Replicates,
    alpha: f64,
    estimator: QuantileEstimator,
) -> Result<f64> {
    let q = cal.quantile(alpha, estimator)?;
    match cal.statistic {
        Statistic::Pivotal => Ok(noise_scale_s(&data.gammas, 0.0)? * q),
        Statistic::KnownSigma { .. } => Ok(q),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QutFit {
    pub fit: LassoZeroFit,
    /// `s(y)`, absent for the known-σ statistic.
    pub s_of_y: Option<f64>,
    pub quantile: f64,
    pub estimator: QuantileEstimator,
}

/// Lasso-Zero with the calibrated threshold.
pub fn fit_with_calibration(
    pipeline: &Pipeline<'_>,
    y: &ResponseVector,
    cal: &PivotalCalibration,
    alpha: f64,
    estimator: QuantileEstimator,
    stream: &SeededRng,
) -> Result<QutFit> {
    let reps = pipeline.replicates(y, stream)?;
    let estimator = cal.resolve(alpha, estimator);
    let quantile = cal.quantile(alpha, estimator)?;
    let s_of_y = match cal.statistic {
        Statistic::Pivotal => Some(noise_scale_s(&reps.gammas, 0.0)?),
        Statistic::KnownSigma { .. } => None,
    };
    let tau = s_of_y.unwrap_or(1.0) * quantile;
    let fit = reps.threshold(tau, pipeline.config().threshold_rule);
    Ok(QutFit { fit, s_of_y, quantile, estimator })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownSigmaThreshold {
    pub tau: f64,
    /// Set when `α·R < 1`: the quantile is just the sample maximum.
    pub resolution_limited: bool,
    pub calibration: PivotalCalibration,
}

/// Monte Carlo upper α-quantile of `T` with `ε ~ N(0, σ²I)`.
pub fn known_sigma_threshold(
    x: &DesignMatrix,
    cfg: &LassoZeroConfig,
    sigma: f64,
    alpha: f64,
    replications: usize,
    seed: u64,
) -> Result<KnownSigmaThreshold> {
    let calibration = calibrate(x, cfg, Statistic::KnownSigma { sigma }, replications, seed, alpha, false)?;
    Ok(KnownSigmaThreshold {
        tau: calibration.q_alpha_empirical,
        resolution_limited: calibration.resolution_limited(alpha),
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::standardize;
    use crate::lasso_zero::fit_replicates;
    use crate::rng::gaussian_matrix;

    fn setup(n: usize, p: usize) -> (DesignMatrix, LassoZeroConfig) {
        let x = standardize(&DesignMatrix::new(gaussian_matrix(&SeededRng::new(21), n, p)).unwrap()).unwrap();
        (x, LassoZeroConfig { replicates: 3, seed: 4, ..LassoZeroConfig::default() })
    }

    #[test]
    fn mad_of_symmetric_pair() {
        let g = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!((noise_scale_s(&g, 0.0).unwrap() - 1.4826).abs() < 1e-15);
        let s3 = noise_scale_s(&(&g * 3.0), 0.0).unwrap();
        assert!((s3 - 3.0 * 1.4826).abs() < 1e-14);
    }

    #[test]
    fn degenerate_noise_fits() {
        let g = DMatrix::from_row_slice(1, 3, &[2.0, 2.0, 2.0]);
        assert!(matches!(noise_scale_s(&g, 0.0), Err(Error::DegenerateNoiseFit { .. })));
        let g = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        assert_eq!(noise_scale_s(&g, 0.0), Err(Error::DegenerateNoiseFit { nonzero: 1 }));
    }

    #[test]
    fn draws_are_reproducible_and_pivotal() {
        let (x, cfg) = setup(12, 20);
        let cal = Calibrator::new(&x, &cfg, Statistic::Pivotal, 8).unwrap();
        let a = cal.draw(0).unwrap();
        assert_eq!(a, Calibrator::new(&x, &cfg, Statistic::Pivotal, 8).unwrap().draw(0).unwrap());
        assert!(a >= 0.0);
        for r in 0..3 {
            let e = cal.noise(r);
            let p1 = cal.statistic_on(&e, r).unwrap();
            let p10 = cal.statistic_on(&e.scaled(10.0), r).unwrap();
            assert!((p1 - p10).abs() <= 1e-6 * p1, "{p1} vs {p10}");
        }
    }

    #[test]
    fn pivotal_needs_dictionary() {
        let (x, _) = setup(8, 10);
        assert!(Calibrator::new(&x, &LassoZeroConfig::basis_pursuit(), Statistic::Pivotal, 0).is_err());
    }

    #[test]
    fn failures_are_dropped_or_abort() {
        let ok = (0..40).map(|r| (r, if r == 7 { Err(Error::SingularGram) } else { Ok(r as f64) }));
        let d = collect_draws(ok).unwrap();
        assert_eq!(d.failed, alloc::vec![7]);
        assert_eq!(d.samples.len(), 39);
        let bad = (0..40).map(|r| (r, if r < 3 { Err(Error::SingularGram) } else { Ok(1.0) }));
        assert_eq!(collect_draws(bad), Err(Error::TooManyFailures { failed: 3, total: 40 }));
    }

    #[test]
    fn merge_is_order_independent() {
        let fwd = collect_draws((0..30).map(|r| (r, Ok(((r * 7) % 13) as f64)))).unwrap();
        let rev = collect_draws((0..30).rev().map(|r| (r, Ok(((r * 7) % 13) as f64)))).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn quantiles_and_threshold() {
        let draws = CalibrationDraws { samples: (1..=100).map(|v| v as f64).collect(), failed: alloc::vec![] };
        let cal = PivotalCalibration::from_draws(Statistic::Pivotal, 0, draws, 0.1, true).unwrap();
        assert_eq!(cal.q_alpha_empirical, 90.0);
        assert!(cal.empirical_quantile(0.01) >= cal.empirical_quantile(0.05));
        assert!(cal.empirical_quantile(0.05) >= cal.empirical_quantile(0.1));
        let g = cal.gev.unwrap();
        assert!(g.upper_quantile(0.01) >= g.upper_quantile(0.05));
        assert_eq!(cal.resolve(0.1, QuantileEstimator::Auto), QuantileEstimator::Gev);
        assert_eq!(cal.resolve(0.5, QuantileEstimator::Auto), QuantileEstimator::Empirical);
        assert!(cal.resolution_limited(0.001) && !cal.resolution_limited(0.1));
        // s(y) = 0.5 and q = 3 give tau = 1.5
        let reps = Replicates {
            betas: DMatrix::zeros(1, 1),
            gammas: DMatrix::from_row_slice(1, 2, &[-0.5 / 1.4826, 0.5 / 1.4826]),
            beta_l1: alloc::vec![0.0],
            iterations: 0,
        };
        let draws = CalibrationDraws { samples: alloc::vec![3.0; 10], failed: alloc::vec![] };
        let cal = PivotalCalibration::from_draws(Statistic::Pivotal, 0, draws, 0.5, false).unwrap();
        let tau = threshold_from_calibration(&cal, &reps, 0.5, QuantileEstimator::Empirical).unwrap();
        assert!((tau - 1.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_scales_with_response() {
        let (x, cfg) = setup(12, 20);
        let y = ResponseVector::new(gaussian_vector(&SeededRng::new(40), 12)).unwrap();
        let cal = calibrate(&x, &cfg, Statistic::Pivotal, 40, 1, 0.2, false).unwrap();
        let a = threshold_from_calibration(&cal, &fit_replicates(&x, &y, &cfg).unwrap(), 0.2, QuantileEstimator::Empirical).unwrap();
        let b = threshold_from_calibration(&cal, &fit_replicates(&x, &y.scaled(7.0), &cfg).unwrap(), 0.2, QuantileEstimator::Empirical).unwrap();
        assert!((b - 7.0 * a).abs() < 1e-8 * b);
    }

    #[test]
    fn mad_constant_cancels() {
        let (x, cfg) = setup(12, 20);
        let cal = Calibrator::new(&x, &cfg, Statistic::Pivotal, 2).unwrap();
        let pipeline = Pipeline::new(&x, &cfg).unwrap();
        let y = ResponseVector::new(gaussian_vector(&SeededRng::new(41), 12)).unwrap();
        let data = fit_replicates(&x, &y, &cfg).unwrap();
        let tau_with = |c: f64| {
            let mut samples: Vec<f64> = (0..25)
                .map(|r| {
                    let reps = pipeline.replicates(&cal.noise(r), &SeededRng::new(99).derive(r as u64)).unwrap();
                    pivotal_from_replicates(&reps, c).unwrap()
                })
                .collect();
            samples.sort_unstable_by(f64::total_cmp);
            noise_scale_with_constant(&data.gammas, 0.0, c).unwrap() * upper_quantile_sorted(&samples, 0.1)
        };
        let (a, b) = (tau_with(MAD_CONSISTENCY), tau_with(1.0));
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn known_sigma_scales_and_flags() {
        let (x, cfg) = setup(10, 15);
        let one = known_sigma_threshold(&x, &cfg, 1.0, 0.5, 21, 5).unwrap();
        let three = known_sigma_threshold(&x, &cfg, 3.0, 0.5, 21, 5).unwrap();
        assert!((three.tau - 3.0 * one.tau).abs() < 1e-8 * three.tau);
        let mut t = one.calibration.samples.clone();
        t.sort_unstable_by(f64::total_cmp);
        assert_eq!(one.tau, t[10]);
        let small = known_sigma_threshold(&x, &cfg, 1.0, 0.01, 10, 5).unwrap();
        assert!(small.resolution_limited);
        assert!(!one.resolution_limited);
    }
}

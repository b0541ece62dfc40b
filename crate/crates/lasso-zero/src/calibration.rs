//! Parallel threshold calibration and its JSON form.

use lasso_zero_core::design::DesignMatrix;
use lasso_zero_core::gev::{qq_correlation, GevParams};
use lasso_zero_core::lasso_zero::LassoZeroConfig;
use lasso_zero_core::qut::{
    collect_draws, CalibrationDraws, Calibrator, PivotalCalibration, QuantileEstimator, Statistic,
};
use lasso_zero_core::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::design_hash;

/// Runs `r` null replications on the rayon pool. The result does not depend
/// on the number of threads.
pub fn simulate_parallel(calibrator: &Calibrator<'_>, r: usize) -> Result<CalibrationDraws> {
    if r == 0 {
        return Err(lasso_zero_core::Error::InvalidConfig("at least one calibration replication is required".into()));
    }
    let outcomes: Vec<_> = (0..r).into_par_iter().map(|i| (i, calibrator.draw(i))).collect();
    collect_draws(outcomes)
}

pub fn calibrate_parallel(
    x: &DesignMatrix,
    cfg: &LassoZeroConfig,
    statistic: Statistic,
    replications: usize,
    seed: u64,
    alpha: f64,
    with_gev: bool,
) -> Result<PivotalCalibration> {
    let calibrator = Calibrator::new(x, cfg, statistic, seed)?;
    let draws = simulate_parallel(&calibrator, replications)?;
    PivotalCalibration::from_draws(statistic, seed, draws, alpha, with_gev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub q_empirical: f64,
    pub q_gev: Option<f64>,
    /// Estimator picked by the `auto` rule at this level.
    pub auto: QuantileEstimator,
    pub resolution_limited: bool,
}

/// Persisted calibration, reusable for fits on the same design and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub design_hash: String,
    pub config: LassoZeroConfig,
    pub statistic: Statistic,
    pub seed: u64,
    #[serde(rename = "R")]
    pub replications: usize,
    pub failed: Vec<usize>,
    pub samples: Vec<f64>,
    pub gev: Option<GevParams>,
    pub gev_qq_correlation: Option<f64>,
    pub alpha_table: Vec<AlphaRow>,
}

impl CalibrationFile {
    pub fn new(x: &DesignMatrix, cfg: &LassoZeroConfig, cal: &PivotalCalibration, alphas: &[f64]) -> Self {
        let alpha_table = alphas
            .iter()
            .map(|&alpha| AlphaRow {
                alpha,
                q_empirical: cal.empirical_quantile(alpha),
                q_gev: cal.gev_quantile(alpha),
                auto: cal.resolve(alpha, QuantileEstimator::Auto),
                resolution_limited: cal.resolution_limited(alpha),
            })
            .collect();
        Self {
            design_hash: design_hash(x),
            config: *cfg,
            statistic: cal.statistic,
            seed: cal.seed,
            replications: cal.replications,
            failed: cal.failed.clone(),
            samples: cal.samples.clone(),
            gev: cal.gev,
            gev_qq_correlation: cal.gev.map(|g| qq_correlation(&cal.samples, &g)),
            alpha_table,
        }
    }

    /// Rebuilds the calibration at level `alpha` without refitting the GEV.
    pub fn calibration(&self, alpha: f64) -> PivotalCalibration {
        let mut samples = self.samples.clone();
        samples.sort_unstable_by(f64::total_cmp);
        PivotalCalibration {
            statistic: self.statistic,
            seed: self.seed,
            replications: self.replications,
            q_alpha_empirical: lasso_zero_core::stats::upper_quantile_sorted(&samples, alpha),
            q_alpha_gev: self.gev.map(|g| g.upper_quantile(alpha)),
            samples,
            failed: self.failed.clone(),
            alpha,
            gev: self.gev,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lasso_zero_core::design::standardize;
    use lasso_zero_core::qut::calibrate;
    use lasso_zero_core::rng::{gaussian_matrix, SeededRng};

    #[test]
    fn parallel_matches_sequential_for_any_pool() {
        let x = standardize(&DesignMatrix::new(gaussian_matrix(&SeededRng::new(1), 10, 14)).unwrap()).unwrap();
        let cfg = LassoZeroConfig { replicates: 2, ..LassoZeroConfig::default() };
        let seq = calibrate(&x, &cfg, Statistic::Pivotal, 12, 3, 0.1, false).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| calibrate_parallel(&x, &cfg, Statistic::Pivotal, 12, 3, 0.1, false)).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn file_round_trip() {
        let x = standardize(&DesignMatrix::new(gaussian_matrix(&SeededRng::new(2), 10, 14)).unwrap()).unwrap();
        let cfg = LassoZeroConfig { replicates: 2, ..LassoZeroConfig::default() };
        let cal = calibrate_parallel(&x, &cfg, Statistic::Pivotal, 40, 3, 0.1, true).unwrap();
        let file = CalibrationFile::new(&x, &cfg, &cal, &[0.01, 0.05, 0.1]);
        let back: CalibrationFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.calibration(0.1), cal);
        let q: Vec<f64> = file.alpha_table.iter().map(|r| r.q_empirical).collect();
        assert!(q[0] >= q[1] && q[1] >= q[2]);
    }
}

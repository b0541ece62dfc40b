//! Simulation campaigns: FDR, TPR, FWER and exact recovery over a grid of sparsity levels.

use lasso_zero_core::design::DesignMatrix;
use lasso_zero_core::lasso_zero::{LassoZeroConfig, Pipeline};
use lasso_zero_core::qut::{fit_with_calibration, PivotalCalibration, QuantileEstimator, Statistic};
use lasso_zero_core::rng::SeededRng;
use lasso_zero_core::simulation::{
    build_design, generate_instance, score_support, summarize, CampaignRow, SettingKind, SimulationSetting,
    SupportMetrics,
};
use lasso_zero_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::calibrate_parallel;
use crate::io::design_hash;

const DESIGN_STREAM: u64 = 0xD0;
const CELL_STREAM: u64 = 0xCE;
const DICTIONARY_STREAM: u64 = 0xD1;

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSpec {
    pub setting: SimulationSetting,
    pub config: LassoZeroConfig,
    pub alpha: f64,
    pub s0_grid: Vec<usize>,
    pub replications: usize,
    pub calibration_replications: usize,
    pub estimator: QuantileEstimator,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub rows: Vec<CampaignRow>,
    /// Hash of the campaign-wide design, absent when designs are regenerated.
    pub design_hash: Option<String>,
    /// Threshold quantile of the shared calibration.
    pub quantile: Option<f64>,
}

struct Shared<'a> {
    pipeline: Pipeline<'a>,
    calibration: PivotalCalibration,
}

fn calibrate_for(x: &DesignMatrix, spec: &CampaignSpec) -> Result<PivotalCalibration> {
    calibrate_parallel(
        x,
        &spec.config,
        Statistic::Pivotal,
        spec.calibration_replications,
        spec.seed,
        spec.alpha,
        spec.estimator != QuantileEstimator::Empirical,
    )
}

fn run_instance(spec: &CampaignSpec, shared: Option<&Shared<'_>>, s0: usize, rng: &SeededRng) -> Result<SupportMetrics> {
    let setting = spec.setting.with_s0(s0);
    let design = shared.map(|s| s.pipeline.design());
    let (x, y, truth) = generate_instance(&setting, design, rng)?;
    let dictionaries = rng.derive(DICTIONARY_STREAM);
    let fit = match shared {
        Some(s) => fit_with_calibration(&s.pipeline, &y, &s.calibration, spec.alpha, spec.estimator, &dictionaries)?,
        None => {
            let cal = calibrate_for(&x, spec)?;
            let pipeline = Pipeline::new(&x, &spec.config)?;
            fit_with_calibration(&pipeline, &y, &cal, spec.alpha, spec.estimator, &dictionaries)?
        }
    };
    Ok(score_support(&fit.fit.support, &truth.support))
}

/// Runs the campaign. `design` supplies the matrix for `csv_design` settings
/// (already standardized by the caller).
pub fn run_campaign(spec: &CampaignSpec, design: Option<&DesignMatrix>) -> Result<CampaignResult> {
    spec.setting.validate()?;
    if spec.replications == 0 || spec.s0_grid.is_empty() {
        return Err(Error::InvalidConfig("a campaign needs replications >= 1 and a non-empty s0 grid".into()));
    }
    if let Some(&bad) = spec.s0_grid.iter().find(|&&s| s > spec.setting.p) {
        return Err(Error::InvalidConfig(format!("s0 = {bad} exceeds p = {}", spec.setting.p)));
    }
    let base = SeededRng::new(spec.seed);
    let fixed = match (spec.setting.kind, design) {
        (SettingKind::CsvDesign, None) => {
            return Err(Error::InvalidConfig("csv_design needs --design".into()));
        }
        (_, Some(x)) => Some(x.clone()),
        (_, None) if !spec.setting.regenerate_design => Some(build_design(&spec.setting, &base.derive(DESIGN_STREAM))?),
        _ => None,
    };
    let shared = match &fixed {
        Some(x) => Some(Shared { pipeline: Pipeline::new(x, &spec.config)?, calibration: calibrate_for(x, spec)? }),
        None => None,
    };

    let cells: Vec<(usize, usize, usize)> = spec
        .s0_grid
        .iter()
        .enumerate()
        .flat_map(|(c, &s0)| (0..spec.replications).map(move |r| (c, s0, r)))
        .collect();
    let outcomes: Vec<Result<SupportMetrics>> = cells
        .par_iter()
        .map(|&(c, s0, r)| {
            let rng = base.derive(CELL_STREAM).derive(c as u64).derive(r as u64);
            run_instance(spec, shared.as_ref(), s0, &rng)
        })
        .collect();

    let rows = spec
        .s0_grid
        .iter()
        .enumerate()
        .map(|(c, &s0)| {
            let cell = &outcomes[c * spec.replications..(c + 1) * spec.replications];
            let metrics: Vec<SupportMetrics> = cell.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
            summarize(s0, &metrics, cell.len() - metrics.len())
        })
        .collect();
    let quantile = match &shared {
        Some(s) => Some(s.calibration.quantile(spec.alpha, spec.estimator)?),
        None => None,
    };
    Ok(CampaignResult { rows, design_hash: fixed.as_ref().map(design_hash), quantile })
}

/// CSV with columns `s0, fdr, fdr_se, tpr, tpr_se, fwer, p_exact, p_exact_se`.
pub fn rows_to_csv(rows: &[CampaignRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s0", "fdr", "fdr_se", "tpr", "tpr_se", "fwer", "p_exact", "p_exact_se"]).expect("in-memory write");
    for r in rows {
        let f = |v: f64| if v.is_nan() { "NA".to_string() } else { format!("{v}") };
        w.write_record([
            r.s0.to_string(),
            f(r.fdr),
            f(r.fdr_se),
            f(r.tpr),
            f(r.tpr_se),
            f(r.fwer),
            f(r.p_exact),
            f(r.p_exact_se),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> CampaignSpec {
        CampaignSpec {
            setting: SimulationSetting::iid_gaussian(12, 20, 0, 3.0, 0.5),
            config: LassoZeroConfig { replicates: 2, ..LassoZeroConfig::default() },
            alpha: 0.2,
            s0_grid: vec![0, 2],
            replications: 6,
            calibration_replications: 30,
            estimator: QuantileEstimator::Empirical,
            seed: 11,
        }
    }

    #[test]
    fn deterministic_and_ordered() {
        let spec = small_spec();
        let a = run_campaign(&spec, None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| run_campaign(&spec, None)).unwrap();
        assert_eq!(rows_to_csv(&a.rows), rows_to_csv(&b.rows));
        assert_eq!(a.rows[0].s0, 0);
        for r in &a.rows {
            assert!(r.fdr <= r.fwer);
        }
        // with no signal every discovery is false
        assert_eq!(a.rows[0].fdr, a.rows[0].fwer);
        assert!(rows_to_csv(&a.rows).starts_with("s0,fdr,fdr_se,tpr,tpr_se,fwer,p_exact,p_exact_se\n"));
    }

    #[test]
    fn single_replication_has_no_se() {
        let spec = CampaignSpec { replications: 1, s0_grid: vec![1], ..small_spec() };
        let res = run_campaign(&spec, None).unwrap();
        assert!(!res.rows[0].se_defined());
        assert!(rows_to_csv(&res.rows).contains("NA"));
    }

    #[test]
    fn rejects_bad_grids() {
        let spec = CampaignSpec { s0_grid: vec![50], ..small_spec() };
        assert!(run_campaign(&spec, None).is_err());
        let csv = CampaignSpec { setting: SimulationSetting::csv_design(12, 20, 0, 1.0, 1.0), ..small_spec() };
        assert!(run_campaign(&csv, None).is_err());
    }
}

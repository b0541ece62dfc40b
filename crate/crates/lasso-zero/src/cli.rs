//! The `lass0` command line.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lasso_zero_core::design::{standardize, DesignMatrix};
use lasso_zero_core::lasso_zero::{DictionaryScaling, LassoZeroConfig, Pipeline, ThresholdRule};
use lasso_zero_core::qut::{fit_with_calibration, QuantileEstimator, Statistic};
use lasso_zero_core::simulation::{SettingKind, SignRule, SimulationSetting, SupportRule};
use lasso_zero_core::Error as CoreError;
use serde::Serialize;
use serde_json::json;

use crate::calibration::{calibrate_parallel, CalibrationFile};
use crate::campaign::{rows_to_csv, run_campaign, CampaignSpec};
use crate::error::{exit, AppError, AppResult};
use crate::io::{design_hash, ensure_dir, read_design, read_response, write_json, write_text};
use crate::verify::{run_verify, Prop3Spec, VerifySpec};

#[derive(Debug, Parser)]
#[command(name = "lass0", version, about = "Lasso-Zero support recovery with calibrated thresholds")]
pub struct Cli {
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Lasso-Zero on a design and response with a calibrated threshold.
    Fit(FitArgs),
    /// Simulate the null distribution of the threshold statistic.
    Calibrate(CalibrateArgs),
    /// Run a simulation campaign and write FDR/TPR/FWER tables.
    Simulate(SimulateArgs),
    /// Run the theory oracles on random instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleArg {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum QuantileArg {
    Empirical,
    Gev,
    Auto,
}

impl From<QuantileArg> for QuantileEstimator {
    fn from(q: QuantileArg) -> Self {
        match q {
            QuantileArg::Empirical => QuantileEstimator::Empirical,
            QuantileArg::Gev => QuantileEstimator::Gev,
            QuantileArg::Auto => QuantileEstimator::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SettingArg {
    IidGaussian,
    Segmentation,
    CsvDesign,
}

/// Options shared by every subcommand that runs the estimator.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Dictionary width q (default: n).
    #[arg(long)]
    pub q: Option<usize>,
    /// Number of noise dictionaries M.
    #[arg(long = "M", default_value_t = 30)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = RuleArg::Hard)]
    pub threshold_rule: RuleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    fn config(&self, x: &DesignMatrix, alpha: f64) -> LassoZeroConfig {
        self.config_with(DictionaryScaling::for_design(x, alpha))
    }

    fn config_with(&self, dictionary_scaling: DictionaryScaling) -> LassoZeroConfig {
        LassoZeroConfig {
            q: self.q,
            replicates: self.m,
            threshold_rule: match self.threshold_rule {
                RuleArg::Hard => ThresholdRule::Hard,
                RuleArg::Soft => ThresholdRule::Soft,
            },
            dictionary_scaling,
            seed: self.seed,
            ..LassoZeroConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub response: PathBuf,
    /// Input CSV files start with a header row.
    #[arg(long)]
    pub header: bool,
    /// Use the design as given instead of standardizing its columns.
    #[arg(long)]
    pub raw_design: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Calibration replications.
    #[arg(long = "R", default_value_t = 500)]
    pub r: usize,
    /// Known noise level: calibrate the unscaled statistic instead of the pivotal one.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = QuantileArg::Auto)]
    pub quantile: QuantileArg,
    /// Reuse a calibration written by `calibrate`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub raw_design: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Levels for the quantile table, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.05, 0.1])]
    pub alpha: Vec<f64>,
    #[arg(long = "R", default_value_t = 500)]
    pub r: usize,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Skip the GEV fit.
    #[arg(long)]
    pub no_gev: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SettingArg::IidGaussian)]
    pub setting: SettingArg,
    /// Design for `csv-design`.
    #[arg(long)]
    pub design: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Use fixed positive signs instead of random ones.
    #[arg(long)]
    pub positive_signs: bool,
    /// Draw a new design for every instance.
    #[arg(long)]
    pub regenerate_design: bool,
    #[arg(long = "s0-grid", value_delimiter = ',', default_values_t = vec![0, 2, 5, 10])]
    pub s0_grid: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long = "R", default_value_t = 200)]
    pub r: usize,
    #[arg(long, value_enum, default_value_t = QuantileArg::Auto)]
    pub quantile: QuantileArg,
    /// Full-size settings: n = 100, p = 200, 500 replications.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum CheckArg {
    All,
    Theorem1,
    Prop2,
    Prop3,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = CheckArg::All)]
    pub check: CheckArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances for the sign-recovery check; the implication check uses half as many.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    /// Support size for the sign-recovery check.
    #[arg(long, default_value_t = 2)]
    pub support_size: usize,
    /// Design for the FWER check (must have full column rank).
    #[arg(long)]
    pub design: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 500)]
    pub replications: usize,
    #[arg(long = "R", default_value_t = 2000)]
    pub r: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    argv: &'a [String],
    config: &'a T,
    seed: u64,
    design_hash: Option<String>,
    threads: usize,
    wall_time_seconds: f64,
}

fn write_manifest<T: Serialize>(
    out: &Path,
    subcommand: &'static str,
    argv: &[String],
    config: &T,
    seed: u64,
    design_hash: Option<String>,
    started: Instant,
) -> AppResult<()> {
    let m = Manifest {
        tool: "lass0",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        argv,
        config,
        seed,
        design_hash,
        threads: rayon::current_num_threads(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join("manifest.json"), &m)
}

fn check_alpha(alpha: f64) -> AppResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(AppError::Usage(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn statistic(sigma: Option<f64>) -> AppResult<Statistic> {
    match sigma {
        None => Ok(Statistic::Pivotal),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Statistic::KnownSigma { sigma: s }),
        Some(s) => Err(AppError::Usage(format!("--sigma must be positive, got {s}"))),
    }
}

fn load_design(path: &Path, header: bool, raw: bool) -> AppResult<DesignMatrix> {
    let x = read_design(path, header)?;
    if raw {
        Ok(x)
    } else {
        standardize(&x).map_err(|e| AppError::Input { path: path.to_path_buf(), message: e.to_string() })
    }
}

fn cmd_fit(a: &FitArgs, argv: &[String]) -> AppResult<()> {
    let started = Instant::now();
    check_alpha(a.alpha)?;
    let x = load_design(&a.design, a.header, a.raw_design)?;
    let y = read_response(&a.response, a.header)?;
    y.check_matches(&x).map_err(|e| AppError::Input { path: a.response.clone(), message: e.to_string() })?;
    let cfg = a.model.config(&x, a.alpha);
    let hash = design_hash(&x);

    let (cal, cal_ref) = match &a.calibration {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| AppError::Input { path: path.clone(), message: e.to_string() })?;
            let file: CalibrationFile = serde_json::from_str(&text)
                .map_err(|e| AppError::Input { path: path.clone(), message: e.to_string() })?;
            if file.design_hash != hash || file.config != cfg {
                return Err(AppError::Input {
                    path: path.clone(),
                    message: "calibration was computed for a different design or configuration".into(),
                });
            }
            (file.calibration(a.alpha), json!({ "file": path, "design_hash": hash }))
        }
        None => {
            let stat = statistic(a.sigma)?;
            let with_gev = a.quantile != QuantileArg::Empirical;
            let cal = calibrate_parallel(&x, &cfg, stat, a.r, a.model.seed, a.alpha, with_gev)?;
            (cal, json!({ "design_hash": hash, "seed": a.model.seed, "R": a.r }))
        }
    };

    let pipeline = Pipeline::new(&x, &cfg)?;
    let degenerate = y.values().amax() == 0.0;
    let (fit, tau, s_of_y, estimator) = if degenerate {
        // An all-zero response gives the zero estimate for every threshold; s(y)
        // is undefined and the threshold is reported at unit noise scale.
        let reps = pipeline.replicates(&y, &pipeline.data_stream())?;
        let est = cal.resolve(a.alpha, a.quantile.into());
        let q = cal.quantile(a.alpha, est)?;
        (reps.threshold(q, cfg.threshold_rule), q, None, est)
    } else {
        let f = fit_with_calibration(&pipeline, &y, &cal, a.alpha, a.quantile.into(), &pipeline.data_stream())?;
        (f.fit.clone(), f.fit.tau, f.s_of_y, f.estimator)
    };
    let quantile = cal.quantile(a.alpha, estimator)?;

    let out = ensure_dir(&a.out)?;
    let report = json!({
        "beta_l1": fit.beta_l1,
        "tau": tau,
        "beta_hat": fit.beta_hat,
        "beta_hat_original_scale": x.coefficients_to_original_scale(&fit.beta_hat),
        "support": fit.support,
        "s_of_y": s_of_y,
        "degenerate_response": degenerate,
        "alpha": a.alpha,
        "quantile": quantile,
        "estimator": estimator,
        "statistic": cal.statistic,
        "calibration": cal_ref,
        "config": cfg,
    });
    write_json(&out.join("fit.json"), &report)?;
    write_manifest(&out, "fit", argv, a, a.model.seed, Some(hash), started)
}

fn cmd_calibrate(a: &CalibrateArgs, argv: &[String]) -> AppResult<()> {
    let started = Instant::now();
    if a.alpha.is_empty() {
        return Err(AppError::Usage("--alpha needs at least one level".into()));
    }
    for &alpha in &a.alpha {
        check_alpha(alpha)?;
    }
    let x = load_design(&a.design, a.header, a.raw_design)?;
    let stat = statistic(a.sigma)?;
    let cfg = a.model.config(&x, a.alpha[0]);
    let cal = calibrate_parallel(&x, &cfg, stat, a.r, a.model.seed, a.alpha[0], !a.no_gev)?;
    let file = CalibrationFile::new(&x, &cfg, &cal, &a.alpha);
    let out = ensure_dir(&a.out)?;
    write_json(&out.join("calibration.json"), &file)?;
    write_manifest(&out, "calibrate", argv, a, a.model.seed, Some(file.design_hash.clone()), started)
}

fn cmd_simulate(a: &SimulateArgs, argv: &[String]) -> AppResult<()> {
    let started = Instant::now();
    check_alpha(a.alpha)?;
    let mut a = a.clone();
    if a.full_scale {
        eprintln!("warning: full-scale campaign (n = 100, p = 200, 500 replications) can take many hours");
        a.n = 100;
        a.p = 200;
        a.replications = 500;
    }
    let signs = if a.positive_signs { SignRule::FixedPositive } else { SignRule::Random };
    let design = match (a.setting, &a.design) {
        (SettingArg::CsvDesign, Some(path)) => Some(load_design(path, a.header, false)?),
        (SettingArg::CsvDesign, None) => return Err(AppError::Usage("--setting csv-design needs --design".into())),
        _ => None,
    };
    let mut setting = match a.setting {
        SettingArg::IidGaussian => SimulationSetting::iid_gaussian(a.n, a.p, 0, a.amplitude, a.sigma),
        SettingArg::Segmentation => SimulationSetting::segmentation(a.n, 0, a.amplitude, a.sigma),
        SettingArg::CsvDesign => {
            let x = design.as_ref().expect("loaded above");
            SimulationSetting::csv_design(x.nrows(), x.ncols(), 0, a.amplitude, a.sigma)
        }
    };
    setting.sign_rule = signs;
    setting.regenerate_design = a.regenerate_design && setting.kind == SettingKind::IidGaussian;
    if setting.kind == SettingKind::Segmentation {
        setting.support_rule = SupportRule::Equispaced;
    }
    // simulated Gaussian and csv designs are standardized, the segmentation design is not
    let scaling = match setting.kind {
        SettingKind::Segmentation => DictionaryScaling::MatchQuantile { alpha: a.alpha, mc_draws: 1000 },
        _ => DictionaryScaling::MatchStandardized,
    };
    let spec = CampaignSpec {
        setting,
        config: a.model.config_with(scaling),
        alpha: a.alpha,
        s0_grid: a.s0_grid.clone(),
        replications: a.replications,
        calibration_replications: a.r,
        estimator: a.quantile.into(),
        seed: a.model.seed,
    };
    let result = run_campaign(&spec, design.as_ref())?;
    if a.replications < 2 {
        eprintln!("warning: standard errors are undefined with a single replication");
    }
    for row in &result.rows {
        if row.failures > 0 {
            eprintln!("warning: s0 = {}: {} of {} instances failed", row.s0, row.failures, a.replications);
        }
    }
    let out = ensure_dir(&a.out)?;
    write_text(&out.join("campaign.csv"), &rows_to_csv(&result.rows))?;
    let config = json!({ "args": a, "spec": spec, "quantile": result.quantile });
    write_manifest(&out, "simulate", argv, &config, a.model.seed, result.design_hash, started)
}

fn cmd_verify(a: &VerifyArgs, argv: &[String]) -> AppResult<i32> {
    let started = Instant::now();
    check_alpha(a.alpha)?;
    let design = match &a.design {
        Some(path) => Some(read_design(path, a.header)?),
        None => None,
    };
    let all = a.check == CheckArg::All;
    let spec = VerifySpec {
        seed: a.seed,
        theorem1_instances: if all || a.check == CheckArg::Theorem1 { a.instances } else { 0 },
        theorem1_support: a.support_size,
        prop2_instances: if all || a.check == CheckArg::Prop2 { (a.instances / 2).max(1) } else { 0 },
        prop3: (all || a.check == CheckArg::Prop3).then(|| Prop3Spec {
            alpha: a.alpha,
            runs: a.replications,
            calibration_replications: a.r,
            ..Prop3Spec::default()
        }),
        ..VerifySpec::default()
    };
    let report = run_verify(&spec, design.as_ref())?;
    let out = ensure_dir(&a.out)?;
    write_json(&out.join("verify.json"), &report)?;
    write_manifest(&out, "verify", argv, &spec, a.seed, design.as_ref().map(design_hash), started)?;
    if report.has_counterexample() {
        eprintln!(
            "counterexample found: {} sign-recovery failures, {} implication violations",
            report.theorem1_counterexamples, report.prop2_violations
        );
        return Ok(exit::COUNTEREXAMPLE);
    }
    Ok(exit::OK)
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Fit(a) => cmd_fit(a, &argv).map(|_| exit::OK),
        Command::Calibrate(a) => cmd_calibrate(a, &argv).map(|_| exit::OK),
        Command::Simulate(a) => cmd_simulate(a, &argv).map(|_| exit::OK),
        Command::Verify(a) => cmd_verify(a, &argv),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let AppError::Core(CoreError::Replicate { source, .. }) = &e {
                eprintln!("  caused by: {source}");
            }
            e.exit_code()
        }
    }
}

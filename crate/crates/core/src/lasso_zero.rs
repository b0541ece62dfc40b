//! The Lasso-Zero estimator.
//!
//! For `k = 1..M` a Gaussian noise dictionary `G⁽ᵏ⁾` (n × q) is drawn and
//! rescaled to the scale of the design, extended basis pursuit is solved on
//! `(X | G⁽ᵏ⁾)`, and the `β` parts are aggregated by componentwise median.
//! The aggregate is then thresholded.
//!
//! When the design is column-centered (standardized, or projected away from
//! the constant vector) the response is centered too: the centered design
//! and dictionaries only span the centered subspace. Without a dictionary
//! the response is projected onto the range of the design.

use alloc::boxed::Box;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::bp::{solve_extended_bp, ToleranceConfig};
use crate::design::{center, mean_and_sd, DesignMatrix, ResponseVector};
use crate::error::{Error, Result};
use crate::linalg::range_basis;
use crate::rng::{gaussian_matrix, tags, SeededRng};
use crate::stats::{median, upper_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ThresholdRule {
    #[default]
    Hard,
    Soft,
}

/// How raw Gaussian dictionaries are brought to the scale of the design.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DictionaryScaling {
    /// Center each column and scale it to unit sample sd, as for a standardized design.
    MatchStandardized,
    /// Give every column a common ℓ2 norm chosen so that the upper α-quantiles of
    /// `‖Xᵀε‖∞` and `‖Gᵀε‖∞` agree over `mc_draws` shared draws `ε ~ N(0, I)`.
    MatchQuantile { alpha: f64, mc_draws: usize },
}

impl DictionaryScaling {
    /// `MatchStandardized` for standardized designs, `MatchQuantile` otherwise.
    pub fn for_design(x: &DesignMatrix, alpha: f64) -> Self {
        if x.is_standardized() {
            Self::MatchStandardized
        } else {
            Self::MatchQuantile { alpha, mc_draws: 1000 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LassoZeroConfig {
    /// Dictionary width; `None` means `q = n`.
    pub q: Option<usize>,
    /// Number of dictionaries `M`.
    pub replicates: usize,
    pub threshold_rule: ThresholdRule,
    pub dictionary_scaling: DictionaryScaling,
    pub seed: u64,
    pub tolerance: ToleranceConfig,
}

impl Default for LassoZeroConfig {
    fn default() -> Self {
        Self {
            q: None,
            replicates: 30,
            threshold_rule: ThresholdRule::Hard,
            dictionary_scaling: DictionaryScaling::MatchStandardized,
            seed: 0,
            tolerance: ToleranceConfig::default(),
        }
    }
}

impl LassoZeroConfig {
    /// Defaults with the dictionary scaling picked for `x`.
    pub fn for_design(x: &DesignMatrix, alpha: f64) -> Self {
        Self { dictionary_scaling: DictionaryScaling::for_design(x, alpha), ..Self::default() }
    }

    /// Thresholded basis pursuit: no dictionary, one replicate.
    pub fn basis_pursuit() -> Self {
        Self { q: Some(0), replicates: 1, ..Self::default() }
    }

    pub fn dictionary_width(&self, n: usize) -> usize {
        self.q.unwrap_or(n)
    }

    /// `M`, forced to 1 when there is no dictionary.
    pub fn effective_replicates(&self, n: usize) -> usize {
        if self.dictionary_width(n) == 0 { 1 } else { self.replicates }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("at least one replicate is required".into()));
        }
        if let DictionaryScaling::MatchQuantile { alpha, mc_draws } = self.dictionary_scaling {
            if !(alpha > 0.0 && alpha < 1.0) || mc_draws == 0 {
                return Err(Error::InvalidConfig(alloc::format!(
                    "quantile matching needs alpha in (0,1) and draws > 0, got {alpha}, {mc_draws}"
                )));
            }
        }
        Ok(())
    }
}

/// Componentwise median over the rows of an `M × p` matrix.
pub fn median_aggregate(replicate_betas: &DMatrix<f64>) -> Vec<f64> {
    replicate_betas
        .column_iter()
        .map(|col| median(col.as_slice()))
        .collect()
}

pub fn threshold_value(x: f64, tau: f64, rule: ThresholdRule) -> f64 {
    if x.abs() <= tau {
        return 0.0;
    }
    match rule {
        ThresholdRule::Hard => x,
        ThresholdRule::Soft => x.signum() * (x.abs() - tau),
    }
}

/// Zero below or at `tau`, sign-preserving above.
pub fn apply_threshold(beta: &[f64], tau: f64, rule: ThresholdRule) -> Vec<f64> {
    beta.iter().map(|&x| threshold_value(x, tau, rule)).collect()
}

/// Common column norm that matches the upper α-quantile of `‖Gᵀε‖∞` to that of
/// `‖Xᵀε‖∞`, for the noise draws in the columns of `noise`.
pub fn quantile_matched_norm(x: &DMatrix<f64>, g: &DMatrix<f64>, alpha: f64, noise: &DMatrix<f64>) -> f64 {
    let target = max_correlation_quantile(x, noise, alpha);
    let unit = unit_columns(g);
    target / max_correlation_quantile(&unit, noise, alpha)
}

fn max_correlation_quantile(a: &DMatrix<f64>, noise: &DMatrix<f64>, alpha: f64) -> f64 {
    let corr = a.tr_mul(noise);
    let stats: Vec<f64> = corr.column_iter().map(|c| c.amax()).collect();
    upper_quantile(&stats, alpha)
}

fn unit_columns(g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut u = g.clone();
    for mut col in u.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    u
}

/// Per-fit state for dictionary scaling; the shared noise draws and the
/// design-side quantile are computed once and reused for every replicate.
pub struct DictionaryScaler {
    rule: DictionaryScaling,
    reference: Option<(DMatrix<f64>, f64)>,
}

impl DictionaryScaler {
    pub fn new(x: &DesignMatrix, rule: DictionaryScaling, rng: &SeededRng) -> Self {
        let reference = match rule {
            DictionaryScaling::MatchStandardized => None,
            DictionaryScaling::MatchQuantile { alpha, mc_draws } => {
                let noise = gaussian_matrix(rng, x.nrows(), mc_draws);
                let target = max_correlation_quantile(x.values(), &noise, alpha);
                Some((noise, target))
            }
        };
        Self { rule, reference }
    }

    pub fn apply(&self, mut g: DMatrix<f64>) -> DMatrix<f64> {
        let n = g.nrows();
        match (&self.rule, &self.reference) {
            (DictionaryScaling::MatchQuantile { alpha, .. }, Some((noise, target))) => {
                let unit = unit_columns(&g);
                let c = target / max_correlation_quantile(&unit, noise, *alpha);
                unit * c
            }
            _ => {
                if n >= 2 {
                    for mut col in g.column_iter_mut() {
                        let (m, sd) = mean_and_sd(col.as_slice().iter().copied(), n);
                        if sd > 0.0 {
                            col.iter_mut().for_each(|v| *v = (*v - m) / sd);
                        }
                    }
                }
                g
            }
        }
    }
}

/// One-shot version of [`DictionaryScaler`].
pub fn scale_dictionary(g: DMatrix<f64>, x: &DesignMatrix, rule: DictionaryScaling, rng: &SeededRng) -> DMatrix<f64> {
    DictionaryScaler::new(x, rule, rng).apply(g)
}

/// Unthresholded output of the M extended basis pursuit solves.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicates {
    /// `M × p`
    pub betas: DMatrix<f64>,
    /// `M × q`
    pub gammas: DMatrix<f64>,
    /// Componentwise median of `betas`.
    pub beta_l1: Vec<f64>,
    pub iterations: usize,
}

impl Replicates {
    pub fn threshold(self, tau: f64, rule: ThresholdRule) -> LassoZeroFit {
        let beta_hat = apply_threshold(&self.beta_l1, tau, rule);
        let support = beta_hat.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect();
        LassoZeroFit {
            beta_l1: self.beta_l1,
            replicate_betas: self.betas,
            replicate_gammas: self.gammas,
            tau,
            beta_hat,
            support,
        }
    }

    /// `‖β̂^{ℓ1}‖∞`, the smallest threshold that empties the support.
    pub fn max_abs(&self) -> f64 {
        self.beta_l1.iter().fold(0.0, |m, b| m.max(b.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoZeroFit {
    pub beta_l1: Vec<f64>,
    pub replicate_betas: DMatrix<f64>,
    pub replicate_gammas: DMatrix<f64>,
    pub tau: f64,
    pub beta_hat: Vec<f64>,
    pub support: Vec<usize>,
}

/// A design and configuration prepared for repeated fits: dictionary scaling
/// reference draws, and for `q = 0` the range of `X`, are computed once.
pub struct Pipeline<'a> {
    x: &'a DesignMatrix,
    cfg: LassoZeroConfig,
    scaler: Option<DictionaryScaler>,
    range: Option<DMatrix<f64>>,
}

impl<'a> Pipeline<'a> {
    pub fn new(x: &'a DesignMatrix, cfg: &LassoZeroConfig) -> Result<Self> {
        cfg.validate()?;
        let n = x.nrows();
        let q = cfg.dictionary_width(n);
        let base = SeededRng::new(cfg.seed);
        let scaler = (q > 0).then(|| DictionaryScaler::new(x, cfg.dictionary_scaling, &base.derive(tags::SCALING_NOISE)));
        // Without a dictionary the constraint is only solvable on range(X);
        // responses are projected there, which for full column rank X turns
        // basis pursuit into least squares.
        let range = if q == 0 {
            let u = range_basis(x.values());
            (u.ncols() < n).then_some(u)
        } else {
            None
        };
        Ok(Self { x, cfg: *cfg, scaler, range })
    }

    pub fn design(&self) -> &DesignMatrix {
        self.x
    }

    pub fn config(&self) -> &LassoZeroConfig {
        &self.cfg
    }

    /// Stream of the dictionaries used by [`fit_replicates`].
    pub fn data_stream(&self) -> SeededRng {
        SeededRng::new(self.cfg.seed).derive(tags::DICTIONARY)
    }

    /// Runs the M replicate solves; dictionary `k` is drawn from `stream.derive(k)`.
    pub fn replicates(&self, y: &ResponseVector, stream: &SeededRng) -> Result<Replicates> {
        y.check_matches(self.x)?;
        let n = self.x.nrows();
        let q = self.cfg.dictionary_width(n);
        let m = self.cfg.effective_replicates(n);
        let y = if let Some(u) = &self.range {
            ResponseVector::new(u * (u.tr_mul(y.values())))?
        } else if self.x.is_centered() {
            ResponseVector::new(center(y.values()))?
        } else {
            y.clone()
        };

        let mut betas = DMatrix::zeros(m, self.x.ncols());
        let mut gammas = DMatrix::zeros(m, q);
        let mut iterations = 0;
        for k in 0..m {
            let g = match &self.scaler {
                Some(s) => s.apply(gaussian_matrix(&stream.derive(k as u64), n, q)),
                None => DMatrix::zeros(n, 0),
            };
            let sol = solve_extended_bp(self.x, &g, &y, &self.cfg.tolerance)
                .map_err(|e| Error::Replicate { index: k, source: Box::new(e) })?;
            betas.row_mut(k).copy_from(&DVector::from_column_slice(&sol.beta).transpose());
            if q > 0 {
                gammas.row_mut(k).copy_from(&DVector::from_column_slice(&sol.gamma).transpose());
            }
            iterations += sol.iterations;
        }
        let beta_l1 = median_aggregate(&betas);
        Ok(Replicates { betas, gammas, beta_l1, iterations })
    }
}

/// Runs the M replicate solves with dictionaries drawn from `cfg.seed`.
pub fn fit_replicates(x: &DesignMatrix, y: &ResponseVector, cfg: &LassoZeroConfig) -> Result<Replicates> {
    let pipeline = Pipeline::new(x, cfg)?;
    pipeline.replicates(y, &pipeline.data_stream())
}

/// The Lasso-Zero estimate at threshold `tau`.
pub fn fit(x: &DesignMatrix, y: &ResponseVector, cfg: &LassoZeroConfig, tau: f64) -> Result<LassoZeroFit> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(fit_replicates(x, y, cfg)?.threshold(tau, cfg.threshold_rule))
}

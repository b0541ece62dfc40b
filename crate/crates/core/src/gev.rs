//! Generalized extreme value distribution: density, quantiles and maximum
//! likelihood fitting.
//!
//! `F(x) = exp(−(1 + ξ(x−μ)/σ)^{−1/ξ})` on `1 + ξ(x−μ)/σ > 0`, with the
//! Gumbel limit `exp(−e^{−(x−μ)/σ})` at `ξ = 0`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// `|ξ|` below which the Gumbel formulas are used for quantiles.
pub const GUMBEL_QUANTILE_CUTOFF: f64 = 1e-10;
/// `|ξ|` below which the Gumbel formulas are used for the density.
const GUMBEL_DENSITY_CUTOFF: f64 = 1e-9;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GevParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
    /// Log-likelihood of the sample the parameters were fitted on (0 if not fitted).
    pub log_likelihood: f64,
}

impl GevParams {
    pub fn new(location: f64, scale: f64, shape: f64) -> Self {
        Self { location, scale, shape, log_likelihood: 0.0 }
    }

    pub fn in_support(&self, x: f64) -> bool {
        self.shape.abs() < GUMBEL_DENSITY_CUTOFF || 1.0 + self.shape * (x - self.location) / self.scale > 0.0
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        if self.shape.abs() < GUMBEL_QUANTILE_CUTOFF {
            return (-(-z).exp()).exp();
        }
        let t = 1.0 + self.shape * z;
        if t <= 0.0 {
            return if self.shape > 0.0 { 0.0 } else { 1.0 };
        }
        (-t.powf(-1.0 / self.shape)).exp()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !(self.scale > 0.0) {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.location) / self.scale;
        if self.shape.abs() < GUMBEL_DENSITY_CUTOFF {
            return -self.scale.ln() - z - (-z).exp();
        }
        let t = 1.0 + self.shape * z;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lt = t.ln();
        -self.scale.ln() - (1.0 + 1.0 / self.shape) * lt - (-lt / self.shape).exp()
    }

    pub fn log_likelihood_of(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.log_pdf(x)).sum()
    }

    /// Upper α-quantile `F⁻¹(1−α)`.
    pub fn upper_quantile(&self, alpha: f64) -> f64 {
        let y = -(1.0 - alpha).ln();
        if self.shape.abs() < GUMBEL_QUANTILE_CUTOFF {
            self.location - self.scale * y.ln()
        } else {
            self.location + self.scale / self.shape * (y.powf(-self.shape) - 1.0)
        }
    }

    /// Inverse CDF at probability `u`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        self.upper_quantile(1.0 - u)
    }
}

/// Probability-weighted-moment estimates (Hosking, Wallis and Wood).
pub fn pwm_estimate(samples: &[f64]) -> GevParams {
    let mut x = samples.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    let n = x.len() as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let j = i as f64;
        b0 += v;
        b1 += v * j / (n - 1.0);
        b2 += v * j * (j - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;
    let l2 = 2.0 * b1 - b0;
    let c = l2 / (3.0 * b2 - b0) - core::f64::consts::LN_2 / libm::log(3.0);
    let k = 7.8590 * c + 2.9554 * c * c;
    if k.abs() < 1e-6 || !k.is_finite() {
        let scale = l2 / core::f64::consts::LN_2;
        return GevParams::new(b0 - EULER_GAMMA * scale, scale, 0.0);
    }
    let g = libm::tgamma(1.0 + k);
    let scale = l2 * k / (g * (1.0 - libm::pow(2.0, -k)));
    let location = b0 + scale * (g - 1.0) / k;
    GevParams::new(location, scale, -k)
}

fn gumbel_moments(samples: &[f64]) -> GevParams {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let scale = var.sqrt() * 6.0.sqrt() / core::f64::consts::PI;
    GevParams::new(mean - EULER_GAMMA * scale, scale, 0.0)
}

/// Initializer used by [`fit_gev`]: PWM estimates, or Gumbel moments when the
/// PWM fit leaves some sample outside its support.
pub fn moment_initializer(samples: &[f64]) -> GevParams {
    let pwm = pwm_estimate(samples);
    if pwm.scale > 0.0 && pwm.shape.is_finite() && pwm.log_likelihood_of(samples).is_finite() {
        pwm
    } else {
        gumbel_moments(samples)
    }
}

/// Maximum likelihood GEV fit.
///
/// The sample is standardized by its mean and sd, the likelihood is
/// minimized over `(μ, ln σ, ξ)` by Nelder-Mead from [`moment_initializer`],
/// and the estimates are mapped back to the original scale.
pub fn fit_gev(samples: &[f64]) -> Result<GevParams> {
    let r = samples.len();
    if r < 30 {
        return Err(Error::FitFailed("at least 30 samples are required"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite sample"));
    }
    let mean = samples.iter().sum::<f64>() / r as f64;
    let sd = (samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r as f64 - 1.0)).sqrt();
    if !(sd > 1e-12 * (1.0 + mean.abs())) {
        return Err(Error::FitFailed("samples are constant"));
    }
    let z: Vec<f64> = samples.iter().map(|v| (v - mean) / sd).collect();
    let init = moment_initializer(&z);
    let init_nll = -init.log_likelihood_of(&z);
    if !init_nll.is_finite() {
        return Err(Error::FitFailed("initializer has zero likelihood"));
    }
    let nll = |t: &[f64]| {
        let v = -GevParams::new(t[0], t[1].exp(), t[2]).log_likelihood_of(&z);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let opts = NelderMeadOptions::default();
    let mut x0 = [init.location, init.scale.ln(), init.shape];
    let mut best = nelder_mead(nll, &x0, &[0.1, 0.1, 0.05], &opts);
    // restarts guard against a collapsed simplex
    for _ in 0..3 {
        x0 = [best.x[0], best.x[1], best.x[2]];
        let again = nelder_mead(nll, &x0, &[0.02, 0.02, 0.01], &opts);
        let improved = again.value < best.value - 1e-12 * (1.0 + best.value.abs());
        best = if again.value <= best.value { again } else { best };
        if !improved {
            break;
        }
    }
    if !best.converged || !best.value.is_finite() || best.value > init_nll {
        return Err(Error::FitFailed("likelihood optimization did not converge"));
    }
    let fitted = GevParams {
        location: mean + sd * best.x[0],
        scale: sd * best.x[1].exp(),
        shape: best.x[2],
        log_likelihood: -best.value - r as f64 * sd.ln(),
    };
    if samples.iter().any(|&x| !fitted.in_support(x)) {
        return Err(Error::FitFailed("fitted support excludes a sample"));
    }
    Ok(fitted)
}

/// Correlation between the sorted sample and the fitted quantiles at plotting
/// positions `(i − 0.5)/R`, the numeric summary of a Q-Q plot.
pub fn qq_correlation(samples: &[f64], params: &GevParams) -> f64 {
    let mut x = samples.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    let r = x.len() as f64;
    let theo: Vec<f64> = (0..x.len()).map(|i| params.inverse_cdf((i as f64 + 0.5) / r)).collect();
    let mx = x.iter().sum::<f64>() / r;
    let mt = theo.iter().sum::<f64>() / r;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&theo) {
        sxy += (a - mx) * (b - mt);
        sxx += (a - mx) * (a - mx);
        syy += (b - mt) * (b - mt);
    }
    sxy / (sxx * syy).sqrt()
}

//! Design matrices, responses and standardization.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns with sample standard deviation at or below this are treated as constant.
pub const CONSTANT_COLUMN_SD: f64 = 1e-12;

/// Affine map applied to one column: `standardized = (raw - mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnScaling {
    pub mean: f64,
    pub scale: f64,
}

/// The `n × p` regressor matrix, stored dense and column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    scaling: Option<Vec<ColumnScaling>>,
    centered: bool,
}

impl DesignMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design must be at least 1x1, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        Ok(Self { values, scaling: None, centered: false })
    }

    /// Builds from row-major data, the natural layout of CSV input.
    pub fn from_rows(n: usize, p: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{p} matrix, got {}",
                n * p,
                row_major.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, p, row_major))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Per-column scaling applied by [`standardize`], if any.
    pub fn column_scaling(&self) -> Option<&[ColumnScaling]> {
        self.scaling.as_deref()
    }

    pub fn is_standardized(&self) -> bool {
        self.scaling.is_some()
    }

    /// True when every column has been mean-centered, either by
    /// standardization or by [`mean_center_projection`].
    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Maps coefficients fitted on the standardized design back to the raw column scale.
    pub fn coefficients_to_original_scale(&self, beta: &[f64]) -> Vec<f64> {
        match &self.scaling {
            Some(sc) => beta.iter().zip(sc).map(|(b, s)| b / s.scale).collect(),
            None => beta.to_vec(),
        }
    }

    /// Undoes standardization, reproducing the raw matrix.
    pub fn unstandardized(&self) -> DMatrix<f64> {
        let mut raw = self.values.clone();
        if let Some(sc) = &self.scaling {
            for (j, s) in sc.iter().enumerate() {
                raw.column_mut(j).iter_mut().for_each(|v| *v = *v * s.scale + s.mean);
            }
        }
        raw
    }
}

/// The observed response `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector(DVector<f64>);

impl ResponseVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response"));
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn check_matches(&self, x: &DesignMatrix) -> Result<()> {
        if self.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "response has length {}, design has {} rows",
                self.len(),
                x.nrows()
            )));
        }
        Ok(())
    }
}

/// Simulation truth: coefficients, their support and the noise level.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub beta0: Vec<f64>,
    pub support: Vec<usize>,
    pub sigma: f64,
}

impl GroundTruth {
    pub fn new(beta0: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        let support = beta0
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        Ok(Self { beta0, support, sigma })
    }

    pub fn beta_min(&self) -> f64 {
        self.support.iter().map(|&j| self.beta0[j].abs()).fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn mean_and_sd(col: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = col.clone().sum::<f64>() / n as f64;
    let ss: f64 = col.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Centers every column and scales it to unit sample standard deviation
/// (divisor `n - 1`). Applying it to an already standardized matrix composes
/// the recorded scalings so the raw matrix stays recoverable.
pub fn standardize(x: &DesignMatrix) -> Result<DesignMatrix> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::DimensionMismatch(format!("standardization needs n >= 2, got {n}")));
    }
    let mut values = x.values.clone();
    let mut scaling = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let (mean, sd) = mean_and_sd(values.column(j).iter().copied(), n);
        if !(sd > CONSTANT_COLUMN_SD) {
            return Err(Error::ConstantColumn(j));
        }
        values.column_mut(j).iter_mut().for_each(|v| *v = (*v - mean) / sd);
        let composed = match &x.scaling {
            Some(prev) => ColumnScaling {
                mean: prev[j].mean + prev[j].scale * mean,
                scale: prev[j].scale * sd,
            },
            None => ColumnScaling { mean, scale: sd },
        };
        scaling.push(composed);
    }
    Ok(DesignMatrix { values, scaling: Some(scaling), centered: true })
}

/// Removes the projection onto the constant vector from every column of `x`
/// and from `y`. No column scaling is recorded.
pub fn mean_center_projection(
    x: &DesignMatrix,
    y: &ResponseVector,
) -> Result<(DesignMatrix, ResponseVector)> {
    y.check_matches(x)?;
    if x.nrows() < 2 {
        return Err(Error::DimensionMismatch("centering needs n >= 2".into()));
    }
    let mut values = x.values.clone();
    for mut col in values.column_iter_mut() {
        let m = col.mean();
        col.iter_mut().for_each(|v| *v -= m);
    }
    let yc = center(y.values());
    Ok((
        DesignMatrix { values, scaling: x.scaling.clone(), centered: true },
        ResponseVector(yc),
    ))
}

pub(crate) fn center(v: &DVector<f64>) -> DVector<f64> {
    let m = v.mean();
    v.map(|e| e - m)
}

//! Order statistics used throughout: medians, MAD and upper quantiles.

use alloc::vec::Vec;

/// Sample median; the midpoint of the two central order statistics for even lengths.
/// Returns `NaN` for an empty sample.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    median_of_sorted(&v)
}

pub(crate) fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `constant · median(|v − median(v)|)`.
pub fn mad(values: &[f64], constant: f64) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    constant * median(&dev)
}

/// 1-based rank `⌈(1−α)R⌉` of the order statistic used as the upper
/// α-quantile of `r` samples, clamped to `1..=r`.
pub fn upper_quantile_rank(r: usize, alpha: f64) -> usize {
    // the small offset keeps e.g. (1 - 0.1) * 500 = 450.00000000000006 at 450
    let k = libm::ceil((1.0 - alpha) * r as f64 - 1e-9) as usize;
    k.clamp(1, r.max(1))
}

/// Upper α-quantile of an ascending sample.
pub fn upper_quantile_sorted(sorted: &[f64], alpha: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted[upper_quantile_rank(sorted.len(), alpha) - 1]
}

pub fn upper_quantile(values: &[f64], alpha: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    upper_quantile_sorted(&v, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[4.0]), 4.0);
        assert_eq!(median(&[1.0, 3.0]), 2.0);
        assert_eq!(median(&[5.0, -5.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(median(&[-1.0, 0.0, 2.0]), 0.0);
    }

    #[test]
    fn mad_of_symmetric_pair() {
        assert_eq!(mad(&[-1.0, 1.0], 1.4826), 1.4826);
        assert_eq!(mad(&[3.0, 3.0, 3.0], 1.4826), 0.0);
    }

    #[test]
    fn quantile_ranks() {
        assert_eq!(upper_quantile_rank(500, 0.1), 450);
        assert_eq!(upper_quantile_rank(10, 0.01), 10);
        assert_eq!(upper_quantile_rank(10, 0.5), 5);
        assert_eq!(upper_quantile_rank(100, 0.05), 95);
        let s: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(upper_quantile_sorted(&s, 0.5), 5.0);
    }
}

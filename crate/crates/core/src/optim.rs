//! Derivative-free minimization (Nelder-Mead simplex).

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values falls below this (relative).
    pub f_tol: f64,
    /// ... and the simplex diameter below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, f_tol: 1e-13, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial simplex offsets `step`.
/// `f` may return `+∞` to mark infeasible points.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let d = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = (vals[d] - vals[0]).abs();
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if vals[0].is_finite() && spread <= opts.f_tol * (1.0 + vals[0].abs()) && diameter <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..d).map(|k| pts[..d].iter().map(|p| p[k]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[d]).map(|(c, w)| c + t * (w - c)).collect() };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                pts[d] = expanded;
                vals[d] = fe;
            } else {
                pts[d] = reflected;
                vals[d] = fr;
            }
            continue;
        }
        if fr < vals[d - 1] {
            pts[d] = reflected;
            vals[d] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[d] {
            let c = along(-0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < vals[d].min(fr) {
            pts[d] = contracted;
            vals[d] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = pts[0].clone();
        for i in 1..=d {
            for k in 0..d {
                pts[i][k] = best[k] + 0.5 * (pts[i][k] - best[k]);
            }
            vals[i] = f(&pts[i]);
        }
    }
    let (ib, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty simplex");
    Minimum { x: pts[ib].clone(), value: vals[ib], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_infeasible_region() {
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::INFINITY } else { x[0] - x[0].ln() };
        let m = nelder_mead(f, &[3.0], &[0.5], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }
}

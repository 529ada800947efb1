//! Convergence-rate estimation from (step, residual) tables.
//!
//! A residual that behaves like `C h^s` shows up as a line of slope `s` in
//! log-log coordinates; we fit that slope by least squares. Slopes are how
//! the library certifies little-o statements numerically: a fitted slope
//! visibly above 1 is taken as evidence that a remainder is `o(h)`.

use crate::error::{Error, Result};

/// Residuals at or below this fraction of the largest residual are treated
/// as exact zeros (converged to roundoff) and excluded from the fit.
const ZERO_FLOOR_REL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct RateFit {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Fitted log-log slope; `f64::INFINITY` when every residual vanished.
    pub slope: f64,
    /// Fitted log intercept (`ln C`); meaningless when `slope` is infinite.
    pub intercept: f64,
    /// Number of (step, residual) pairs actually used.
    pub used: usize,
}

/// Least-squares slope of `ln r` against `ln h`.
///
/// Steps must be strictly decreasing and positive; at least three pairs are
/// required. Zero residuals mean the expansion is exact at that step: if all
/// of them vanish the fit reports an infinite slope, otherwise the vanished
/// pairs are dropped.
pub fn fit_rate(steps: &[f64], residuals: &[f64]) -> Result<RateFit> {
    if steps.len() != residuals.len() {
        return Err(Error::invalid(
            "fit_rate: steps and residuals differ in length",
        ));
    }
    if steps.len() < 3 {
        return Err(Error::invalid(
            "fit_rate: need at least 3 step/residual pairs",
        ));
    }
    if steps.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
        return Err(Error::invalid(
            "fit_rate: steps must be positive and finite",
        ));
    }
    if steps.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid(
            "fit_rate: steps must be strictly decreasing",
        ));
    }
    if residuals.iter().any(|&r| r < 0.0 || !r.is_finite()) {
        return Err(Error::invalid(
            "fit_rate: residuals must be nonnegative and finite",
        ));
    }

    let r_max = residuals.iter().cloned().fold(0.0f64, f64::max);
    let floor = r_max * ZERO_FLOOR_REL;
    let pairs: Vec<(f64, f64)> = steps
        .iter()
        .zip(residuals)
        .filter(|(_, &r)| r > floor)
        .map(|(&h, &r)| (h.ln(), r.ln()))
        .collect();

    if pairs.len() < 2 {
        // Exact (or roundoff-exact) expansion at effectively every step.
        return Ok(RateFit {
            steps: steps.to_vec(),
            residuals: residuals.to_vec(),
            slope: f64::INFINITY,
            intercept: f64::NEG_INFINITY,
            used: pairs.len(),
        });
    }

    let n = pairs.len() as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Numerical("fit_rate: degenerate step set".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;

    Ok(RateFit {
        steps: steps.to_vec(),
        residuals: residuals.to_vec(),
        slope,
        intercept,
        used: pairs.len(),
    })
}

/// Geometric step sequence `h0 * ratio^k`, k = 0..count.
pub fn geometric_steps(h0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| h0 * ratio.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_residuals_fit_slope_two() {
        let steps = geometric_steps(0.1, 0.5, 5);
        let residuals: Vec<f64> = steps.iter().map(|h| 3.0 * h * h).collect();
        let fit = fit_rate(&steps, &residuals).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.intercept, 3.0f64.ln(), epsilon = 1e-9);
        assert_eq!(fit.used, 5);
    }

    #[test]
    fn linear_residuals_fit_slope_one() {
        let steps = geometric_steps(0.2, 0.5, 6);
        let residuals: Vec<f64> = steps.iter().map(|h| 0.7 * h).collect();
        let fit = fit_rate(&steps, &residuals).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn all_zero_residuals_report_infinite_slope() {
        let steps = geometric_steps(0.1, 0.5, 4);
        let fit = fit_rate(&steps, &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(fit.slope.is_infinite());
        assert_eq!(fit.used, 0);
    }

    #[test]
    fn roundoff_level_residuals_are_dropped() {
        let steps = geometric_steps(0.1, 0.5, 5);
        // Two genuine quadratic points, three at relative roundoff.
        let r0 = 1.0e-2;
        let residuals = vec![r0, r0 / 4.0, r0 * 1e-14, r0 * 1e-15, r0 * 1e-16];
        let fit = fit_rate(&steps, &residuals).unwrap();
        assert_eq!(fit.used, 2);
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn invalid_tables_are_rejected() {
        assert!(fit_rate(&[0.1, 0.2, 0.05], &[1.0, 1.0, 1.0]).is_err()); // not decreasing
        assert!(fit_rate(&[0.1, 0.05], &[1.0, 0.5]).is_err()); // too short
        assert!(fit_rate(&[0.1, 0.05, 0.025], &[1.0, -0.5, 0.2]).is_err()); // negative
    }
}

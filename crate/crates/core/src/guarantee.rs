//! False-positive guarantee machinery.
//!
//! Sketch overestimation is bounded: with `cols = ceil(e / epsilon)` rows of
//! `rows = ceil(ln(1 / delta))` hashers, an estimate exceeds the true count
//! by more than `epsilon` times the sketch total with probability at most
//! `delta`. Subtracting that error budget from the estimate gives an
//! adjusted count whose G-statistic is stochastically dominated by the true
//! one, so thresholding the adjusted statistic at the `1 - delta` quantile
//! of a chi-squared distribution with one degree of freedom keeps the
//! false-positive probability below `delta`.

use thiserror::Error;

use crate::detector::gtest_score;
use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuaranteeError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    DeltaOutOfRange(f64),
    #[error("probability must lie in (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),
}

/// Error budget `epsilon` and failure probability `delta` of the sketches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteeConfig {
    epsilon: f64,
    delta: f64,
}

impl GuaranteeConfig {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, GuaranteeError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GuaranteeError::EpsilonOutOfRange(epsilon));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(GuaranteeError::DeltaOutOfRange(delta));
        }
        Ok(GuaranteeConfig { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Sketch geometry `(rows, cols)` meeting this budget:
    /// `rows = ceil(ln(1/delta))`, `cols = ceil(e/epsilon)`.
    pub fn size(&self) -> (usize, usize) {
        let rows = ceil_snapped(-self.delta.ln()).max(1.0) as usize;
        let cols = ceil_snapped(std::f64::consts::E / self.epsilon) as usize;
        (rows, cols)
    }
}

/// Sketch geometry `(rows, cols)` for an `(epsilon, delta)` budget.
pub fn size_from_eps_delta(cfg: &GuaranteeConfig) -> (usize, usize) {
    cfg.size()
}

/// Ceiling that forgives float roundoff just above an integer, so exact
/// boundary cases like `delta = 1/e` keep their analytic size.
fn ceil_snapped(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// Estimate minus its worst-case sketch error, clamped at zero:
/// `max(0, c_hat - epsilon * total)`.
pub fn adjusted_count<F: Real>(c_hat: F, total: F, epsilon: F) -> F {
    (c_hat - epsilon * total).max(F::zero())
}

/// G-statistic of the adjusted count against the (over-estimated)
/// accumulated count.
pub fn adjusted_statistic<F: Real>(c_hat: F, total: F, a_hat: F, t: F, epsilon: F) -> F {
    gtest_score(adjusted_count(c_hat, total, epsilon), a_hat, t)
}

/// `p`-quantile of the chi-squared distribution with 1 degree of freedom,
/// computed as the squared standard-normal quantile at `(1 + p) / 2`.
/// Accurate to well under 1e-6 absolute.
pub fn chi2_quantile_1dof(p: f64) -> Result<f64, GuaranteeError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GuaranteeError::ProbabilityOutOfRange(p));
    }
    let z = normal_quantile((1.0 + p) / 2.0);
    Ok(z * z)
}

/// Decision threshold for a false-positive budget `delta`:
/// the `1 - delta` chi-squared quantile.
pub fn threshold(delta: f64) -> Result<f64, GuaranteeError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GuaranteeError::DeltaOutOfRange(delta));
    }
    chi2_quantile_1dof(1.0 - delta)
}

/// True iff the adjusted statistic exceeds the `1 - delta` threshold.
///
/// `delta` must lie in (0, 1).
pub fn flag(g_tilde: f64, delta: f64) -> bool {
    debug_assert!(delta > 0.0 && delta < 1.0);
    g_tilde > chi2_quantile_1dof(1.0 - delta).expect("delta checked by caller")
}

/// Standard-normal quantile: rational approximation refined by one Newton
/// step on the normal CDF.
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let x = acklam_quantile(p);
    // Newton: x <- x - (Phi(x) - p) / phi(x).
    let err = normal_cdf(x) - p;
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 0.0 {
        x - err / pdf
    } else {
        x
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function, fractional error below 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Rational approximation of the normal quantile (relative error ~1.2e-9).
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

//! Ricker wavelet forcing and its bilateral Laplace transform.
//!
//! The wavelet is the second derivative of a Gaussian pulse
//! g(t) = -(2/α²)·exp(-α²(t-t₀)²/4), normalized so the peak value is one.
//! Derivatives and the transform are closed-form; the Hermite factors keep
//! the derivative expressions stable far from the peak.

use crate::{Error, Result};
use num_complex::Complex64;

/// Exponent ceiling beyond which exp() would overflow f64.
const EXP_OVERFLOW_LIMIT: f64 = 700.0;

#[derive(Clone, Copy, Debug)]
pub struct RickerParams {
    pub alpha: f64,
    pub t0: f64,
}

impl RickerParams {
    pub fn new(alpha: f64, t0: f64) -> Result<RickerParams> {
        if !(alpha > 0.0) || !alpha.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ricker parameters need finite t0 and alpha > 0, got alpha={alpha}, t0={t0}"
            )));
        }
        Ok(RickerParams { alpha, t0 })
    }

    /// q(t) = (1 - α²(t-t₀)²/2)·exp(-α²(t-t₀)²/4); q(t₀) = 1.
    pub fn eval(&self, t: f64) -> f64 {
        let x = 0.5 * self.alpha * (t - self.t0);
        (1.0 - 2.0 * x * x) * (-x * x).exp()
    }

    /// q'(t) = (α/4)·H₃(x)·exp(-x²) with x = α(t-t₀)/2.
    pub fn deriv1(&self, t: f64) -> f64 {
        let x = 0.5 * self.alpha * (t - self.t0);
        let h3 = 8.0 * x * x * x - 12.0 * x;
        0.25 * self.alpha * h3 * (-x * x).exp()
    }

    /// q''(t) = -(α²/8)·H₄(x)·exp(-x²); q''(t₀) = -3α²/2.
    pub fn deriv2(&self, t: f64) -> f64 {
        let x = 0.5 * self.alpha * (t - self.t0);
        let x2 = x * x;
        let h4 = 16.0 * x2 * x2 - 48.0 * x2 + 12.0;
        -self.alpha * self.alpha / 8.0 * h4 * (-x2).exp()
    }

    /// Bilateral transform of the Gaussian pulse:
    /// ℬ{g}(s) = -(4√π/α³)·exp((s/α)² - s·t₀).
    pub fn laplace_g(&self, s: Complex64) -> Result<Complex64> {
        let w = (s / self.alpha) * (s / self.alpha) - s * self.t0;
        if w.re > EXP_OVERFLOW_LIMIT {
            return Err(Error::Overflow(format!(
                "transform exponent {:.1} exceeds the floating point range at s = {s}",
                w.re
            )));
        }
        let c = -4.0 * std::f64::consts::PI.sqrt() / self.alpha.powi(3);
        Ok(c * w.exp())
    }

    /// ℬ{q''}(s) = s⁴·ℬ{g}(s): differentiation in time is multiplication by
    /// (-s) under the bilateral transform and q = g''.
    pub fn laplace_d2q(&self, s: Complex64) -> Result<Complex64> {
        Ok(s * s * s * s * self.laplace_g(s)?)
    }

    /// Modulus envelope of ℬ{q''}: equals |ℬ{q''}(s)| up to rounding, and is
    /// the decay profile the sampling plan is tuned to.
    pub fn transform_envelope(&self, s: Complex64) -> f64 {
        let c = 4.0 * std::f64::consts::PI.sqrt() / self.alpha.powi(3);
        let re2 = s.re * s.re;
        let im2 = s.im * s.im;
        c * (-s.re * self.t0 + re2 / (self.alpha * self.alpha)).exp()
            * s.norm().powi(4)
            * (-im2 / (self.alpha * self.alpha)).exp()
    }
}

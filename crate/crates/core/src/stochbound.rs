//! Mean-square and high-probability bounds on `‖X_t − x_t‖_{2,P}`.
//!
//! With `μ_{2,P}(D_x f) ≤ c_P` and `tr(σᵀPσ) ≤ d_P`:
//!
//! ```text
//! E‖X_t − x_t‖²_{2,P} ≤ d_P (e^{2 c_P t} − 1) / (2 c_P)
//! P(‖X_t − x_t‖_{2,P} ≤ sqrt(E-bound / δ)) ≥ 1 − δ
//! ```

use crate::certify::ContractionCertificate;
use crate::{Error, Result};

/// Below this value of `|c_P|·t` the growth factor uses its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// `(e^{2ct} − 1) / (2c)`, continuous through `c = 0`.
pub fn growth_factor(c: f64, t: f64) -> f64 {
    if (c * t).abs() < SERIES_THRESHOLD {
        t + c * t * t + (2.0 / 3.0) * c * c * t * t * t
    } else {
        (2.0 * c * t).exp_m1() / (2.0 * c)
    }
}

/// Upper bound on `E‖X_t − x_t‖²_{2,P}`.
pub fn expectation_bound(c_p: f64, d_p: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::arg("time must be nonnegative"));
    }
    if !(d_p >= 0.0) {
        return Err(Error::arg("d_P must be nonnegative"));
    }
    if !c_p.is_finite() {
        return Err(Error::arg("c_P must be finite"));
    }
    Ok((d_p * growth_factor(c_p, t)).max(0.0))
}

/// Radius `ρ(t,δ) = sqrt(expectation_bound / δ)` of the deviation ball.
pub fn radius(c_p: f64, d_p: f64, t: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok((expectation_bound(c_p, d_p, t)? / delta).sqrt())
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::arg("delta must lie in (0, 1]"))
    }
}

/// Per-checkpoint level for simultaneous coverage of `k` times (union bound).
pub fn bonferroni(delta: f64, checkpoints: usize) -> Result<f64> {
    check_delta(delta)?;
    if checkpoints == 0 {
        return Err(Error::arg("need at least one checkpoint"));
    }
    Ok(delta / checkpoints as f64)
}

/// A certificate paired with a probability level.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationBound {
    cert: ContractionCertificate,
    delta: f64,
}

impl DeviationBound {
    pub fn new(cert: ContractionCertificate, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { cert, delta })
    }

    pub fn certificate(&self) -> &ContractionCertificate {
        &self.cert
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mean_square(&self, t: f64) -> Result<f64> {
        expectation_bound(self.cert.c_p(), self.cert.d_p(), t)
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        radius(self.cert.c_p(), self.cert.d_p(), t, self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time() {
        for (c, d) in [(-0.5, 0.0127), (0.0, 1.0), (2.0, 3.0)] {
            assert_eq!(expectation_bound(c, d, 0.0).unwrap(), 0.0);
            assert_eq!(radius(c, d, 0.0, 0.1).unwrap(), 0.0);
        }
    }

    #[test]
    fn contracting_asymptote() {
        let v = expectation_bound(-0.5, 0.0127, 200.0).unwrap();
        assert!((v - 0.0127).abs() < 1e-15);
        assert!(expectation_bound(-0.5, 0.0127, 7.0).unwrap() < 0.0127);
    }

    #[test]
    fn zero_rate_limit() {
        assert_eq!(expectation_bound(0.0, 1.0, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn radius_delta_one() {
        let r = radius(-0.5, 0.0127, 1.0, 1.0).unwrap();
        assert!((r - (0.0127 * (1.0 - (-1.0_f64).exp())).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn argument_errors() {
        assert!(expectation_bound(-0.5, 1.0, -1.0).is_err());
        assert!(expectation_bound(-0.5, -1.0, 1.0).is_err());
        assert!(radius(-0.5, 1.0, 1.0, 0.0).is_err());
        assert!(radius(-0.5, 1.0, 1.0, 1.5).is_err());
        assert!(radius(-0.5, 1.0, 1.0, f64::NAN).is_err());
        assert!(bonferroni(0.01, 0).is_err());
        assert!((bonferroni(0.03, 3).unwrap() - 0.01).abs() < 1e-18);
    }

    #[test]
    fn nondecreasing_in_time() {
        for c in [-2.0, -0.5, -1e-6, 0.0, 1e-6, 0.3] {
            let mut prev = 0.0;
            for k in 0..200 {
                let v = expectation_bound(c, 0.5, k as f64 * 0.05).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }
}

//! Market model shared by the simulator, the integral-equation solver and the
//! hedging layer: per-regime rates, drifts, dividend yields and the volatility
//! profile, plus the (t, s, regime, age) evaluation point.

use crate::bsm::VolProfile;
use crate::error::{Error, ValidationError};
use crate::scalar::Real;

/// Per-regime market parameters. Immutable after construction.
#[derive(Debug, Clone)]
pub struct RegimeModel<F> {
    rate: Vec<F>,
    drift: Vec<F>,
    dividend: Vec<F>,
    vol: VolProfile<F>,
}

impl<F: Real> RegimeModel<F> {
    /// Validates r(i) > 0 and σ(·,i) > 0 for every state.
    pub fn new(rate: Vec<F>, drift: Vec<F>, dividend: Vec<F>, vol: VolProfile<F>) -> Result<Self, Error> {
        let k = rate.len();
        let mut problems = Vec::new();
        if k == 0 {
            problems.push(ValidationError::Shape("at least one regime required".into()));
        }
        if drift.len() != k || dividend.len() != k || vol.state_count() != k {
            problems.push(ValidationError::Shape(format!(
                "regime vectors disagree: r has {k}, mu {}, kappa {}, vol {}",
                drift.len(),
                dividend.len(),
                vol.state_count()
            )));
        }
        for (i, &r) in rate.iter().enumerate() {
            if !(r > F::zero()) {
                problems.push(ValidationError::NonPositiveRate {
                    state: i,
                    value: r.as_f64(),
                });
            }
        }
        problems.extend(vol.validate());
        if problems.is_empty() {
            Ok(Self {
                rate,
                drift,
                dividend,
                vol,
            })
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Convenience constructor with zero drift adjustment and zero dividends.
    pub fn risk_neutral_only(rate: Vec<F>, vol: VolProfile<F>) -> Result<Self, Error> {
        let k = rate.len();
        let drift = rate.clone();
        RegimeModel::new(rate, drift, vec![F::zero(); k], vol)
    }

    pub fn state_count(&self) -> usize {
        self.rate.len()
    }

    /// Short rate r(i).
    pub fn rate(&self, i: usize) -> F {
        self.rate[i]
    }

    /// Physical drift μ(i).
    pub fn drift(&self, i: usize) -> F {
        self.drift[i]
    }

    /// Dividend payout rate κ(i).
    pub fn dividend(&self, i: usize) -> F {
        self.dividend[i]
    }

    /// Volatility σ(t, i).
    pub fn vol(&self, i: usize, t: F) -> F {
        self.vol.vol_at(i, t)
    }

    /// The volatility profile itself.
    pub fn vol_profile(&self) -> &VolProfile<F> {
        &self.vol
    }

    /// Integrated variance `∫_a^b σ²(u, i) du`.
    pub fn integrated_var(&self, i: usize, a: F, b: F) -> F {
        self.vol.integrated_var(i, a, b)
    }
}

/// Evaluation point (t, s, regime, age).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState<F> {
    pub t: F,
    pub s: F,
    pub regime: usize,
    pub age: F,
}

impl<F: Real> MarketState<F> {
    pub fn new(t: F, s: F, regime: usize, age: F) -> Self {
        Self { t, s, regime, age }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_rate() {
        let vol = VolProfile::constant(vec![0.2, 0.3]);
        let err = RegimeModel::new(vec![0.0, 0.05], vec![0.1, 0.1], vec![0.0, 0.0], vol).unwrap_err();
        assert!(matches!(err, Error::Validation(ref l)
            if matches!(l[0], ValidationError::NonPositiveRate { state: 0, .. })));
    }

    #[test]
    fn rejects_zero_vol() {
        let vol = VolProfile::constant(vec![0.2, 0.0]);
        let err = RegimeModel::new(vec![0.05, 0.05], vec![0.1, 0.1], vec![0.0, 0.0], vol).unwrap_err();
        assert!(matches!(err, Error::Validation(ref l)
            if matches!(l[0], ValidationError::NonPositiveVol { state: 1, .. })));
    }

    #[test]
    fn rejects_length_mismatch() {
        let vol = VolProfile::constant(vec![0.2]);
        assert!(RegimeModel::new(vec![0.05, 0.07], vec![0.1, 0.1], vec![0.0, 0.0], vol).is_err());
    }
}

//! Standard normal density and distribution function.
//!
//! The CDF uses Hart/West rational approximations (double precision,
//! absolute error below 1e-15 in f64).

use crate::scalar::Real;

/// Standard normal density.
pub fn pdf<F: Real>(x: F) -> F {
    F::of(1.0 / (2.0 * std::f64::consts::PI).sqrt()) * (-(x * x) * F::of(0.5)).exp()
}

/// `Φ(a) - Φ(b)` evaluated through the smaller tail, so the difference stays
/// accurate when both arguments are far in the same tail.
pub fn cdf_diff<F: Real>(a: F, b: F) -> F {
    if a + b > F::zero() {
        cdf(-b) - cdf(-a)
    } else {
        cdf(a) - cdf(b)
    }
}

/// Standard normal cumulative distribution function.
pub fn cdf<F: Real>(x: F) -> F {
    let xabs = x.abs();
    if xabs > F::of(37.0) {
        return if x > F::zero() { F::one() } else { F::zero() };
    }
    let e = (-(xabs * xabs) * F::of(0.5)).exp();
    let tail = if xabs < F::of(7.071_067_811_865_475) {
        let mut num = F::of(3.526_249_659_989_11e-2) * xabs + F::of(0.700_383_064_443_688);
        num = num * xabs + F::of(6.373_962_203_531_65);
        num = num * xabs + F::of(33.912_866_078_383);
        num = num * xabs + F::of(112.079_291_497_871);
        num = num * xabs + F::of(221.213_596_169_931);
        num = num * xabs + F::of(220.206_867_912_376);
        let mut den = F::of(8.838_834_764_831_84e-2) * xabs + F::of(1.755_667_163_182_64);
        den = den * xabs + F::of(16.064_177_579_207);
        den = den * xabs + F::of(86.780_732_202_946_1);
        den = den * xabs + F::of(296.564_248_779_674);
        den = den * xabs + F::of(637.333_633_378_831);
        den = den * xabs + F::of(793.826_512_519_948);
        den = den * xabs + F::of(440.413_735_824_752);
        e * num / den
    } else {
        let mut build = xabs + F::of(0.65);
        build = xabs + F::of(4.0) / build;
        build = xabs + F::of(3.0) / build;
        build = xabs + F::of(2.0) / build;
        build = xabs + F::one() / build;
        e / build / F::of(2.506_628_274_631_000_5)
    };
    if x > F::zero() {
        F::one() - tail
    } else {
        tail
    }
}

//! Small polynomial helpers used by the rate machinery.
//!
//! Coefficients are stored in ascending order of the power: `c[0] + c[1] y + ...`.

use crate::scalar::Real;

/// Evaluates a polynomial at `y` by Horner's rule.
pub fn eval<F: Real>(coeff: &[F], y: F) -> F {
    let mut acc = F::zero();
    for &c in coeff.iter().rev() {
        acc = acc * y + c;
    }
    acc
}

/// Evaluates the antiderivative with zero constant term, i.e. `∫_0^y p(u) du`.
pub fn eval_integral<F: Real>(coeff: &[F], y: F) -> F {
    let mut acc = F::zero();
    for (p, &c) in coeff.iter().enumerate().rev() {
        acc = acc * y + c / F::of_usize(p + 1);
    }
    acc * y
}

/// Minimum of the polynomial over `[0, hi]` together with its location.
///
/// Exact for degree <= 1 (endpoint evaluation); otherwise dense sampling.
/// Good enough for construction-time sign checks of low-degree rate families.
pub fn min_on_interval<F: Real>(coeff: &[F], hi: F) -> (F, F) {
    let degree = coeff.len().saturating_sub(1);
    if degree <= 1 {
        let at0 = eval(coeff, F::zero());
        let at1 = eval(coeff, hi);
        return if at0 <= at1 { (at0, F::zero()) } else { (at1, hi) };
    }
    let samples = 4096usize;
    let mut best = (eval(coeff, F::zero()), F::zero());
    for q in 1..=samples {
        let y = hi * F::of_usize(q) / F::of_usize(samples);
        let v = eval(coeff, y);
        if v < best.0 {
            best = (v, y);
        }
    }
    best
}

/// Maximum of the polynomial over `[0, hi]`; sampling-based like [`min_on_interval`].
pub fn max_on_interval<F: Real>(coeff: &[F], hi: F) -> F {
    let neg: Vec<F> = coeff.iter().map(|&c| -c).collect();
    -min_on_interval(&neg, hi).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_direct() {
        // 2 - y + 3 y^2 at y = 2 -> 2 - 2 + 12 = 12
        assert_eq!(eval(&[2.0, -1.0, 3.0], 2.0), 12.0);
    }

    #[test]
    fn integral_of_linear() {
        // ∫_0^3 (1 + 2u) du = 3 + 9 = 12
        assert_eq!(eval_integral(&[1.0, 2.0], 3.0), 12.0);
    }

    #[test]
    fn min_of_linear_is_at_endpoint() {
        let (v, at) = min_on_interval(&[1.0, -0.5], 4.0);
        assert_eq!(v, -1.0);
        assert_eq!(at, 4.0);
    }

    #[test]
    fn min_of_quadratic_found_inside() {
        // (y-1)^2 = 1 - 2y + y^2, min 0 at y=1
        let (v, at) = min_on_interval(&[1.0f64, -2.0, 1.0], 4.0);
        assert!(v.abs() < 1e-6);
        assert!((at - 1.0f64).abs() < 1e-2);
    }
}

//! Quadrature rules: Gauss–Legendre nodes and adaptive Simpson integration.

use crate::error::Error;
use crate::scalar::Real;

/// Gauss–Legendre rule of order `n` on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre recurrence; the rule
/// is exact for polynomials of degree `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<F> {
    pub nodes: Vec<F>,
    pub weights: Vec<F>,
}

impl<F: Real> GaussLegendre<F> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![F::zero(); n];
        let mut weights = vec![F::zero(); n];
        let nf = F::of_usize(n);
        for i in 0..n {
            // Tricomi initial guess, then Newton.
            let mut x = F::of((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
            let mut deriv = F::one();
            for _ in 0..100 {
                let (p, dp) = legendre_with_deriv(n, x);
                deriv = dp;
                let step = p / dp;
                x = x - step;
                if step.abs() <= F::of(1e-16) {
                    break;
                }
            }
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = F::of(2.0) / ((F::one() - x * x) * deriv * deriv);
        }
        let _ = nf;
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: F, b: F, mut f: impl FnMut(F) -> F) -> F {
        let half = (b - a) * F::of(0.5);
        let mid = (b + a) * F::of(0.5);
        let mut acc = F::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_deriv<F: Real>(n: usize, x: F) -> (F, F) {
    let mut p0 = F::one();
    let mut p1 = x;
    for m in 2..=n {
        let mf = F::of_usize(m);
        let p2 = ((F::of(2.0) * mf - F::one()) * x * p1 - (mf - F::one()) * p0) / mf;
        p0 = p1;
        p1 = p2;
    }
    let dp = F::of_usize(n) * (x * p1 - p0) / (x * x - F::one());
    (p1, dp)
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
///
/// Returns a numeric error carrying the residual estimate when the recursion
/// depth limit is reached before the tolerance is met.
pub fn adaptive_simpson<F: Real>(
    f: &impl Fn(F) -> F,
    a: F,
    b: F,
    tol: F,
) -> Result<F, Error> {
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * F::of(0.5);
    let fm = f(m);
    let whole = simpson_panel(a, b, fa, fm, fb);
    let mut worst = F::zero();
    // forcing the first levels of subdivision guards against integrands whose
    // support is much narrower than the interval
    let v = simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48, 8, &mut worst);
    if worst > F::zero() {
        return Err(Error::Numeric {
            what: "adaptive Simpson quadrature did not converge".to_string(),
            residual: worst.as_f64(),
        });
    }
    Ok(v)
}

fn simpson_panel<F: Real>(a: F, b: F, fa: F, fm: F, fb: F) -> F {
    (b - a) / F::of(6.0) * (fa + F::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Real>(
    f: &impl Fn(F) -> F,
    a: F,
    b: F,
    fa: F,
    fm: F,
    fb: F,
    whole: F,
    tol: F,
    depth: u32,
    force: u32,
    worst: &mut F,
) -> F {
    let m = (a + b) * F::of(0.5);
    let lm = (a + m) * F::of(0.5);
    let rm = (m + b) * F::of(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if force == 0 && delta.abs() <= F::of(15.0) * tol {
        return left + right + delta / F::of(15.0);
    }
    if depth == 0 {
        let err = delta.abs() / F::of(15.0);
        if err > *worst {
            *worst = err;
        }
        return left + right + delta / F::of(15.0);
    }
    let half_tol = tol * F::of(0.5);
    let next_force = force.saturating_sub(1);
    simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1, next_force, worst)
        + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1, next_force, worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::<f64>::new(8);
        // degree 15 monomial over [0,1]: 1/16
        let v = gl.integrate(0.0, 1.0, |x| x.powi(15));
        assert_relative_eq!(v, 1.0 / 16.0, epsilon = 1e-13);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1usize, 2, 5, 16, 64] {
            let gl = GaussLegendre::<f64>::new(n);
            let total: f64 = gl.weights.iter().sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn simpson_handles_exponential() {
        let v = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 30.0, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0 - (-30.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn simpson_on_f32() {
        let v = adaptive_simpson(&|x: f32| x * x, 0.0, 3.0, 1e-4).unwrap();
        assert!((v - 9.0).abs() < 1e-3);
    }
}

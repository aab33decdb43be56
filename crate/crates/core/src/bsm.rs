//! Per-regime Black–Scholes building blocks: the volatility profile with its
//! weekly seasonality variant, payoff descriptions, the lognormal transition
//! density, closed-form vanilla prices and deltas, and reflection-principle
//! barrier formulas for constant-volatility regimes.

use crate::error::{Error, ValidationError};
use crate::market::RegimeModel;
use crate::numeric::{normal, quad};
use crate::scalar::Real;

/// Deterministic volatility profile σ(t, i).
#[derive(Debug, Clone)]
pub enum VolProfile<F> {
    /// Time-independent per-state volatility.
    Constant { sigma: Vec<F> },
    /// Weekly seasonality: σ(t,i) = σ0(i)·[α + 4(1-α)(frac(t)^β - ½)²] with
    /// frac(t) = t mod 1. Peaks at the start of each period, bottoms out at
    /// t = (½)^{1/β}, range [α σ0, σ0].
    Monday { sigma0: Vec<F>, alpha: F, beta: F },
}

impl<F: Real> VolProfile<F> {
    pub fn constant(sigma: Vec<F>) -> Self {
        VolProfile::Constant { sigma }
    }

    pub fn monday(sigma0: Vec<F>, alpha: F, beta: F) -> Self {
        VolProfile::Monday { sigma0, alpha, beta }
    }

    pub fn state_count(&self) -> usize {
        match self {
            VolProfile::Constant { sigma } => sigma.len(),
            VolProfile::Monday { sigma0, .. } => sigma0.len(),
        }
    }

    pub(crate) fn validate(&self) -> Vec<ValidationError> {
        let mut problems = Vec::new();
        let bases = match self {
            VolProfile::Constant { sigma } => sigma,
            VolProfile::Monday { sigma0, alpha, beta } => {
                if !(*alpha > F::zero() && *alpha < F::one()) {
                    problems.push(ValidationError::Parameter {
                        name: "alpha",
                        value: alpha.as_f64(),
                    });
                }
                if !(*beta > F::zero()) {
                    problems.push(ValidationError::Parameter {
                        name: "beta",
                        value: beta.as_f64(),
                    });
                }
                sigma0
            }
        };
        for (i, &s) in bases.iter().enumerate() {
            if !(s > F::zero()) {
                problems.push(ValidationError::NonPositiveVol {
                    state: i,
                    value: s.as_f64(),
                });
            }
        }
        problems
    }

    /// σ(t, i).
    pub fn vol_at(&self, i: usize, t: F) -> F {
        match self {
            VolProfile::Constant { sigma } => sigma[i],
            VolProfile::Monday { sigma0, alpha, beta } => {
                sigma0[i] * monday_shape(*alpha, *beta, t.fract_nonneg())
            }
        }
    }

    /// `∫_a^b σ²(u, i) du`, closed form when constant, piecewise Simpson
    /// (split at period boundaries, absolute tolerance 1e-12) otherwise.
    pub fn integrated_var(&self, i: usize, a: F, b: F) -> F {
        if b <= a {
            return F::zero();
        }
        match self {
            VolProfile::Constant { sigma } => sigma[i] * sigma[i] * (b - a),
            VolProfile::Monday { sigma0, alpha, beta } => {
                let base = sigma0[i] * sigma0[i];
                base * shape_sq_integral(*alpha, *beta, a, b)
            }
        }
    }

    /// Per-state volatilities when the profile is time-independent.
    pub fn constant_sigmas(&self) -> Option<&[F]> {
        match self {
            VolProfile::Constant { sigma } => Some(sigma),
            VolProfile::Monday { .. } => None,
        }
    }
}

fn monday_shape<F: Real>(alpha: F, beta: F, frac: F) -> F {
    let half = F::of(0.5);
    let d = frac.powf(beta) - half;
    alpha + F::of(4.0) * (F::one() - alpha) * d * d
}

fn shape_sq_integral<F: Real>(alpha: F, beta: F, a: F, b: F) -> F {
    // integrate g² period by period; g is continuous but kinked at integers
    let g2 = |u: F| {
        let v = monday_shape(alpha, beta, u.fract_nonneg());
        v * v
    };
    let mut acc = F::zero();
    let mut lo = a;
    while lo < b {
        let next_edge = lo.floor() + F::one();
        let hi = if next_edge < b { next_edge } else { b };
        acc = acc
            + quad::adaptive_simpson(&g2, lo, hi, F::of(1e-13))
                .expect("seasonal volatility integrand is smooth");
        lo = hi;
    }
    acc
}

trait FractNonneg {
    fn fract_nonneg(self) -> Self;
}

impl<F: Real> FractNonneg for F {
    fn fract_nonneg(self) -> F {
        let f = self - self.floor();
        if f < F::zero() {
            f + F::one()
        } else {
            f
        }
    }
}

/// Claim payoff at maturity; non-negative with at most linear growth.
#[derive(Debug, Clone)]
pub enum PayoffSpec<F> {
    Call { strike: F },
    Put { strike: F },
    Constant { value: F },
    /// Piecewise-linear table; extrapolation beyond the table is linear with
    /// the boundary slopes, floored at zero.
    Tabulated { x: Vec<F>, value: Vec<F> },
}

impl<F: Real> PayoffSpec<F> {
    pub fn call(strike: F) -> Result<Self, Error> {
        if strike > F::zero() {
            Ok(PayoffSpec::Call { strike })
        } else {
            Err(Error::validation(ValidationError::Parameter {
                name: "strike",
                value: strike.as_f64(),
            }))
        }
    }

    pub fn put(strike: F) -> Result<Self, Error> {
        if strike > F::zero() {
            Ok(PayoffSpec::Put { strike })
        } else {
            Err(Error::validation(ValidationError::Parameter {
                name: "strike",
                value: strike.as_f64(),
            }))
        }
    }

    pub fn constant(value: F) -> Result<Self, Error> {
        if value >= F::zero() {
            Ok(PayoffSpec::Constant { value })
        } else {
            Err(Error::validation(ValidationError::Parameter {
                name: "value",
                value: value.as_f64(),
            }))
        }
    }

    pub fn tabulated(x: Vec<F>, value: Vec<F>) -> Result<Self, Error> {
        if x.len() != value.len() || x.len() < 2 {
            return Err(Error::validation(ValidationError::Shape(
                "payoff table needs matching x/value arrays with at least 2 rows".into(),
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || x[0] <= F::zero() {
            return Err(Error::validation(ValidationError::Shape(
                "payoff table abscissae must be positive and strictly increasing".into(),
            )));
        }
        if value.iter().any(|&v| v < F::zero()) {
            return Err(Error::validation(ValidationError::Shape(
                "payoff table values must be non-negative".into(),
            )));
        }
        Ok(PayoffSpec::Tabulated { x, value })
    }

    /// K(s).
    pub fn eval(&self, s: F) -> F {
        match self {
            PayoffSpec::Call { strike } => (s - *strike).max(F::zero()),
            PayoffSpec::Put { strike } => (*strike - s).max(F::zero()),
            PayoffSpec::Constant { value } => *value,
            PayoffSpec::Tabulated { x, value } => {
                let n = x.len();
                if s <= x[0] {
                    let slope = (value[1] - value[0]) / (x[1] - x[0]);
                    return (value[0] + slope * (s - x[0])).max(F::zero());
                }
                if s >= x[n - 1] {
                    let slope = (value[n - 1] - value[n - 2]) / (x[n - 1] - x[n - 2]);
                    return (value[n - 1] + slope * (s - x[n - 1])).max(F::zero());
                }
                let mut lo = 0usize;
                let mut hi = n - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if x[mid] <= s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let w = (s - x[lo]) / (x[hi] - x[lo]);
                value[lo] + w * (value[hi] - value[lo])
            }
        }
    }

    /// Constants (k1, k2) with `K(s) <= k1 + k2 s` for all s >= 0.
    pub fn growth_bounds(&self) -> (F, F) {
        match self {
            PayoffSpec::Call { .. } => (F::zero(), F::one()),
            PayoffSpec::Put { strike } => (*strike, F::zero()),
            PayoffSpec::Constant { value } => (*value, F::zero()),
            PayoffSpec::Tabulated { x, value } => {
                let n = x.len();
                let right_slope =
                    ((value[n - 1] - value[n - 2]) / (x[n - 1] - x[n - 2])).max(F::zero());
                let mut k1 = F::zero();
                for (xi, vi) in x.iter().zip(value) {
                    k1 = k1.max(*vi - right_slope * *xi);
                }
                // left extrapolation is bounded by the value at x[0] plus slope·x[0]
                let left_slope = (value[1] - value[0]) / (x[1] - x[0]);
                k1 = k1.max(value[0] + left_slope.abs() * x[0]);
                (k1, right_slope)
            }
        }
    }
}

/// Standardized log-price deviation
/// `L = (ln(x/s) - ∫_t^{t+v} (r - σ²/2) du) / sqrt(∫_t^{t+v} σ² du)`;
/// zero exactly at the risk-neutral median of the transition.
pub fn log_score<F: Real>(model: &RegimeModel<F>, i: usize, t: F, x: F, s: F, v: F) -> F {
    let ivar = model.integrated_var(i, t, t + v);
    let sbar = ivar.sqrt();
    ((x / s).ln() - (model.rate(i) * v - ivar * F::of(0.5))) / sbar
}

/// Lognormal transition density α(x; t, s, i, v) of the asset after holding
/// regime i for the whole window (t, t+v).
pub fn transition_density<F: Real>(model: &RegimeModel<F>, i: usize, t: F, x: F, s: F, v: F) -> F {
    let ivar = model.integrated_var(i, t, t + v);
    let sbar = ivar.sqrt();
    let l = log_score(model, i, t, x, s, v);
    normal::pdf(l) / (x * sbar)
}

/// Quadrature nodes for `∫ h(x) α(x; ·) dx` written in the standardized
/// variable: the integral becomes `Σ w · h(exp(m + σ̄ l))` with the returned
/// pairs `(l, w)`, where `m` is the mean log price. Tail mass beyond
/// `trunc_sd` standard deviations is dropped.
pub(crate) fn lognormal_nodes<F: Real>(
    gl: &quad::GaussLegendre<F>,
    trunc_sd: F,
) -> Vec<(F, F)> {
    gl.nodes
        .iter()
        .zip(&gl.weights)
        .map(|(&g, &w)| {
            let l = trunc_sd * g;
            (l, w * trunc_sd * normal::pdf(l))
        })
        .collect()
}

/// Mean log price `ln s + ∫_t^{t+v} (r - σ²/2) du` and total deviation σ̄.
pub(crate) fn log_moments<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    t: F,
    s: F,
    v: F,
) -> (F, F) {
    let ivar = model.integrated_var(i, t, t + v);
    let sbar = ivar.sqrt();
    (s.ln() + model.rate(i) * v - ivar * F::of(0.5), sbar)
}

/// Per-regime Black–Scholes–Merton value of the payoff at (t, s) with
/// maturity `maturity`, i.e. the discounted lognormal expectation.
pub fn bs_price<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    t: F,
    s: F,
    maturity: F,
    payoff: &PayoffSpec<F>,
) -> F {
    let v = maturity - t;
    if v <= F::zero() {
        return payoff.eval(s);
    }
    let disc = (-model.rate(i) * v).exp();
    let ivar = model.integrated_var(i, t, maturity);
    let sbar = ivar.sqrt();
    match payoff {
        PayoffSpec::Call { strike } => call_value(s, *strike, model.rate(i) * v, sbar),
        PayoffSpec::Put { strike } => {
            // parity-consistent closed form
            let k = *strike;
            let d1 = ((s / k).ln() + model.rate(i) * v + ivar * F::of(0.5)) / sbar;
            let d2 = d1 - sbar;
            k * disc * normal::cdf(-d2) - s * normal::cdf(-d1)
        }
        PayoffSpec::Constant { value } => *value * disc,
        PayoffSpec::Tabulated { .. } => {
            let gl = quad::GaussLegendre::new(64);
            let nodes = lognormal_nodes(&gl, F::of(8.0));
            let (m, sbar) = log_moments(model, i, t, s, v);
            let mut acc = F::zero();
            for &(l, w) in &nodes {
                acc = acc + w * payoff.eval((m + sbar * l).exp());
            }
            disc * acc
        }
    }
}

/// ∂/∂s of [`bs_price`]: closed-form delta for vanilla payoffs, quadrature of
/// the score-weighted density for tabulated ones.
pub fn bs_delta<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    t: F,
    s: F,
    maturity: F,
    payoff: &PayoffSpec<F>,
) -> F {
    let v = maturity - t;
    if v <= F::zero() {
        // one-sided payoff slope
        let h = s * F::of(1e-6);
        return (payoff.eval(s + h) - payoff.eval(s - h)) / (h + h);
    }
    let ivar = model.integrated_var(i, t, maturity);
    let sbar = ivar.sqrt();
    match payoff {
        PayoffSpec::Call { strike } => {
            let d1 = ((s / *strike).ln() + model.rate(i) * v + ivar * F::of(0.5)) / sbar;
            normal::cdf(d1)
        }
        PayoffSpec::Put { strike } => {
            let d1 = ((s / *strike).ln() + model.rate(i) * v + ivar * F::of(0.5)) / sbar;
            normal::cdf(d1) - F::one()
        }
        PayoffSpec::Constant { .. } => F::zero(),
        PayoffSpec::Tabulated { .. } => {
            let disc = (-model.rate(i) * v).exp();
            let gl = quad::GaussLegendre::new(64);
            let nodes = lognormal_nodes(&gl, F::of(8.0));
            let (m, sbar) = log_moments(model, i, t, s, v);
            let mut acc = F::zero();
            for &(l, w) in &nodes {
                acc = acc + w * payoff.eval((m + sbar * l).exp()) * l / (s * sbar);
            }
            disc * acc
        }
    }
}

fn call_value<F: Real>(s: F, k: F, rv: F, sbar: F) -> F {
    let d1 = ((s / k).ln() + rv + sbar * sbar * F::of(0.5)) / sbar;
    let d2 = d1 - sbar;
    s * normal::cdf(d1) - k * (-rv).exp() * normal::cdf(d2)
}

fn require_const_vol<F: Real>(model: &RegimeModel<F>, i: usize) -> Result<F, Error> {
    model
        .vol_profile()
        .constant_sigmas()
        .map(|s| s[i])
        .ok_or_else(|| {
            Error::UnsupportedModel(
                "barrier formulas need a time-independent volatility profile".into(),
            )
        })
}

/// P[sup of the regime-i GBM over a window of length v stays below b | spot s],
/// by the reflection principle. Constant-volatility regimes only.
pub fn survival_prob_up<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    s: F,
    b: F,
    v: F,
) -> Result<F, Error> {
    let sigma = require_const_vol(model, i)?;
    Ok(survival_up_scalar(model.rate(i), sigma, s, b, v))
}

/// P[inf of the regime-i GBM over a window of length v stays above `floor` | spot s].
pub fn survival_prob_down<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    s: F,
    floor: F,
    v: F,
) -> Result<F, Error> {
    let sigma = require_const_vol(model, i)?;
    Ok(survival_down_scalar(model.rate(i), sigma, s, floor, v))
}

pub(crate) fn survival_up_scalar<F: Real>(r: F, sigma: F, s: F, b: F, v: F) -> F {
    if s >= b {
        return F::zero();
    }
    if v <= F::zero() {
        return F::one();
    }
    let m = (b / s).ln();
    let nu = r - sigma * sigma * F::of(0.5);
    let sd = sigma * v.sqrt();
    let reflect = ((F::of(2.0) * r / (sigma * sigma) - F::one()) * m).exp();
    let p = normal::cdf((m - nu * v) / sd) - reflect * normal::cdf((-m - nu * v) / sd);
    p.max(F::zero()).min(F::one())
}

pub(crate) fn survival_down_scalar<F: Real>(r: F, sigma: F, s: F, floor: F, v: F) -> F {
    if s <= floor {
        return F::zero();
    }
    if v <= F::zero() {
        return F::one();
    }
    let m = (s / floor).ln();
    let nu = r - sigma * sigma * F::of(0.5);
    let sd = sigma * v.sqrt();
    let reflect = (-(F::of(2.0) * r / (sigma * sigma) - F::one()) * m).exp();
    let p = normal::cdf((m + nu * v) / sd) - reflect * normal::cdf((-m + nu * v) / sd);
    p.max(F::zero()).min(F::one())
}

/// `E[(X - k)^+ 1{X < cap}]` for `ln X ~ N(mean_log, sbar²)`. CDF differences
/// go through the smaller tail, so the value stays clean even when the whole
/// distribution sits far above the cap (the reflected spot of barrier forms).
pub(crate) fn lognormal_partial_call<F: Real>(mean_log: F, sbar: F, k: F, cap: Option<F>) -> F {
    let fwd = (mean_log + sbar * sbar * F::of(0.5)).exp();
    let d2k = (mean_log - k.ln()) / sbar;
    let d1k = d2k + sbar;
    match cap {
        None => fwd * normal::cdf(d1k) - k * normal::cdf(d2k),
        Some(cap) => {
            let d2c = (mean_log - cap.ln()) / sbar;
            let d1c = d2c + sbar;
            fwd * normal::cdf_diff(d1k, d1c) - k * normal::cdf_diff(d2k, d2c)
        }
    }
}

/// Discounted value of `(S_v - k)^+ 1{S_v < cap}` under the free lognormal law.
fn truncated_call<F: Real>(r: F, sigma: F, s: F, k: F, cap: F, v: F) -> F {
    let rv = r * v;
    let sbar = sigma * v.sqrt();
    let mean_log = s.ln() + rv - sbar * sbar * F::of(0.5);
    (-rv).exp() * lognormal_partial_call(mean_log, sbar, k, Some(cap))
}

/// Reflection-principle price of an up-and-out call (strike k, barrier b > k)
/// in a single constant-volatility regime over a window of length v.
pub fn up_out_call_price<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    s: F,
    k: F,
    b: F,
    v: F,
) -> Result<F, Error> {
    let sigma = require_const_vol(model, i)?;
    Ok(up_out_call_scalar(model.rate(i), sigma, s, k, b, v))
}

pub(crate) fn up_out_call_scalar<F: Real>(r: F, sigma: F, s: F, k: F, b: F, v: F) -> F {
    if s >= b || k >= b {
        return F::zero();
    }
    if v <= F::zero() {
        return (s - k).max(F::zero());
    }
    let power = F::of(2.0) * r / (sigma * sigma) - F::one();
    let reflected_spot = b * b / s;
    let price = truncated_call(r, sigma, s, k, b, v)
        - (b / s).powf(power) * truncated_call(r, sigma, reflected_spot, k, b, v);
    price.max(F::zero())
}

/// Reflection-principle price of a down-and-out call (strike k, barrier
/// `floor` < k) in a single constant-volatility regime.
pub fn down_out_call_price<F: Real>(
    model: &RegimeModel<F>,
    i: usize,
    s: F,
    k: F,
    floor: F,
    v: F,
) -> Result<F, Error> {
    let sigma = require_const_vol(model, i)?;
    if floor >= k {
        return Err(Error::Argument(
            "down-and-out call requires the barrier below the strike".into(),
        ));
    }
    Ok(down_out_call_scalar(model.rate(i), sigma, s, k, floor, v))
}

pub(crate) fn down_out_call_scalar<F: Real>(r: F, sigma: F, s: F, k: F, floor: F, v: F) -> F {
    if s <= floor {
        return F::zero();
    }
    if v <= F::zero() {
        return (s - k).max(F::zero());
    }
    let rv = r * v;
    let sbar = sigma * v.sqrt();
    let power = F::of(2.0) * r / (sigma * sigma) - F::one();
    let reflected_spot = floor * floor / s;
    let price =
        call_value(s, k, rv, sbar) - (floor / s).powf(power) * call_value(reflected_spot, k, rv, sbar);
    price.max(F::zero())
}

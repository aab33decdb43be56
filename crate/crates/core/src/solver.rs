//! Fixed-point solver for the pricing equation.
//!
//! The unknown inside the integral term is always the age-zero slice
//! `u(t, s, i) = φ(t, s, i, 0)`, so the contraction runs on a 3-D grid and the
//! general-age surface is a single post-pass of the same operator with
//! age-shifted coefficients. Survival and density ratios are evaluated in
//! hazard form (differences of cumulative hazards under one `exp`), so deep
//! ages never produce 0/0.
//!
//! Quadrature layout: the v-integral uses the composite trapezoid rule on
//! sub-steps aligned with the time grid (`n_v` per step, so the slice is only
//! ever read at stored rows or a linear blend of two); the price integral uses
//! Gauss–Legendre in log price against the standardized lognormal weight,
//! truncated at `trunc_sd` standard deviations and at the barrier when one is
//! present.

use crate::bsm::{self, PayoffSpec};
use crate::error::Error;
use crate::market::{MarketState, RegimeModel};
use crate::numeric::{normal, quad::GaussLegendre};
use crate::rates::RateSpec;
use crate::scalar::Real;

/// Discretization controls for the solver.
#[derive(Debug, Clone)]
pub struct GridSpec<F> {
    /// Time nodes on [0, T].
    pub n_t: usize,
    /// Log-price nodes on [ln s_min, ln s_max].
    pub n_s: usize,
    /// Age nodes on [0, T] for the full surface.
    pub n_y: usize,
    /// v-integral sub-steps per time step.
    pub n_v: usize,
    /// Gauss–Legendre order for the log-price integral.
    pub n_x: usize,
    pub s_min: F,
    pub s_max: F,
    /// Log-space truncation of the lognormal integral, in standard deviations.
    pub trunc_sd: F,
}

impl<F: Real> GridSpec<F> {
    pub fn new(n_t: usize, n_s: usize, n_y: usize, s_min: F, s_max: F) -> Self {
        Self {
            n_t,
            n_s,
            n_y,
            n_v: 1,
            n_x: 64,
            s_min,
            s_max,
            trunc_sd: F::of(8.0),
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.n_t < 2 || self.n_s < 2 || self.n_y < 2 || self.n_v < 1 || self.n_x < 2 {
            return Err(Error::Argument(format!(
                "grid counts too small: n_t={} n_s={} n_y={} n_v={} n_x={}",
                self.n_t, self.n_s, self.n_y, self.n_v, self.n_x
            )));
        }
        if !(self.s_min > F::zero() && self.s_max > self.s_min) {
            return Err(Error::Argument(format!(
                "price range must satisfy 0 < s_min < s_max, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if !(self.trunc_sd > F::one()) {
            return Err(Error::Argument(format!(
                "trunc_sd must exceed 1, got {}",
                self.trunc_sd
            )));
        }
        Ok(())
    }
}

/// Barrier attached to a knock-out claim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierKind<F> {
    UpOut(F),
    DownOut(F),
}

/// Discretized price function φ(t, s, i, y) with its age-zero slice.
#[derive(Debug, Clone)]
pub struct PriceSurface<F> {
    pub t_grid: Vec<F>,
    pub log_s_grid: Vec<F>,
    pub y_grid: Vec<F>,
    pub states: usize,
    /// u(t, s, i) = φ(t, s, i, 0), index ((m · n_s) + l) · k + i.
    pub zero_slice: Vec<F>,
    /// φ(t, s, i, y), index (((m · n_s) + l) · k + i) · n_y + p.
    pub full: Option<Vec<F>>,
    /// Weighted-norm residuals ‖u_{n+1} - u_n‖ per iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Barrier carried by this surface, if any.
    pub barrier: Option<BarrierKind<F>>,
    pub maturity: F,
}

impl<F: Real> PriceSurface<F> {
    /// Bilinear interpolation of the age-zero slice, linear in t and ln s,
    /// linear in plain s beyond the price grid, floored at zero.
    pub fn eval_zero(&self, t: F, s: F, i: usize) -> F {
        let n_s = self.log_s_grid.len();
        let k = self.states;
        let (m0, wt) = bracket(&self.t_grid, t);
        let a = eval_row_log_s(
            &self.zero_slice[m0 * n_s * k..(m0 + 1) * n_s * k],
            &self.log_s_grid,
            k,
            i,
            s,
        );
        if wt == F::zero() {
            return a.max(F::zero());
        }
        let b = eval_row_log_s(
            &self.zero_slice[(m0 + 1) * n_s * k..(m0 + 2) * n_s * k],
            &self.log_s_grid,
            k,
            i,
            s,
        );
        ((F::one() - wt) * a + wt * b).max(F::zero())
    }

    /// Trilinear interpolation of the full surface (ages clamp to the grid).
    pub fn eval(&self, state: &MarketState<F>) -> Result<F, Error> {
        let full = self
            .full
            .as_ref()
            .ok_or_else(|| Error::Argument("surface has no full age extension".into()))?;
        let n_y = self.y_grid.len();
        let n_s = self.log_s_grid.len();
        let k = self.states;
        let (p0, wy) = bracket(&self.y_grid, state.age);
        let (m0, wt) = bracket(&self.t_grid, state.t);
        let mut acc = F::zero();
        for (m, tw) in [(m0, F::one() - wt), (m0 + 1, wt)] {
            if tw == F::zero() {
                continue;
            }
            for (p, yw) in [(p0, F::one() - wy), (p0 + 1, wy)] {
                if yw == F::zero() {
                    continue;
                }
                let fetch = |l: usize| full[((m * n_s + l) * k + state.regime) * n_y + p];
                let v = eval_log_s_with(&self.log_s_grid, state.s, &fetch);
                acc = acc + tw * yw * v;
            }
        }
        Ok(acc.max(F::zero()))
    }

    /// max over the grid of |u| / (1 + s); the norm the contraction runs in.
    pub fn weighted_norm(values: &[F], log_s_grid: &[F], states: usize) -> F {
        let n_s = log_s_grid.len();
        let mut best = F::zero();
        for (idx, &v) in values.iter().enumerate() {
            let l = (idx / states) % n_s;
            let w = v.abs() / (F::one() + log_s_grid[l].exp());
            best = best.max(w);
        }
        best
    }
}

/// Locates `x` in an increasing uniform grid: (index, blend weight), clamped.
pub(crate) fn bracket<F: Real>(grid: &[F], x: F) -> (usize, F) {
    let n = grid.len();
    if x <= grid[0] {
        return (0, F::zero());
    }
    if x >= grid[n - 1] {
        return (n - 2, F::one());
    }
    let step = (grid[n - 1] - grid[0]) / F::of_usize(n - 1);
    let mut idx = ((x - grid[0]) / step).to_usize().unwrap_or(0);
    if idx >= n - 1 {
        idx = n - 2;
    }
    while idx > 0 && x < grid[idx] {
        idx -= 1;
    }
    while idx < n - 2 && x > grid[idx + 1] {
        idx += 1;
    }
    let w = (x - grid[idx]) / (grid[idx + 1] - grid[idx]);
    (idx, w)
}

/// Interpolates one (t, i) row of a slice at spot `s`; linear in ln s inside
/// the grid, linear in plain s beyond it, never negative.
#[inline]
fn eval_row_log_s<F: Real>(row: &[F], log_s_grid: &[F], k: usize, i: usize, s: F) -> F {
    let fetch = |l: usize| row[l * k + i];
    eval_log_s_with(log_s_grid, s, &fetch)
}

fn eval_log_s_with<F: Real>(log_s_grid: &[F], s: F, fetch: &impl Fn(usize) -> F) -> F {
    let n = log_s_grid.len();
    let xi = s.ln();
    if xi <= log_s_grid[0] {
        let s0 = log_s_grid[0].exp();
        let s1 = log_s_grid[1].exp();
        let slope = (fetch(1) - fetch(0)) / (s1 - s0);
        return (fetch(0) + slope * (s - s0)).max(F::zero());
    }
    if xi >= log_s_grid[n - 1] {
        let s0 = log_s_grid[n - 2].exp();
        let s1 = log_s_grid[n - 1].exp();
        let slope = (fetch(n - 1) - fetch(n - 2)) / (s1 - s0);
        return (fetch(n - 1) + slope * (s - s1)).max(F::zero());
    }
    let (l, w) = bracket(log_s_grid, xi);
    ((F::one() - w) * fetch(l) + w * fetch(l + 1)).max(F::zero())
}

/// The contraction operator of the pricing equation on the age-zero slice,
/// with all time- and regime-dependent coefficients precomputed.
pub struct PricingOperator<'a, F> {
    model: &'a RegimeModel<F>,
    spec: &'a RateSpec<F>,
    grid: GridSpec<F>,
    maturity: F,
    t_grid: Vec<F>,
    log_s_grid: Vec<F>,
    dt_sub: F,
    n_sub: usize,
    /// ρ_i(t, s) — or the closed-form knock-out value for barrier claims —
    /// index ((m · n_s) + l) · k + i.
    base_term: Vec<F>,
    /// e^{-r(i) v_q} f(v_q | i) p_ij(v_q), index ((i · (n_sub+1)) + q) · k + j.
    trans_coef: Vec<F>,
    /// Standardized lognormal nodes (score, weight).
    nodes: Vec<(F, F)>,
    /// Raw Gauss–Legendre rule for barrier-truncated integrals.
    gl: GaussLegendre<F>,
    /// (mean-log shift, σ̄) between sub-steps a < b, index a · (n_sub+1) + b
    /// within regime block i.
    moments: Vec<(F, F)>,
    barrier: Option<BarrierKind<F>>,
    /// Reflection coefficient (barrier/s)^(2r/σ² - 1) per (i, l); the weight
    /// of the mirrored density in the knocked-out transition law.
    reflection: Vec<F>,
}

impl<'a, F: Real> PricingOperator<'a, F> {
    pub fn new(
        model: &'a RegimeModel<F>,
        spec: &'a RateSpec<F>,
        payoff: &PayoffSpec<F>,
        maturity: F,
        grid: GridSpec<F>,
        barrier: Option<BarrierKind<F>>,
    ) -> Result<Self, Error> {
        grid.validate()?;
        if !(maturity > F::zero()) {
            return Err(Error::Argument(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        if model.state_count() != spec.state_count() {
            return Err(Error::Argument(format!(
                "model has {} regimes but the rate family has {}",
                model.state_count(),
                spec.state_count()
            )));
        }
        if let Some(kind) = &barrier {
            if model.vol_profile().constant_sigmas().is_none() {
                return Err(Error::UnsupportedModel(
                    "barrier pricing needs a time-independent volatility profile".into(),
                ));
            }
            match (kind, payoff) {
                (BarrierKind::UpOut(b), PayoffSpec::Call { strike }) if strike >= b => {
                    return Err(Error::Argument(
                        "up-and-out call needs strike below the barrier".into(),
                    ));
                }
                (BarrierKind::DownOut(b), PayoffSpec::Call { strike }) if strike <= b => {
                    return Err(Error::Argument(
                        "down-and-out call needs strike above the barrier".into(),
                    ));
                }
                _ => {}
            }
        }

        let k = spec.state_count();
        let (n_t, n_s, n_v) = (grid.n_t, grid.n_s, grid.n_v);
        let t_grid: Vec<F> = (0..n_t)
            .map(|m| maturity * F::of_usize(m) / F::of_usize(n_t - 1))
            .collect();
        let (ls_min, ls_max) = (grid.s_min.ln(), grid.s_max.ln());
        let log_s_grid: Vec<F> = (0..n_s)
            .map(|l| ls_min + (ls_max - ls_min) * F::of_usize(l) / F::of_usize(n_s - 1))
            .collect();
        let n_sub = (n_t - 1) * n_v;
        let dt_sub = maturity / F::of_usize(n_sub);

        // cumulative variance at sub-times, one pass per regime
        let mut cum_var = vec![F::zero(); k * (n_sub + 1)];
        for i in 0..k {
            for w in 1..=n_sub {
                let a = dt_sub * F::of_usize(w - 1);
                let b = dt_sub * F::of_usize(w);
                cum_var[i * (n_sub + 1) + w] =
                    cum_var[i * (n_sub + 1) + w - 1] + model.integrated_var(i, a, b);
            }
        }
        let mut moments = vec![(F::zero(), F::zero()); k * (n_sub + 1) * (n_sub + 1)];
        for i in 0..k {
            for a in 0..=n_sub {
                for b in (a + 1)..=n_sub {
                    let v = dt_sub * F::of_usize(b - a);
                    let ivar = cum_var[i * (n_sub + 1) + b] - cum_var[i * (n_sub + 1) + a];
                    let shift = model.rate(i) * v - ivar * F::of(0.5);
                    moments[(i * (n_sub + 1) + a) * (n_sub + 1) + b] = (shift, ivar.sqrt());
                }
            }
        }

        let trans_coef = age_shifted_coefficients(model, spec, F::zero(), dt_sub, n_sub)?;

        let gl = GaussLegendre::new(grid.n_x);
        let nodes = bsm::lognormal_nodes(&gl, grid.trunc_sd);

        // base term: per-regime closed-form value of the claim
        let mut base_term = vec![F::zero(); n_t * n_s * k];
        for m in 0..n_t {
            let t = t_grid[m];
            for l in 0..n_s {
                let s = log_s_grid[l].exp();
                for i in 0..k {
                    let v = match &barrier {
                        None => bsm::bs_price(model, i, t, s, maturity, payoff),
                        Some(BarrierKind::UpOut(b)) => {
                            bsm::up_out_call_price(model, i, s, strike_of(payoff)?, *b, maturity - t)?
                        }
                        Some(BarrierKind::DownOut(b)) => {
                            bsm::down_out_call_price(model, i, s, strike_of(payoff)?, *b, maturity - t)?
                        }
                    };
                    base_term[(m * n_s + l) * k + i] = v;
                }
            }
        }

        // reflection weights of the knocked-out transition sub-density
        let mut reflection = Vec::new();
        if let Some(kind) = &barrier {
            let sigmas = model.vol_profile().constant_sigmas().expect("checked above");
            let level = match kind {
                BarrierKind::UpOut(b) | BarrierKind::DownOut(b) => *b,
            };
            reflection = vec![F::zero(); k * n_s];
            for i in 0..k {
                let power = F::of(2.0) * model.rate(i) / (sigmas[i] * sigmas[i]) - F::one();
                for l in 0..n_s {
                    let s = log_s_grid[l].exp();
                    reflection[i * n_s + l] = (level / s).powf(power);
                }
            }
        }

        Ok(Self {
            model,
            spec,
            grid,
            maturity,
            t_grid,
            log_s_grid,
            dt_sub,
            n_sub,
            base_term,
            trans_coef,
            nodes,
            gl,
            moments,
            barrier,
            reflection,
        })
    }

    pub fn t_grid(&self) -> &[F] {
        &self.t_grid
    }

    pub fn log_s_grid(&self) -> &[F] {
        &self.log_s_grid
    }

    fn states(&self) -> usize {
        self.spec.state_count()
    }

    /// First term of the equation at age zero: survival(T - t) times the
    /// per-regime closed form. Also the initial iterate.
    pub fn first_term(&self) -> Vec<F> {
        let (n_t, n_s, k) = (self.grid.n_t, self.grid.n_s, self.states());
        let mut out = vec![F::zero(); n_t * n_s * k];
        for m in 0..n_t {
            let horizon = self.maturity - self.t_grid[m];
            for l in 0..n_s {
                for i in 0..k {
                    let idx = (m * n_s + l) * k + i;
                    out[idx] = self.spec.survival_ratio(i, F::zero(), horizon) * self.base_term[idx];
                }
            }
        }
        self.enforce_boundary(&mut out);
        out
    }

    /// One application of the operator to an age-zero slice.
    pub fn apply(&self, slice: &[F]) -> Vec<F> {
        self.apply_with(slice, &self.trans_coef, None)
    }

    /// Applies the operator with the supplied coefficient table; `age` selects
    /// the survival ratio of the first term (zero for the fixed-point pass).
    fn apply_with(&self, slice: &[F], coef: &[F], age: Option<F>) -> Vec<F> {
        let (n_t, n_s, k) = (self.grid.n_t, self.grid.n_s, self.states());
        let y = age.unwrap_or(F::zero());
        let mut out = vec![F::zero(); n_t * n_s * k];
        for m in 0..n_t {
            let horizon = self.maturity - self.t_grid[m];
            let subs = (n_t - 1 - m) * self.grid.n_v;
            let a = m * self.grid.n_v;
            for l in 0..n_s {
                let s = self.log_s_grid[l].exp();
                for i in 0..k {
                    let idx = (m * n_s + l) * k + i;
                    let mut value = self.spec.survival_ratio(i, y, horizon) * self.base_term[idx];
                    if subs > 0 {
                        let mut acc = F::zero();
                        for q in 0..=subs {
                            let mut g = self.transition_value(slice, coef, l, s, i, a, q);
                            if q == 0 || q == subs {
                                g = g * F::of(0.5);
                            }
                            acc = acc + g;
                        }
                        value = value + acc * self.dt_sub;
                    }
                    out[idx] = value;
                }
            }
        }
        self.enforce_boundary(&mut out);
        out
    }

    /// Integrand of the v-integral at sub-offset `q` from sub-time `a`:
    /// `coef_ij(q) Σ_j ∫ u_j(t+v, x) α(x) dx`, barrier-truncated and
    /// survival-weighted when a barrier is present.
    #[inline]
    fn transition_value(
        &self,
        slice: &[F],
        coef_table: &[F],
        l: usize,
        s: F,
        i: usize,
        a: usize,
        q: usize,
    ) -> F {
        let k = self.states();
        let coef = &coef_table[(i * (self.n_sub + 1) + q) * k..][..k];
        let mut total = F::zero();
        if q == 0 {
            // the transition density collapses to a point mass at s
            let row = self.slice_at(slice, a);
            for j in 0..k {
                if j != i && coef[j] > F::zero() {
                    total = total + coef[j] * row.eval(&self.log_s_grid, k, j, s);
                }
            }
            return total;
        }
        let (shift, sbar) = self.moments[(i * (self.n_sub + 1) + a) * (self.n_sub + 1) + (a + q)];
        let mean_log = s.ln() + shift;
        let row = self.slice_at(slice, a + q);
        match &self.barrier {
            None => {
                for j in 0..k {
                    if j == i || coef[j] == F::zero() {
                        continue;
                    }
                    let mut inner = F::zero();
                    for &(score, weight) in &self.nodes {
                        let x = (mean_log + sbar * score).exp();
                        inner = inner + weight * row.eval(&self.log_s_grid, k, j, x);
                    }
                    total = total + coef[j] * inner;
                }
                total
            }
            Some(kind) => {
                // transition law killed at the barrier: the reflection
                // principle gives the sub-density α(x; s) - R α(x; b²/s) on
                // the surviving side, whose total mass is the survival
                // probability; the single-regime fixed point is then exact
                let (level, lo, hi) = match kind {
                    BarrierKind::UpOut(b) => (
                        *b,
                        mean_log - self.grid.trunc_sd * sbar,
                        (mean_log + self.grid.trunc_sd * sbar).min(b.ln()),
                    ),
                    BarrierKind::DownOut(b) => (
                        *b,
                        (mean_log - self.grid.trunc_sd * sbar).max(b.ln()),
                        mean_log + self.grid.trunc_sd * sbar,
                    ),
                };
                if hi <= lo {
                    return F::zero();
                }
                let reflect = self.reflection[i * self.grid.n_s + l];
                let mean_log_ref = F::of(2.0) * level.ln() - s.ln() + shift;
                let half = (hi - lo) * F::of(0.5);
                let mid = (hi + lo) * F::of(0.5);
                for j in 0..k {
                    if j == i || coef[j] == F::zero() {
                        continue;
                    }
                    let mut inner = F::zero();
                    for (&node, &glw) in self.gl.nodes.iter().zip(&self.gl.weights) {
                        let xi = mid + half * node;
                        let score = (xi - mean_log) / sbar;
                        let score_ref = (xi - mean_log_ref) / sbar;
                        let weight =
                            (normal::pdf(score) - reflect * normal::pdf(score_ref)).max(F::zero());
                        inner = inner
                            + glw * half * weight / sbar
                                * row.eval(&self.log_s_grid, k, j, xi.exp());
                    }
                    total = total + coef[j] * inner;
                }
                total
            }
        }
    }

    /// Row view of the slice at sub-time index `w` (a blend of two stored
    /// rows when `w` is not a whole time step).
    #[inline]
    fn slice_at<'s>(&self, slice: &'s [F], w: usize) -> SliceRow<'s, F> {
        let n_v = self.grid.n_v;
        let n_s = self.grid.n_s;
        let k = self.states();
        let m0 = w / n_v;
        let rem = w % n_v;
        if rem == 0 {
            SliceRow {
                row0: &slice[m0 * n_s * k..(m0 + 1) * n_s * k],
                row1: None,
                blend: F::zero(),
            }
        } else {
            SliceRow {
                row0: &slice[m0 * n_s * k..(m0 + 1) * n_s * k],
                row1: Some(&slice[(m0 + 1) * n_s * k..(m0 + 2) * n_s * k]),
                blend: F::of_usize(rem) / F::of_usize(n_v),
            }
        }
    }

    /// Zeroes every node at or beyond the barrier; the comparison carries a
    /// relative epsilon so a node placed on the barrier survives the
    /// exp(ln(·)) round-trip of the log grid.
    fn enforce_boundary(&self, slice: &mut [F]) {
        if let Some(kind) = &self.barrier {
            let eps = F::of(1e-12);
            let (n_t, n_s, k) = (self.grid.n_t, self.grid.n_s, self.states());
            for m in 0..n_t {
                for l in 0..n_s {
                    let s = self.log_s_grid[l].exp();
                    let out = match kind {
                        BarrierKind::UpOut(b) => s >= *b * (F::one() - eps),
                        BarrierKind::DownOut(b) => s <= *b * (F::one() + eps),
                    };
                    if out {
                        for i in 0..k {
                            slice[(m * n_s + l) * k + i] = F::zero();
                        }
                    }
                }
            }
        }
    }

    /// Extends a converged age-zero slice to one age row `y`.
    fn extend_to_age(&self, slice: &[F], y: F) -> Result<Vec<F>, Error> {
        let coef = age_shifted_coefficients(self.model, self.spec, y, self.dt_sub, self.n_sub)?;
        Ok(self.apply_with(slice, &coef, Some(y)))
    }
}

/// `e^{-r(i) v_q} · f(y + v_q | i)/(1 - F(y|i)) · p_ij(y + v_q)` on the
/// sub-step grid, flattened as ((i · (n_sub+1)) + q) · k + j.
fn age_shifted_coefficients<F: Real>(
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    y: F,
    dt_sub: F,
    n_sub: usize,
) -> Result<Vec<F>, Error> {
    let k = spec.state_count();
    let mut coef = vec![F::zero(); k * (n_sub + 1) * k];
    for i in 0..k {
        for q in 0..=n_sub {
            let v = dt_sub * F::of_usize(q);
            let w = (-model.rate(i) * v).exp() * spec.hazard_density_ratio(i, y, v);
            for j in 0..k {
                if j != i {
                    coef[(i * (n_sub + 1) + q) * k + j] = w * spec.jump_prob(i, j, y + v)?;
                }
            }
        }
    }
    Ok(coef)
}

struct SliceRow<'s, F> {
    row0: &'s [F],
    row1: Option<&'s [F]>,
    blend: F,
}

impl<'s, F: Real> SliceRow<'s, F> {
    #[inline]
    fn eval(&self, log_s_grid: &[F], k: usize, j: usize, s: F) -> F {
        let a = eval_row_log_s(self.row0, log_s_grid, k, j, s);
        match self.row1 {
            None => a,
            Some(row1) => {
                let b = eval_row_log_s(row1, log_s_grid, k, j, s);
                (F::one() - self.blend) * a + self.blend * b
            }
        }
    }
}

/// Largest holding-time CDF value at the horizon; the contraction-modulus
/// estimate `J = max_i F(T | i)` behind the default iteration cap.
pub fn contraction_estimate<F: Real>(spec: &RateSpec<F>, maturity: F) -> F {
    let mut j = F::zero();
    for i in 0..spec.state_count() {
        j = j.max(F::one() - spec.survival_ratio(i, F::zero(), maturity));
    }
    j
}

/// Default iteration cap `ceil(ln tol / ln J) + 10`.
pub fn default_max_iter<F: Real>(spec: &RateSpec<F>, maturity: F, tol: F) -> usize {
    let j = contraction_estimate(spec, maturity);
    if j > F::zero() && j < F::one() {
        (tol.as_f64().ln() / j.as_f64().ln()).ceil() as usize + 10
    } else {
        10
    }
}

fn strike_of<F: Real>(payoff: &PayoffSpec<F>) -> Result<F, Error> {
    match payoff {
        PayoffSpec::Call { strike } => Ok(*strike),
        _ => Err(Error::Argument(
            "barrier solver supports call payoffs".into(),
        )),
    }
}

fn solve_fixed_point<F: Real>(
    operator: &PricingOperator<'_, F>,
    tol: F,
    max_iter: Option<usize>,
) -> Result<(Vec<F>, Vec<f64>), Error> {
    let cap = max_iter.unwrap_or_else(|| default_max_iter(operator.spec, operator.maturity, tol));
    let mut u = operator.first_term();
    let mut history = Vec::new();
    for _ in 0..cap {
        let next = operator.apply(&u);
        let diff: Vec<F> = next.iter().zip(&u).map(|(&a, &b)| a - b).collect();
        let norm = PriceSurface::weighted_norm(&diff, operator.log_s_grid(), operator.states());
        history.push(norm.as_f64());
        u = next;
        if norm <= tol {
            return Ok((u, history));
        }
    }
    Err(Error::Convergence {
        iterations: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        residuals: history,
    })
}

fn build_surface<F: Real>(
    operator: &PricingOperator<'_, F>,
    zero: Vec<F>,
    history: Vec<f64>,
    grid: &GridSpec<F>,
    maturity: F,
    barrier: Option<BarrierKind<F>>,
) -> Result<PriceSurface<F>, Error> {
    let y_grid: Vec<F> = (0..grid.n_y)
        .map(|p| maturity * F::of_usize(p) / F::of_usize(grid.n_y - 1))
        .collect();
    let (n_t, n_s, k) = (grid.n_t, grid.n_s, operator.states());
    let mut full = vec![F::zero(); n_t * n_s * k * grid.n_y];
    for (p, &y) in y_grid.iter().enumerate() {
        let row = operator.extend_to_age(&zero, y)?;
        for m in 0..n_t {
            for l in 0..n_s {
                for i in 0..k {
                    full[((m * n_s + l) * k + i) * grid.n_y + p] = row[(m * n_s + l) * k + i];
                }
            }
        }
    }
    Ok(PriceSurface {
        t_grid: operator.t_grid.clone(),
        log_s_grid: operator.log_s_grid.clone(),
        y_grid,
        states: k,
        iterations: history.len(),
        residual_history: history,
        zero_slice: zero,
        full: Some(full),
        barrier,
        maturity,
    })
}

/// Solves the vanilla pricing equation by contraction iteration and extends
/// the fixed point to the full age grid.
pub fn solve_vanilla<F: Real>(
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    payoff: &PayoffSpec<F>,
    maturity: F,
    grid: &GridSpec<F>,
    tol: F,
    max_iter: Option<usize>,
) -> Result<PriceSurface<F>, Error> {
    let operator = PricingOperator::new(model, spec, payoff, maturity, grid.clone(), None)?;
    let (zero, history) = solve_fixed_point(&operator, tol, max_iter)?;
    build_surface(&operator, zero, history, grid, maturity, None)
}

/// Up-and-out call via the same fixed-point scheme with the knock-out first
/// term, the survival-weighted transition term and the price integral
/// truncated at the barrier. Constant-volatility regimes only.
pub fn solve_barrier_up_out<F: Real>(
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    strike: F,
    barrier: F,
    maturity: F,
    grid: &GridSpec<F>,
    tol: F,
) -> Result<PriceSurface<F>, Error> {
    solve_barrier(model, spec, strike, BarrierKind::UpOut(barrier), maturity, grid, tol)
}

/// Down-and-out call; the mirror image of [`solve_barrier_up_out`].
pub fn solve_barrier_down_out<F: Real>(
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    strike: F,
    barrier: F,
    maturity: F,
    grid: &GridSpec<F>,
    tol: F,
) -> Result<PriceSurface<F>, Error> {
    solve_barrier(model, spec, strike, BarrierKind::DownOut(barrier), maturity, grid, tol)
}

fn solve_barrier<F: Real>(
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    strike: F,
    kind: BarrierKind<F>,
    maturity: F,
    grid: &GridSpec<F>,
    tol: F,
) -> Result<PriceSurface<F>, Error> {
    let payoff = PayoffSpec::call(strike)?;
    let operator = PricingOperator::new(model, spec, &payoff, maturity, grid.clone(), Some(kind))?;
    let (zero, history) = solve_fixed_point(&operator, tol, None)?;
    build_surface(&operator, zero, history, grid, maturity, Some(kind))
}

/// Regime-switching zero-coupon bond: the price-independent system obtained
/// at s = 0 with unit face value, solved on a one-dimensional time grid.
#[derive(Debug, Clone)]
pub struct ZcbCurve<F> {
    pub t_grid: Vec<F>,
    /// Zero-age values B(t, T, i, 0), index m · k + i.
    pub values: Vec<F>,
    pub states: usize,
    pub maturity: F,
    pub residual_history: Vec<f64>,
}

impl<F: Real> ZcbCurve<F> {
    /// Zero-age value by linear interpolation in t.
    pub fn value_zero_age(&self, t: F, i: usize) -> F {
        let (m, w) = bracket(&self.t_grid, t);
        (F::one() - w) * self.values[m * self.states + i]
            + w * self.values[(m + 1) * self.states + i]
    }

    /// B(t, T, i, y) for a general age by one application of the equation
    /// with age-shifted coefficients.
    pub fn value(&self, model: &RegimeModel<F>, spec: &RateSpec<F>, t: F, i: usize, y: F) -> F {
        let horizon = self.maturity - t;
        if horizon <= F::zero() {
            return F::one();
        }
        let r = model.rate(i);
        let first = spec.survival_ratio(i, y, horizon) * (-r * horizon).exp();
        let steps = 256usize;
        let dv = horizon / F::of_usize(steps);
        let mut acc = F::zero();
        for q in 0..=steps {
            let v = dv * F::of_usize(q);
            let mut g = (-r * v).exp() * spec.hazard_density_ratio(i, y, v);
            let mut inner = F::zero();
            for j in 0..self.states {
                if j != i {
                    inner = inner
                        + spec.jump_prob(i, j, y + v).expect("validated states")
                            * self.value_zero_age(t + v, j);
                }
            }
            g = g * inner;
            if q == 0 || q == steps {
                g = g * F::of(0.5);
            }
            acc = acc + g;
        }
        (first + acc * dv).min(F::one()).max(F::zero())
    }
}

/// Solves the zero-coupon-bond system by contraction iteration.
pub fn solve_zcb<F: Real>(
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    maturity: F,
    n_t: usize,
    tol: F,
) -> Result<ZcbCurve<F>, Error> {
    if model.state_count() != spec.state_count() {
        return Err(Error::Argument(
            "model and rate family must agree on the number of regimes".into(),
        ));
    }
    if !(maturity > F::zero()) || n_t < 2 {
        return Err(Error::Argument(
            "zero-coupon solve needs a positive maturity and at least 2 time nodes".into(),
        ));
    }
    let k = spec.state_count();
    let t_grid: Vec<F> = (0..n_t)
        .map(|m| maturity * F::of_usize(m) / F::of_usize(n_t - 1))
        .collect();
    let dt = maturity / F::of_usize(n_t - 1);

    let first: Vec<F> = (0..n_t * k)
        .map(|idx| {
            let (m, i) = (idx / k, idx % k);
            let horizon = maturity - t_grid[m];
            spec.survival_ratio(i, F::zero(), horizon) * (-model.rate(i) * horizon).exp()
        })
        .collect();

    let coef = age_shifted_coefficients(model, spec, F::zero(), dt, n_t - 1)?;

    let cap = default_max_iter(spec, maturity, tol);
    let mut u = first.clone();
    let mut history = Vec::new();
    for _ in 0..cap {
        let mut next = first.clone();
        for m in 0..n_t {
            let subs = n_t - 1 - m;
            if subs == 0 {
                continue;
            }
            for i in 0..k {
                let mut acc = F::zero();
                for q in 0..=subs {
                    let c = &coef[(i * n_t + q) * k..][..k];
                    let mut g = F::zero();
                    for j in 0..k {
                        if j != i {
                            g = g + c[j] * u[(m + q) * k + j];
                        }
                    }
                    if q == 0 || q == subs {
                        g = g * F::of(0.5);
                    }
                    acc = acc + g;
                }
                next[m * k + i] = next[m * k + i] + acc * dt;
            }
        }
        let norm = next
            .iter()
            .zip(&u)
            .fold(F::zero(), |best, (&a, &b)| best.max((a - b).abs()));
        history.push(norm.as_f64());
        u = next;
        if norm <= tol {
            return Ok(ZcbCurve {
                t_grid,
                values: u,
                states: k,
                maturity,
                residual_history: history,
            });
        }
    }
    Err(Error::Convergence {
        iterations: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        residuals: history,
    })
}

/// Finite-difference residual of the pricing PDE on the full surface.
#[derive(Debug, Clone)]
pub struct ResidualReport<F> {
    pub sup: F,
    pub mean: F,
    pub points: usize,
}

/// Evaluates `φ_t + φ_y + r s φ_s + ½σ²s²φ_ss + Σ λ_ij(y)(φ(j,0) - φ) - rφ`
/// by central differences at interior nodes with `y < t`. In log price the
/// convection-diffusion part reads `r φ_ξ + ½σ²(φ_ξξ - φ_ξ)`.
///
/// Nodes with `t > 7T/8` are excluded: next to maturity the payoff kink makes
/// the centered-difference residual diverge under refinement even for the
/// exact solution, so the sup norm is only meaningful on a fixed region away
/// from the terminal layer.
pub fn pde_residual<F: Real>(
    surface: &PriceSurface<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
) -> Result<ResidualReport<F>, Error> {
    let full = surface
        .full
        .as_ref()
        .ok_or_else(|| Error::Argument("surface has no full age extension".into()))?;
    let (n_t, n_s, k, n_y) = (
        surface.t_grid.len(),
        surface.log_s_grid.len(),
        surface.states,
        surface.y_grid.len(),
    );
    let dt = surface.t_grid[1] - surface.t_grid[0];
    let dxi = surface.log_s_grid[1] - surface.log_s_grid[0];
    let dy = surface.y_grid[1] - surface.y_grid[0];
    let at = |m: usize, l: usize, i: usize, p: usize| full[((m * n_s + l) * k + i) * n_y + p];

    let t_cut = surface.maturity * F::of(0.875);
    let mut sup = F::zero();
    let mut total = F::zero();
    let mut points = 0usize;
    for m in 1..n_t - 1 {
        let t = surface.t_grid[m];
        if t > t_cut {
            continue;
        }
        for p in 1..n_y - 1 {
            let y = surface.y_grid[p];
            if y >= t {
                continue;
            }
            for l in 1..n_s - 1 {
                for i in 0..k {
                    let phi = at(m, l, i, p);
                    let phi_t = (at(m + 1, l, i, p) - at(m - 1, l, i, p)) / (dt + dt);
                    let phi_y = (at(m, l, i, p + 1) - at(m, l, i, p - 1)) / (dy + dy);
                    let phi_xi = (at(m, l + 1, i, p) - at(m, l - 1, i, p)) / (dxi + dxi);
                    let phi_xixi =
                        (at(m, l + 1, i, p) - F::of(2.0) * phi + at(m, l - 1, i, p)) / (dxi * dxi);
                    let sigma = model.vol(i, t);
                    let mut switch = F::zero();
                    for j in 0..k {
                        if j != i {
                            switch =
                                switch + spec.rate_unchecked(i, j, y) * (at(m, l, j, 0) - phi);
                        }
                    }
                    let residual = phi_t
                        + phi_y
                        + model.rate(i) * phi_xi
                        + sigma * sigma * F::of(0.5) * (phi_xixi - phi_xi)
                        + switch
                        - model.rate(i) * phi;
                    sup = sup.max(residual.abs());
                    total = total + residual.abs();
                    points += 1;
                }
            }
        }
    }
    Ok(ResidualReport {
        sup,
        mean: if points > 0 {
            total / F::of_usize(points)
        } else {
            F::zero()
        },
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsm::VolProfile;
    use approx::assert_relative_eq;

    fn flat_model(k: usize, r: f64, sigma: f64) -> RegimeModel<f64> {
        RegimeModel::new(
            vec![r; k],
            vec![r; k],
            vec![0.0; k],
            VolProfile::constant(vec![sigma; k]),
        )
        .unwrap()
    }

    fn const_spec(rate01: f64, rate10: f64) -> RateSpec<f64> {
        RateSpec::new(&[vec![vec![-rate01, rate01], vec![rate10, -rate10]]], 8.0).unwrap()
    }

    fn small_grid() -> GridSpec<f64> {
        GridSpec::new(17, 33, 9, 0.05, 20.0)
    }

    #[test]
    fn operator_on_zero_slice_gives_first_term() {
        let model = flat_model(2, 0.05, 0.2);
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = small_grid();
        let op = PricingOperator::new(&model, &spec, &payoff, 1.0, grid.clone(), None).unwrap();
        let zero = vec![0.0; grid.n_t * grid.n_s * 2];
        let applied = op.apply(&zero);
        let first = op.first_term();
        for (a, b) in applied.iter().zip(&first) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn terminal_row_is_the_payoff() {
        let model = flat_model(2, 0.05, 0.2);
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = small_grid();
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-9, None).unwrap();
        let m = grid.n_t - 1;
        for l in 0..grid.n_s {
            let s = surface.log_s_grid[l].exp();
            for i in 0..2 {
                let v = surface.zero_slice[(m * grid.n_s + l) * 2 + i];
                assert_relative_eq!(v, (s - 1.0f64).max(0.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_operator_steps_match_brute_force_renewal_expansion() {
        // A²·0 against an independent nested quadrature of the two-term
        // renewal expansion at a
        // handful of probe points
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let maturity = 1.0;
        let grid = GridSpec {
            n_t: 65,
            n_s: 257,
            n_y: 9,
            n_v: 2,
            n_x: 64,
            s_min: 0.125,
            s_max: 8.0,
            trunc_sd: 8.0,
        };
        let op = PricingOperator::new(&model, &spec, &payoff, maturity, grid.clone(), None).unwrap();
        let zero = vec![0.0; grid.n_t * grid.n_s * 2];
        let once = op.apply(&zero);
        let twice = op.apply(&once);

        // independent oracle: first term + ∫ e^{-rv} f(v) p_ij Σ_j
        //   ∫ [first term](t+v, x, j) α dx dv by adaptive Simpson in v and a
        //   fine trapezoid in log x
        let probe = |t: f64, s: f64, i: usize| -> f64 {
            let surv = |i: usize, v: f64| (-spec.cumulative_hazard(i, v).unwrap()).exp();
            let rho = |i: usize, t: f64, s: f64| {
                crate::bsm::bs_price(&model, i, t, s, maturity, &payoff)
            };
            let inner = |t2: f64, j: usize, m: f64, sbar: f64| {
                // ∫ surv(T-t2) ρ_j(t2, x) α(x) dx over log x
                let n = 2000;
                let lo = m - 8.0 * sbar;
                let hi = m + 8.0 * sbar;
                let h = (hi - lo) / n as f64;
                let mut acc = 0.0;
                for w in 0..=n {
                    let xi = lo + h * w as f64;
                    let z = (xi - m) / sbar;
                    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() / sbar;
                    let mut g = surv(j, maturity - t2) * rho(j, t2, xi.exp()) * pdf;
                    if w == 0 || w == n {
                        g *= 0.5;
                    }
                    acc += g * h;
                }
                acc
            };
            let r = model.rate(i);
            let f_v = |v: f64| {
                spec.exit_rate(i, v) * surv(i, v)
            };
            let j = 1 - i;
            let integrand = |v: f64| {
                if v <= 0.0 {
                    return f_v(0.0) * surv(j, maturity - t) * rho(j, t, s);
                }
                let ivar = model.integrated_var(i, t, t + v);
                let sbar = ivar.sqrt();
                let m = s.ln() + r * v - 0.5 * ivar;
                (-r * v).exp() * f_v(v) * inner(t + v, j, m, sbar)
            };
            let tail = crate::numeric::quad::adaptive_simpson(
                &integrand,
                0.0,
                maturity - t,
                1e-10,
            )
            .unwrap();
            surv(i, maturity - t) * rho(i, t, s) + tail
        };

        for (t, s, i) in [(0.0, 1.0, 0usize), (0.5, 1.2, 1usize), (0.25, 0.8, 0usize)] {
            let want = probe(t, s, i);
            // read A²·0 off the grid
            let surface = PriceSurface {
                t_grid: op.t_grid().to_vec(),
                log_s_grid: op.log_s_grid().to_vec(),
                y_grid: vec![0.0, maturity],
                states: 2,
                zero_slice: twice.clone(),
                full: None,
                residual_history: vec![],
                iterations: 2,
                barrier: None,
                maturity,
            };
            let got = surface.eval_zero(t, s, i);
            assert!(
                (got - want).abs() < 1e-4,
                "A²·0 at ({t},{s},{i}): {got} vs oracle {want}"
            );
        }
        let _ = once;
    }

    #[test]
    fn vanishing_rates_decouple_the_regimes() {
        // tiny switching intensity: each regime prices at its own
        // Black-Scholes value up to O(epsilon)
        let eps = 1e-6;
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(eps, eps);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = GridSpec {
            n_t: 17,
            n_s: 129,
            n_y: 3,
            n_v: 1,
            n_x: 64,
            s_min: 0.125,
            s_max: 8.0,
            trunc_sd: 8.0,
        };
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-10, None).unwrap();
        for i in 0..2 {
            let want = crate::bsm::bs_price(&model, i, 0.0, 1.0, 1.0, &payoff);
            let got = surface.eval_zero(0.0, 1.0, i);
            assert!(
                (got - want).abs() < 1e-3,
                "regime {i}: {got} vs decoupled {want}"
            );
        }
    }

    #[test]
    fn identical_regimes_reduce_to_black_scholes() {
        let model = flat_model(2, 0.05, 0.2);
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = GridSpec {
            n_t: 33,
            n_s: 193,
            n_y: 9,
            n_v: 1,
            n_x: 64,
            s_min: 0.125,
            s_max: 8.0,
            trunc_sd: 8.0,
        };
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-9, None).unwrap();
        for (t, s) in [(0.0, 1.0), (0.3, 0.9), (0.7, 1.4)] {
            let want = crate::bsm::bs_price(&model, 0, t, s, 1.0, &payoff);
            for i in 0..2 {
                let got = surface.eval_zero(t, s, i);
                assert!(
                    (got - want).abs() <= 5e-4 * (1.0 + want),
                    "({t},{s},{i}): {got} vs {want}"
                );
            }
        }
        // general ages collapse to the same value
        let v0 = surface
            .eval(&MarketState::new(0.0, 1.0, 0, 0.0))
            .unwrap();
        let vy = surface
            .eval(&MarketState::new(0.0, 1.0, 1, 0.6))
            .unwrap();
        assert!((v0 - vy).abs() < 5e-4);
    }

    #[test]
    fn age_zero_extension_matches_zero_slice() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = small_grid();
        let tol = 1e-9;
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, tol, None).unwrap();
        let full = surface.full.as_ref().unwrap();
        let n_y = surface.y_grid.len();
        for (idx, &u) in surface.zero_slice.iter().enumerate() {
            let v = full[idx * n_y];
            assert!(
                (u - v).abs() <= 50.0 * tol * (1.0 + u.abs()),
                "zero-age row differs: {u} vs {v}"
            );
        }
    }

    #[test]
    fn contraction_ratios_respect_the_modulus_bound() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = small_grid();
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-8, None).unwrap();
        let j_bound = contraction_estimate(&spec, 1.0) + 0.05;
        let h = &surface.residual_history;
        for w in h.windows(2).skip(1) {
            if w[0] > 1e-13 {
                assert!(
                    w[1] / w[0] <= j_bound,
                    "residual ratio {} above bound {j_bound}",
                    w[1] / w[0]
                );
            }
        }
        assert!(surface.iterations <= default_max_iter(&spec, 1.0, 1e-8));
    }

    #[test]
    fn payoff_monotonicity_propagates() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let grid = small_grid();
        let lo = solve_vanilla(&model, &spec, &PayoffSpec::call(1.1).unwrap(), 1.0, &grid, 1e-8, None)
            .unwrap();
        let hi = solve_vanilla(&model, &spec, &PayoffSpec::call(0.9).unwrap(), 1.0, &grid, 1e-8, None)
            .unwrap();
        // K(s; strike 0.9) >= K(s; strike 1.1) pointwise, so prices order too
        for (a, b) in lo.zero_slice.iter().zip(&hi.zero_slice) {
            assert!(a <= b, "monotonicity violated: {a} > {b}");
        }
    }

    #[test]
    fn positivity_and_growth_bound() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let grid = small_grid();
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-8, None).unwrap();
        let (k1, k2) = payoff.growth_bounds();
        for m in 0..grid.n_t {
            for l in 0..grid.n_s {
                let s = surface.log_s_grid[l].exp();
                for i in 0..2 {
                    let v = surface.zero_slice[(m * grid.n_s + l) * 2 + i];
                    assert!(v >= 0.0);
                    assert!(v <= k1 + k2 * s + 1e-9, "growth bound broken at s={s}: {v}");
                }
            }
        }
    }

    #[test]
    fn zcb_single_regime_closed_form() {
        let model = flat_model(2, 0.05, 0.2);
        let spec = const_spec(1.0, 2.0);
        let curve = solve_zcb(&model, &spec, 1.0, 257, 1e-10).unwrap();
        // trapezoid in v: O(dt²) agreement with the closed form
        for t in [0.0, 0.25, 0.5, 0.9] {
            for i in 0..2 {
                assert_relative_eq!(
                    curve.value_zero_age(t, i),
                    (-0.05 * (1.0 - t) as f64).exp(),
                    epsilon = 1e-5
                );
            }
        }
        // equal rates: the value is age-independent as well
        let v = curve.value(&model, &spec, 0.3, 0, 0.8);
        assert_relative_eq!(v, (-0.05f64 * 0.7).exp(), epsilon = 1e-5);
    }

    #[test]
    fn zcb_values_are_discounts() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let curve = solve_zcb(&model, &spec, 2.0, 257, 1e-10).unwrap();
        // within (0,1], decreasing in time to maturity
        for i in 0..2 {
            let mut prev = 0.0;
            for m in 0..257 {
                let v = curve.values[m * 2 + i];
                assert!(v > 0.0 && v <= 1.0 + 1e-12);
                assert!(v >= prev - 1e-12, "B must increase toward maturity");
                prev = v;
            }
        }
        // bracketed by the constant-rate extremes
        let b0 = curve.value_zero_age(0.0, 0);
        assert!(b0 < (-0.03f64 * 2.0).exp() && b0 > (-0.07f64 * 2.0).exp());
    }

    #[test]
    fn barrier_surface_vanishes_at_the_boundary() {
        let model = flat_model(2, 0.05, 0.2);
        let spec = const_spec(1.0, 2.0);
        let mut grid = small_grid();
        grid.s_max = 1.3; // put the barrier on the top edge
        grid.n_s = 33;
        let surface =
            solve_barrier_up_out(&model, &spec, 1.0, 1.3, 1.0, &grid, 1e-8).unwrap();
        for m in 0..grid.n_t {
            for i in 0..2 {
                let v = surface.zero_slice[(m * grid.n_s + (grid.n_s - 1)) * 2 + i];
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn far_barrier_recovers_the_vanilla_price() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let grid = small_grid();
        let vanilla = solve_vanilla(
            &model,
            &spec,
            &PayoffSpec::call(1.0).unwrap(),
            1.0,
            &grid,
            1e-9,
            None,
        )
        .unwrap();
        let far = solve_barrier_up_out(&model, &spec, 1.0, 20_000.0, 1.0, &grid, 1e-9).unwrap();
        for (t, s) in [(0.0, 1.0), (0.4, 1.1)] {
            for i in 0..2 {
                let a = vanilla.eval_zero(t, s, i);
                let b = far.eval_zero(t, s, i);
                assert!(
                    (a - b).abs() <= 1e-6 * (1.0 + a),
                    "far barrier {b} vs vanilla {a}"
                );
            }
        }
    }

    #[test]
    fn monday_vol_supported_by_vanilla_but_not_barrier() {
        let model = RegimeModel::new(
            vec![0.05, 0.05],
            vec![0.05, 0.05],
            vec![0.0, 0.0],
            VolProfile::monday(vec![0.2, 0.3], 0.5, 3.0),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let grid = small_grid();
        assert!(solve_vanilla(
            &model,
            &spec,
            &PayoffSpec::call(1.0).unwrap(),
            1.0,
            &grid,
            1e-7,
            None
        )
        .is_ok());
        assert!(matches!(
            solve_barrier_up_out(&model, &spec, 1.0, 1.3, 1.0, &grid, 1e-7),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn pde_residual_zero_surface_zero_payoff() {
        let model = flat_model(2, 0.05, 0.2);
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::constant(0.0).unwrap();
        let grid = small_grid();
        let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-10, None).unwrap();
        let report = pde_residual(&surface, &model, &spec).unwrap();
        assert!(report.sup <= 1e-12, "zero claim must have zero residual");
    }

    #[test]
    fn pde_residual_shrinks_under_refinement() {
        let model = RegimeModel::new(
            vec![0.03, 0.07],
            vec![0.03, 0.07],
            vec![0.0, 0.0],
            VolProfile::constant(vec![0.15, 0.35]),
        )
        .unwrap();
        let spec = const_spec(1.0, 2.0);
        let payoff = PayoffSpec::call(1.0).unwrap();
        let mut sups = Vec::new();
        for (n_t, n_s, n_y) in [(9, 17, 9), (17, 33, 17), (33, 65, 33)] {
            let grid = GridSpec {
                n_t,
                n_s,
                n_y,
                n_v: 1,
                n_x: 64,
                s_min: 0.05,
                s_max: 20.0,
                trunc_sd: 8.0,
            };
            let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-9, None).unwrap();
            let report = pde_residual(&surface, &model, &spec).unwrap();
            sups.push(report.sup);
        }
        assert!(
            sups[0] > sups[1] && sups[1] > sups[2],
            "sup residuals must fall under refinement: {sups:?}"
        );
    }
}

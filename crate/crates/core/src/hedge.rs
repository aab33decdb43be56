//! Locally risk-minimizing hedging: the quadrature hedge ratio, the optimal
//! strategy decomposition, the residual-risk estimator for knock-out claims
//! and a discrete-rebalancing cost simulator.

use rand::distributions::{Distribution, Standard};
use rand_distr::{Exp1, StandardNormal};

use crate::bsm::{self, PayoffSpec};
use crate::numeric::normal;
use crate::error::Error;
use crate::market::{MarketState, RegimeModel};
use crate::rates::RateSpec;
use crate::scalar::Real;
use crate::sim::{self, ChainMethod, Measure, SimReal};
use crate::solver::{BarrierKind, PriceSurface};

/// Hedge portfolio at one evaluation point: `value = xi · s + eps · B_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy<F> {
    /// Units of stock.
    pub xi: F,
    /// Units of the money-market account.
    pub eps: F,
    /// Portfolio value, equal to the claim price.
    pub value: F,
}

/// Hedge ratio ψ(t, s, i, y) = ∂φ/∂s by numerical integration: the surviving
/// per-regime delta plus the quadrature of the age-zero slice against the
/// score-weighted transition density. More robust than differencing the
/// surface itself.
pub fn hedge_ratio<F: Real>(
    surface: &PriceSurface<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    payoff: &PayoffSpec<F>,
    state: &MarketState<F>,
) -> Result<F, Error> {
    let (t, s, i, y) = (state.t, state.s, state.regime, state.age);
    if i >= spec.state_count() {
        return Err(Error::StateIndex {
            index: i,
            count: spec.state_count(),
        });
    }
    let maturity = surface.maturity;
    let horizon = maturity - t;
    if horizon <= F::zero() {
        let h = s * F::of(1e-6);
        return Ok((payoff.eval(s + h) - payoff.eval(s - h)) / (h + h));
    }
    let k = spec.state_count();

    if surface.barrier.is_some() {
        // knocked-out claims define the strategy directly as the price slope;
        // a cell-spanning stencil reads the slope of the stored surface
        let cell = surface.log_s_grid[1] - surface.log_s_grid[0];
        let h = s * cell;
        let up = surface.eval(&MarketState::new(t, s + h, i, y))?;
        let dn = surface.eval(&MarketState::new(t, s - h, i, y))?;
        return Ok((up - dn) / (h + h));
    }

    let first = spec.survival_ratio(i, y, horizon) * bsm::bs_delta(model, i, t, s, maturity, payoff);

    // v-quadrature on a grid at least as fine as the surface's own time step
    let surface_steps = surface.t_grid.len() - 1;
    let steps = ((horizon / (surface.maturity / F::of_usize(surface_steps)))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(16))
        * 4;
    let dv = horizon / F::of_usize(steps);
    let mut acc = F::zero();
    for q in 0..=steps {
        let v = dv * F::of_usize(q);
        let weight = (-model.rate(i) * v).exp() * spec.hazard_density_ratio(i, y, v);
        let mut g = F::zero();
        if q == 0 {
            // the score-weighted integral tends to the slice's own delta;
            // a cell-spanning stencil reads the derivative of the piecewise
            // linear slice instead of one cell's chord
            let cell = surface.log_s_grid[1] - surface.log_s_grid[0];
            let h = s * cell;
            for j in 0..k {
                if j == i {
                    continue;
                }
                let p = spec.jump_prob(i, j, y)?;
                if p > F::zero() {
                    let fd = (surface.eval_zero(t, s + h, j) - surface.eval_zero(t, s - h, j))
                        / (h + h);
                    g = g + p * fd;
                }
            }
        } else {
            let ivar = model.integrated_var(i, t, t + v);
            let sbar = ivar.sqrt();
            let mean_log = s.ln() + model.rate(i) * v - ivar * F::of(0.5);
            for j in 0..k {
                if j == i {
                    continue;
                }
                let p = spec.jump_prob(i, j, y + v)?;
                if p == F::zero() {
                    continue;
                }
                let inner = score_weighted_integral(surface, t + v, j, mean_log, sbar, s);
                g = g + p * inner;
            }
        }
        g = g * weight;
        if q == 0 || q == steps {
            g = g * F::of(0.5);
        }
        acc = acc + g;
    }
    Ok(first + acc * dv)
}

/// `∫ u_j(t2, x) α(x) L/(s σ̄) dx` computed exactly for the piecewise-linear
/// (in ln x) slice: per-cell closed forms in Φ and φ, linear-in-price closed
/// forms on the extrapolation tails. Sampling this score-weighted integral
/// numerically would differentiate the interpolation sawtooth instead.
fn score_weighted_integral<F: Real>(
    surface: &PriceSurface<F>,
    t2: F,
    j: usize,
    mean_log: F,
    sbar: F,
    s: F,
) -> F {
    let grid = &surface.log_s_grid;
    let n = grid.len();
    let k = surface.states;
    let (m0, wt) = crate::solver::bracket(&surface.t_grid, t2);
    let zs = &surface.zero_slice;
    let node = |l: usize| -> F {
        let a = zs[(m0 * n + l) * k + j];
        if wt == F::zero() {
            a
        } else {
            let b = zs[((m0 + 1) * n + l) * k + j];
            (F::one() - wt) * a + wt * b
        }
    };
    let trunc = F::of(8.0);
    let xi_lo = mean_log - sbar * trunc;
    let xi_hi = mean_log + sbar * trunc;
    let to_z = |xi: F| (xi - mean_log) / sbar;

    // ∫ φ(z) z dz and ∫ φ(z) z² dz over [za, zb]
    let int_z = |za: F, zb: F| normal::pdf(za) - normal::pdf(zb);
    let int_z2 = |za: F, zb: F| {
        (normal::cdf(zb) - normal::cdf(za)) - (zb * normal::pdf(zb) - za * normal::pdf(za))
    };
    // ∫ e^{σ̄ z} φ(z) z dz over [za, zb]
    let int_exp_z = |za: F, zb: F| {
        let lift = (sbar * sbar * F::of(0.5)).exp();
        lift * ((normal::pdf(za - sbar) - normal::pdf(zb - sbar))
            + sbar * (normal::cdf(zb - sbar) - normal::cdf(za - sbar)))
    };

    let mut acc = F::zero();
    if xi_lo < grid[0] {
        let s0 = grid[0].exp();
        let s1 = grid[1].exp();
        let slope = (node(1) - node(0)) / (s1 - s0);
        let intercept = node(0) - slope * s0;
        let (za, zb) = (-trunc, to_z(grid[0].min(xi_hi)));
        if zb > za {
            acc = acc + intercept * int_z(za, zb) + slope * mean_log.exp() * int_exp_z(za, zb);
        }
    }
    let dxi = grid[1] - grid[0];
    let first_cell = ((xi_lo - grid[0]) / dxi).floor().to_usize().unwrap_or(0);
    for l in first_cell..n - 1 {
        if grid[l] >= xi_hi {
            break;
        }
        let a_xi = grid[l].max(xi_lo);
        let b_xi = grid[l + 1].min(xi_hi);
        if b_xi <= a_xi {
            continue;
        }
        let slope = (node(l + 1) - node(l)) / (grid[l + 1] - grid[l]);
        let const_part = node(l) + slope * (mean_log - grid[l]);
        let (za, zb) = (to_z(a_xi), to_z(b_xi));
        acc = acc + const_part * int_z(za, zb) + slope * sbar * int_z2(za, zb);
    }
    if xi_hi > grid[n - 1] {
        let s0 = grid[n - 2].exp();
        let s1 = grid[n - 1].exp();
        let slope = (node(n - 1) - node(n - 2)) / (s1 - s0);
        let intercept = node(n - 1) - slope * s1;
        let (za, zb) = (to_z(grid[n - 1].max(xi_lo)), trunc);
        if zb > za {
            acc = acc + intercept * int_z(za, zb) + slope * mean_log.exp() * int_exp_z(za, zb);
        }
    }
    acc / (s * sbar)
}

/// Optimal strategy at a state: ξ = ψ, ε = (φ - ξ s)/B_t with `accrued_bank`
/// the money-market value B_t, and V = φ.
pub fn strategy_at<F: Real>(
    surface: &PriceSurface<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    payoff: &PayoffSpec<F>,
    state: &MarketState<F>,
    accrued_bank: F,
) -> Result<Strategy<F>, Error> {
    let xi = hedge_ratio(surface, model, spec, payoff, state)?;
    let value = surface.eval(state)?;
    let eps = (value - xi * state.s) / accrued_bank;
    Ok(Strategy { xi, eps, value })
}

/// Monte Carlo estimate of the residual (unhedgeable) risk of a knock-out
/// claim: the expected time-integral of the squared price jumps that a regime
/// switch would cause, rate-weighted, squared-discounted, stopped at knock-out.
pub fn residual_risk<F>(
    surface: &PriceSurface<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    n_paths: usize,
    steps_per_unit: usize,
    seed: u64,
) -> Result<(F, F), Error>
where
    F: SimReal,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    if n_paths == 0 || steps_per_unit == 0 {
        return Err(Error::Argument(
            "residual risk needs paths and a positive step count".into(),
        ));
    }
    let horizon = surface.maturity - state.t;
    if horizon <= F::zero() {
        return Ok((F::zero(), F::zero()));
    }
    let n_steps = ((horizon * F::of_usize(steps_per_unit))
        .ceil()
        .to_usize()
        .unwrap_or(1))
    .max(2);
    let dt = horizon / F::of_usize(n_steps);
    let grid: Vec<F> = (1..=n_steps).map(|q| dt * F::of_usize(q)).collect();
    let k = spec.state_count();

    let mut samples = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let mut chain_rng = sim::path_rng(seed, 2 * p as u64);
        let mut asset_rng = sim::path_rng(seed, 2 * p as u64 + 1);
        let mut path = sim::simulate_chain(
            spec,
            state.regime,
            state.age,
            horizon,
            &mut chain_rng,
            ChainMethod::Thinning,
        )?;
        sim::simulate_asset(
            &mut path,
            model,
            state.s,
            state.t,
            Measure::RiskNeutral,
            &grid,
            &mut asset_rng,
        )?;
        let mut acc = F::zero();
        let mut knocked = false;
        let mut grid_idx = 0usize;
        for &(u, s_u) in &path.asset_samples {
            if grid_idx >= grid.len() {
                break;
            }
            if u != grid[grid_idx] {
                continue;
            }
            grid_idx += 1;
            if let Some(kind) = surface.barrier {
                let hit = match kind {
                    BarrierKind::UpOut(b) => s_u >= b,
                    BarrierKind::DownOut(b) => s_u <= b,
                };
                if hit {
                    knocked = true;
                }
            }
            if knocked {
                break;
            }
            let regime = path.state_at(u);
            let age = path.age_at(u);
            let disc2 = (-(F::of(2.0)) * path.rate_integral(model, u)).exp();
            let here = surface.eval(&MarketState::new(state.t + u, s_u, regime, age))?;
            let mut jump_sq = F::zero();
            for j in 0..k {
                if j != regime {
                    let to = surface.eval_zero(state.t + u, s_u, j);
                    jump_sq = jump_sq
                        + spec.rate_unchecked(regime, j, age) * (to - here) * (to - here);
                }
            }
            acc = acc + disc2 * jump_sq * dt;
        }
        samples.push(acc);
    }
    Ok(sim::mean_and_se(&samples))
}

/// Simulates the discrete-rebalancing hedging cost `C*_T - C*_0`: the value
/// increments not financed by trading gains, discounted to the start. Under
/// the risk-neutral measure the mean vanishes as the rebalance step shrinks.
/// Returns one terminal discounted cost per path.
#[allow(clippy::too_many_arguments)]
pub fn simulate_hedge_cost<F>(
    surface: &PriceSurface<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    n_paths: usize,
    rebalance_dt: F,
    measure: Measure,
    seed: u64,
) -> Result<Vec<F>, Error>
where
    F: SimReal,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    let horizon = surface.maturity - state.t;
    if !(horizon > F::zero()) || !(rebalance_dt > F::zero()) {
        return Err(Error::Argument(
            "hedge-cost simulation needs positive horizon and rebalance step".into(),
        ));
    }
    let n_steps = ((horizon / rebalance_dt).ceil().to_usize().unwrap_or(1)).max(1);
    let dt = horizon / F::of_usize(n_steps);
    let grid: Vec<F> = (1..=n_steps).map(|q| dt * F::of_usize(q)).collect();

    let mut out = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let mut chain_rng = sim::path_rng(seed, 2 * p as u64);
        let mut asset_rng = sim::path_rng(seed, 2 * p as u64 + 1);
        let mut path = sim::simulate_chain(
            spec,
            state.regime,
            state.age,
            horizon,
            &mut chain_rng,
            ChainMethod::Thinning,
        )?;
        sim::simulate_asset(
            &mut path,
            model,
            state.s,
            state.t,
            measure,
            &grid,
            &mut asset_rng,
        )?;

        let value_at = |u: F, s_u: F| -> Result<F, Error> {
            surface.eval(&MarketState::new(
                state.t + u,
                s_u,
                path.state_at(u),
                path.age_at(u),
            ))
        };
        // FD delta on the surface keeps the rebalance loop cheap
        let delta_at = |u: F, s_u: F| -> Result<F, Error> {
            let h = s_u * F::of(1e-4);
            let up = surface.eval(&MarketState::new(
                state.t + u,
                s_u + h,
                path.state_at(u),
                path.age_at(u),
            ))?;
            let dn = surface.eval(&MarketState::new(
                state.t + u,
                s_u - h,
                path.state_at(u),
                path.age_at(u),
            ))?;
            Ok((up - dn) / (h + h))
        };

        let mut cost = F::zero();
        let mut prev_u = F::zero();
        let mut prev_vstar = value_at(F::zero(), state.s)?;
        let mut prev_sstar = state.s;
        let mut xi = delta_at(F::zero(), state.s)?;
        for &(u, s_u) in path.asset_samples.iter() {
            if u <= prev_u {
                continue;
            }
            // only rebalance points and the horizon enter the cost ledger
            let is_grid = grid.binary_search_by(|g| g.partial_cmp(&u).unwrap()).is_ok();
            if !is_grid {
                continue;
            }
            let disc = (-path.rate_integral(model, u)).exp();
            let vstar = disc * value_at(u, s_u)?;
            let sstar = disc * s_u;
            cost = cost + (vstar - prev_vstar) - xi * (sstar - prev_sstar);
            xi = delta_at(u, s_u)?;
            prev_vstar = vstar;
            prev_sstar = sstar;
            prev_u = u;
        }
        out.push(cost);
    }
    Ok(out)
}

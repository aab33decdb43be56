//! Exact simulation of the regime chain and the regime-modulated asset.
//!
//! Two independent chain samplers are provided and cross-validated in tests:
//! thinning reproduces the Poisson-random-measure construction mark by mark
//! (candidate epochs at the uniform rate bound, acceptance intervals laid out
//! consecutively in destination order), while inversion alternates a holding
//! time drawn by inverting the cumulative hazard with a categorical jump draw.
//!
//! Seeding scheme: path `p` of a run with seed `s` uses `ChaCha8Rng` keyed by
//! `s` on stream `2p` for the chain and stream `2p + 1` for the asset, so any
//! subset of paths can be regenerated independently and in parallel.

use rand::distributions::uniform::SampleUniform;
use rand::distributions::{Distribution, Standard, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::Error;
use crate::market::{MarketState, RegimeModel};
use crate::rates::RateSpec;
use crate::scalar::Real;
use crate::solver;

/// Scalar bound for everything that draws random variates.
pub trait SimReal:
    Real + SampleUniform
where
    Standard: Distribution<Self>,
    StandardNormal: Distribution<Self>,
    Exp1: Distribution<Self>,
{
}

impl<F> SimReal for F
where
    F: Real + SampleUniform,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
}

/// One simulated trajectory of the pair (regime, age), optionally carrying
/// asset values and a first-passage record. Times are relative to the start
/// of the simulation window.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord<F> {
    pub x0: usize,
    pub y0: F,
    pub horizon: F,
    /// (time, new state); strictly increasing times, consecutive states differ.
    pub transitions: Vec<(F, usize)>,
    /// (time, price) including 0, all transition times and the horizon.
    pub asset_samples: Vec<(F, F)>,
    /// (barrier level, hit time if any) when a barrier was monitored.
    pub first_passage: Option<(F, Option<F>)>,
}

impl<F: Real> PathRecord<F> {
    fn new(x0: usize, y0: F, horizon: F) -> Self {
        Self {
            x0,
            y0,
            horizon,
            transitions: Vec::new(),
            asset_samples: Vec::new(),
            first_passage: None,
        }
    }

    /// Regime right-continuous in time.
    pub fn state_at(&self, t: F) -> usize {
        let mut state = self.x0;
        for &(tn, xn) in &self.transitions {
            if tn <= t {
                state = xn;
            } else {
                break;
            }
        }
        state
    }

    /// Age right-continuous in time: resets to zero at each transition and
    /// grows linearly in between.
    pub fn age_at(&self, t: F) -> F {
        let mut last: Option<F> = None;
        for &(tn, _) in &self.transitions {
            if tn <= t {
                last = Some(tn);
            } else {
                break;
            }
        }
        match last {
            Some(tn) => t - tn,
            None => self.y0 + t,
        }
    }

    /// `∫_0^upto r(X_u) du` along the path, exact for piecewise-constant rates.
    pub fn rate_integral(&self, model: &RegimeModel<F>, upto: F) -> F {
        let mut acc = F::zero();
        let mut seg_start = F::zero();
        let mut state = self.x0;
        for &(tn, xn) in &self.transitions {
            if tn >= upto {
                break;
            }
            acc = acc + model.rate(state) * (tn - seg_start);
            seg_start = tn;
            state = xn;
        }
        acc + model.rate(state) * (upto - seg_start)
    }
}

/// Chain sampling method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMethod {
    /// Dominating Poisson stream with uniform marks; the construction route.
    Thinning,
    /// Holding-time inversion plus categorical jump draws; the oracle route.
    Inversion,
}

/// Simulation measure for asset paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Drift μ(i) - κ(i).
    Physical,
    /// Drift r(i).
    RiskNeutral,
}

/// Draws the residual holding time at age `y0` in state `i` by inverting the
/// conditional survival function: solves `Λ_i(y0 + u) - Λ_i(y0) = E` with a
/// standard-exponential E. Closed form for families of degree <= 1, monotone
/// safeguarded Newton otherwise.
pub fn sample_holding<F, R>(spec: &RateSpec<F>, i: usize, y0: F, rng: &mut R) -> Result<F, Error>
where
    F: SimReal,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    if i >= spec.state_count() {
        return Err(Error::StateIndex {
            index: i,
            count: spec.state_count(),
        });
    }
    let e: F = rng.sample(Exp1);
    let target = spec.cumulative_hazard_unchecked(i, y0) + e;
    Ok(invert_hazard(spec, i, target)? - y0)
}

/// Solves `Λ_i(y) = target` for y >= 0.
fn invert_hazard<F: Real>(spec: &RateSpec<F>, i: usize, target: F) -> Result<F, Error> {
    let cap = spec.age_cap();
    let at_cap = spec.cumulative_hazard_unchecked(i, cap);
    if target >= at_cap {
        // linear tail beyond the cap
        return Ok(cap + (target - at_cap) / spec.exit_rate(i, cap));
    }
    if spec.degree() == 0 {
        return Ok(target / spec.exit_rate(i, F::zero()));
    }
    if spec.degree() == 1 {
        // Λ(y) = a y + b y²/2
        let a = spec.exit_rate(i, F::zero());
        let b = (spec.exit_rate(i, cap) - a) / cap;
        if b.abs() > F::of(1e-300) {
            let disc = (a * a + F::of(2.0) * b * target).max(F::zero());
            return Ok((disc.sqrt() - a) / b);
        }
        return Ok(target / a);
    }
    // safeguarded Newton on [0, cap]
    let mut lo = F::zero();
    let mut hi = cap;
    let mut y = cap * F::of(0.5);
    let tol = F::of(1e-14) * (F::one() + target);
    for _ in 0..200 {
        let g = spec.cumulative_hazard_unchecked(i, y) - target;
        if g.abs() <= tol {
            return Ok(y);
        }
        if g > F::zero() {
            hi = y;
        } else {
            lo = y;
        }
        let slope = spec.exit_rate(i, y);
        let mut next = if slope > F::zero() { y - g / slope } else { y };
        if !(next > lo && next < hi) {
            next = (lo + hi) * F::of(0.5);
        }
        if (hi - lo).abs() <= F::of(1e-15) * (F::one() + hi) {
            return Ok((lo + hi) * F::of(0.5));
        }
        y = next;
    }
    Err(Error::Numeric {
        what: "hazard inversion did not converge".into(),
        residual: (spec.cumulative_hazard_unchecked(i, y) - target).as_f64(),
    })
}

/// Strictly increasing differentiable time change with η(0) = 0, supplied
/// together with its derivative.
pub struct TimeChange<'a, F> {
    pub map: &'a dyn Fn(F) -> F,
    pub deriv: &'a dyn Fn(F) -> F,
}

impl<'a, F: Real> TimeChange<'a, F> {
    /// Checks monotonicity on a dense grid and returns the sampled sup of the
    /// derivative over `[0, horizon]`.
    fn validate(&self, horizon: F) -> Result<F, Error> {
        let at0 = (self.map)(F::zero());
        if at0.abs() > F::of(1e-12) {
            return Err(Error::Argument(format!(
                "time change must start at zero, got eta(0) = {at0}"
            )));
        }
        let n = 1024usize;
        let mut sup = F::zero();
        let mut prev = at0;
        for q in 0..=n {
            let t = horizon * F::of_usize(q) / F::of_usize(n);
            let d = (self.deriv)(t);
            if !(d > F::zero()) {
                return Err(Error::Argument(format!(
                    "time change derivative must be positive, got {d} at t = {t}"
                )));
            }
            sup = sup.max(d);
            if q > 0 {
                let v = (self.map)(t);
                if v <= prev {
                    return Err(Error::Argument(format!(
                        "time change is not increasing near t = {t}"
                    )));
                }
                prev = v;
            }
        }
        Ok(sup)
    }
}

/// Simulates the (regime, age) pair over `[0, horizon]` from `(x0, y0)`.
pub fn simulate_chain<F, R>(
    spec: &RateSpec<F>,
    x0: usize,
    y0: F,
    horizon: F,
    rng: &mut R,
    method: ChainMethod,
) -> Result<PathRecord<F>, Error>
where
    F: SimReal,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    if x0 >= spec.state_count() {
        return Err(Error::StateIndex {
            index: x0,
            count: spec.state_count(),
        });
    }
    if !(horizon > F::zero()) {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    match method {
        ChainMethod::Thinning => thinning_core(spec, None, x0, y0, horizon, rng),
        ChainMethod::Inversion => inversion_core(spec, x0, y0, horizon, rng),
    }
}

/// Simulates the time-inhomogeneous variant driven by `℘(dη(t), dz)`:
/// thinning at the candidate rate `c · sup η'` with acceptance probability
/// `η'(t) / sup η'`. Reduces path-for-path to [`simulate_chain`] when η is
/// the identity.
pub fn simulate_inhomogeneous<F, R>(
    spec: &RateSpec<F>,
    eta: &TimeChange<'_, F>,
    x0: usize,
    y0: F,
    horizon: F,
    rng: &mut R,
) -> Result<PathRecord<F>, Error>
where
    F: SimReal,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    if x0 >= spec.state_count() {
        return Err(Error::StateIndex {
            index: x0,
            count: spec.state_count(),
        });
    }
    if !(horizon > F::zero()) {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    let sup = eta.validate(horizon)?;
    thinning_core(spec, Some((eta, sup)), x0, y0, horizon, rng)
}

fn thinning_core<F, R>(
    spec: &RateSpec<F>,
    time_change: Option<(&TimeChange<'_, F>, F)>,
    x0: usize,
    y0: F,
    horizon: F,
    rng: &mut R,
) -> Result<PathRecord<F>, Error>
where
    F: SimReal,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    let c = spec.rate_bound();
    let candidate_rate = match time_change {
        Some((_, sup)) => c * sup,
        None => c,
    };
    let mark = Uniform::new(F::zero(), c);
    let mut path = PathRecord::new(x0, y0, horizon);
    let mut t = F::zero();
    let mut state = x0;
    let mut last_jump: Option<F> = None;
    loop {
        let e: F = rng.sample(Exp1);
        t = t + e / candidate_rate;
        if t > horizon {
            break;
        }
        if let Some((tc, sup)) = time_change {
            let ratio = (tc.deriv)(t) / sup;
            if ratio < F::one() {
                let u: F = rng.sample(Standard);
                if u >= ratio {
                    continue;
                }
            }
        }
        let age = match last_jump {
            Some(tj) => t - tj,
            None => y0 + t,
        };
        let z = mark.sample(rng);
        // consecutive left-closed right-open intervals of length λ_ij(age),
        // destinations in ascending order; marks above the exit rate are thinned
        let mut cum = F::zero();
        let mut dest = None;
        for j in 0..spec.state_count() {
            if j == state {
                continue;
            }
            let next = cum + spec.rate_unchecked(state, j, age);
            if z >= cum && z < next {
                dest = Some(j);
                break;
            }
            cum = next;
        }
        if let Some(j) = dest {
            path.transitions.push((t, j));
            state = j;
            last_jump = Some(t);
        }
    }
    Ok(path)
}

fn inversion_core<F, R>(
    spec: &RateSpec<F>,
    x0: usize,
    y0: F,
    horizon: F,
    rng: &mut R,
) -> Result<PathRecord<F>, Error>
where
    F: SimReal,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    let mut path = PathRecord::new(x0, y0, horizon);
    let mut t = F::zero();
    let mut state = x0;
    let mut age0 = y0;
    loop {
        let hold = sample_holding(spec, state, age0, rng)?;
        let age_at_jump = age0 + hold;
        t = t + hold;
        if t > horizon {
            break;
        }
        let z: F = rng.sample(Standard);
        let mut cum = F::zero();
        let mut dest = state;
        for j in 0..spec.state_count() {
            if j == state {
                continue;
            }
            cum = cum + spec.jump_prob(state, j, age_at_jump)?;
            if z < cum {
                dest = j;
                break;
            }
        }
        if dest == state {
            // rounding pushed z past the cumulative sum; take the last
            // destination with positive probability
            for j in (0..spec.state_count()).rev() {
                if j != state && spec.jump_prob(state, j, age_at_jump)? > F::zero() {
                    dest = j;
                    break;
                }
            }
        }
        path.transitions.push((t, dest));
        state = dest;
        age0 = F::zero();
    }
    Ok(path)
}

/// Fills `asset_samples` with an exact lognormal bridge per inter-transition
/// segment: log increments have mean `∫ (b - σ²/2) du` and variance `∫ σ² du`
/// with `b = r` (risk-neutral) or `b = μ - κ` (physical). Absolute market
/// time is `t0` plus the path-relative time; extra `sample_times` are merged
/// with the transition times and the horizon.
pub fn simulate_asset<F, R>(
    path: &mut PathRecord<F>,
    model: &RegimeModel<F>,
    s0: F,
    t0: F,
    measure: Measure,
    sample_times: &[F],
    rng: &mut R,
) -> Result<(), Error>
where
    F: SimReal,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    if !(s0 > F::zero()) {
        return Err(Error::Argument(format!("spot must be positive, got {s0}")));
    }
    let mut times: Vec<F> = Vec::with_capacity(path.transitions.len() + sample_times.len() + 2);
    times.push(F::zero());
    times.extend(path.transitions.iter().map(|&(t, _)| t));
    times.extend(sample_times.iter().copied().filter(|&t| t > F::zero() && t <= path.horizon));
    times.push(path.horizon);
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();

    let mut samples = Vec::with_capacity(times.len());
    let mut log_s = s0.ln();
    samples.push((F::zero(), s0));
    for w in times.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        let state = path.state_at(u0);
        let b = match measure {
            Measure::RiskNeutral => model.rate(state),
            Measure::Physical => model.drift(state) - model.dividend(state),
        };
        let ivar = model.integrated_var(state, t0 + u0, t0 + u1);
        let z: F = rng.sample(StandardNormal);
        log_s = log_s + b * (u1 - u0) - ivar * F::of(0.5) + ivar.sqrt() * z;
        samples.push((u1, log_s.exp()));
    }
    path.asset_samples = samples;
    Ok(())
}

/// Claim priced by Monte Carlo; `maturity` is absolute market time.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimSpec<F> {
    Call { strike: F, maturity: F },
    Put { strike: F, maturity: F },
    Zcb { maturity: F },
    UpOutCall { strike: F, barrier: F, maturity: F },
    DownOutCall { strike: F, barrier: F, maturity: F },
    /// Debt with default only at maturity: pays min(A_T, face).
    BondModel1 { face: F, maturity: F },
    /// Adds the down-and-out call component: min(A_T, face) + (A_T - face)^+
    /// on survival of the barrier.
    BondModel2 { face: F, barrier: F, maturity: F },
    /// Barrier default with constant recovery δ·face paid at default as a
    /// unit bond maturing at T.
    BondModel3 {
        face: F,
        barrier: F,
        recovery: F,
        maturity: F,
    },
}

impl<F: Real> ClaimSpec<F> {
    pub fn maturity(&self) -> F {
        match self {
            ClaimSpec::Call { maturity, .. }
            | ClaimSpec::Put { maturity, .. }
            | ClaimSpec::Zcb { maturity }
            | ClaimSpec::UpOutCall { maturity, .. }
            | ClaimSpec::DownOutCall { maturity, .. }
            | ClaimSpec::BondModel1 { maturity, .. }
            | ClaimSpec::BondModel2 { maturity, .. }
            | ClaimSpec::BondModel3 { maturity, .. } => *maturity,
        }
    }

    fn needs_monitoring(&self) -> Option<(F, bool)> {
        match self {
            ClaimSpec::UpOutCall { barrier, .. } => Some((*barrier, true)),
            ClaimSpec::DownOutCall { barrier, .. }
            | ClaimSpec::BondModel2 { barrier, .. }
            | ClaimSpec::BondModel3 { barrier, .. } => Some((*barrier, false)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        match self {
            ClaimSpec::BondModel3 {
                face,
                barrier,
                recovery,
                ..
            } => {
                let cap = *barrier / *face;
                if *recovery < F::zero() || *recovery > cap {
                    return Err(Error::Argument(format!(
                        "recovery rate {recovery} outside [0, barrier/face = {cap}]"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Monte Carlo price of `claim` from `state` under risk-neutral dynamics:
/// sample mean and standard error of the pathwise discounted payoff.
/// Barriers are monitored on a uniform grid of `barrier_steps` points per
/// unit time (no continuity correction; the discretization bias is accounted
/// for in downstream tolerances).
pub fn mc_price<F>(
    claim: &ClaimSpec<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    n_paths: usize,
    seed: u64,
    barrier_steps: usize,
) -> Result<(F, F), Error>
where
    F: SimReal,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    let zcb_curve = match claim {
        ClaimSpec::BondModel3 { maturity, .. } => Some(solver::solve_zcb(
            model,
            spec,
            *maturity,
            513,
            F::of(1e-10),
        )?),
        _ => None,
    };
    let zcb_fn = zcb_curve
        .as_ref()
        .map(|curve| move |t: F, i: usize, y: F| curve.value(model, spec, t, i, y));
    let samples = discounted_payoff_samples(
        claim,
        model,
        spec,
        state,
        n_paths,
        seed,
        barrier_steps,
        zcb_fn.as_ref().map(|f| f as &dyn Fn(F, usize, F) -> F),
    )?;
    Ok(mean_and_se(&samples))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se<F: Real>(samples: &[F]) -> (F, F) {
    let n = F::of_usize(samples.len());
    let mean = samples.iter().fold(F::zero(), |a, &b| a + b) / n;
    if samples.len() < 2 {
        return (mean, F::zero());
    }
    let var = samples
        .iter()
        .fold(F::zero(), |a, &b| a + (b - mean) * (b - mean))
        / (n - F::one());
    (mean, (var / n).sqrt())
}

/// Pathwise discounted payoffs; the reusable engine behind [`mc_price`] and
/// the structural-bond layer.
#[allow(clippy::too_many_arguments)]
pub(crate) fn discounted_payoff_samples<F>(
    claim: &ClaimSpec<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    n_paths: usize,
    seed: u64,
    barrier_steps: usize,
    zcb: Option<&dyn Fn(F, usize, F) -> F>,
) -> Result<Vec<F>, Error>
where
    F: SimReal,
    Standard: Distribution<F>,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
{
    claim.validate()?;
    if n_paths == 0 {
        return Err(Error::Argument("n_paths must be at least 1".into()));
    }
    if state.regime >= spec.state_count() {
        return Err(Error::StateIndex {
            index: state.regime,
            count: spec.state_count(),
        });
    }
    let horizon = claim.maturity() - state.t;
    if horizon < F::zero() {
        return Err(Error::Argument("claim already expired".into()));
    }
    if horizon == F::zero() {
        let value = terminal_payoff(claim, state.s, false);
        return Ok(vec![value; n_paths]);
    }

    let monitoring = claim.needs_monitoring();
    let monitor_times: Vec<F> = match monitoring {
        Some(_) => {
            let dt = F::one() / F::of_usize(barrier_steps.max(1));
            let mut times: Vec<F> = Vec::new();
            let mut q = 1usize;
            loop {
                let t = dt * F::of_usize(q);
                if t >= horizon {
                    break;
                }
                times.push(t);
                q += 1;
            }
            times.push(horizon);
            times
        }
        None => Vec::new(),
    };

    let mut out = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let mut chain_rng = path_rng(seed, 2 * p as u64);
        let mut asset_rng = path_rng(seed, 2 * p as u64 + 1);
        let mut path = simulate_chain(
            spec,
            state.regime,
            state.age,
            horizon,
            &mut chain_rng,
            ChainMethod::Thinning,
        )?;
        simulate_asset(
            &mut path,
            model,
            state.s,
            state.t,
            Measure::RiskNeutral,
            &monitor_times,
            &mut asset_rng,
        )?;

        // barrier check at the monitor times only
        let mut hit: Option<F> = None;
        if let Some((level, is_up)) = monitoring {
            let crossed_at_start = if is_up { state.s >= level } else { state.s <= level };
            if crossed_at_start {
                hit = Some(F::zero());
            } else {
                let mut mon_idx = 0usize;
                for &(t, s) in &path.asset_samples {
                    if mon_idx >= monitor_times.len() {
                        break;
                    }
                    if t == monitor_times[mon_idx] {
                        mon_idx += 1;
                        let crossed = if is_up { s >= level } else { s < level };
                        if crossed {
                            hit = Some(t);
                            break;
                        }
                    }
                }
            }
            path.first_passage = Some((level, hit));
        }

        let terminal = path
            .asset_samples
            .last()
            .expect("asset samples are non-empty")
            .1;
        let value = match (claim, hit) {
            (ClaimSpec::BondModel3 { face, recovery, maturity, .. }, Some(tau)) if tau < horizon => {
                let zcb = zcb.ok_or_else(|| {
                    Error::Argument("bond model 3 requires a discount curve".into())
                })?;
                let disc = (-path.rate_integral(model, tau)).exp();
                let b = zcb(state.t + tau, path.state_at(tau), path.age_at(tau));
                let _ = maturity;
                disc * *recovery * *face * b
            }
            _ => {
                let disc = (-path.rate_integral(model, horizon)).exp();
                disc * terminal_payoff_with_hit(claim, terminal, hit)
            }
        };
        out.push(value);
    }
    Ok(out)
}

fn terminal_payoff_with_hit<F: Real>(claim: &ClaimSpec<F>, s_t: F, hit: Option<F>) -> F {
    terminal_payoff(claim, s_t, hit.is_some())
}

fn terminal_payoff<F: Real>(claim: &ClaimSpec<F>, s_t: F, knocked: bool) -> F {
    match claim {
        ClaimSpec::Call { strike, .. } => (s_t - *strike).max(F::zero()),
        ClaimSpec::Put { strike, .. } => (*strike - s_t).max(F::zero()),
        ClaimSpec::Zcb { .. } => F::one(),
        ClaimSpec::UpOutCall { strike, .. } | ClaimSpec::DownOutCall { strike, .. } => {
            if knocked {
                F::zero()
            } else {
                (s_t - *strike).max(F::zero())
            }
        }
        ClaimSpec::BondModel1 { face, .. } => s_t.min(*face),
        ClaimSpec::BondModel2 { face, .. } => {
            let base = s_t.min(*face);
            if knocked {
                base
            } else {
                base + (s_t - *face).max(F::zero())
            }
        }
        // no premature default: same payoff as model 1
        ClaimSpec::BondModel3 { face, .. } => s_t.min(*face),
    }
}

/// RNG for one logical stream of a seeded run.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

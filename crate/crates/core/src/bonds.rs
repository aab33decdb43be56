//! Structural defaultable-bond pricing by composition of vanilla, barrier and
//! zero-coupon prices: default at maturity only (Merton), premature default
//! at an asset barrier, and barrier default with constant recovery paid at
//! the default time.

use rand::distributions::{Distribution, Standard};
use rand_distr::{Exp1, StandardNormal};

use crate::error::Error;
use crate::market::{MarketState, RegimeModel};
use crate::rates::RateSpec;
use crate::scalar::Real;
use crate::sim::{self, ClaimSpec, SimReal};
use crate::solver::{PriceSurface, ZcbCurve};

/// Debt and equity values of the firm at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebtEquity<F> {
    pub debt: F,
    pub equity: F,
}

/// Default only at maturity: debt pays `min(A_T, face)`, equity `(A_T - face)^+`.
/// Priced as `face·B - put` and `call` on the firm's asset value.
pub fn merton_bond<F: Real>(
    call: &PriceSurface<F>,
    put: &PriceSurface<F>,
    zcb: &ZcbCurve<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    face: F,
) -> Result<DebtEquity<F>, Error> {
    if !(face > F::zero()) {
        return Err(Error::Argument(format!("face value must be positive, got {face}")));
    }
    let b = zcb.value(model, spec, state.t, state.regime, state.age);
    let put_value = put.eval(state)?;
    let equity = call.eval(state)?;
    let debt = (face * b - put_value).max(F::zero());
    Ok(DebtEquity { debt, equity })
}

/// Premature default when the asset value reaches `barrier` (< face): the
/// Merton components plus a long down-and-out call with strike `face` and
/// the asset barrier, so bondholders keep the upside on survival.
#[allow(clippy::too_many_arguments)]
pub fn covenant_bond<F: Real>(
    call: &PriceSurface<F>,
    put: &PriceSurface<F>,
    down_out_call: &PriceSurface<F>,
    zcb: &ZcbCurve<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    face: F,
    barrier: F,
) -> Result<DebtEquity<F>, Error> {
    if !(barrier > F::zero() && barrier < face) {
        return Err(Error::Argument(format!(
            "covenant barrier must satisfy 0 < barrier < face, got {barrier} vs {face}"
        )));
    }
    if state.s <= barrier {
        return Err(Error::AlreadyDefaulted {
            spot: state.s.as_f64(),
            barrier: barrier.as_f64(),
        });
    }
    let base = merton_bond(call, put, zcb, model, spec, state, face)?;
    let protection = down_out_call.eval(state)?;
    Ok(DebtEquity {
        debt: base.debt + protection,
        equity: base.equity,
    })
}

/// Barrier default with constant recovery: pays `min(A_T, face)` when no
/// premature default happens and `recovery · face` units of the zero-coupon
/// bond at the default time otherwise. Monte Carlo estimate (mean, standard
/// error); the recovery leg discounts a ZCB value at the simulated default
/// state, age included.
#[allow(clippy::too_many_arguments)]
pub fn recovery_bond<F>(
    zcb: &ZcbCurve<F>,
    model: &RegimeModel<F>,
    spec: &RateSpec<F>,
    state: &MarketState<F>,
    face: F,
    barrier: F,
    recovery: F,
    maturity: F,
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
    let claim = ClaimSpec::BondModel3 {
        face,
        barrier,
        recovery,
        maturity,
    };
    let zcb_fn = |t: F, i: usize, y: F| zcb.value(model, spec, t, i, y);
    let samples = sim::discounted_payoff_samples(
        &claim,
        model,
        spec,
        state,
        n_paths,
        seed,
        barrier_steps,
        Some(&zcb_fn),
    )?;
    Ok(sim::mean_and_se(&samples))
}

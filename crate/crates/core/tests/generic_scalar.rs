//! The whole pipeline instantiates at f32 as well as f64; accuracy targets
//! here are loose, the point is that the generic bounds hold end to end.

use smrs_core::bsm::{PayoffSpec, VolProfile};
use smrs_core::market::{MarketState, RegimeModel};
use smrs_core::rates::RateSpec;
use smrs_core::sim::{self, ClaimSpec};
use smrs_core::solver::{solve_vanilla, solve_zcb, GridSpec};

#[test]
fn f32_pipeline_end_to_end() {
    let spec = RateSpec::<f32>::new(&[vec![vec![-1.0, 1.0], vec![2.0, -2.0]]], 4.0).unwrap();
    let model = RegimeModel::new(
        vec![0.05f32, 0.05],
        vec![0.05, 0.05],
        vec![0.0, 0.0],
        VolProfile::constant(vec![0.2f32, 0.2]),
    )
    .unwrap();
    let payoff = PayoffSpec::call(1.0f32).unwrap();
    let grid = GridSpec {
        n_t: 9,
        n_s: 65,
        n_y: 3,
        n_v: 1,
        n_x: 32,
        s_min: 0.25f32,
        s_max: 4.0,
        trunc_sd: 6.0,
    };
    let surface = solve_vanilla(&model, &spec, &payoff, 1.0, &grid, 1e-4, None).unwrap();
    let price = surface.eval_zero(0.0, 1.0, 0);
    assert!(
        (price - 0.1045f32).abs() < 5e-3,
        "f32 solve gave {price}, expected near the Black-Scholes value"
    );

    let curve = solve_zcb(&model, &spec, 1.0f32, 65, 1e-5).unwrap();
    let b = curve.value_zero_age(0.0, 0);
    assert!((b - (-0.05f32).exp()).abs() < 1e-3);

    let claim = ClaimSpec::Call {
        strike: 1.0f32,
        maturity: 1.0,
    };
    let state = MarketState::new(0.0f32, 1.0, 0, 0.0);
    let (mc, se) = sim::mc_price(&claim, &model, &spec, &state, 4_000, 5, 8).unwrap();
    assert!(
        (mc - price).abs() <= 3.0 * se + 5e-3,
        "f32 Monte Carlo {mc} ± {se} vs solver {price}"
    );
}

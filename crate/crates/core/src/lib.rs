//! Pricing and hedging library for markets whose drift, volatility and short
//! rate switch with an age-dependent semi-Markov regime process.
//!
//! The crate is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); concrete `f64` aliases live at the crate root.

// NaN-rejecting guards read as !(x > 0), and index loops mirror the k x k
// matrix algebra they implement
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

pub mod bsm;
pub mod error;
pub mod market;
pub mod numeric;
pub mod rates;
pub mod scalar;

pub use error::{Error, ValidationError};
pub use scalar::Real;

/// k×k polynomial rate family over `f64`.
pub type RateSpec64 = rates::RateSpec<f64>;
/// Per-regime market parameters over `f64`.
pub type RegimeModel64 = market::RegimeModel<f64>;
/// Evaluation point over `f64`.
pub type MarketState64 = market::MarketState<f64>;
/// Volatility profile over `f64`.
pub type VolProfile64 = bsm::VolProfile<f64>;
/// Payoff description over `f64`.
pub type PayoffSpec64 = bsm::PayoffSpec<f64>;

pub mod sim;
pub mod solver;

/// Simulated trajectory over `f64`.
pub type PathRecord64 = sim::PathRecord<f64>;
/// Monte Carlo claim over `f64`.
pub type ClaimSpec64 = sim::ClaimSpec<f64>;
/// Solver grid over `f64`.
pub type GridSpec64 = solver::GridSpec<f64>;
/// Price surface over `f64`.
pub type PriceSurface64 = solver::PriceSurface<f64>;
/// Zero-coupon curve over `f64`.
pub type ZcbCurve64 = solver::ZcbCurve<f64>;

pub mod bonds;
pub mod hedge;

/// Hedge portfolio over `f64`.
pub type Strategy64 = hedge::Strategy<f64>;

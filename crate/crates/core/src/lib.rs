//! Numerical engine for publish-and-read ("PAR") fee schedules.
//!
//! A publisher prices a bundled agreement covering both publishing services
//! and read access. At contracted volume `n` the per-article fee tracks
//! whichever component is worth more, which makes the schedule
//! `fee(n) = max(pi(n), rho(n))` piecewise smooth with a kink where the two
//! cross. The crate computes the schedule, its comparative statics, and the
//! fixed-budget two-publisher market built on top of it:
//!
//! - [`curve`]: closed-form curve families for the two fee components and
//!   their role contracts (publish: concave rising; read: flat or falling);
//! - [`publisher`]: validated publisher bundles with their cost structure;
//! - [`fee`]: the fee rule, the active-regime weight, the schedule's slope,
//!   and the regime-crossing threshold;
//! - [`profit`]: profit, the decomposed marginal profit, and the
//!   profit-stabilized fee schedule;
//! - [`numerics`]: bisection, central differences, grid sweeps, and
//!   derivative cross-checks — independent of the model, so they can serve
//!   as oracles for it;
//! - [`duopoly`]: a fixed budget split between a bundled publisher and a
//!   fully open-access publisher, the budget-implied OA fee, and the sign
//!   classification of its response to volume shifts.
//!
//! Quantities are abstract positive reals; no currency handling anywhere.
//! Everything is deterministic: sweeps return rows in grid order whether or
//! not the `parallel` feature (rayon, on by default) is active.

// Negated comparisons such as `!(n >= 0.0)` are deliberate throughout: they
// reject NaN along with out-of-range values, where `n < 0.0` would let NaN
// slip past the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod duopoly;
pub mod fee;
pub mod numerics;
pub mod profit;
pub mod publisher;

pub use curve::{CurveError, CurveFamily, CurveSpec, Role};
pub use duopoly::{
    DuopolyError, DuopolyMarket, ImpliedFee, MarketCase, ResponseSign, ShiftClassification,
    ShiftDecomposition, ShiftRecord,
};
pub use fee::{compose_fee, Alpha, FeeDecomposition, FeeSlope, RegimeThreshold};
pub use numerics::{
    bisect, check_derivative, check_derivative_seq, fd_derivative, fd_step, sweep, sweep_seq,
    try_fd_derivative, DerivativeRecord, DerivativeReport, Grid, NumericsError, Root, SweepRow,
    SweepTable,
};
pub use profit::{MarginalProfit, StabilizedSchedule};
pub use publisher::{ModelError, OaPublisher, TaPublisher};

//! A two-publisher market with a fixed library budget.
//!
//! A bundled-agreement publisher and a fully open-access publisher share a
//! fixed total volume `n_total` and a fixed budget: when `s` publications
//! move to the OA side, the budget that the bundled side no longer absorbs
//! determines what the OA side can charge per article. The OA fee is
//! therefore *implied* by the budget identity `budget = fee_ta * n_ta +
//! fee_oa * s`, not set strategically.
//!
//! Differentiating that identity in `s` links the two fee responses:
//!
//! `s * d(fee_oa)/ds  =  n_ta * fee_ta'(n_ta)  -  (fee_oa - fee_ta)`
//!
//! [`DuopolyMarket::shift_decomposition`] evaluates the left side by central
//! difference and the right side analytically; the sign of the left side is
//! what [`DuopolyMarket::classify_shift`] reports, with a near-zero band for
//! the knife-edge flat-read case where the two right-hand terms cancel.

use thiserror::Error;

use crate::curve::CurveFamily;
use crate::fee::{Alpha, FeeSlope};
use crate::numerics::{self, Grid, SweepTable};
use crate::publisher::{ModelError, OaPublisher, TaPublisher};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DuopolyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("market requires finite budget > 0 and n_total > 0 (got budget = {budget}, n_total = {n_total})")]
    BadMarket { budget: f64, n_total: f64 },
    #[error("publish curves must share one family and shape, differing only in intercept (ta: {ta}, oa: {oa})")]
    ShapeMismatch { ta: String, oa: String },
    #[error("publish intercepts must be ordered ta >= oa (got ta = {ta_a}, oa = {oa_a})")]
    InterceptOrder { ta_a: f64, oa_a: f64 },
    #[error("oa volume s = {s} must lie in (0, {n_total}]")]
    ShiftOutOfRange { s: f64, n_total: f64 },
    #[error("difference stencil [{lo}, {hi}] leaves the open split interval (0, {n_total})")]
    StencilOutOfRange { lo: f64, hi: f64, n_total: f64 },
    #[error(
        "ta fee schedule has a regime kink near n = {n}; the split response is undefined there"
    )]
    KinkProximity { n: f64 },
    #[error("step h must be positive and finite (got {0})")]
    BadStep(f64),
    #[error("sweep grid [{lo}, {hi}] must lie strictly inside (0, {n_total})")]
    GridOutOfRange { lo: f64, hi: f64, n_total: f64 },
}

/// The budget-implied OA fee at one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedFee {
    pub fee: f64,
    /// Set when the implied fee is not positive: the budget cannot sustain
    /// this split. The value is still reported — it is meaningful output,
    /// not an error.
    pub infeasible: bool,
}

/// The two sides of the budget-identity derivative at one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftDecomposition {
    /// `s * d(fee_oa)/ds`, estimated by central difference.
    pub oa_term: f64,
    /// `n_ta * fee_ta'(n_ta)`, evaluated analytically.
    pub ta_term: f64,
    /// `fee_oa - fee_ta` at the split.
    pub fee_gap: f64,
    /// `oa_term - (ta_term - fee_gap)`; near zero whenever the budget
    /// identity holds and the schedule is smooth at `n_ta`.
    pub residual: f64,
}

/// Which analytic case a split falls into, named by the bundled side's
/// regime and read-curve shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketCase {
    /// Bundled fee tracks the publish component.
    PublishRegime,
    /// Read regime with a flat read curve.
    ReadFlat,
    /// Read regime with a declining read curve.
    ReadDeclining,
}

impl MarketCase {
    /// Stable label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            MarketCase::PublishRegime => "alpha1",
            MarketCase::ReadFlat => "alpha0_fixed_rho",
            MarketCase::ReadDeclining => "alpha0_convex_rho",
        }
    }
}

/// Sign of the OA fee response at a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseSign {
    Positive,
    NearZero,
    Negative,
}

impl ResponseSign {
    pub fn label(self) -> &'static str {
        match self {
            ResponseSign::Positive => "positive",
            ResponseSign::NearZero => "near_zero",
            ResponseSign::Negative => "negative",
        }
    }
}

/// Classified OA fee response at one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftClassification {
    pub case: MarketCase,
    pub sign: ResponseSign,
    /// `s * d(fee_oa)/ds`, the quantity whose sign is classified.
    pub oa_term: f64,
    pub fee_gap: f64,
    /// The band actually used for the near-zero decision.
    pub band: f64,
    /// Whether `|oa_term|` stays within `|fee_gap|` (plus numerical guard):
    /// the slack that the flat-read case is allowed.
    pub within_gap: bool,
}

/// One row of a split sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRecord {
    pub s: f64,
    pub n_ta: f64,
    pub fee_ta: f64,
    pub fee_oa: f64,
    pub alpha_ta: Alpha,
    pub revenue_ta: f64,
    pub revenue_oa: f64,
    /// Central-difference `d/ds` of OA revenue `fee_oa * s`; `None` when
    /// the stencil would leave the valid split range.
    pub d_oa_revenue: Option<f64>,
    /// `(revenue_ta + revenue_oa - budget) / budget`.
    pub budget_residual: f64,
    pub infeasible: bool,
    /// `None` on rows where the stencil straddles the bundled schedule's
    /// kink (no classification is defined there).
    pub classification: Option<ShiftClassification>,
}

/// A fixed-budget market shared by a bundled publisher and an OA publisher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuopolyMarket {
    budget: f64,
    n_total: f64,
    ta: TaPublisher,
    oa: OaPublisher,
}

fn same_shape(ta: CurveFamily, oa: CurveFamily) -> bool {
    match (ta, oa) {
        (
            CurveFamily::Power {
                b: b1, gamma: g1, ..
            },
            CurveFamily::Power {
                b: b2, gamma: g2, ..
            },
        ) => b1 == b2 && g1 == g2,
        (CurveFamily::LogAffine { b: b1, .. }, CurveFamily::LogAffine { b: b2, .. }) => b1 == b2,
        (CurveFamily::Affine { b: b1, .. }, CurveFamily::Affine { b: b2, .. }) => b1 == b2,
        (CurveFamily::Constant { .. }, CurveFamily::Constant { .. }) => true,
        (
            CurveFamily::Hyperbolic { b: b1, s: s1, .. },
            CurveFamily::Hyperbolic { b: b2, s: s2, .. },
        ) => b1 == b2 && s1 == s2,
        _ => false,
    }
}

impl DuopolyMarket {
    /// Build and validate a market.
    ///
    /// The two publish curves must be the same family with identical shape
    /// parameters, differing only in intercept — that is what makes their
    /// slopes equal at every volume, which the decomposition relies on —
    /// and the bundled side's intercept must not be below the OA side's.
    pub fn new(
        budget: f64,
        n_total: f64,
        ta: TaPublisher,
        oa: OaPublisher,
    ) -> Result<Self, DuopolyError> {
        if !(budget.is_finite() && budget > 0.0 && n_total.is_finite() && n_total > 0.0) {
            return Err(DuopolyError::BadMarket { budget, n_total });
        }
        let ta_pub = ta.publish().family();
        let oa_pub = oa.publish().family();
        if !same_shape(ta_pub, oa_pub) {
            return Err(DuopolyError::ShapeMismatch {
                ta: ta_pub.to_string(),
                oa: oa_pub.to_string(),
            });
        }
        let ta_a = ta.publish().intercept();
        let oa_a = oa.publish().intercept();
        if !(ta_a >= oa_a) {
            return Err(DuopolyError::InterceptOrder { ta_a, oa_a });
        }
        Ok(DuopolyMarket {
            budget,
            n_total,
            ta,
            oa,
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn n_total(&self) -> f64 {
        self.n_total
    }

    pub fn ta(&self) -> &TaPublisher {
        &self.ta
    }

    pub fn oa(&self) -> &OaPublisher {
        &self.oa
    }

    /// Bundled-side volume at split `s`.
    pub fn ta_volume(&self, s: f64) -> f64 {
        self.n_total - s
    }

    /// The OA fee implied by the budget identity at split `s`.
    pub fn implied_oa_fee(&self, s: f64) -> Result<ImpliedFee, DuopolyError> {
        if !(s.is_finite() && s > 0.0 && s <= self.n_total) {
            return Err(DuopolyError::ShiftOutOfRange {
                s,
                n_total: self.n_total,
            });
        }
        let n_ta = self.n_total - s;
        let revenue_ta = if n_ta == 0.0 {
            0.0
        } else {
            self.ta.par_fee(n_ta)?.fee * n_ta
        };
        let fee = (self.budget - revenue_ta) / s;
        Ok(ImpliedFee {
            fee,
            infeasible: !(fee > 0.0),
        })
    }

    /// The market case at split `s`: the bundled regime there, refined by
    /// the read-curve shape when the read component is the binding one.
    pub fn market_case(&self, s: f64) -> Result<MarketCase, DuopolyError> {
        let n_ta = self.ta_volume(s);
        let alpha = self.ta.optimal_alpha(n_ta)?;
        Ok(match alpha {
            Alpha::Publish => MarketCase::PublishRegime,
            Alpha::Read => {
                let flat = match self.ta.read().family() {
                    CurveFamily::Constant { .. } => true,
                    CurveFamily::Affine { b, .. } => b == 0.0,
                    _ => false,
                };
                if flat {
                    MarketCase::ReadFlat
                } else {
                    MarketCase::ReadDeclining
                }
            }
        })
    }

    /// Both sides of the budget-identity derivative at split `s`, using a
    /// central difference with step `h` for the OA side.
    ///
    /// The split must sit strictly inside `(0, n_total)` with the whole
    /// stencil feasible, and the bundled schedule must be smooth across the
    /// stencil: if the regime flips between `n_ta - h` and `n_ta + h` the
    /// comparison would mix branches, so a kink error is returned instead.
    pub fn shift_decomposition(&self, s: f64, h: f64) -> Result<ShiftDecomposition, DuopolyError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(DuopolyError::BadStep(h));
        }
        if !(s.is_finite() && s - h > 0.0 && s + h < self.n_total) {
            return Err(DuopolyError::StencilOutOfRange {
                lo: s - h,
                hi: s + h,
                n_total: self.n_total,
            });
        }
        let n_ta = self.n_total - s;
        let alpha_left = self.ta.optimal_alpha(n_ta - h)?;
        let alpha_right = self.ta.optimal_alpha(n_ta + h)?;
        if alpha_left != alpha_right {
            return Err(DuopolyError::KinkProximity { n: n_ta });
        }
        let ta_slope = match self.ta.fee_derivative(n_ta)? {
            FeeSlope::Smooth(d) => d,
            FeeSlope::Kink { .. } => return Err(DuopolyError::KinkProximity { n: n_ta }),
        };
        let oa_slope =
            numerics::try_fd_derivative(|x| self.implied_oa_fee(x).map(|i| i.fee), s, h)?;
        let fee_ta = self.ta.par_fee(n_ta)?.fee;
        let fee_oa = self.implied_oa_fee(s)?.fee;
        let oa_term = s * oa_slope;
        let ta_term = n_ta * ta_slope;
        let fee_gap = fee_oa - fee_ta;
        Ok(ShiftDecomposition {
            oa_term,
            ta_term,
            fee_gap,
            residual: oa_term - (ta_term - fee_gap),
        })
    }

    /// Classify the sign of the OA fee response at split `s`.
    ///
    /// `near_zero_band` defaults to `|fee_gap|` at the point: a response
    /// within one fee differential of zero counts as near zero. A small
    /// guard proportional to the band absorbs finite-difference noise, which
    /// matters because the flat-read case lands exactly on the band edge.
    pub fn classify_shift(
        &self,
        s: f64,
        near_zero_band: Option<f64>,
    ) -> Result<ShiftClassification, DuopolyError> {
        let decomp = self.shift_decomposition(s, numerics::fd_step(s))?;
        let case = self.market_case(s)?;
        let band = near_zero_band.unwrap_or_else(|| decomp.fee_gap.abs());
        let guard = 1e-6 * (1.0 + band.abs());
        let sign = if decomp.oa_term > band + guard {
            ResponseSign::Positive
        } else if decomp.oa_term < -(band + guard) {
            ResponseSign::Negative
        } else {
            ResponseSign::NearZero
        };
        Ok(ShiftClassification {
            case,
            sign,
            oa_term: decomp.oa_term,
            fee_gap: decomp.fee_gap,
            band,
            within_gap: decomp.oa_term.abs() <= decomp.fee_gap.abs() + guard,
        })
    }

    /// Evaluate the market over a grid of splits. The grid must lie
    /// strictly inside `(0, n_total)`; individual row failures are captured
    /// per row rather than aborting the sweep.
    pub fn shift_sweep(
        &self,
        grid: &Grid,
        near_zero_band: Option<f64>,
    ) -> Result<SweepTable<ShiftRecord, DuopolyError>, DuopolyError> {
        if !(grid.lo() > 0.0 && grid.hi() < self.n_total) {
            return Err(DuopolyError::GridOutOfRange {
                lo: grid.lo(),
                hi: grid.hi(),
                n_total: self.n_total,
            });
        }
        Ok(numerics::sweep(grid, |s| {
            self.shift_record(s, near_zero_band)
        }))
    }

    fn shift_record(
        &self,
        s: f64,
        near_zero_band: Option<f64>,
    ) -> Result<ShiftRecord, DuopolyError> {
        let implied = self.implied_oa_fee(s)?;
        let n_ta = self.n_total - s;
        let dec = self.ta.par_fee(n_ta)?;
        let revenue_ta = dec.fee * n_ta;
        let revenue_oa = implied.fee * s;
        let budget_residual = (revenue_ta + revenue_oa - self.budget) / self.budget;
        let h = numerics::fd_step(s);
        let d_oa_revenue = if s - h > 0.0 && s + h < self.n_total {
            numerics::try_fd_derivative(|x| self.implied_oa_fee(x).map(|i| i.fee * x), s, h).ok()
        } else {
            None
        };
        let classification = match self.classify_shift(s, near_zero_band) {
            Ok(c) => Some(c),
            Err(DuopolyError::KinkProximity { .. })
            | Err(DuopolyError::StencilOutOfRange { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(ShiftRecord {
            s,
            n_ta,
            fee_ta: dec.fee,
            fee_oa: implied.fee,
            alpha_ta: dec.alpha,
            revenue_ta,
            revenue_oa,
            d_oa_revenue,
            budget_residual,
            infeasible: implied.infeasible,
            classification,
        })
    }
}

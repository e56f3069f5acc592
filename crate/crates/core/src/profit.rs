//! Profit level, its decomposed volume response, and the stabilized
//! (profit-preserving) fee schedule.
//!
//! Profit at volume `n` is `n * (fee(n) - marginal_cost) - fixed_cost`.
//! Its derivative in `n` splits into the margin on the marginal article,
//! the fee response along the active component, and a regime-switch term
//! that is identically zero inside a regime (the weight sits at a corner
//! and does not move). At the kink itself only one-sided values exist.

use crate::fee::{Alpha, FeeSlope};
use crate::publisher::{ModelError, TaPublisher};

/// Marginal profit split into its terms:
/// `total = margin + n * (fee_response + regime_term)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalProfit {
    /// Margin earned on the marginal article: `fee - marginal_cost`.
    pub margin: f64,
    /// Fee movement along the active component, applied to all `n` articles.
    pub fee_response: f64,
    /// Contribution from the weight moving; zero in regime interiors.
    pub regime_term: f64,
    pub total: f64,
}

impl TaPublisher {
    /// Profit at volume `n >= 0`.
    pub fn profit(&self, n: f64) -> Result<f64, ModelError> {
        if !(n >= 0.0) {
            return Err(ModelError::NonpositiveVolume { n });
        }
        let fee = self.par_fee(n)?.fee;
        Ok(n * (fee - self.marginal_cost()) - self.fixed_cost())
    }

    /// Marginal profit along one fixed regime branch: the derivative of
    /// `n * (component(n) - c) - F` for the chosen component. Away from the
    /// kink this equals [`TaPublisher::marginal_profit`] only when `alpha`
    /// is the active regime; at the kink it is the one-sided value.
    pub fn marginal_profit_in(&self, n: f64, alpha: Alpha) -> Result<MarginalProfit, ModelError> {
        if !(n > 0.0) {
            return Err(ModelError::NonpositiveVolume { n });
        }
        let (publish, read) = self.components(n)?;
        let (part, slope) = match alpha {
            Alpha::Publish => (publish, self.publish().derivative(n)),
            Alpha::Read => (read, self.read().derivative(n)),
        };
        let margin = part - self.marginal_cost();
        let fee_response = slope;
        let regime_term = 0.0;
        Ok(MarginalProfit {
            margin,
            fee_response,
            regime_term,
            total: margin + n * (fee_response + regime_term),
        })
    }

    /// Marginal profit at `n`, in the regime that is active there.
    ///
    /// At an exact component tie no two-sided derivative exists and
    /// [`ModelError::KinkAt`] is returned; use
    /// [`TaPublisher::marginal_profit_in`] for the one-sided branches.
    pub fn marginal_profit(&self, n: f64) -> Result<MarginalProfit, ModelError> {
        if !(n > 0.0) {
            return Err(ModelError::NonpositiveVolume { n });
        }
        match self.fee_derivative(n)? {
            FeeSlope::Kink { .. } => Err(ModelError::KinkAt { n }),
            FeeSlope::Smooth(_) => {
                let alpha = self.optimal_alpha(n)?;
                self.marginal_profit_in(n, alpha)
            }
        }
    }
}

/// A fee schedule flattened so profit stays at a fixed target over an
/// agreed volume interval.
///
/// Inside `[n_lo, n_hi]` the per-article fee is
/// `marginal_cost + (target_profit + fixed_cost) / n`, which holds profit
/// exactly at `target_profit` (the publisher's profit at `n_hi`); outside
/// the interval the ordinary component-maximum fee applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizedSchedule {
    publisher: TaPublisher,
    n_lo: f64,
    n_hi: f64,
    target_profit: f64,
}

impl StabilizedSchedule {
    pub fn new(publisher: TaPublisher, n_lo: f64, n_hi: f64) -> Result<Self, ModelError> {
        if !(n_lo.is_finite() && n_hi.is_finite() && n_lo > 0.0 && n_lo <= n_hi) {
            return Err(ModelError::BadStabilizeInterval { n_lo, n_hi });
        }
        let target_profit = publisher.profit(n_hi)?;
        Ok(StabilizedSchedule {
            publisher,
            n_lo,
            n_hi,
            target_profit,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.n_lo, self.n_hi)
    }

    pub fn target_profit(&self) -> f64 {
        self.target_profit
    }

    pub fn publisher(&self) -> &TaPublisher {
        &self.publisher
    }

    /// The stabilized fee at `n`.
    pub fn fee(&self, n: f64) -> Result<f64, ModelError> {
        if n >= self.n_lo && n <= self.n_hi {
            let p = &self.publisher;
            Ok(p.marginal_cost() + (self.target_profit + p.fixed_cost()) / n)
        } else {
            Ok(self.publisher.par_fee(n)?.fee)
        }
    }

    /// Profit under the stabilized fee; constant at the target inside the
    /// interval by construction.
    pub fn profit(&self, n: f64) -> Result<f64, ModelError> {
        if !(n >= 0.0) {
            return Err(ModelError::NonpositiveVolume { n });
        }
        let p = &self.publisher;
        let fee = self.fee(n)?;
        Ok(n * (fee - p.marginal_cost()) - p.fixed_cost())
    }
}

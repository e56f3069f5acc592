//! The per-article fee rule and its slope.
//!
//! At volume `n` the agreement charges the larger of the publish component
//! `pi(n)` and the read component `rho(n)`; the weight `alpha` sits at a
//! corner and simply names the active component (1 = publish, 0 = read).
//! The resulting schedule `fee(n) = max(pi(n), rho(n))` is continuous and
//! piecewise smooth, with a kink at the volume where the components tie.
//! [`TaPublisher::threshold`] locates that crossing by bisection.

use std::fmt;

use crate::numerics;
use crate::publisher::{ModelError, TaPublisher};

/// Corner value of the component weight: which part of the bundle the fee
/// currently tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    /// `alpha = 0`: the read component is the binding one.
    Read,
    /// `alpha = 1`: the publish component is the binding one.
    Publish,
}

impl Alpha {
    /// The numeric weight on the publish component.
    pub fn weight(self) -> f64 {
        match self {
            Alpha::Publish => 1.0,
            Alpha::Read => 0.0,
        }
    }

    pub fn is_publish(self) -> bool {
        matches!(self, Alpha::Publish)
    }

    /// `1` or `0`, as written into tables.
    pub fn flag(self) -> u8 {
        match self {
            Alpha::Publish => 1,
            Alpha::Read => 0,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.flag())
    }
}

/// A fee split into its components at one volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeDecomposition {
    pub n: f64,
    pub publish_part: f64,
    pub read_part: f64,
    pub alpha: Alpha,
    pub fee: f64,
}

/// Weighted fee `alpha * publish + (1 - alpha) * read`. With corner weights
/// this is exact component selection, so no rounding is introduced.
pub fn compose_fee(alpha: Alpha, publish_part: f64, read_part: f64) -> Result<f64, ModelError> {
    if !(publish_part.is_finite()
        && publish_part >= 0.0
        && read_part.is_finite()
        && read_part >= 0.0)
    {
        return Err(ModelError::InvalidComponents {
            publish: publish_part,
            read: read_part,
        });
    }
    Ok(match alpha {
        Alpha::Publish => publish_part,
        Alpha::Read => read_part,
    })
}

/// Slope of the fee schedule at a volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeeSlope {
    Smooth(f64),
    /// At a component tie the schedule has distinct one-sided slopes: the
    /// read branch applies from the left, the publish branch from the right.
    Kink {
        left: f64,
        right: f64,
    },
}

impl FeeSlope {
    pub fn is_kink(&self) -> bool {
        matches!(self, FeeSlope::Kink { .. })
    }

    /// The two-sided derivative, when one exists.
    pub fn two_sided(&self) -> Option<f64> {
        match *self {
            FeeSlope::Smooth(v) => Some(v),
            FeeSlope::Kink { .. } => None,
        }
    }
}

/// The crossing volume of the two fee components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThreshold {
    pub n_tilde: f64,
    pub bracket: (f64, f64),
    /// `pi - rho` at the accepted point.
    pub residual: f64,
    pub tolerance: f64,
    pub iterations: u32,
}

const THRESHOLD_MAX_ITER: u32 = 200;

impl TaPublisher {
    /// Both components at `n`, domain- and sign-checked.
    pub fn components(&self, n: f64) -> Result<(f64, f64), ModelError> {
        self.check_domain(n)?;
        let publish = self.publish().value(n);
        let read = self.read().value(n);
        if !(publish.is_finite() && publish >= 0.0 && read.is_finite() && read >= 0.0) {
            return Err(ModelError::InvalidComponents { publish, read });
        }
        Ok((publish, read))
    }

    /// The revenue-maximal corner weight at `n`. Ties go to the publish
    /// component, so the choice is total and deterministic.
    pub fn optimal_alpha(&self, n: f64) -> Result<Alpha, ModelError> {
        let (publish, read) = self.components(n)?;
        Ok(if publish >= read {
            Alpha::Publish
        } else {
            Alpha::Read
        })
    }

    /// Fee decomposition at `n`: components, active weight, and the fee
    /// itself. The fee always equals `max(publish_part, read_part)` exactly.
    pub fn par_fee(&self, n: f64) -> Result<FeeDecomposition, ModelError> {
        let (publish_part, read_part) = self.components(n)?;
        let alpha = if publish_part >= read_part {
            Alpha::Publish
        } else {
            Alpha::Read
        };
        let fee = compose_fee(alpha, publish_part, read_part)?;
        Ok(FeeDecomposition {
            n,
            publish_part,
            read_part,
            alpha,
            fee,
        })
    }

    /// Slope of the fee schedule at `n`. An exact component tie yields the
    /// two one-sided slopes instead of a single number.
    pub fn fee_derivative(&self, n: f64) -> Result<FeeSlope, ModelError> {
        let (publish, read) = self.components(n)?;
        if publish == read {
            return Ok(FeeSlope::Kink {
                left: self.read().derivative(n),
                right: self.publish().derivative(n),
            });
        }
        Ok(if publish > read {
            FeeSlope::Smooth(self.publish().derivative(n))
        } else {
            FeeSlope::Smooth(self.read().derivative(n))
        })
    }

    /// Fee slope along one fixed regime branch, regardless of which
    /// component is binding at `n`.
    pub fn fee_derivative_in(&self, n: f64, alpha: Alpha) -> Result<f64, ModelError> {
        self.check_domain(n)?;
        Ok(match alpha {
            Alpha::Publish => self.publish().derivative(n),
            Alpha::Read => self.read().derivative(n),
        })
    }

    /// Locate the volume where the components cross, by residual-driven
    /// bisection on `pi - rho` over `[lo, hi]`.
    ///
    /// An exact zero at an endpoint counts as the crossing. If the sign
    /// never changes the regime is uniform over the bracket and a
    /// [`ModelError::NoRegimeSwitch`] reports which one.
    pub fn threshold(&self, lo: f64, hi: f64, tol: f64) -> Result<RegimeThreshold, ModelError> {
        let domain_min = self.domain_min();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ModelError::BadBracket { lo, hi });
        }
        if lo < domain_min {
            return Err(ModelError::BelowDomain { n: lo, domain_min });
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ModelError::BadTolerance(tol));
        }
        // Raw curve values: the crossing location does not depend on the
        // sign checks, and this keeps the residual function total.
        let gap = |n: f64| self.publish().value(n) - self.read().value(n);
        match numerics::bisect(gap, lo, hi, tol, THRESHOLD_MAX_ITER) {
            Ok(root) => Ok(RegimeThreshold {
                n_tilde: root.x,
                bracket: (lo, hi),
                residual: root.residual,
                tolerance: tol,
                iterations: root.iterations,
            }),
            Err(numerics::NumericsError::NoSignChange { f_lo, .. }) => {
                Err(ModelError::NoRegimeSwitch {
                    lo,
                    hi,
                    alpha: if f_lo > 0.0 { 1 } else { 0 },
                })
            }
            Err(numerics::NumericsError::NoConvergence {
                tol,
                max_iter,
                best,
            }) => Err(ModelError::NoConvergence {
                tol,
                max_iter,
                best,
            }),
            Err(numerics::NumericsError::NonFiniteValue { x }) => {
                Err(ModelError::InvalidComponents {
                    publish: self.publish().value(x),
                    read: self.read().value(x),
                })
            }
            Err(_) => Err(ModelError::BadBracket { lo, hi }),
        }
    }
}

//! Publisher primitives: paired fee components plus a cost structure.
//!
//! A [`TaPublisher`] prices a bundled agreement out of a publish component
//! and a read component; an [`OaPublisher`] has a publish component only
//! (its content is openly readable, so there is nothing to charge reading
//! for). Construction runs the closed-form role contracts; the sampled
//! range checks live in [`TaPublisher::validate_on`] because the relevant
//! volume range is only known once a sweep is declared.

use thiserror::Error;

use crate::curve::{CurveError, CurveSpec, Role};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("publish component rejected: {0}")]
    PublishCurve(#[source] CurveError),
    #[error("read component rejected: {0}")]
    ReadCurve(#[source] CurveError),
    #[error("costs must be finite and non-negative (marginal = {marginal}, fixed = {fixed})")]
    InvalidCosts { marginal: f64, fixed: f64 },
    #[error("volume n = {n} is outside the curve domain (minimum {domain_min})")]
    BelowDomain { n: f64, domain_min: f64 },
    #[error("fee components must be finite and non-negative (publish = {publish}, read = {read})")]
    InvalidComponents { publish: f64, read: f64 },
    #[error("marginal profit requires n > 0 (got n = {n})")]
    NonpositiveVolume { n: f64 },
    #[error(
        "fee schedule has a kink at n = {n} (components tie); no two-sided derivative exists there"
    )]
    KinkAt { n: f64 },
    #[error("fee components do not cross in [{lo}, {hi}]; alpha = {alpha} throughout")]
    NoRegimeSwitch { lo: f64, hi: f64, alpha: u8 },
    #[error("root search did not reach |residual| <= {tol} within {max_iter} iterations (best |residual| = {best})")]
    NoConvergence { tol: f64, max_iter: u32, best: f64 },
    #[error("bracket must satisfy lo < hi inside the curve domain (got [{lo}, {hi}])")]
    BadBracket { lo: f64, hi: f64 },
    #[error("tolerance must be positive and finite (got {0})")]
    BadTolerance(f64),
    #[error("stabilization interval requires 0 < n_lo <= n_hi (got [{n_lo}, {n_hi}])")]
    BadStabilizeInterval { n_lo: f64, n_hi: f64 },
}

/// A publisher offering a bundled publish-and-read agreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaPublisher {
    publish: CurveSpec,
    read: CurveSpec,
    marginal_cost: f64,
    fixed_cost: f64,
}

impl TaPublisher {
    pub fn new(
        publish: CurveSpec,
        read: CurveSpec,
        marginal_cost: f64,
        fixed_cost: f64,
    ) -> Result<Self, ModelError> {
        publish
            .check_role(Role::Publish)
            .map_err(ModelError::PublishCurve)?;
        read.check_role(Role::Read).map_err(ModelError::ReadCurve)?;
        if !(marginal_cost.is_finite()
            && marginal_cost >= 0.0
            && fixed_cost.is_finite()
            && fixed_cost >= 0.0)
        {
            return Err(ModelError::InvalidCosts {
                marginal: marginal_cost,
                fixed: fixed_cost,
            });
        }
        Ok(TaPublisher {
            publish,
            read,
            marginal_cost,
            fixed_cost,
        })
    }

    pub fn publish(&self) -> &CurveSpec {
        &self.publish
    }

    pub fn read(&self) -> &CurveSpec {
        &self.read
    }

    pub fn marginal_cost(&self) -> f64 {
        self.marginal_cost
    }

    pub fn fixed_cost(&self) -> f64 {
        self.fixed_cost
    }

    /// Smallest admissible volume across both components.
    pub fn domain_min(&self) -> f64 {
        self.publish.domain_min().max(self.read.domain_min())
    }

    /// Sampled range validation: both components non-negative over
    /// `[lo, hi]` and moving in their contracted direction.
    pub fn validate_on(&self, lo: f64, hi: f64) -> Result<(), ModelError> {
        self.publish
            .check_role_on(Role::Publish, lo, hi)
            .map_err(ModelError::PublishCurve)?;
        self.read
            .check_role_on(Role::Read, lo, hi)
            .map_err(ModelError::ReadCurve)?;
        Ok(())
    }

    pub(crate) fn check_domain(&self, n: f64) -> Result<(), ModelError> {
        let domain_min = self.domain_min();
        if !(n.is_finite() && n >= domain_min) {
            return Err(ModelError::BelowDomain { n, domain_min });
        }
        Ok(())
    }
}

/// A fully open-access publisher: publish component only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OaPublisher {
    publish: CurveSpec,
}

impl OaPublisher {
    pub fn new(publish: CurveSpec) -> Result<Self, ModelError> {
        publish
            .check_role(Role::Publish)
            .map_err(ModelError::PublishCurve)?;
        Ok(OaPublisher { publish })
    }

    pub fn publish(&self) -> &CurveSpec {
        &self.publish
    }
}

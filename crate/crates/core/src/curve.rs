//! Curve families for the two components of a publish-and-read fee.
//!
//! Both fee components are closed-form functions of contracted volume `n`.
//! The supported families cover the two roles that appear in an agreement:
//!
//! - a *publish* component that is concave and non-decreasing in volume
//!   (per-article service value grows at a diminishing rate), and
//! - a *read* component that is flat or declining (per-article read value
//!   dilutes as the contracted volume grows).
//!
//! Family parameters are validated at construction; role contracts are a
//! separate check so the same curve value code can serve either role where
//! the shape permits. Role checks are closed-form (derivative sign analysis
//! per family); [`CurveSpec::check_role_on`] additionally samples the curve
//! over a declared range to catch negative values and direction violations.

use std::fmt;

use thiserror::Error;

/// Number of sample points used by the range checks.
const RANGE_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("curve parameter {name} must be finite (got {value})")]
    NonFiniteParam { name: &'static str, value: f64 },
    #[error("power family requires b > 0 and 0 < gamma < 1 for a concave increasing curve (got b = {b}, gamma = {gamma})")]
    PowerShape { b: f64, gamma: f64 },
    #[error("log-affine family requires b > 0 for a concave increasing curve (got b = {b})")]
    LogAffineShape { b: f64 },
    #[error("hyperbolic family requires b > 0 and s > 0 for a convex declining curve (got b = {b}, s = {s})")]
    HyperbolicShape { b: f64, s: f64 },
    #[error("domain minimum must be finite and non-negative (got {0})")]
    InvalidDomainMin(f64),
    #[error("{role} component must be {shape}; {family} is not")]
    RoleShape {
        role: &'static str,
        shape: &'static str,
        family: String,
    },
    #[error("curve is negative on the declared range: f({n}) = {value}")]
    NegativeOnRange { n: f64, value: f64 },
    #[error("{role} component direction violated between n = {n_prev} and n = {n}: f moves from {prev} to {value}")]
    DirectionOnRange {
        role: &'static str,
        n_prev: f64,
        n: f64,
        prev: f64,
        value: f64,
    },
    #[error("range check requires finite lo < hi (got [{lo}, {hi}])")]
    BadRange { lo: f64, hi: f64 },
}

/// Which fee component a curve is playing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Publish,
    Read,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::Publish => "publish",
            Role::Read => "read",
        }
    }

    fn shape(self) -> &'static str {
        match self {
            Role::Publish => "concave and non-decreasing",
            Role::Read => "flat or declining",
        }
    }
}

/// Family plus parameters for one fee component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveFamily {
    /// `a + b * n^gamma` with `b > 0` and `0 < gamma < 1`: concave increasing.
    Power { a: f64, b: f64, gamma: f64 },
    /// `a + b * ln(1 + n)` with `b > 0`: concave increasing.
    LogAffine { a: f64, b: f64 },
    /// `a + b * n`: weakly concave; the sign of `b` sets the direction.
    Affine { a: f64, b: f64 },
    /// `a`: flat.
    Constant { a: f64 },
    /// `a + b / (n + s)` with `b > 0` and `s > 0`: convex declining.
    Hyperbolic { a: f64, b: f64, s: f64 },
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CurveFamily::Power { a, b, gamma } => {
                write!(f, "power(a={a}, b={b}, gamma={gamma})")
            }
            CurveFamily::LogAffine { a, b } => write!(f, "log_affine(a={a}, b={b})"),
            CurveFamily::Affine { a, b } => write!(f, "affine(a={a}, b={b})"),
            CurveFamily::Constant { a } => write!(f, "constant(a={a})"),
            CurveFamily::Hyperbolic { a, b, s } => {
                write!(f, "hyperbolic(a={a}, b={b}, s={s})")
            }
        }
    }
}

impl CurveFamily {
    fn params(&self) -> [Option<(&'static str, f64)>; 3] {
        match *self {
            CurveFamily::Power { a, b, gamma } => {
                [Some(("a", a)), Some(("b", b)), Some(("gamma", gamma))]
            }
            CurveFamily::LogAffine { a, b } => [Some(("a", a)), Some(("b", b)), None],
            CurveFamily::Affine { a, b } => [Some(("a", a)), Some(("b", b)), None],
            CurveFamily::Constant { a } => [Some(("a", a)), None, None],
            CurveFamily::Hyperbolic { a, b, s } => [Some(("a", a)), Some(("b", b)), Some(("s", s))],
        }
    }
}

/// A validated fee-component curve.
///
/// `domain_min` is the smallest volume the curve is meant for; model
/// operations reject evaluation below it. It is always non-negative, so
/// every family is well defined on the admissible domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    family: CurveFamily,
    domain_min: f64,
}

impl CurveSpec {
    pub fn new(family: CurveFamily, domain_min: f64) -> Result<Self, CurveError> {
        for slot in family.params().into_iter().flatten() {
            let (name, value) = slot;
            if !value.is_finite() {
                return Err(CurveError::NonFiniteParam { name, value });
            }
        }
        match family {
            CurveFamily::Power { b, gamma, .. } => {
                if !(b > 0.0 && gamma > 0.0 && gamma < 1.0) {
                    return Err(CurveError::PowerShape { b, gamma });
                }
            }
            CurveFamily::LogAffine { b, .. } => {
                if !(b > 0.0) {
                    return Err(CurveError::LogAffineShape { b });
                }
            }
            CurveFamily::Hyperbolic { b, s, .. } => {
                if !(b > 0.0 && s > 0.0) {
                    return Err(CurveError::HyperbolicShape { b, s });
                }
            }
            CurveFamily::Affine { .. } | CurveFamily::Constant { .. } => {}
        }
        if !(domain_min.is_finite() && domain_min >= 0.0) {
            return Err(CurveError::InvalidDomainMin(domain_min));
        }
        Ok(CurveSpec { family, domain_min })
    }

    pub fn power(a: f64, b: f64, gamma: f64) -> Result<Self, CurveError> {
        Self::new(CurveFamily::Power { a, b, gamma }, 0.0)
    }

    pub fn log_affine(a: f64, b: f64) -> Result<Self, CurveError> {
        Self::new(CurveFamily::LogAffine { a, b }, 0.0)
    }

    pub fn affine(a: f64, b: f64) -> Result<Self, CurveError> {
        Self::new(CurveFamily::Affine { a, b }, 0.0)
    }

    pub fn constant(a: f64) -> Result<Self, CurveError> {
        Self::new(CurveFamily::Constant { a }, 0.0)
    }

    pub fn hyperbolic(a: f64, b: f64, s: f64) -> Result<Self, CurveError> {
        Self::new(CurveFamily::Hyperbolic { a, b, s }, 0.0)
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn domain_min(&self) -> f64 {
        self.domain_min
    }

    /// The additive intercept `a`, shared by every family.
    pub fn intercept(&self) -> f64 {
        match self.family {
            CurveFamily::Power { a, .. }
            | CurveFamily::LogAffine { a, .. }
            | CurveFamily::Affine { a, .. }
            | CurveFamily::Constant { a }
            | CurveFamily::Hyperbolic { a, .. } => a,
        }
    }

    /// Curve value at volume `n`. Total for `n >= domain_min`.
    pub fn value(&self, n: f64) -> f64 {
        match self.family {
            CurveFamily::Power { a, b, gamma } => a + b * n.powf(gamma),
            CurveFamily::LogAffine { a, b } => a + b * (1.0 + n).ln(),
            CurveFamily::Affine { a, b } => a + b * n,
            CurveFamily::Constant { a } => a,
            CurveFamily::Hyperbolic { a, b, s } => a + b / (n + s),
        }
    }

    /// First derivative with respect to `n`.
    ///
    /// For the power family this diverges as `n -> 0`; IEEE infinity is
    /// returned at `n = 0` rather than an error.
    pub fn derivative(&self, n: f64) -> f64 {
        match self.family {
            CurveFamily::Power { b, gamma, .. } => b * gamma * n.powf(gamma - 1.0),
            CurveFamily::LogAffine { b, .. } => b / (1.0 + n),
            CurveFamily::Affine { b, .. } => b,
            CurveFamily::Constant { .. } => 0.0,
            CurveFamily::Hyperbolic { b, s, .. } => -b / ((n + s) * (n + s)),
        }
    }

    /// Second derivative with respect to `n`.
    pub fn second_derivative(&self, n: f64) -> f64 {
        match self.family {
            CurveFamily::Power { b, gamma, .. } => b * gamma * (gamma - 1.0) * n.powf(gamma - 2.0),
            CurveFamily::LogAffine { b, .. } => -b / ((1.0 + n) * (1.0 + n)),
            CurveFamily::Affine { .. } | CurveFamily::Constant { .. } => 0.0,
            CurveFamily::Hyperbolic { b, s, .. } => 2.0 * b / ((n + s) * (n + s) * (n + s)),
        }
    }

    /// Closed-form check that the family shape fits `role`.
    pub fn check_role(&self, role: Role) -> Result<(), CurveError> {
        let fits = match (role, self.family) {
            // Concave increasing families; affine qualifies when rising.
            (Role::Publish, CurveFamily::Power { .. }) => true,
            (Role::Publish, CurveFamily::LogAffine { .. }) => true,
            (Role::Publish, CurveFamily::Affine { b, .. }) => b >= 0.0,
            (Role::Publish, CurveFamily::Constant { .. }) => true,
            (Role::Publish, CurveFamily::Hyperbolic { .. }) => false,
            // Flat or declining families; affine qualifies when falling.
            (Role::Read, CurveFamily::Constant { .. }) => true,
            (Role::Read, CurveFamily::Hyperbolic { .. }) => true,
            (Role::Read, CurveFamily::Affine { b, .. }) => b <= 0.0,
            (Role::Read, CurveFamily::Power { .. }) => false,
            (Role::Read, CurveFamily::LogAffine { .. }) => false,
        };
        if fits {
            Ok(())
        } else {
            Err(CurveError::RoleShape {
                role: role.name(),
                shape: role.shape(),
                family: self.family.to_string(),
            })
        }
    }

    /// Sampled non-negativity over `[lo, hi]` (both endpoints included).
    pub fn check_nonnegative_on(&self, lo: f64, hi: f64) -> Result<(), CurveError> {
        for n in sample_points(lo, hi)? {
            let value = self.value(n);
            if !(value >= 0.0) {
                return Err(CurveError::NegativeOnRange { n, value });
            }
        }
        Ok(())
    }

    /// Full role check over a declared range: closed-form shape analysis,
    /// then a sampled non-negativity and direction check.
    ///
    /// Curvature is already pinned down by the closed-form family rules, so
    /// the sample only guards value sign and monotone direction.
    pub fn check_role_on(&self, role: Role, lo: f64, hi: f64) -> Result<(), CurveError> {
        self.check_role(role)?;
        let mut prev: Option<(f64, f64)> = None;
        for n in sample_points(lo, hi)? {
            let value = self.value(n);
            if !(value >= 0.0) {
                return Err(CurveError::NegativeOnRange { n, value });
            }
            if let Some((n_prev, prev_value)) = prev {
                // Tiny relative slack so rounding in large flat stretches
                // cannot fail an honest curve.
                let slack = 1e-9 * (1.0 + prev_value.abs().max(value.abs()));
                let ok = match role {
                    Role::Publish => value >= prev_value - slack,
                    Role::Read => value <= prev_value + slack,
                };
                if !ok {
                    return Err(CurveError::DirectionOnRange {
                        role: role.name(),
                        n_prev,
                        n,
                        prev: prev_value,
                        value,
                    });
                }
            }
            prev = Some((n, value));
        }
        Ok(())
    }
}

fn sample_points(lo: f64, hi: f64) -> Result<impl Iterator<Item = f64>, CurveError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CurveError::BadRange { lo, hi });
    }
    let last = RANGE_SAMPLES - 1;
    Ok((0..RANGE_SAMPLES).map(move |i| {
        if i == 0 {
            lo
        } else if i == last {
            hi
        } else {
            lo + (hi - lo) * (i as f64) / (last as f64)
        }
    }))
}

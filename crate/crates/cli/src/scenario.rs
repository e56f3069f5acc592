//! Scenario files: TOML descriptions of a bundled publisher, an optional
//! open-access competitor with a shared library budget, a sweep grid, and
//! numerical tolerances.
//!
//! A scenario without `[oa]`/`[market]` sections drives the single-publisher
//! commands (`threshold`, `fee-curve`, `profit-curve`); with both sections it
//! additionally drives `duopoly`. The loader validates everything eagerly so
//! a scenario that loads cleanly can be swept without per-row surprises from
//! malformed inputs (per-row numerical failures are still reported, not
//! hidden).

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use parfee_core::{CurveFamily, CurveSpec, DuopolyMarket, Grid, OaPublisher, TaPublisher};

/// Default residual tolerance for the regime-switch root solve.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
/// Default tolerance for analytic-vs-finite-difference derivative checks.
pub const DEFAULT_DERIV_TOL: f64 = 1e-4;

/// Top-level error split by how the process should exit: configuration
/// problems (bad scenario file, bad flags) exit 2, I/O problems exit 3, and
/// failed verification (reported by the verify command itself) exits 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    ta: TaSection,
    oa: Option<OaSection>,
    market: Option<MarketSection>,
    sweep: SweepSection,
    tolerances: Option<ToleranceSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaSection {
    publish: CurveSection,
    read: CurveSection,
    marginal_cost: f64,
    fixed_cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OaSection {
    publish: CurveSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketSection {
    budget: f64,
    n_total: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    lo: f64,
    hi: f64,
    steps: usize,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    root_tol: Option<f64>,
    deriv_tol: Option<f64>,
    near_zero_band: Option<f64>,
}

/// One per-unit curve: a family name plus its parameters. Which parameters
/// are required depends on the family, so they are all optional here and
/// checked by hand in [`build_curve`].
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveSection {
    family: String,
    a: Option<f64>,
    b: Option<f64>,
    gamma: Option<f64>,
    s: Option<f64>,
    domain_min: Option<f64>,
}

/// A fully validated scenario, ready to drive any subcommand.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub ta: TaPublisher,
    pub market: Option<DuopolyMarket>,
    pub grid: Grid,
    pub root_tol: f64,
    pub deriv_tol: f64,
    pub near_zero_band: Option<f64>,
}

impl Scenario {
    pub fn is_market(&self) -> bool {
        self.market.is_some()
    }

    /// Range of bundled-publisher volumes the scenario evaluates: the sweep
    /// grid directly, or for market scenarios the volume range induced by
    /// sweeping the competitor's share of the fixed total.
    pub fn volume_range(&self) -> (f64, f64) {
        match &self.market {
            Some(m) => (m.n_total() - self.grid.hi(), m.n_total() - self.grid.lo()),
            None => (self.grid.lo(), self.grid.hi()),
        }
    }

    /// Grid over the volume range of [`Scenario::volume_range`], with the
    /// same number of steps as the sweep grid.
    pub fn volume_grid(&self) -> Grid {
        let (lo, hi) = self.volume_range();
        // The range was validated when the scenario (or a grid override) was
        // accepted, so construction cannot fail here.
        Grid::new(lo, hi, self.grid.steps()).expect("validated volume range")
    }

    /// Replace the sweep grid, re-running the same range validation the
    /// loader applies.
    pub fn apply_grid(&mut self, lo: f64, hi: f64, steps: usize) -> Result<(), CliError> {
        let grid =
            Grid::new(lo, hi, steps).map_err(|e| CliError::Config(format!("--grid: {e}")))?;
        validate_grid(&self.ta, self.market.as_ref(), &grid)?;
        self.grid = grid;
        Ok(())
    }

    /// Replace the root tolerance (the `--tol` flag). Derivative-check and
    /// classification tolerances stay as the scenario file set them.
    pub fn apply_root_tol(&mut self, tol: f64) -> Result<(), CliError> {
        check_tolerance("--tol", tol)?;
        self.root_tol = tol;
        Ok(())
    }
}

/// Read and parse a scenario file. A missing or unreadable file is an I/O
/// error; everything wrong inside the file is a configuration error.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read scenario file {}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Parse scenario TOML from an in-memory string.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let doc: ScenarioDoc =
        toml::from_str(text).map_err(|e| CliError::Config(format!("scenario parse error: {e}")))?;
    build_scenario(doc)
}

fn build_scenario(doc: ScenarioDoc) -> Result<Scenario, CliError> {
    if doc.name.trim().is_empty() {
        return Err(CliError::Config("name must not be empty".into()));
    }

    let publish = build_curve("ta.publish", &doc.ta.publish)?;
    let read = build_curve("ta.read", &doc.ta.read)?;
    let ta = TaPublisher::new(publish, read, doc.ta.marginal_cost, doc.ta.fixed_cost)
        .map_err(|e| CliError::Config(format!("ta: {e}")))?;

    let market = match (doc.oa, doc.market) {
        (None, None) => None,
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::Config(
                "[oa] and [market] sections must appear together: a competitor needs a \
                 market and a market needs a competitor"
                    .into(),
            ));
        }
        (Some(oa), Some(mkt)) => {
            let oa_publish = build_curve("oa.publish", &oa.publish)?;
            let oa =
                OaPublisher::new(oa_publish).map_err(|e| CliError::Config(format!("oa: {e}")))?;
            let market = DuopolyMarket::new(mkt.budget, mkt.n_total, ta, oa)
                .map_err(|e| CliError::Config(format!("market: {e}")))?;
            Some(market)
        }
    };

    let grid = Grid::new(doc.sweep.lo, doc.sweep.hi, doc.sweep.steps)
        .map_err(|e| CliError::Config(format!("sweep: {e}")))?;
    validate_grid(&ta, market.as_ref(), &grid)?;

    let tol = doc.tolerances.unwrap_or_default();
    let root_tol = tol.root_tol.unwrap_or(DEFAULT_ROOT_TOL);
    let deriv_tol = tol.deriv_tol.unwrap_or(DEFAULT_DERIV_TOL);
    check_tolerance("tolerances.root_tol", root_tol)?;
    check_tolerance("tolerances.deriv_tol", deriv_tol)?;
    if let Some(band) = tol.near_zero_band {
        check_tolerance("tolerances.near_zero_band", band)?;
    }

    Ok(Scenario {
        name: doc.name,
        ta,
        market,
        grid,
        root_tol,
        deriv_tol,
        near_zero_band: tol.near_zero_band,
    })
}

/// Zero tolerances are accepted here: they are well-formed requests that the
/// downstream check or solve will report as unsatisfied, which is more
/// informative than refusing to parse. Negative or non-finite values are
/// configuration errors outright.
fn check_tolerance(key: &str, value: f64) -> Result<(), CliError> {
    if !value.is_finite() || value < 0.0 {
        return Err(CliError::Config(format!(
            "{key} must be a finite value >= 0 (got {value})"
        )));
    }
    Ok(())
}

fn validate_grid(
    ta: &TaPublisher,
    market: Option<&DuopolyMarket>,
    grid: &Grid,
) -> Result<(), CliError> {
    match market {
        Some(m) => {
            if grid.lo() <= 0.0 || grid.hi() >= m.n_total() {
                return Err(CliError::Config(format!(
                    "sweep: competitor volume grid [{}, {}] must lie strictly inside \
                     (0, n_total = {})",
                    grid.lo(),
                    grid.hi(),
                    m.n_total()
                )));
            }
            let (lo, hi) = (m.n_total() - grid.hi(), m.n_total() - grid.lo());
            if lo < ta.domain_min() {
                return Err(CliError::Config(format!(
                    "sweep: induced bundled-publisher volume {lo} is below the declared \
                     curve domain minimum {}",
                    ta.domain_min()
                )));
            }
            ta.validate_on(lo, hi)
                .map_err(|e| CliError::Config(format!("ta: {e}")))
        }
        None => {
            if grid.lo() < 0.0 {
                return Err(CliError::Config(format!(
                    "sweep: lo must be >= 0 for a volume grid (got {})",
                    grid.lo()
                )));
            }
            if grid.lo() < ta.domain_min() {
                return Err(CliError::Config(format!(
                    "sweep: lo {} is below the declared curve domain minimum {}",
                    grid.lo(),
                    ta.domain_min()
                )));
            }
            ta.validate_on(grid.lo(), grid.hi())
                .map_err(|e| CliError::Config(format!("ta: {e}")))
        }
    }
}

/// Families a scenario file can name, with the parameters each one takes.
const FAMILY_PARAMS: &[(&str, &[&str])] = &[
    ("power", &["a", "b", "gamma"]),
    ("log_affine", &["a", "b"]),
    ("affine", &["a", "b"]),
    ("constant", &["a"]),
    ("hyperbolic", &["a", "b", "s"]),
];

fn build_curve(key: &str, sec: &CurveSection) -> Result<CurveSpec, CliError> {
    let params = FAMILY_PARAMS
        .iter()
        .find(|(name, _)| *name == sec.family)
        .map(|(_, params)| *params)
        .ok_or_else(|| {
            CliError::Config(format!(
                "{key}: unknown family `{}` (expected power, log_affine, affine, constant, \
                 or hyperbolic)",
                sec.family
            ))
        })?;

    let provided = [
        ("a", sec.a),
        ("b", sec.b),
        ("gamma", sec.gamma),
        ("s", sec.s),
    ];
    for (name, value) in provided {
        if value.is_some() && !params.contains(&name) {
            return Err(CliError::Config(format!(
                "{key}: parameter {name} is not used by the {} family",
                sec.family
            )));
        }
    }
    let require = |name: &str| -> Result<f64, CliError> {
        provided
            .iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, v)| *v)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{key}: the {} family requires parameter {name}",
                    sec.family
                ))
            })
    };

    let family = match sec.family.as_str() {
        "power" => CurveFamily::Power {
            a: require("a")?,
            b: require("b")?,
            gamma: require("gamma")?,
        },
        "log_affine" => CurveFamily::LogAffine {
            a: require("a")?,
            b: require("b")?,
        },
        "affine" => CurveFamily::Affine {
            a: require("a")?,
            b: require("b")?,
        },
        "constant" => CurveFamily::Constant { a: require("a")? },
        "hyperbolic" => CurveFamily::Hyperbolic {
            a: require("a")?,
            b: require("b")?,
            s: require("s")?,
        },
        _ => unreachable!("family validated above"),
    };

    CurveSpec::new(family, sec.domain_min.unwrap_or(0.0))
        .map_err(|e| CliError::Config(format!("{key}: {e}")))
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

//! The self-check battery behind `parfee verify`.
//!
//! Each check re-derives something the engine claims analytically through an
//! independent route — bitwise max composition, root residuals, central
//! differences, the budget identity — and reports one PASS/FAIL line. The
//! battery is scenario-driven: single-publisher scenarios run five checks,
//! market scenarios run three more on top.

use std::io::{self, Write};

use parfee_core::{
    numerics, Alpha, DerivativeReport, DuopolyError, DuopolyMarket, MarketCase, ModelError,
    ResponseSign, TaPublisher,
};
use parfee_core::{Grid, SweepTable};

use crate::scenario::Scenario;

/// Relative slack allowed in the budget identity on every sweep row.
pub const BUDGET_IDENTITY_TOL: f64 = 1e-9;
/// Absolute slack allowed when reconciling the analytic shift decomposition
/// against its finite-difference estimate.
pub const SHIFT_IDENTITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }
}

/// Interval excluded around the regime switch when cross-checking
/// derivatives: ten finite-difference steps either side, so no checked
/// stencil can straddle the kink.
pub fn kink_exclusion(n_tilde: f64) -> (f64, f64) {
    let delta = 10.0 * numerics::fd_step(n_tilde);
    (n_tilde - delta, n_tilde + delta)
}

/// Run every check the scenario supports, in a fixed order.
pub fn run_battery(scn: &Scenario) -> VerifyReport {
    let grid = scn.volume_grid();
    let (threshold_check, n_tilde) = check_threshold(scn, &grid);
    let exclusions: Vec<(f64, f64)> = n_tilde.map(kink_exclusion).into_iter().collect();

    let mut checks = vec![
        check_max_rule(&scn.ta, &grid),
        threshold_check,
        check_fee_derivative(scn, &grid, &exclusions),
        check_marginal_profit(scn, &grid, &exclusions),
        check_regime_dampening(&scn.ta, &grid),
    ];
    if let Some(market) = &scn.market {
        checks.push(check_budget_identity(scn, market));
        checks.push(check_shift_identity(scn, market));
        checks.push(check_response_signs(scn, market));
    }
    VerifyReport { checks }
}

/// Render the battery as one `check` line per result plus a summary line.
pub fn write_report<W: Write>(out: &mut W, report: &VerifyReport) -> io::Result<()> {
    for c in &report.checks {
        writeln!(
            out,
            "check {:<20} {}  {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        )?;
    }
    writeln!(
        out,
        "result: {} ({}/{} checks)",
        if report.all_pass() { "PASS" } else { "FAIL" },
        report.passed(),
        report.checks.len()
    )
}

fn pass(name: &'static str, detail: String) -> CheckResult {
    CheckResult {
        name,
        pass: true,
        detail,
    }
}

fn fail(name: &'static str, detail: String) -> CheckResult {
    CheckResult {
        name,
        pass: false,
        detail,
    }
}

/// The fee must be bitwise equal to the larger component at every grid
/// point, with the regime weight matching the comparison (ties publish).
fn check_max_rule(ta: &TaPublisher, grid: &Grid) -> CheckResult {
    const NAME: &str = "max_rule";
    let mut publish = 0usize;
    let mut read = 0usize;
    for n in grid.points() {
        match (ta.components(n), ta.par_fee(n)) {
            (Ok((pi, rho)), Ok(dec)) => {
                let expect = pi.max(rho);
                if dec.fee.to_bits() != expect.to_bits() || dec.alpha.is_publish() != (pi >= rho) {
                    return fail(
                        NAME,
                        format!(
                            "fee diverges from max(pi, rho) at N = {n}: fee = {}, max = {expect}",
                            dec.fee
                        ),
                    );
                }
                if dec.alpha.is_publish() {
                    publish += 1;
                } else {
                    read += 1;
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                return fail(NAME, format!("evaluation failed at N = {n}: {e}"));
            }
        }
    }
    pass(
        NAME,
        format!(
            "fee equals the larger component at all {} points (publish {publish}, read {read})",
            grid.steps()
        ),
    )
}

/// Locate the regime switch on the scenario's volume range. No crossing is a
/// legitimate outcome (the scenario lives in one regime), not a failure.
fn check_threshold(scn: &Scenario, grid: &Grid) -> (CheckResult, Option<f64>) {
    const NAME: &str = "threshold";
    match scn.ta.threshold(grid.lo(), grid.hi(), scn.root_tol) {
        Ok(t) => {
            let check = pass(
                NAME,
                format!(
                    "N_tilde = {:.6}, residual = {:.3e} (tol {:.1e}), {} iterations",
                    t.n_tilde, t.residual, t.tolerance, t.iterations
                ),
            );
            (check, Some(t.n_tilde))
        }
        Err(ModelError::NoRegimeSwitch { lo, hi, alpha }) => {
            let check = pass(
                NAME,
                format!("no regime switch in [{lo}, {hi}]; alpha = {alpha} throughout"),
            );
            (check, None)
        }
        Err(e) => (fail(NAME, format!("threshold solve failed: {e}")), None),
    }
}

fn describe(rep: &DerivativeReport) -> String {
    let mut detail = format!(
        "checked {}, excluded {}, max |analytic - fd| = {:.3e} (tol {:.1e})",
        rep.checked.len(),
        rep.excluded.len(),
        rep.max_abs_error,
        rep.tolerance
    );
    if rep.vacuous {
        detail.push_str("; vacuous (no points checked)");
    }
    detail
}

/// Central differences of the fee must match the analytic schedule slope
/// away from the kink.
fn check_fee_derivative(scn: &Scenario, grid: &Grid, exclusions: &[(f64, f64)]) -> CheckResult {
    const NAME: &str = "fee_derivative_fd";
    let ta = &scn.ta;
    let f = |n: f64| ta.par_fee(n).map(|d| d.fee);
    let df = |n: f64| {
        ta.fee_derivative(n)
            .and_then(|s| s.two_sided().ok_or(ModelError::KinkAt { n }))
    };
    match numerics::check_derivative(f, df, grid, scn.deriv_tol, exclusions) {
        Ok(rep) => CheckResult {
            name: NAME,
            pass: rep.pass,
            detail: describe(&rep),
        },
        Err(e) => fail(NAME, format!("check setup failed: {e}")),
    }
}

/// Central differences of profit must match the decomposed marginal profit
/// away from the kink.
fn check_marginal_profit(scn: &Scenario, grid: &Grid, exclusions: &[(f64, f64)]) -> CheckResult {
    const NAME: &str = "marginal_profit_fd";
    let ta = &scn.ta;
    let f = |n: f64| ta.profit(n);
    let df = |n: f64| ta.marginal_profit(n).map(|m| m.total);
    match numerics::check_derivative(f, df, grid, scn.deriv_tol, exclusions) {
        Ok(rep) => CheckResult {
            name: NAME,
            pass: rep.pass,
            detail: describe(&rep),
        },
        Err(e) => fail(NAME, format!("check setup failed: {e}")),
    }
}

/// In the publish regime the fee response reinforces the margin; in the read
/// regime it dampens it, exactly cancelling for a flat read curve.
fn check_regime_dampening(ta: &TaPublisher, grid: &Grid) -> CheckResult {
    const NAME: &str = "regime_dampening";
    let mut publish = 0usize;
    let mut read_flat = 0usize;
    let mut read_declining = 0usize;
    let mut skipped = 0usize;
    for n in grid.points() {
        if n <= 0.0 {
            skipped += 1;
            continue;
        }
        let slope = match ta.fee_derivative(n) {
            Ok(s) => s,
            Err(e) => return fail(NAME, format!("evaluation failed at N = {n}: {e}")),
        };
        if slope.is_kink() {
            skipped += 1;
            continue;
        }
        let m = match ta.marginal_profit(n) {
            Ok(m) => m,
            Err(e) => return fail(NAME, format!("evaluation failed at N = {n}: {e}")),
        };
        let alpha = match ta.optimal_alpha(n) {
            Ok(a) => a,
            Err(e) => return fail(NAME, format!("evaluation failed at N = {n}: {e}")),
        };
        match alpha {
            Alpha::Publish => {
                if !(m.fee_response >= 0.0 && m.total >= m.margin) {
                    return fail(
                        NAME,
                        format!(
                            "publish-regime reinforcement violated at N = {n}: fee response = {}, \
                             total = {}, margin = {}",
                            m.fee_response, m.total, m.margin
                        ),
                    );
                }
                publish += 1;
            }
            Alpha::Read if m.fee_response == 0.0 => {
                if m.total != m.margin {
                    return fail(
                        NAME,
                        format!(
                            "flat-read marginal profit must equal the margin exactly at N = {n} \
                             (total = {}, margin = {})",
                            m.total, m.margin
                        ),
                    );
                }
                read_flat += 1;
            }
            Alpha::Read => {
                if !(m.fee_response <= 0.0 && m.total <= m.margin) {
                    return fail(
                        NAME,
                        format!(
                            "read-regime dampening violated at N = {n}: fee response = {}, \
                             total = {}, margin = {}",
                            m.fee_response, m.total, m.margin
                        ),
                    );
                }
                read_declining += 1;
            }
        }
    }
    pass(
        NAME,
        format!(
            "{} points: publish {publish}, flat read {read_flat}, declining read \
             {read_declining}, skipped {skipped}",
            grid.steps()
        ),
    )
}

fn first_row_error(
    table: &SweepTable<parfee_core::ShiftRecord, DuopolyError>,
) -> Option<(f64, String)> {
    table
        .rows
        .iter()
        .find_map(|r| r.value.as_ref().err().map(|e| (r.x, e.to_string())))
}

/// Every sweep row must satisfy the budget identity to within a tight
/// relative tolerance: the implied OA fee exists to make it hold.
fn check_budget_identity(scn: &Scenario, market: &DuopolyMarket) -> CheckResult {
    const NAME: &str = "budget_identity";
    let table = match market.shift_sweep(&scn.grid, scn.near_zero_band) {
        Ok(t) => t,
        Err(e) => return fail(NAME, format!("sweep failed: {e}")),
    };
    if let Some((s, e)) = first_row_error(&table) {
        return fail(
            NAME,
            format!(
                "{} rows failed to evaluate; first at s = {s}: {e}",
                table.err_count()
            ),
        );
    }
    let mut max_resid = 0.0f64;
    for (_, rec) in table.ok_rows() {
        max_resid = max_resid.max(rec.budget_residual.abs());
    }
    CheckResult {
        name: NAME,
        pass: max_resid <= BUDGET_IDENTITY_TOL,
        detail: format!(
            "max |relative residual| = {:.3e} over {} rows (tol {:.1e})",
            max_resid,
            table.len(),
            BUDGET_IDENTITY_TOL
        ),
    }
}

/// The analytic decomposition of the OA fee response must reconcile with its
/// finite-difference estimate at every split away from the kink.
fn check_shift_identity(scn: &Scenario, market: &DuopolyMarket) -> CheckResult {
    const NAME: &str = "shift_identity";
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut max_resid = 0.0f64;
    for s in scn.grid.points() {
        match market.shift_decomposition(s, numerics::fd_step(s)) {
            Ok(d) => {
                checked += 1;
                max_resid = max_resid.max(d.residual.abs());
            }
            Err(DuopolyError::KinkProximity { .. })
            | Err(DuopolyError::StencilOutOfRange { .. }) => skipped += 1,
            Err(e) => return fail(NAME, format!("decomposition failed at s = {s}: {e}")),
        }
    }
    if checked == 0 {
        return fail(
            NAME,
            format!("no splits could be checked ({skipped} skipped)"),
        );
    }
    CheckResult {
        name: NAME,
        pass: max_resid <= SHIFT_IDENTITY_TOL,
        detail: format!(
            "max |identity residual| = {:.3e} over {checked} splits, {skipped} skipped \
             (tol {:.1e})",
            max_resid, SHIFT_IDENTITY_TOL
        ),
    }
}

/// Each classified row's response sign must match what its market case
/// predicts, and near-zero responses must stay within the fee gap.
fn check_response_signs(scn: &Scenario, market: &DuopolyMarket) -> CheckResult {
    const NAME: &str = "oa_response_signs";
    let table = match market.shift_sweep(&scn.grid, scn.near_zero_band) {
        Ok(t) => t,
        Err(e) => return fail(NAME, format!("sweep failed: {e}")),
    };
    if let Some((s, e)) = first_row_error(&table) {
        return fail(
            NAME,
            format!(
                "{} rows failed to evaluate; first at s = {s}: {e}",
                table.err_count()
            ),
        );
    }
    let mut counts = [0usize; 3];
    let mut unclassified = 0usize;
    for (s, rec) in table.ok_rows() {
        let Some(c) = &rec.classification else {
            unclassified += 1;
            continue;
        };
        let (slot, expected) = match c.case {
            MarketCase::PublishRegime => (0, ResponseSign::Positive),
            MarketCase::ReadFlat => (1, ResponseSign::NearZero),
            MarketCase::ReadDeclining => (2, ResponseSign::Negative),
        };
        if c.sign != expected {
            return fail(
                NAME,
                format!(
                    "s = {s}: case {} expects a {} response, classified {} \
                     (oa_term = {:.6}, band = {:.6})",
                    c.case.label(),
                    expected.label(),
                    c.sign.label(),
                    c.oa_term,
                    c.band
                ),
            );
        }
        if c.sign == ResponseSign::NearZero && !c.within_gap {
            return fail(
                NAME,
                format!(
                    "s = {s}: near-zero response exceeds the fee gap \
                     (oa_term = {:.6}, fee_gap = {:.6})",
                    c.oa_term, c.fee_gap
                ),
            );
        }
        counts[slot] += 1;
    }
    let mut parts = Vec::new();
    for (slot, label) in [
        (0, MarketCase::PublishRegime.label()),
        (1, MarketCase::ReadFlat.label()),
        (2, MarketCase::ReadDeclining.label()),
    ] {
        if counts[slot] > 0 {
            parts.push(format!("{label} x {}", counts[slot]));
        }
    }
    if unclassified > 0 {
        parts.push(format!("{unclassified} unclassified (kink)"));
    }
    pass(
        NAME,
        format!("signs match the case table: {}", parts.join(", ")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const SINGLE: &str = r#"
        name = "single"

        [ta]
        marginal_cost = 20.0
        fixed_cost = 1000.0

        [ta.publish]
        family = "power"
        a = 0.0
        b = 10.0
        gamma = 0.5

        [ta.read]
        family = "constant"
        a = 50.0

        [sweep]
        lo = 1.0
        hi = 250.0
        steps = 500
    "#;

    const MARKET: &str = r#"
        name = "market"

        [ta]
        marginal_cost = 20.0
        fixed_cost = 1000.0

        [ta.publish]
        family = "power"
        a = 20.0
        b = 10.0
        gamma = 0.5

        [ta.read]
        family = "constant"
        a = 50.0

        [oa.publish]
        family = "power"
        a = 0.0
        b = 10.0
        gamma = 0.5

        [market]
        budget = 480000.0
        n_total = 1500.0

        [sweep]
        lo = 300.0
        hi = 700.0
        steps = 401
    "#;

    #[test]
    fn single_publisher_battery_passes_every_check() {
        let scn = parse_scenario(SINGLE).unwrap();
        let report = run_battery(&scn);
        assert_eq!(report.checks.len(), 5);
        for c in &report.checks {
            assert!(c.pass, "check {} failed: {}", c.name, c.detail);
        }
        assert!(report.checks[1].detail.contains("N_tilde = 25.000000"));
    }

    #[test]
    fn market_battery_adds_the_three_market_checks() {
        let scn = parse_scenario(MARKET).unwrap();
        let report = run_battery(&scn);
        assert_eq!(report.checks.len(), 8);
        for c in &report.checks {
            assert!(c.pass, "check {} failed: {}", c.name, c.detail);
        }
        let signs = &report.checks[7];
        assert_eq!(signs.name, "oa_response_signs");
        assert!(signs.detail.contains("alpha1 x 401"), "{}", signs.detail);
    }

    #[test]
    fn zero_derivative_tolerance_fails_the_fd_checks() {
        let mut scn = parse_scenario(SINGLE).unwrap();
        scn.deriv_tol = 0.0;
        let report = run_battery(&scn);
        assert!(!report.all_pass());
        let fd = report
            .checks
            .iter()
            .find(|c| c.name == "fee_derivative_fd")
            .unwrap();
        assert!(!fd.pass);
    }

    #[test]
    fn report_renders_one_line_per_check_plus_summary() {
        let scn = parse_scenario(SINGLE).unwrap();
        let report = run_battery(&scn);
        let mut buf = Vec::new();
        write_report(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("check max_rule"));
        assert!(lines[0].contains("PASS"));
        assert_eq!(lines[5], "result: PASS (5/5 checks)");
    }

    #[test]
    fn no_regime_switch_scenarios_still_pass_threshold() {
        let text = SINGLE.replace("lo = 1.0", "lo = 30.0");
        let scn = parse_scenario(&text).unwrap();
        let report = run_battery(&scn);
        assert!(report.all_pass(), "{:?}", report.checks);
        assert!(
            report.checks[1].detail.contains("alpha = 1 throughout"),
            "{}",
            report.checks[1].detail
        );
    }
}

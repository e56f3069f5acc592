//! CSV tables for the sweep commands.
//!
//! Column layouts are part of the tool's interface and are kept stable:
//!
//! - fee/profit sweeps: `N,pi,rho,alpha,fee,profit,fee_derivative,marginal_profit,kink_flag`
//! - market shift sweeps: `s,n_ta,n_oa,fee_ta,fee_oa,alpha_ta,revenue_ta,revenue_oa,budget_residual,prop3_case,prop3_sign,infeasible_flag`
//!
//! Floats are written with the shortest round-trip formatting so re-running a
//! scenario is byte-identical. Rows whose evaluation failed are skipped and
//! counted; the writer reports the count so callers can surface it.

use std::io::{self, Write};

use parfee_core::{
    numerics, Alpha, DuopolyError, FeeSlope, Grid, ModelError, ShiftRecord, SweepTable, TaPublisher,
};

/// Everything the fee/profit table prints about one volume level.
#[derive(Debug, Clone)]
pub struct CurveRow {
    pub n: f64,
    pub pi: f64,
    pub rho: f64,
    pub alpha: Alpha,
    pub fee: f64,
    pub profit: f64,
    pub fee_derivative: f64,
    pub marginal_profit: f64,
    pub kink: bool,
}

/// Evaluate one row of the fee/profit table. At the regime switch itself the
/// fee has two one-sided slopes; the row reports the publish-side slope and
/// raises the kink flag so the discontinuity stays visible in the output.
pub fn curve_row(ta: &TaPublisher, n: f64) -> Result<CurveRow, ModelError> {
    let (pi, rho) = ta.components(n)?;
    let dec = ta.par_fee(n)?;
    let profit = ta.profit(n)?;
    let (fee_derivative, kink) = match ta.fee_derivative(n)? {
        FeeSlope::Smooth(v) => (v, false),
        FeeSlope::Kink { right, .. } => (right, true),
    };
    let marginal_profit = if n == 0.0 {
        // The volume-scaled terms vanish at zero volume, leaving the margin.
        dec.fee - ta.marginal_cost()
    } else if kink {
        ta.marginal_profit_in(n, Alpha::Publish)?.total
    } else {
        ta.marginal_profit(n)?.total
    };
    Ok(CurveRow {
        n,
        pi,
        rho,
        alpha: dec.alpha,
        fee: dec.fee,
        profit,
        fee_derivative,
        marginal_profit,
        kink,
    })
}

/// Evaluate the fee/profit table over a grid, capturing per-row failures.
pub fn curve_table(ta: &TaPublisher, grid: &Grid) -> SweepTable<CurveRow, ModelError> {
    numerics::sweep(grid, |n| curve_row(ta, n))
}

pub const CURVE_HEADER: &str = "N,pi,rho,alpha,fee,profit,fee_derivative,marginal_profit,kink_flag";

pub const SHIFT_HEADER: &str = "s,n_ta,n_oa,fee_ta,fee_oa,alpha_ta,revenue_ta,revenue_oa,\
                                budget_residual,prop3_case,prop3_sign,infeasible_flag";

/// Write the fee/profit table as CSV, returning how many rows were skipped
/// because their evaluation failed.
pub fn write_curve_csv<W: Write>(
    out: &mut W,
    table: &SweepTable<CurveRow, ModelError>,
) -> io::Result<usize> {
    writeln!(out, "{CURVE_HEADER}")?;
    let mut skipped = 0;
    for row in &table.rows {
        match &row.value {
            Ok(r) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.pi,
                r.rho,
                r.alpha,
                r.fee,
                r.profit,
                r.fee_derivative,
                r.marginal_profit,
                u8::from(r.kink)
            )?,
            Err(_) => skipped += 1,
        }
    }
    Ok(skipped)
}

/// Write the market shift table as CSV, returning how many rows were skipped
/// because their evaluation failed. Rows that evaluated but could not be
/// classified (the split sits on the regime kink) leave the two
/// classification cells empty rather than vanishing from the table.
pub fn write_shift_csv<W: Write>(
    out: &mut W,
    table: &SweepTable<ShiftRecord, DuopolyError>,
) -> io::Result<usize> {
    writeln!(out, "{SHIFT_HEADER}")?;
    let mut skipped = 0;
    for row in &table.rows {
        match &row.value {
            Ok(r) => {
                let (case, sign) = match &r.classification {
                    Some(c) => (c.case.label(), c.sign.label()),
                    None => ("", ""),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.s,
                    r.n_ta,
                    r.s,
                    r.fee_ta,
                    r.fee_oa,
                    r.alpha_ta,
                    r.revenue_ta,
                    r.revenue_oa,
                    r.budget_residual,
                    case,
                    sign,
                    u8::from(r.infeasible)
                )?
            }
            Err(_) => skipped += 1,
        }
    }
    Ok(skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use parfee_core::{CurveSpec, DuopolyMarket, OaPublisher};

    fn square_root_publisher() -> TaPublisher {
        let publish = CurveSpec::power(0.0, 10.0, 0.5).unwrap();
        let read = CurveSpec::constant(50.0).unwrap();
        TaPublisher::new(publish, read, 20.0, 1_000.0).unwrap()
    }

    #[test]
    fn rows_report_both_components_and_the_selected_fee() {
        let ta = square_root_publisher();
        let row = curve_row(&ta, 100.0).unwrap();
        assert_eq!(row.pi, 100.0);
        assert_eq!(row.rho, 50.0);
        assert_eq!(row.fee, 100.0);
        assert_eq!(row.alpha, Alpha::Publish);
        assert_eq!(row.profit, 100.0 * 80.0 - 1_000.0);
        assert!(!row.kink);
    }

    #[test]
    fn zero_volume_row_reports_margin_as_marginal_profit() {
        let ta = square_root_publisher();
        let row = curve_row(&ta, 0.0).unwrap();
        assert_eq!(row.fee, 50.0);
        assert_eq!(row.profit, -1_000.0);
        assert_eq!(row.marginal_profit, 30.0);
    }

    #[test]
    fn kink_row_reports_the_publish_side_slope_and_sets_the_flag() {
        let ta = square_root_publisher();
        let row = curve_row(&ta, 25.0).unwrap();
        assert!(row.kink);
        // Publish-side slope of 10 sqrt(n) at 25 is 5 / sqrt(25) = 1.
        assert!((row.fee_derivative - 1.0).abs() < 1e-12);
        // Publish-side marginal profit: margin 30 plus n * slope = 25.
        assert!((row.marginal_profit - 55.0).abs() < 1e-9);
    }

    #[test]
    fn curve_csv_has_the_pinned_header_and_flag_format() {
        let ta = square_root_publisher();
        let grid = Grid::new(0.0, 100.0, 3).unwrap();
        let table = curve_table(&ta, &grid);
        let mut buf = Vec::new();
        let skipped = write_curve_csv(&mut buf, &table).unwrap();
        assert_eq!(skipped, 0);
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CURVE_HEADER);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[3], "0"); // read corner
        assert_eq!(first[5], "-1000"); // fixed cost only at zero volume
        assert_eq!(first[8], "0"); // no kink
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn shift_csv_duplicates_the_split_as_the_competitor_volume() {
        let ta = square_root_publisher();
        let oa = OaPublisher::new(CurveSpec::power(0.0, 10.0, 0.5).unwrap()).unwrap();
        let market = DuopolyMarket::new(480_000.0, 1_500.0, ta, oa).unwrap();
        let grid = Grid::new(300.0, 700.0, 5).unwrap();
        let table = market.shift_sweep(&grid, None).unwrap();
        let mut buf = Vec::new();
        let skipped = write_shift_csv(&mut buf, &table).unwrap();
        assert_eq!(skipped, 0);
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SHIFT_HEADER);
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 12);
            assert_eq!(cells[0], cells[2]); // s and n_oa are the same number
            let s: f64 = cells[0].parse().unwrap();
            let n_ta: f64 = cells[1].parse().unwrap();
            assert_eq!(s + n_ta, 1_500.0);
        }
    }
}

//! Root finding, finite differences, grid sweeps, and derivative checks.
//!
//! This module is the oracle layer: everything in it is independent of the
//! fee model, so model derivatives can be validated against finite
//! differences computed here. All routines are deterministic — bisection
//! visits a fixed midpoint sequence, and sweep rows come back in grid order
//! whether or not they were evaluated in parallel.
//!
//! With the `parallel` feature (on by default) sweeps and derivative checks
//! fan out with rayon; `sweep_seq` and `check_derivative_seq` always run
//! sequentially and produce identical results, which makes them both the
//! fallback and the benchmark baseline.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("bisection requires a finite bracket with lo < hi (got [{lo}, {hi}])")]
    BadBracket { lo: f64, hi: f64 },
    #[error("tolerance must be positive and finite (got {0})")]
    BadTolerance(f64),
    #[error("check tolerance must be non-negative and finite (got {0})")]
    BadCheckTolerance(f64),
    #[error("no sign change over [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("|f| did not fall below {tol} within {max_iter} iterations (best |f| = {best})")]
    NoConvergence { tol: f64, max_iter: u32, best: f64 },
    #[error("function value at x = {x} is not finite")]
    NonFiniteValue { x: f64 },
    #[error("grid requires finite lo < hi and steps >= 2 (got [{lo}, {hi}] x {steps})")]
    BadGrid { lo: f64, hi: f64, steps: usize },
}

/// Default central-difference step at `x`: proportional to `|x|`, floored
/// away from zero so the stencil never collapses.
pub fn fd_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-7)
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn fd_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    assert!(
        h > 0.0 && h.is_finite(),
        "step h must be positive and finite"
    );
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central difference for fallible functions; evaluation errors carry the
/// domain information, so they surface unchanged.
pub fn try_fd_derivative<E, F: Fn(f64) -> Result<f64, E>>(f: F, x: f64, h: f64) -> Result<f64, E> {
    assert!(
        h > 0.0 && h.is_finite(),
        "step h must be positive and finite"
    );
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// A bisection result: the accepted abscissa and the residual there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Residual-driven bisection: halve the bracket until `|f(mid)| <= tol`.
///
/// The stop rule is on the residual rather than the bracket width so the
/// caller gets a guaranteed bound on `|f|` at the returned point. Exact
/// zeros at the endpoints are accepted as roots. The midpoint sequence is a
/// pure function of the inputs, so repeated calls are bit-identical.
pub fn bisect<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: u32,
) -> Result<Root, NumericsError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(NumericsError::BadBracket { lo, hi });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(NumericsError::BadTolerance(tol));
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !f_lo.is_finite() {
        return Err(NumericsError::NonFiniteValue { x: lo });
    }
    if !f_hi.is_finite() {
        return Err(NumericsError::NonFiniteValue { x: hi });
    }
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            iterations: 0,
        });
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(NumericsError::NoSignChange { lo, hi, f_lo, f_hi });
    }

    let mut a = lo;
    let mut b = hi;
    let mut f_a = f_lo;
    let mut best = f_lo.abs().min(f_hi.abs());
    for iterations in 1..=max_iter {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            // The bracket has collapsed to adjacent floats; nothing closer
            // to the root is representable.
            break;
        }
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(NumericsError::NonFiniteValue { x: mid });
        }
        if f_mid.abs() <= tol {
            return Ok(Root {
                x: mid,
                residual: f_mid,
                iterations,
            });
        }
        best = best.min(f_mid.abs());
        if (f_mid > 0.0) == (f_a > 0.0) {
            a = mid;
            f_a = f_mid;
        } else {
            b = mid;
        }
    }
    Err(NumericsError::NoConvergence {
        tol,
        max_iter,
        best,
    })
}

/// An evenly spaced evaluation grid with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    steps: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self, NumericsError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && steps >= 2) {
            return Err(NumericsError::BadGrid { lo, hi, steps });
        }
        Ok(Grid { lo, hi, steps })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The `i`-th grid point. Endpoints are returned exactly.
    pub fn point(&self, i: usize) -> f64 {
        assert!(i < self.steps, "grid index {i} out of range");
        if i == 0 {
            self.lo
        } else if i == self.steps - 1 {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / ((self.steps - 1) as f64)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(move |i| self.point(i))
    }
}

/// One sweep row: the grid point and the captured evaluation outcome.
///
/// Errors are captured per row so a single bad point cannot void a whole
/// table export.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T, E> {
    pub x: f64,
    pub value: Result<T, E>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T, E> {
    pub rows: Vec<SweepRow<T, E>>,
}

impl<T, E> SweepTable<T, E> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn err_count(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_err()).count()
    }

    /// Iterate over the successful rows only.
    pub fn ok_rows(&self) -> impl Iterator<Item = (f64, &T)> {
        self.rows
            .iter()
            .filter_map(|r| r.value.as_ref().ok().map(|v| (r.x, v)))
    }
}

#[cfg(feature = "parallel")]
fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(len: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(len: usize, f: F) -> Vec<T> {
    (0..len).map(f).collect()
}

/// Evaluate `f` over the grid. Rows come back in grid order; with the
/// `parallel` feature the points are evaluated on the rayon pool.
pub fn sweep<T, E, F>(grid: &Grid, f: F) -> SweepTable<T, E>
where
    T: Send,
    E: Send,
    F: Fn(f64) -> Result<T, E> + Sync,
{
    let rows = map_indexed(grid.steps(), |i| {
        let x = grid.point(i);
        SweepRow { x, value: f(x) }
    });
    SweepTable { rows }
}

/// Sequential sweep with the same contract as [`sweep`].
pub fn sweep_seq<T, E, F>(grid: &Grid, f: F) -> SweepTable<T, E>
where
    F: Fn(f64) -> Result<T, E>,
{
    let rows = (0..grid.steps())
        .map(|i| {
            let x = grid.point(i);
            SweepRow { x, value: f(x) }
        })
        .collect();
    SweepTable { rows }
}

/// One compared point in a derivative check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeRecord {
    pub x: f64,
    pub analytic: f64,
    pub estimate: f64,
    pub abs_error: f64,
}

/// Outcome of comparing an analytic derivative against central differences
/// over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub tolerance: f64,
    pub checked: Vec<DerivativeRecord>,
    /// Points skipped: inside an exclusion interval, or either the function
    /// or the derivative refused to evaluate there.
    pub excluded: Vec<f64>,
    pub max_abs_error: f64,
    pub worst_x: Option<f64>,
    /// True when no point was checked at all; such a report passes, but the
    /// caller can see it proved nothing.
    pub vacuous: bool,
    pub pass: bool,
}

enum CheckOutcome {
    Checked(DerivativeRecord),
    Excluded(f64),
}

fn check_point<E, F, D>(f: &F, df: &D, exclusions: &[(f64, f64)], x: f64) -> CheckOutcome
where
    F: Fn(f64) -> Result<f64, E>,
    D: Fn(f64) -> Result<f64, E>,
{
    if exclusions.iter().any(|&(lo, hi)| x >= lo && x <= hi) {
        return CheckOutcome::Excluded(x);
    }
    let h = fd_step(x);
    let estimate = match try_fd_derivative(f, x, h) {
        Ok(v) if v.is_finite() => v,
        _ => return CheckOutcome::Excluded(x),
    };
    let analytic = match df(x) {
        Ok(v) if v.is_finite() => v,
        _ => return CheckOutcome::Excluded(x),
    };
    CheckOutcome::Checked(DerivativeRecord {
        x,
        analytic,
        estimate,
        abs_error: (estimate - analytic).abs(),
    })
}

fn assemble_report(outcomes: Vec<CheckOutcome>, tol: f64) -> DerivativeReport {
    let mut checked = Vec::new();
    let mut excluded = Vec::new();
    for outcome in outcomes {
        match outcome {
            CheckOutcome::Checked(rec) => checked.push(rec),
            CheckOutcome::Excluded(x) => excluded.push(x),
        }
    }
    let worst = checked
        .iter()
        .max_by(|a, b| a.abs_error.total_cmp(&b.abs_error));
    let max_abs_error = worst.map_or(0.0, |r| r.abs_error);
    let worst_x = worst.map(|r| r.x);
    let vacuous = checked.is_empty();
    DerivativeReport {
        tolerance: tol,
        pass: vacuous || max_abs_error <= tol,
        checked,
        excluded,
        max_abs_error,
        worst_x,
        vacuous,
    }
}

/// Compare `df` against central differences of `f` on every grid point not
/// covered by an exclusion interval. Failures are reported, not thrown;
/// only a malformed tolerance is an error.
pub fn check_derivative<E, F, D>(
    f: F,
    df: D,
    grid: &Grid,
    tol: f64,
    exclusions: &[(f64, f64)],
) -> Result<DerivativeReport, NumericsError>
where
    E: Send,
    F: Fn(f64) -> Result<f64, E> + Sync,
    D: Fn(f64) -> Result<f64, E> + Sync,
{
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(NumericsError::BadCheckTolerance(tol));
    }
    let outcomes = map_indexed(grid.steps(), |i| {
        check_point(&f, &df, exclusions, grid.point(i))
    });
    Ok(assemble_report(outcomes, tol))
}

/// Sequential variant of [`check_derivative`] with an identical contract.
pub fn check_derivative_seq<E, F, D>(
    f: F,
    df: D,
    grid: &Grid,
    tol: f64,
    exclusions: &[(f64, f64)],
) -> Result<DerivativeReport, NumericsError>
where
    F: Fn(f64) -> Result<f64, E>,
    D: Fn(f64) -> Result<f64, E>,
{
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(NumericsError::BadCheckTolerance(tol));
    }
    let outcomes = (0..grid.steps())
        .map(|i| check_point(&f, &df, exclusions, grid.point(i)))
        .collect();
    Ok(assemble_report(outcomes, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_a_linear_root() {
        let root = bisect(|x| x - 3.0, 0.0, 10.0, 1e-10, 200).unwrap();
        assert!((root.x - 3.0).abs() <= 1e-9);
        assert!(root.residual.abs() <= 1e-10);
    }

    #[test]
    fn bisect_accepts_exact_endpoint_roots() {
        let root = bisect(|x| x, 0.0, 5.0, 1e-10, 200).unwrap();
        assert_eq!(root.x, 0.0);
        assert_eq!(root.residual, 0.0);
        assert_eq!(root.iterations, 0);
    }

    #[test]
    fn bisect_rejects_brackets_without_sign_change() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 200).unwrap_err();
        assert!(matches!(err, NumericsError::NoSignChange { .. }));
    }

    #[test]
    fn bisect_rejects_bad_inputs() {
        assert!(matches!(
            bisect(|x| x, 5.0, 1.0, 1e-10, 200),
            Err(NumericsError::BadBracket { .. })
        ));
        assert!(matches!(
            bisect(|x| x, -1.0, 1.0, 0.0, 200),
            Err(NumericsError::BadTolerance(_))
        ));
        assert!(matches!(
            bisect(|x| x, -1.0, 1.0, -1e-3, 200),
            Err(NumericsError::BadTolerance(_))
        ));
    }

    #[test]
    fn bisect_reports_non_convergence() {
        // A sign step never comes near zero, so the bracket collapses to
        // adjacent floats with the residual still at 1.
        let step = |x: f64| if x < 0.1 { -1.0 } else { 1.0 };
        let err = bisect(step, 0.0, 1.0, 1e-6, 200).unwrap_err();
        match err {
            NumericsError::NoConvergence { best, .. } => assert_eq!(best, 1.0),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn bisect_is_deterministic() {
        let run = || bisect(|x| x.cos() - x, 0.0, 1.0, 1e-12, 200).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.x.to_bits(), b.x.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn fd_matches_known_derivatives() {
        let d = fd_derivative(|x| x * x, 3.0, 1e-5);
        assert!((d - 6.0).abs() < 1e-8);
        let d = fd_derivative(|x| x.sin(), 1.0, 1e-5);
        assert!((d - 1.0_f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn fd_error_shrinks_quadratically() {
        // Central differences on a smooth function: halving h should cut
        // the error by roughly 4x; require at least 3x.
        let f = |x: f64| x.exp() * x.sin();
        let df = |x: f64| x.exp() * (x.sin() + x.cos());
        let x = 0.7;
        let err_at = |h: f64| (fd_derivative(f, x, h) - df(x)).abs();
        let coarse = err_at(1e-3);
        let fine = err_at(5e-4);
        assert!(coarse > 3.0 * fine, "coarse {coarse} vs fine {fine}");
    }

    #[test]
    fn try_fd_propagates_evaluation_errors() {
        let f = |x: f64| {
            if x < 0.0 {
                Err("below domain")
            } else {
                Ok(x * x)
            }
        };
        assert!(try_fd_derivative(f, 1e-8, 1e-7).is_err());
        assert!((try_fd_derivative(f, 1.0, 1e-6).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn grid_endpoints_are_exact_and_points_increase() {
        let grid = Grid::new(1.0, 250.0, 500).unwrap();
        assert_eq!(grid.point(0), 1.0);
        assert_eq!(grid.point(499), 250.0);
        let pts: Vec<f64> = grid.points().collect();
        assert_eq!(pts.len(), 500);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_rejects_degenerate_shapes() {
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(5.0, 1.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(f64::NEG_INFINITY, 1.0, 10).is_err());
    }

    #[test]
    fn sweep_captures_errors_per_row() {
        let grid = Grid::new(0.0, 10.0, 11).unwrap();
        let table = sweep(&grid, |x| {
            if x == 5.0 {
                Err("poisoned point")
            } else {
                Ok(x * 2.0)
            }
        });
        assert_eq!(table.len(), 11);
        assert_eq!(table.err_count(), 1);
        assert_eq!(table.ok_rows().count(), 10);
        // Row order follows the grid even with the failure in the middle.
        let xs: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sweep_parallel_and_sequential_agree_bitwise() {
        let grid = Grid::new(0.5, 321.5, 1_001).unwrap();
        let f = |x: f64| -> Result<f64, ()> { Ok(x.sqrt() * x.sin()) };
        let par = sweep(&grid, f);
        let seq = sweep_seq(&grid, f);
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.rows.iter().zip(seq.rows.iter()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(
                a.value.as_ref().unwrap().to_bits(),
                b.value.as_ref().unwrap().to_bits()
            );
        }
    }

    #[test]
    fn check_derivative_passes_on_consistent_pairs() {
        let grid = Grid::new(0.1, 10.0, 200).unwrap();
        let report = check_derivative(
            |x| Ok::<f64, ()>(x * x * x),
            |x| Ok(3.0 * x * x),
            &grid,
            1e-4,
            &[],
        )
        .unwrap();
        assert!(report.pass);
        assert!(!report.vacuous);
        assert_eq!(report.checked.len(), 200);
        assert!(report.max_abs_error <= 1e-4);
    }

    #[test]
    fn check_derivative_flags_injected_faults() {
        let grid = Grid::new(0.1, 10.0, 200).unwrap();
        let report = check_derivative(
            |x| Ok::<f64, ()>(x * x * x),
            |x| Ok(3.0 * x * x + 1.0),
            &grid,
            1e-4,
            &[],
        )
        .unwrap();
        assert!(!report.pass);
        assert!((report.max_abs_error - 1.0).abs() < 1e-3);
    }

    #[test]
    fn check_derivative_is_vacuous_when_everything_is_excluded() {
        let grid = Grid::new(0.0, 1.0, 50).unwrap();
        let report =
            check_derivative(Ok::<f64, ()>, |_| Ok(1.0), &grid, 1e-4, &[(-1.0, 2.0)]).unwrap();
        assert!(report.pass);
        assert!(report.vacuous);
        assert_eq!(report.checked.len(), 0);
        assert_eq!(report.excluded.len(), 50);
        assert_eq!(report.max_abs_error, 0.0);
    }

    #[test]
    fn check_derivative_self_consistency() {
        // Using the FD oracle as its own analytic derivative must pass.
        let grid = Grid::new(0.5, 20.0, 100).unwrap();
        let f = |x: f64| Ok::<f64, ()>(x.ln() * x);
        let report =
            check_derivative(f, |x| try_fd_derivative(f, x, fd_step(x)), &grid, 1e-9, &[]).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn check_derivative_rejects_malformed_tolerance_only() {
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let ok = |x: f64| Ok::<f64, ()>(x);
        assert!(matches!(
            check_derivative(ok, |_| Ok(1.0), &grid, -1.0, &[]),
            Err(NumericsError::BadCheckTolerance(_))
        ));
        // Zero is allowed: it parses, the checks then fail on FD noise.
        let report =
            check_derivative(|x| Ok::<f64, ()>(x.sin()), |x| Ok(x.cos()), &grid, 0.0, &[]).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn check_derivative_parallel_matches_sequential() {
        let grid = Grid::new(0.1, 50.0, 777).unwrap();
        let f = |x: f64| Ok::<f64, ()>(x.powf(0.5) * 10.0);
        let df = |x: f64| Ok::<f64, ()>(5.0 * x.powf(-0.5));
        let par = check_derivative(f, df, &grid, 1e-4, &[(1.0, 2.0)]).unwrap();
        let seq = check_derivative_seq(f, df, &grid, 1e-4, &[(1.0, 2.0)]).unwrap();
        assert_eq!(par, seq);
    }
}

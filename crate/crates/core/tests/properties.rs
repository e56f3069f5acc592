//! Cross-module property tests: invariants that must hold for whole
//! parameter families, not just the worked examples.

use proptest::prelude::*;

use parfee_core::{fd_derivative, CurveSpec, DuopolyMarket, Grid, OaPublisher, TaPublisher};

/// A valid bundled publisher with a concave-power publish part and a flat
/// read part.
fn power_flat_publisher() -> impl Strategy<Value = TaPublisher> {
    (
        0.0..200.0f64,   // publish intercept
        0.5..20.0f64,    // publish slope coefficient
        0.2..0.8f64,     // publish exponent
        10.0..500.0f64,  // flat read level
        0.0..100.0f64,   // marginal cost
        0.0..5_000.0f64, // fixed cost
    )
        .prop_map(|(a, b, gamma, r, c, f)| {
            TaPublisher::new(
                CurveSpec::power(a, b, gamma).unwrap(),
                CurveSpec::constant(r).unwrap(),
                c,
                f,
            )
            .unwrap()
        })
}

/// Any publish-shaped curve.
fn publish_curve() -> impl Strategy<Value = CurveSpec> {
    prop_oneof![
        (0.0..200.0f64, 0.5..20.0f64, 0.2..0.8f64)
            .prop_map(|(a, b, g)| CurveSpec::power(a, b, g).unwrap()),
        (0.0..200.0f64, 0.5..50.0f64).prop_map(|(a, b)| CurveSpec::log_affine(a, b).unwrap()),
        (0.0..200.0f64, 0.0..2.0f64).prop_map(|(a, b)| CurveSpec::affine(a, b).unwrap()),
        (10.0..500.0f64).prop_map(|a| CurveSpec::constant(a).unwrap()),
    ]
}

/// Any read-shaped curve that stays positive over volumes up to ~10^4.
fn read_curve() -> impl Strategy<Value = CurveSpec> {
    prop_oneof![
        (10.0..500.0f64).prop_map(|a| CurveSpec::constant(a).unwrap()),
        (0.0..100.0f64, 1_000.0..500_000.0f64, 10.0..500.0f64)
            .prop_map(|(a, b, s)| CurveSpec::hyperbolic(a, b, s).unwrap()),
    ]
}

proptest! {
    /// The fee is the exact component maximum and the weight names the
    /// winning component, for any valid curve pair.
    #[test]
    fn fee_is_the_component_maximum(
        publish in publish_curve(),
        read in read_curve(),
        n in 0.0..10_000.0f64,
    ) {
        let ta = TaPublisher::new(publish, read, 20.0, 1_000.0).unwrap();
        let dec = ta.par_fee(n).unwrap();
        prop_assert_eq!(dec.fee, dec.publish_part.max(dec.read_part));
        prop_assert_eq!(dec.alpha.is_publish(), dec.publish_part >= dec.read_part);
    }

    /// Scaling both fee components by a common factor scales the fee by
    /// that factor (to rounding) and never moves the regime away from a
    /// clear winner.
    #[test]
    fn common_scaling_preserves_regimes_and_scales_fees(
        a in 0.0..200.0f64,
        b in 0.5..20.0f64,
        gamma in 0.2..0.8f64,
        r in 10.0..500.0f64,
        lambda in 0.01..100.0f64,
        n in 0.1..10_000.0f64,
    ) {
        let base = TaPublisher::new(
            CurveSpec::power(a, b, gamma).unwrap(),
            CurveSpec::constant(r).unwrap(),
            20.0,
            1_000.0,
        )
        .unwrap();
        let scaled = TaPublisher::new(
            CurveSpec::power(lambda * a, lambda * b, gamma).unwrap(),
            CurveSpec::constant(lambda * r).unwrap(),
            20.0,
            1_000.0,
        )
        .unwrap();
        let dec = base.par_fee(n).unwrap();
        let dec_scaled = scaled.par_fee(n).unwrap();

        // Regime flags can only differ within rounding distance of an
        // exact component tie, so compare them away from it.
        let gap = (dec.publish_part - dec.read_part).abs();
        if gap > 1e-9 * (1.0 + dec.fee) {
            prop_assert_eq!(dec.alpha, dec_scaled.alpha);
        }
        let expected = lambda * dec.fee;
        prop_assert!(
            (dec_scaled.fee - expected).abs() <= 2e-15 * expected.abs(),
            "fee {} vs scaled {}", expected, dec_scaled.fee
        );
    }

    /// Power-of-two scale factors commute with the fee bit-for-bit.
    #[test]
    fn power_of_two_scaling_is_exact(
        ta in power_flat_publisher(),
        exponent in -2i32..3i32,
        n in 0.1..10_000.0f64,
    ) {
        let lambda = 2.0f64.powi(exponent);
        let (a, b, gamma) = match ta.publish().family() {
            parfee_core::CurveFamily::Power { a, b, gamma } => (a, b, gamma),
            other => panic!("unexpected family {other:?}"),
        };
        let r = ta.read().value(0.0);
        let scaled = TaPublisher::new(
            CurveSpec::power(lambda * a, lambda * b, gamma).unwrap(),
            CurveSpec::constant(lambda * r).unwrap(),
            ta.marginal_cost(),
            ta.fixed_cost(),
        )
        .unwrap();
        let fee = ta.par_fee(n).unwrap().fee;
        let fee_scaled = scaled.par_fee(n).unwrap().fee;
        prop_assert_eq!((lambda * fee).to_bits(), fee_scaled.to_bits());
    }

    /// Grids have the declared length, exact endpoints, and strictly
    /// increasing points.
    #[test]
    fn grids_are_exact_and_monotone(
        lo in -1_000.0..1_000.0f64,
        span in 0.001..10_000.0f64,
        steps in 2usize..2_000,
    ) {
        let hi = lo + span;
        prop_assume!(hi > lo);
        let grid = Grid::new(lo, hi, steps).unwrap();
        let pts: Vec<f64> = grid.points().collect();
        prop_assert_eq!(pts.len(), steps);
        prop_assert_eq!(pts[0], lo);
        prop_assert_eq!(pts[steps - 1], hi);
        prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    /// The threshold honors its residual contract wherever a crossing is
    /// bracketed.
    #[test]
    fn threshold_meets_its_residual_contract(
        b in 0.5..20.0f64,
        r in 10.0..500.0f64,
    ) {
        // pi = b sqrt(n) crosses rho = r at (r/b)^2.
        let ta = TaPublisher::new(
            CurveSpec::power(0.0, b, 0.5).unwrap(),
            CurveSpec::constant(r).unwrap(),
            20.0,
            1_000.0,
        )
        .unwrap();
        let crossing = (r / b) * (r / b);
        let t = ta.threshold(crossing / 4.0, crossing * 4.0, 1e-9).unwrap();
        prop_assert!(t.residual.abs() <= 1e-9);
        prop_assert!(t.n_tilde >= crossing / 4.0 && t.n_tilde <= crossing * 4.0);
        // The residual really is the component gap at the accepted point.
        let gap = ta.publish().value(t.n_tilde) - ta.read().value(t.n_tilde);
        prop_assert_eq!(gap, t.residual);
    }

    /// Budget conservation holds on every sweep row for any market, tight
    /// or generous budgets alike.
    #[test]
    fn budget_identity_holds_on_every_row(
        a_oa in 0.0..50.0f64,
        extra in 0.0..150.0f64,
        b in 0.5..20.0f64,
        gamma in 0.2..0.8f64,
        r in 10.0..500.0f64,
        n_total in 100.0..5_000.0f64,
        budget in 1_000.0..10_000_000.0f64,
    ) {
        let a_ta = a_oa + extra;
        let ta = TaPublisher::new(
            CurveSpec::power(a_ta, b, gamma).unwrap(),
            CurveSpec::constant(r).unwrap(),
            20.0,
            1_000.0,
        )
        .unwrap();
        let oa = OaPublisher::new(CurveSpec::power(a_oa, b, gamma).unwrap()).unwrap();
        let market = DuopolyMarket::new(budget, n_total, ta, oa).unwrap();
        let grid = Grid::new(n_total * 0.05, n_total * 0.95, 64).unwrap();
        let table = market.shift_sweep(&grid, None).unwrap();
        prop_assert_eq!(table.err_count(), 0);
        for (_, row) in table.ok_rows() {
            prop_assert!(row.budget_residual.abs() <= 1e-9);
            // n_ta is defined as n_total - s, so the volumes re-add to the
            // total up to one rounding of the subtraction.
            let readd = (row.n_ta + row.s - n_total).abs();
            prop_assert!(readd <= 2.0 * f64::EPSILON * n_total, "readd {readd}");
        }
    }

    /// Central differences converge at second order on smooth curves:
    /// halving the step cuts the error at least threefold once above the
    /// rounding floor.
    #[test]
    fn central_differences_converge_quadratically(
        b in 1.0..20.0f64,
        gamma in 0.2..0.8f64,
        x in 10.0..1_000.0f64,
    ) {
        let curve = CurveSpec::power(5.0, b, gamma).unwrap();
        let exact = curve.derivative(x);
        let err = |h: f64| (fd_derivative(|v| curve.value(v), x, h) - exact).abs();
        let h = 1e-2 * x;
        let coarse = err(h);
        let fine = err(h / 2.0);
        prop_assume!(coarse > 1e-10);
        prop_assert!(coarse > 3.0 * fine, "coarse {coarse}, fine {fine}");
    }
}

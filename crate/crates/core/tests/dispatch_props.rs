use h2sched_core::dispatch::{lp_oracle, solve, DispatchProblem};
use h2sched_core::plant::PlantSpec;
use proptest::prelude::*;

fn hours(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (
            -50.0..300.0f64,
            -1.0..6.0f64,
            prop_oneof![Just(0.0), Just(1.0), 0.0..1.0f64],
        ),
        1..=max,
    )
}

fn split(h: &[(f64, f64, f64)]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        h.iter().map(|x| x.0).collect(),
        h.iter().map(|x| x.1).collect(),
        h.iter().map(|x| x.2).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_oracle(h in hours(24), frac in 0.0..=1.0f64) {
        let spec = PlantSpec::default();
        let (e, hp, w) = split(&h);
        let probe = DispatchProblem::new(&e, &hp, &w, 0.0, &spec);
        let p = DispatchProblem::new(&e, &hp, &w, frac * probe.max_attainable(), &spec);
        let fast = solve(&p).unwrap();
        let exact = lp_oracle(&p).unwrap();
        prop_assert!((fast.revenue - exact.revenue).abs() <= 1e-6 * exact.revenue.abs().max(1.0));
        prop_assert!(fast.hpa_delivered >= p.hpa_min * (1.0 - 1e-12) - 1e-9);
        prop_assert!(fast.check_flows(&spec).is_ok());
        prop_assert!((fast.recompute_revenue(&e, &hp) - fast.revenue).abs() <= 1e-9 * fast.revenue.abs().max(1.0));
    }

    #[test]
    fn beats_run_flat_out_schedule(h in hours(48), frac in 0.0..=1.0f64) {
        // Feasible alternative: electrolyser at its limit every hour, contract
        // share equal in every hour.
        let spec = PlantSpec::default();
        let s = spec.specific_energy;
        let (e, hp, w) = split(&h);
        let probe = DispatchProblem::new(&e, &hp, &w, 0.0, &spec);
        let need = frac * probe.max_attainable();
        let opt = solve(&DispatchProblem::new(&e, &hp, &w, need, &spec)).unwrap();
        let mut alt = 0.0;
        for t in 0..e.len() {
            let g1 = w[t] * spec.wind_capacity;
            let g3 = g1.min(spec.electrolyser_capacity);
            let m1 = g3 / s;
            alt += e[t] * (g1 - g3) + hp[t] * m1 * (1.0 - frac);
        }
        prop_assert!(opt.revenue >= alt - 1e-6 * alt.abs().max(1.0));
    }

    #[test]
    fn revenue_falls_as_requirement_rises(h in hours(48), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let spec = PlantSpec::default();
        let (e, hp, w) = split(&h);
        let max = DispatchProblem::new(&e, &hp, &w, 0.0, &spec).max_attainable();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r_lo = solve(&DispatchProblem::new(&e, &hp, &w, lo * max, &spec)).unwrap();
        let r_hi = solve(&DispatchProblem::new(&e, &hp, &w, hi * max, &spec)).unwrap();
        prop_assert!(r_hi.revenue <= r_lo.revenue + 1e-9 * r_lo.revenue.abs().max(1.0));
        // The multiplier is the slope bound between the two requirements.
        let drop = r_lo.revenue - r_hi.revenue;
        let span = (hi - lo) * max;
        prop_assert!(drop <= r_hi.dual_price * span + 1e-6 * r_lo.revenue.abs().max(1.0));
        prop_assert!(drop >= r_lo.dual_price * span - 1e-6 * r_lo.revenue.abs().max(1.0));
    }

    #[test]
    fn complementary_slackness(h in hours(48), frac in 0.0..=1.0f64) {
        let spec = PlantSpec::default();
        let (e, hp, w) = split(&h);
        let max = DispatchProblem::new(&e, &hp, &w, 0.0, &spec).max_attainable();
        let need = frac * max;
        let sol = solve(&DispatchProblem::new(&e, &hp, &w, need, &spec)).unwrap();
        prop_assert!(sol.dual_price >= 0.0);
        if sol.dual_price > 0.0 {
            prop_assert!((sol.hpa_delivered - need).abs() <= 1e-9 * max.max(1.0));
        }
    }

    #[test]
    fn scales_with_prices(h in hours(24), frac in 0.0..=1.0f64, c in 0.1..10.0f64) {
        let spec = PlantSpec::default();
        let (e, hp, w) = split(&h);
        let max = DispatchProblem::new(&e, &hp, &w, 0.0, &spec).max_attainable();
        let base = solve(&DispatchProblem::new(&e, &hp, &w, frac * max, &spec)).unwrap();
        let e2: Vec<f64> = e.iter().map(|x| x * c).collect();
        let h2: Vec<f64> = hp.iter().map(|x| x * c).collect();
        let scaled = solve(&DispatchProblem::new(&e2, &h2, &w, frac * max, &spec)).unwrap();
        prop_assert!((scaled.revenue - c * base.revenue).abs() <= 1e-9 * (c * base.revenue).abs().max(1.0));
        prop_assert!((scaled.dual_price - c * base.dual_price).abs() <= 1e-9 * (c * base.dual_price).abs().max(1.0));
    }

    #[test]
    fn single_hour_closed_form(e in -50.0..300.0f64, h in -1.0..6.0f64, w in 0.0..=1.0f64) {
        let spec = PlantSpec::default();
        let s = spec.specific_energy;
        let sol = solve(&DispatchProblem::new(&[e], &[h], &[w], 0.0, &spec)).unwrap();
        let g1 = 2.0 * w;
        let u = g1.min(1.0);
        // Usable energy earns the best of grid, market hydrogen or a free
        // contract delivery; the rest must go to the grid.
        let expected = e * (g1 - u) + u * e.max(h / s).max(0.0);
        prop_assert!((sol.revenue - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }
}

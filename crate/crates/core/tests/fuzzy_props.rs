use h2sched_core::fuzzy::{
    centroid, infer, FuzzyModel, MembershipParams, MembershipSet, RuleBase, Term,
};
use proptest::prelude::*;

fn params(lo: f64, hi: f64) -> impl Strategy<Value = MembershipParams> {
    prop::collection::vec(lo..=hi, 5).prop_map(move |inner| MembershipParams::from_inner(lo, hi, &inner))
}

fn rules() -> impl Strategy<Value = RuleBase> {
    prop::collection::vec(0..3usize, 27).prop_map(|picks| {
        RuleBase::from_fn(|e, h, w| Term::ALL[picks[RuleBase::index(e, h, w)]])
    })
}

fn model() -> impl Strategy<Value = FuzzyModel> {
    (params(0.0, 1.0), params(-10.0, 200.0), params(1.0, 5.0), params(0.0, 17.0), rules())
        .prop_map(|(w, e, h, out, rules)| FuzzyModel {
            sets: MembershipSet { w, e, h, out },
            rules,
        })
}

/// Midpoint-rule centroid of the clipped aggregate on a uniform grid.
fn numeric_centroid(out: &MembershipParams, levels: [f64; 3], n: usize) -> Option<f64> {
    let (lo, hi) = (out.min(), out.max());
    let step = (hi - lo) / n as f64;
    let (mut area, mut moment) = (0.0, 0.0);
    for i in 0..n {
        let y = lo + (i as f64 + 0.5) * step;
        let mu = out.membership(y);
        let v = (0..3).map(|k| mu[k].min(levels[k])).fold(0.0, f64::max);
        area += v;
        moment += v * y;
    }
    (area > 0.0).then(|| moment / area)
}

proptest! {
    #[test]
    fn memberships_are_degrees(mp in params(-5.0, 5.0), x in -10.0..10.0f64) {
        let mu = mp.membership(x);
        prop_assert!(mu.iter().all(|m| (0.0..=1.0).contains(m)));
        prop_assert!(mu.iter().any(|&m| m > 0.0));
    }

    #[test]
    fn output_stays_in_range(m in model(), e in -50.0..250.0f64, h in 0.0..6.0f64, w in 0.0..=1.0f64) {
        let y = infer(&m, e, h, w);
        prop_assert!(y >= m.sets.out.min() && y <= m.sets.out.max());
    }

    #[test]
    fn input_affine_invariance(m in model(), e in -10.0..200.0f64, h in 1.0..5.0f64, w in 0.0..=1.0f64,
                               a in 0.5..4.0f64, b in -20.0..20.0f64) {
        // Moving an input and its breakpoints together leaves memberships unchanged.
        let mut moved = m;
        moved.sets.e = m.sets.e.affine(a, b);
        let y0 = infer(&m, e, h, w);
        let y1 = infer(&moved, a * e + b, h, w);
        prop_assert!((y0 - y1).abs() <= 1e-9 * (1.0 + y0.abs()));
    }

    #[test]
    fn output_affine_equivariance(m in model(), e in -10.0..200.0f64, h in 1.0..5.0f64, w in 0.0..=1.0f64,
                                  a in 0.5..4.0f64, b in -5.0..5.0f64) {
        let mut moved = m;
        moved.sets.out = m.sets.out.affine(a, b);
        let y0 = infer(&m, e, h, w);
        let y1 = infer(&moved, e, h, w);
        prop_assert!((a * y0 + b - y1).abs() <= 1e-9 * (1.0 + y1.abs()));
    }

    #[test]
    fn centroid_matches_quadrature(out in params(0.0, 17.0), l0 in 0.0..=1.0f64, l1 in 0.0..=1.0f64, l2 in 0.0..=1.0f64) {
        let levels = [l0, l1, l2];
        match (centroid(&out, levels), numeric_centroid(&out, levels, 20_000)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 2e-3, "{a} vs {b}"),
            (None, None) => {}
            (a, b) => prop_assert!(out.max() - out.min() < 1e-9, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn model_text_round_trip(m in model()) {
        let back: FuzzyModel = m.to_string().parse().unwrap();
        prop_assert_eq!(back, m);
    }
}

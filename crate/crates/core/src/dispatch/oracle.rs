use super::simplex::{LinearProgram, LpError, Relation};
use super::{DispatchProblem, DispatchSolution};
use crate::error::{Error, Result};
use crate::plant::HourFlows;

const MAX_HORIZON: usize = 8760;

/// Solves the dispatch LP with the generic simplex. Test and verification use
/// only: the dense tableau grows quadratically with the horizon.
///
/// Variables per hour are `g3` and `m2`; the rest follow from the balances
/// (`g2 = g1 − g3`, `m1 = g3/s`, `m3 = m1 − m2`).
pub fn lp_oracle(p: &DispatchProblem) -> Result<DispatchSolution> {
    p.validate()?;
    let n = p.horizon();
    if n > MAX_HORIZON {
        return Err(Error::Validation(format!(
            "oracle horizon {n} exceeds {MAX_HORIZON} hours"
        )));
    }
    let s = p.spec.specific_energy;
    let g3 = |t: usize| 2 * t;
    let m2 = |t: usize| 2 * t + 1;

    // revenue = Σ e(g1 − g3) + h(g3/s − m2)
    let mut objective = vec![0.0; 2 * n];
    let mut constant = 0.0;
    for t in 0..n {
        objective[g3(t)] = p.h[t] / s - p.e[t];
        objective[m2(t)] = -p.h[t];
        constant += p.e[t] * p.g1(t);
    }
    let mut lp = LinearProgram::maximize(objective);
    for t in 0..n {
        lp.add_row(&[(g3(t), 1.0)], Relation::Le, p.spec.electrolyser_capacity);
        lp.add_row(&[(g3(t), 1.0)], Relation::Le, p.g1(t));
        lp.add_row(&[(m2(t), 1.0), (g3(t), -1.0 / s)], Relation::Le, 0.0);
    }
    let terms: Vec<(usize, f64)> = (0..n).map(|t| (m2(t), 1.0)).collect();
    let hpa_row = lp.add_row(&terms, Relation::Ge, p.hpa_min);

    let sol = lp.solve().map_err(|e| match e {
        LpError::Infeasible => Error::Infeasible {
            required: p.hpa_min,
            max_attainable: p.max_attainable(),
        },
        other => Error::Solver(other.to_string()),
    })?;

    let flows: Vec<HourFlows> = (0..n)
        .map(|t| {
            let g1 = p.g1(t);
            let g3v = sol.x[g3(t)].clamp(0.0, g1.min(p.spec.electrolyser_capacity));
            let m1 = g3v / s;
            let m2v = sol.x[m2(t)].clamp(0.0, m1);
            HourFlows {
                g1,
                g2: g1 - g3v,
                g3: g3v,
                m1,
                m2: m2v,
                m3: m1 - m2v,
            }
        })
        .collect();
    let revenue: f64 = flows
        .iter()
        .enumerate()
        .map(|(t, f)| f.revenue(p.e[t], p.h[t]))
        .sum();
    debug_assert!((revenue - (sol.objective + constant)).abs() <= 1e-6 * (1.0 + revenue.abs()));
    Ok(DispatchSolution {
        hpa_delivered: flows.iter().map(|f| f.m2).sum(),
        flows,
        revenue,
        dual_price: -sol.duals[hpa_row],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantSpec;

    const S: f64 = 0.0576;

    #[test]
    fn one_hour_closed_forms() {
        let spec = PlantSpec::default();
        let cases = [
            (10.0, 3.0, 0.0, 10.0 + 3.0 / S),
            (1000.0, 1.0, 0.0, 2000.0),
            (1000.0, 1.0, 1.0 / S, 1000.0),
        ];
        for (e, h, need, expected) in cases {
            let sol = lp_oracle(&DispatchProblem::new(&[e], &[h], &[1.0], need, &spec)).unwrap();
            assert!((sol.revenue - expected).abs() < 1e-6, "{e} {h} {need}");
        }
    }

    #[test]
    fn infeasible_matches_solver() {
        let spec = PlantSpec::default();
        let p = DispatchProblem::new(&[10.0, 20.0], &[3.0, 3.0], &[0.1, 0.2], 100.0, &spec);
        assert!(matches!(lp_oracle(&p), Err(Error::Infeasible { .. })));
        assert!(matches!(super::super::solve(&p), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn binding_dual_matches_marginal_cost() {
        let spec = PlantSpec::default();
        // Cheapest contract hour costs max(2, 20·s) = 2 EUR/kg.
        let e = [20.0, 60.0];
        let h = [2.0, 4.0];
        let w = [0.5, 0.5];
        let p = DispatchProblem::new(&e, &h, &w, 5.0, &spec);
        let sol = lp_oracle(&p).unwrap();
        assert!((sol.dual_price - 2.0).abs() < 1e-9);
        let fast = super::super::solve(&p).unwrap();
        assert!((fast.dual_price - 2.0).abs() < 1e-12);
    }
}

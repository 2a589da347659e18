//! Revenue-maximising allocation of wind energy and hydrogen.
//!
//! Every hour the wind energy `g1` is split between the grid (`g2`) and the
//! electrolyser (`g3`); the hydrogen produced is split between the purchase
//! agreement (`m2`) and the market (`m3`). The objective counts grid and
//! market sales only. A single coupling constraint asks for at least
//! `hpa_min` kg of contract deliveries over the horizon.
//!
//! Relaxing that constraint with a multiplier `λ` decouples the hours: a
//! kilogram delivered in hour `t` costs `κ_t = max(h_t, e_t·s)` of forgone
//! market revenue, up to the hour's capacity `min(g1_t, cap)/s`. [`solve`]
//! bisects on `λ` to locate the marginal cost at which the cheap hours cover
//! the requirement, then rations the hours sitting exactly at that cost.

mod oracle;
pub mod simplex;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use oracle::lp_oracle;

use crate::error::{Error, Result};
use crate::plant::{HourFlows, PlantSpec};
use crate::timeseries::{HourlySeries, HOURS_PER_DAY};

/// Relative slack allowed when comparing a requirement against capacity.
const FEASIBILITY_REL_TOL: f64 = 1e-9;
/// Bisection stops once the bracket on `λ` is this narrow (relative).
const LAMBDA_TOL: f64 = 1e-12;
/// ... or once the covered supply is this close to the requirement, kg.
const SUPPLY_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct DispatchProblem<'a> {
    /// Electricity price per hour, EUR/MWh.
    pub e: &'a [f64],
    /// Hydrogen price per hour, EUR/kg.
    pub h: &'a [f64],
    /// Wind capacity factor per hour.
    pub w: &'a [f64],
    /// Minimum contract delivery over the horizon, kg.
    pub hpa_min: f64,
    pub spec: &'a PlantSpec,
}

impl<'a> DispatchProblem<'a> {
    pub fn new(
        e: &'a [f64],
        h: &'a [f64],
        w: &'a [f64],
        hpa_min: f64,
        spec: &'a PlantSpec,
    ) -> Self {
        Self {
            e,
            h,
            w,
            hpa_min,
            spec,
        }
    }

    pub fn horizon(&self) -> usize {
        self.e.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.e.len();
        if self.h.len() != n || self.w.len() != n {
            return Err(Error::Validation(format!(
                "price and wind series lengths differ: {n}, {}, {}",
                self.h.len(),
                self.w.len()
            )));
        }
        if !(self.hpa_min.is_finite() && self.hpa_min >= 0.0) {
            return Err(Error::Validation(format!(
                "hpa_min must be >= 0, got {}",
                self.hpa_min
            )));
        }
        if let Some(w) = self.w.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Validation(format!(
                "capacity factor {w} is outside [0, 1]"
            )));
        }
        self.spec.validate()
    }

    /// Wind energy of hour `t`, MWh.
    pub(crate) fn g1(&self, t: usize) -> f64 {
        self.w[t] * self.spec.wind_capacity
    }

    /// Most hydrogen the horizon can produce, kg.
    pub fn max_attainable(&self) -> f64 {
        let energy: f64 = (0..self.horizon())
            .map(|t| self.spec.usable_energy(self.g1(t)))
            .sum();
        energy / self.spec.specific_energy
    }

    /// Requirement after absorbing round-off against capacity, or an
    /// infeasibility error.
    pub(crate) fn effective_requirement(&self) -> Result<f64> {
        let max = self.max_attainable();
        if self.hpa_min <= max {
            Ok(self.hpa_min)
        } else if self.hpa_min - max <= FEASIBILITY_REL_TOL * max.max(1.0) {
            Ok(max)
        } else {
            Err(Error::Infeasible {
                required: self.hpa_min,
                max_attainable: max,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub flows: Vec<HourFlows>,
    /// Grid plus market revenue, EUR.
    pub revenue: f64,
    /// Total contract delivery, kg.
    pub hpa_delivered: f64,
    /// Marginal revenue lost per extra kilogram of required delivery, EUR/kg.
    pub dual_price: f64,
}

impl DispatchSolution {
    /// Re-derives the revenue from the flows.
    pub fn recompute_revenue(&self, e: &[f64], h: &[f64]) -> f64 {
        self.flows
            .iter()
            .zip(e.iter().zip(h))
            .map(|(f, (&e, &h))| f.revenue(e, h))
            .sum()
    }

    /// Contract deliveries per 24-hour block, kg.
    pub fn daily_hpa(&self) -> Vec<f64> {
        self.flows
            .chunks(HOURS_PER_DAY)
            .map(|day| day.iter().map(|f| f.m2).sum())
            .collect()
    }

    /// Cumulative contract delivery at the end of each day, starting with 0.
    pub fn cumulative_hpa(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flows.len() / HOURS_PER_DAY + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for d in self.daily_hpa() {
            acc += d;
            out.push(acc);
        }
        out
    }

    /// First hour whose flows violate a plant relation, if any.
    pub fn check_flows(&self, spec: &PlantSpec) -> std::result::Result<(), String> {
        for (t, f) in self.flows.iter().enumerate() {
            f.check(spec).map_err(|msg| format!("hour {t}: {msg}"))?;
        }
        Ok(())
    }
}

/// Per-hour data of the decoupled problem.
#[derive(Debug, Clone, Copy)]
struct HourTerms {
    g1: f64,
    /// Energy the electrolyser can take, MWh.
    usable: f64,
    /// Hydrogen capacity of the hour, kg.
    capacity: f64,
    /// Revenue forgone per kilogram sent to the contract, EUR/kg.
    cost: f64,
    /// Whether spare capacity earns more as market hydrogen than as grid power.
    market_beats_grid: bool,
}

fn hour_terms(p: &DispatchProblem) -> Vec<HourTerms> {
    let s = p.spec.specific_energy;
    (0..p.horizon())
        .map(|t| {
            let g1 = p.g1(t);
            let usable = p.spec.usable_energy(g1);
            HourTerms {
                g1,
                usable,
                capacity: usable / s,
                cost: p.h[t].max(p.e[t] * s),
                market_beats_grid: p.h[t] > p.e[t] * s,
            }
        })
        .collect()
}

/// Hydrogen available at marginal cost `<= lambda`.
fn supply_at(terms: &[HourTerms], lambda: f64) -> f64 {
    terms
        .iter()
        .filter(|t| t.cost <= lambda)
        .map(|t| t.capacity)
        .sum()
}

/// Smallest `λ >= 0` at which the hours with `κ_t <= λ` cover `required`.
fn clearing_price(terms: &[HourTerms], required: f64) -> f64 {
    if supply_at(terms, 0.0) >= required {
        return 0.0;
    }
    let mut lo = 0.0_f64;
    let mut hi = terms.iter().map(|t| t.cost).fold(0.0_f64, f64::max);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= LAMBDA_TOL * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let supply = supply_at(terms, mid);
        if supply >= required {
            hi = mid;
            if supply - required <= SUPPLY_TOL {
                break;
            }
        } else {
            lo = mid;
        }
    }
    // supply(lo) < required <= supply(hi): the clearing price is the
    // smallest marginal cost in (lo, hi] whose supply covers the requirement.
    let mut bracket: Vec<(f64, f64)> = terms
        .iter()
        .filter(|t| t.cost > lo && t.cost <= hi)
        .map(|t| (t.cost, t.capacity))
        .collect();
    bracket.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut supply = supply_at(terms, lo);
    let mut i = 0;
    while i < bracket.len() {
        let cost = bracket[i].0;
        while i < bracket.len() && bracket[i].0 == cost {
            supply += bracket[i].1;
            i += 1;
        }
        if supply >= required {
            return cost;
        }
    }
    // Summation order can leave the running total an ulp short.
    bracket.last().map_or(hi, |b| b.0)
}

/// Exact optimum of the dispatch LP.
pub fn solve(p: &DispatchProblem) -> Result<DispatchSolution> {
    p.validate()?;
    let required = p.effective_requirement()?;
    let terms = hour_terms(p);
    let lambda = clearing_price(&terms, required);

    // Hours strictly below the clearing price deliver everything; hours at it
    // share the remainder in proportion to capacity.
    let below: f64 = terms
        .iter()
        .filter(|t| t.cost < lambda)
        .map(|t| t.capacity)
        .sum();
    let marginal: f64 = terms
        .iter()
        .filter(|t| t.cost == lambda)
        .map(|t| t.capacity)
        .sum();
    let share = if marginal > 0.0 {
        ((required - below) / marginal).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let s = p.spec.specific_energy;
    let mut flows = Vec::with_capacity(terms.len());
    let mut revenue = 0.0;
    let mut delivered = 0.0;
    for (t, term) in terms.iter().enumerate() {
        let contract_share = if term.cost < lambda {
            1.0
        } else if term.cost == lambda {
            share
        } else {
            0.0
        };
        let contract_energy = term.usable * contract_share;
        let market_energy = if term.market_beats_grid {
            term.usable - contract_energy
        } else {
            0.0
        };
        let g3 = contract_energy + market_energy;
        let m1 = g3 / s;
        let m2 = contract_energy / s;
        let f = HourFlows {
            g1: term.g1,
            g2: term.g1 - g3,
            g3,
            m1,
            m2,
            m3: (m1 - m2).max(0.0),
        };
        revenue += f.revenue(p.e[t], p.h[t]);
        delivered += m2;
        flows.push(f);
    }

    Ok(DispatchSolution {
        flows,
        revenue,
        hpa_delivered: delivered,
        dual_price: lambda,
    })
}

/// Perfect-foresight optimum over a whole series with the full contract
/// volume as the delivery requirement.
pub fn solve_annual_benchmark(s: &HourlySeries, spec: &PlantSpec) -> Result<DispatchSolution> {
    solve(&DispatchProblem::new(s.e(), s.h(), s.w(), spec.hpa_total, spec))
}

pub const FLOWS_CSV_HEADER: [&str; 7] = ["hour", "g1", "g2", "g3", "m1", "m2", "m3"];

pub fn write_flows_csv(sol: &DispatchSolution, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FLOWS_CSV_HEADER)?;
    for (t, f) in sol.flows.iter().enumerate() {
        wtr.write_record([
            t.to_string(),
            f.g1.to_string(),
            f.g2.to_string(),
            f.g3.to_string(),
            f.m1.to_string(),
            f.m2.to_string(),
            f.m3.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_flows_csv(reader: impl Read) -> Result<Vec<HourFlows>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(FLOWS_CSV_HEADER) {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            FLOWS_CSV_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::Format(format!("row {}: bad field {k}", i + 1)))
        };
        out.push(HourFlows {
            g1: v(1)?,
            g2: v(2)?,
            g3: v(3)?,
            m1: v(4)?,
            m2: v(5)?,
            m3: v(6)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = 0.0576;

    fn one_hour(e: f64, h: f64, hpa_min: f64) -> Result<DispatchSolution> {
        let spec = PlantSpec::default();
        solve(&DispatchProblem::new(&[e], &[h], &[1.0], hpa_min, &spec))
    }

    #[test]
    fn hydrogen_dominates_cheap_power() {
        let sol = one_hour(10.0, 3.0, 0.0).unwrap();
        let f = sol.flows[0];
        assert!((f.g3 - 1.0).abs() < 1e-12);
        assert!((f.g2 - 1.0).abs() < 1e-12);
        assert!((f.m3 - 1.0 / S).abs() < 1e-9);
        assert!((sol.revenue - (10.0 + 3.0 / S)).abs() < 1e-9);
        assert!((sol.revenue - 62.083).abs() < 1e-3);
        assert_eq!(sol.dual_price, 0.0);
    }

    #[test]
    fn grid_dominates_expensive_power() {
        let sol = one_hour(1000.0, 1.0, 0.0).unwrap();
        assert_eq!(sol.flows[0].g2, 2.0);
        assert_eq!(sol.flows[0].g3, 0.0);
        assert_eq!(sol.revenue, 2000.0);
    }

    #[test]
    fn binding_contract_takes_all_hydrogen() {
        let sol = one_hour(1000.0, 1.0, 1.0 / S).unwrap();
        let f = sol.flows[0];
        assert!((f.g3 - 1.0).abs() < 1e-12);
        assert!((f.m2 - 1.0 / S).abs() < 1e-9);
        assert!(f.m3.abs() < 1e-9);
        assert!((sol.revenue - 1000.0).abs() < 1e-9);
        assert!((sol.dual_price - 1000.0 * S).abs() < 1e-9);
    }

    #[test]
    fn infeasible_requirement_reports_capacity() {
        match one_hour(10.0, 3.0, 20.0) {
            Err(Error::Infeasible { max_attainable, .. }) => {
                assert!((max_attainable - 1.0 / S).abs() < 1e-9)
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn requirement_equal_to_whole_hours() {
        // Bisection can land within the supply tolerance while the lower
        // bracket still sits several price levels down.
        let spec = PlantSpec::default();
        let e = [10.0; 8];
        let h = [1.0, 8.0, 2.0, 7.0, 3.0, 6.0, 4.0, 5.0];
        let w = [1.0; 8];
        for k in 1..=8 {
            let need = k as f64 / S;
            let sol = solve(&DispatchProblem::new(&e, &h, &w, need, &spec)).unwrap();
            assert!(sol.hpa_delivered >= need - 1e-9, "k={k}: {}", sol.hpa_delivered);
            // Degenerate point: any multiplier between this level and the next is dual optimal.
            assert!((k as f64..=k as f64 + 1.0).contains(&sol.dual_price), "k={k}");
            let oracle = lp_oracle(&DispatchProblem::new(&e, &h, &w, need, &spec)).unwrap();
            assert!((sol.revenue - oracle.revenue).abs() < 1e-6 * oracle.revenue);
        }
    }

    #[test]
    fn ties_are_rationed_proportionally() {
        let spec = PlantSpec::default();
        // Two identical hours, wind-limited at different levels.
        let e = [40.0, 40.0];
        let h = [2.0, 2.0];
        let w = [0.25, 0.5];
        let need = 0.75 / S / 2.0;
        let sol = solve(&DispatchProblem::new(&e, &h, &w, need, &spec)).unwrap();
        let r0 = sol.flows[0].m2 / (0.5 / S);
        let r1 = sol.flows[1].m2 / (1.0 / S);
        assert!((r0 - r1).abs() < 1e-12);
        assert!((sol.hpa_delivered - need).abs() < 1e-9);
    }

    #[test]
    fn negative_hydrogen_prices_dump_into_contract() {
        let spec = PlantSpec::default();
        let sol = solve(&DispatchProblem::new(&[-10.0], &[-1.0], &[0.5], 0.0, &spec)).unwrap();
        let f = sol.flows[0];
        assert!((f.m2 - 1.0 / S).abs() < 1e-9);
        assert_eq!(f.m3, 0.0);
        assert!((sol.revenue - 0.0).abs() < 1e-12);
        assert_eq!(sol.dual_price, 0.0);
    }

    #[test]
    fn cumulative_hpa_starts_at_zero() {
        let spec = PlantSpec::default();
        let e = vec![30.0; 48];
        let h = vec![3.0; 48];
        let w = vec![0.5; 48];
        let sol = solve(&DispatchProblem::new(&e, &h, &w, 100.0, &spec)).unwrap();
        let c = sol.cumulative_hpa();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0], 0.0);
        assert!((c[2] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn flows_csv_round_trip() {
        let sol = one_hour(10.0, 3.0, 5.0).unwrap();
        let mut buf = Vec::new();
        write_flows_csv(&sol, &mut buf).unwrap();
        let back = read_flows_csv(buf.as_slice()).unwrap();
        assert_eq!(back, sol.flows);
    }
}

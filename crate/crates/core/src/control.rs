//! Daily controllers and the year-long simulation loop.
//!
//! Each day the controller sees that day's 24 hourly prices and capacity
//! factors, picks a contract delivery target, and the daily dispatch finds
//! the best hourly flows that meet it. Contract deliveries earn nothing in
//! the revenue figures: the contract value is fixed whatever the controller
//! does.

use std::io::Write;

use crate::bounding::{clamp_target, BoundEnvelope, Trajectory};
use crate::dispatch::{solve, solve_annual_benchmark, DispatchProblem};
use crate::error::{Error, Result};
use crate::fuzzy::{infer, FuzzyModel};
use crate::plant::{max_daily_hydrogen, HourFlows, PlantSpec};
use crate::timeseries::{daily_means, DailyMeans, HourlySeries, HOURS_PER_DAY};

/// Contract volume in kg: `fraction` of the mean annual maximum production
/// (given in tonnes), rounded to 0.1 t.
pub fn contract_volume(annual_max_t: &[f64], fraction: f64) -> Result<f64> {
    if annual_max_t.is_empty() {
        return Err(Error::Validation("no annual maxima given".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Validation(format!(
            "contract fraction {fraction} is outside (0, 1]"
        )));
    }
    if let Some(bad) = annual_max_t.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Validation(format!("annual maximum {bad} t is invalid")));
    }
    let mean = annual_max_t.iter().sum::<f64>() / annual_max_t.len() as f64;
    let tenths = (fraction * mean * 10.0).round();
    Ok(tenths * 100.0)
}

/// Deliveries so far in the contract period.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractState {
    pub total: f64,
    pub period_days: usize,
    pub delivered: Vec<f64>,
    pub cumulative: f64,
}

impl ContractState {
    pub fn new(total: f64, period_days: usize) -> Self {
        Self {
            total,
            period_days,
            delivered: Vec::new(),
            cumulative: 0.0,
        }
    }

    /// 1-based index of the day about to be scheduled.
    pub fn day(&self) -> usize {
        self.delivered.len() + 1
    }

    pub fn record(&mut self, kg: f64) {
        self.delivered.push(kg);
        self.cumulative += kg;
    }
}

/// Linear pacing toward the contract total with catch-up for earlier
/// shortfalls, capped by today's production limit. Past the contract period
/// it keeps asking for any remaining shortfall.
pub fn steady_target(state: &ContractState, max_today: f64) -> f64 {
    let d = state.day().min(state.period_days) as f64;
    let wanted = d * state.total / state.period_days as f64 - state.cumulative;
    wanted.min(max_today).max(0.0)
}

/// Fuzzy daily target, capped by today's production and then pulled inside
/// the envelope.
pub fn bflc_target(
    model: &FuzzyModel,
    means: &DailyMeans,
    state: &ContractState,
    envelope: &BoundEnvelope,
    max_today: f64,
) -> f64 {
    let rate = infer(model, means.e_d, means.h_d, means.w_d);
    let capped = (HOURS_PER_DAY as f64 * rate).min(max_today);
    clamp_target(state.cumulative, capped, state.day(), envelope, max_today)
}

#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    Steady,
    Bflc {
        model: &'a FuzzyModel,
        envelope: &'a BoundEnvelope,
    },
}

impl Controller<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Steady => "steady",
            Controller::Bflc { .. } => "bflc",
        }
    }

    pub fn target(&self, means: &DailyMeans, state: &ContractState, max_today: f64) -> f64 {
        match self {
            Controller::Steady => steady_target(state, max_today),
            Controller::Bflc { model, envelope } => {
                bflc_target(model, means, state, envelope, max_today)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub controller_name: String,
    pub year_label: String,
    /// Grid plus market revenue, EUR.
    pub total_revenue: f64,
    /// Contract deliveries over the whole series, kg.
    pub hpa_delivered: f64,
    pub daily_targets: Vec<f64>,
    pub daily_delivered: Vec<f64>,
    pub daily_revenue: Vec<f64>,
    pub trajectory: Trajectory,
    pub flows: Vec<HourFlows>,
    pub benchmark_revenue: Option<f64>,
    /// `total_revenue / benchmark_revenue`; `None` when no benchmark exists.
    pub normalized_revenue: Option<f64>,
    /// Contract total minus deliveries by the end of the contract period,
    /// floored at 0.
    pub contract_shortfall_kg: f64,
}

/// Runs the controller day by day over the series. The benchmark used for
/// normalisation is computed on the same series unless given; an infeasible
/// benchmark leaves the normalised revenue empty.
pub fn simulate_year(
    series: &HourlySeries,
    spec: &PlantSpec,
    controller: Controller,
    benchmark_revenue: Option<f64>,
) -> Result<SimulationReport> {
    spec.validate()?;
    let period = spec.contract_days(series.days());
    if period == 0 {
        return Err(Error::Validation("series holds no whole day".into()));
    }
    let mut state = ContractState::new(spec.hpa_total, period);
    let mut targets = Vec::with_capacity(series.days());
    let mut day_revenue = Vec::with_capacity(series.days());
    let mut flows = Vec::with_capacity(series.hours());

    for means in daily_means(series) {
        let r = series.day_range(means.day_index - 1);
        let (e, h, w) = (&series.e()[r.clone()], &series.h()[r.clone()], &series.w()[r]);
        let max_today = max_daily_hydrogen(w, spec)?;
        let target = controller.target(&means, &state, max_today);
        let sol = solve(&DispatchProblem::new(e, h, w, target, spec)).map_err(|err| {
            Error::Solver(format!(
                "internal: daily dispatch failed on day {} with target {target} kg: {err}",
                means.day_index
            ))
        })?;
        targets.push(target);
        day_revenue.push(sol.revenue);
        state.record(sol.hpa_delivered);
        flows.extend(sol.flows);
    }

    let benchmark = match benchmark_revenue {
        Some(v) => Some(v),
        None => match solve_annual_benchmark(series, spec) {
            Ok(sol) => Some(sol.revenue),
            Err(Error::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    let total_revenue: f64 = day_revenue.iter().sum();
    let in_period: f64 = state.delivered[..period.min(state.delivered.len())].iter().sum();
    Ok(SimulationReport {
        controller_name: controller.name().to_string(),
        year_label: series.year_label.clone(),
        total_revenue,
        hpa_delivered: state.cumulative,
        daily_targets: targets,
        trajectory: Trajectory::from_daily(&state.delivered)?,
        daily_delivered: state.delivered,
        daily_revenue: day_revenue,
        flows,
        benchmark_revenue: benchmark,
        normalized_revenue: benchmark.filter(|b| *b != 0.0).map(|b| total_revenue / b),
        contract_shortfall_kg: (spec.hpa_total - in_period).max(0.0),
    })
}

pub const SUMMARY_CSV_HEADER: [&str; 4] = ["controller", "total_revenue_eur", "hpa_kg", "normalized"];
pub const DAILY_CSV_HEADER: [&str; 5] =
    ["day", "target_kg", "delivered_kg", "cumulative_kg", "revenue_eur"];

/// One summary row per report. The normalised column is empty without a
/// benchmark.
pub fn write_summary_csv(reports: &[&SimulationReport], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SUMMARY_CSV_HEADER)?;
    for r in reports {
        wtr.write_record([
            r.controller_name.clone(),
            r.total_revenue.to_string(),
            r.hpa_delivered.to_string(),
            r.normalized_revenue.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_daily_csv(report: &SimulationReport, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(DAILY_CSV_HEADER)?;
    let cumulative = report.trajectory.points();
    for d in 0..report.daily_targets.len() {
        wtr.write_record([
            (d + 1).to_string(),
            report.daily_targets[d].to_string(),
            report.daily_delivered[d].to_string(),
            cumulative[d + 1].to_string(),
            report.daily_revenue[d].to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounding::hull_envelope;
    use crate::fuzzy::{MembershipParams, MembershipSet, RuleBase, Term};
    use chrono::NaiveDate;

    fn series(days: usize, e: f64, h: f64, w: f64) -> HourlySeries {
        let n = days * 24;
        let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        HourlySeries::hourly("t", start, vec![e; n], vec![h; n], vec![w; n]).unwrap()
    }

    #[test]
    fn contract_volume_cases() {
        let table = [122.7, 117.3, 123.2, 120.6, 115.6, 120.9];
        assert_eq!(contract_volume(&table, 0.40).unwrap(), 48000.0);
        assert_eq!(contract_volume(&[100.0], 0.40).unwrap(), 40000.0);
        assert_eq!(contract_volume(&[87.3, 87.3], 1.0).unwrap(), 87300.0);
        assert!(contract_volume(&[], 0.4).is_err());
        assert!(contract_volume(&[100.0], 0.0).is_err());
        assert!(contract_volume(&[100.0], 1.5).is_err());
    }

    #[test]
    fn steady_closed_forms() {
        let mut st = ContractState::new(48000.0, 365);
        let d1 = 48000.0 / 365.0;
        assert_eq!(steady_target(&st, 500.0), d1);
        assert!((d1 - 131.51).abs() < 0.005);
        st.record(100.0);
        assert_eq!(steady_target(&st, 500.0), 2.0 * 48000.0 / 365.0 - 100.0);
        assert_eq!(steady_target(&st, 50.0), 50.0);
        st.record(1000.0);
        assert_eq!(steady_target(&st, 500.0), 0.0);
    }

    fn flat_model(out: Term) -> FuzzyModel {
        let mp = |lo: f64, hi: f64| {
            let step = (hi - lo) / 6.0;
            MembershipParams::new(std::array::from_fn(|i| lo + step * i as f64)).unwrap()
        };
        FuzzyModel {
            sets: MembershipSet {
                w: mp(0.0, 1.0),
                e: mp(0.0, 120.0),
                h: mp(1.0, 5.0),
                out: mp(0.0, 1.0 / 0.0576),
            },
            rules: RuleBase::uniform(out),
        }
    }

    #[test]
    fn bflc_target_clamps() {
        let early = Trajectory::from_cumulative(vec![0.0, 300.0, 400.0, 400.0]).unwrap();
        let late = Trajectory::from_cumulative(vec![0.0, 0.0, 100.0, 400.0]).unwrap();
        let env = hull_envelope(&[early, late], 400.0).unwrap();
        let means = DailyMeans { day_index: 1, e_d: 40.0, h_d: 3.0, w_d: 0.5 };

        // Upper bound reached: nothing more today.
        let mut st = ContractState::new(400.0, 3);
        st.record(300.0);
        assert_eq!(bflc_target(&flat_model(Term::High), &means, &st, &env, 1000.0), 100.0);
        st.record(100.0);
        assert_eq!(bflc_target(&flat_model(Term::High), &means, &st, &env, 1000.0), 0.0);

        // Last day forces completion.
        let mut st = ContractState::new(400.0, 3);
        st.record(0.0);
        st.record(200.0);
        assert_eq!(bflc_target(&flat_model(Term::Low), &means, &st, &env, 300.0), 200.0);

        // Inside the envelope the fuzzy output passes through.
        let st = ContractState::new(400.0, 3);
        let m = flat_model(Term::Low);
        let expected = 24.0 * infer(&m, 40.0, 3.0, 0.5);
        assert!(expected < 300.0);
        assert_eq!(bflc_target(&m, &means, &st, &env, 1000.0), expected);
    }

    #[test]
    fn zero_wind_year() {
        let spec = PlantSpec::default();
        let s = series(10, 40.0, 3.0, 0.0);
        let r = simulate_year(&s, &spec, Controller::Steady, None).unwrap();
        assert_eq!(r.total_revenue, 0.0);
        assert_eq!(r.hpa_delivered, 0.0);
        assert!(r.daily_targets.iter().all(|&t| t == 0.0));
        assert_eq!(r.normalized_revenue, None);
        assert_eq!(r.contract_shortfall_kg, 48000.0);
    }

    #[test]
    fn steady_constant_wind_is_linear() {
        let spec = PlantSpec::default();
        let s = series(365, 40.0, 3.0, 0.5);
        let r = simulate_year(&s, &spec, Controller::Steady, None).unwrap();
        for (d, &c) in r.trajectory.points().iter().enumerate() {
            let line = d as f64 * 48000.0 / 365.0;
            assert!((c - line).abs() < 1e-6 * (1.0 + line), "day {d}: {c} vs {line}");
        }
        // Independent re-accounting of the flows.
        let mut revenue = 0.0;
        for (t, f) in r.flows.iter().enumerate() {
            assert!(f.check(&spec).is_ok(), "hour {t}");
            revenue += s.e()[t] * (f.g1 - f.g3) + s.h()[t] * f.m3;
        }
        assert!((revenue - r.total_revenue).abs() < 1e-6 * revenue);
        assert!(r.contract_shortfall_kg < 1e-6);
        let norm = r.normalized_revenue.unwrap();
        assert!(norm <= 1.0 + 1e-9 && norm > 0.9);
    }

    #[test]
    fn calm_tail_leaves_steady_short() {
        // Plenty of wind overall, none in the last month. The benchmark sees
        // the calm coming; the steady rule cannot.
        let spec = PlantSpec::default();
        let windy = 335;
        let w: Vec<f64> = (0..365 * 24).map(|t| if t < windy * 24 { 0.5 } else { 0.0 }).collect();
        let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = HourlySeries::hourly("calm", start, vec![40.0; w.len()], vec![3.0; w.len()], w).unwrap();
        let r = simulate_year(&s, &spec, Controller::Steady, None).unwrap();
        let expected = 48000.0 * (1.0 - windy as f64 / 365.0);
        assert!((r.contract_shortfall_kg - expected).abs() < 1e-6, "{}", r.contract_shortfall_kg);
        assert!(r.normalized_revenue.is_some());
    }

    #[test]
    fn report_csvs() {
        let spec = PlantSpec::default().with_contract(1000.0);
        let s = series(3, 40.0, 3.0, 0.3);
        let r = simulate_year(&s, &spec, Controller::Steady, Some(1.0)).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&[&r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("controller,total_revenue_eur,hpa_kg,normalized\nsteady,"));
        let mut buf = Vec::new();
        write_daily_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
    }
}

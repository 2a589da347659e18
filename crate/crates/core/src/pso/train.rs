//! Fitting membership breakpoints and rules to benchmark deliveries.
//!
//! A candidate is 20 numbers: the inner breakpoints `p1..p5` of `w`, `e`, `h`
//! and the output, in that order. Each block is sorted and clamped into its
//! variable's range, rules are learned from the exemplars under those
//! breakpoints, and the candidate scores by the squared prediction error.

use super::{pso_minimize, PsoConfig};
use crate::dispatch::DispatchSolution;
use crate::error::{Error, Result};
use crate::fuzzy::{infer, learn_rules, Exemplar, FuzzyModel, MembershipParams, MembershipSet};
use crate::plant::PlantSpec;
use crate::timeseries::{daily_means, HourlySeries, HOURS_PER_DAY};

const INNER: usize = 5;
pub const DECISION_DIM: usize = 4 * INNER;

/// `[p0, p6]` of each variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableRanges {
    pub w: (f64, f64),
    pub e: (f64, f64),
    pub h: (f64, f64),
    pub out: (f64, f64),
}

impl VariableRanges {
    fn all(&self) -> [(f64, f64); 4] {
        [self.w, self.e, self.h, self.out]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.all()
            .iter()
            .flat_map(|&r| std::iter::repeat_n(r, INNER))
            .collect()
    }

    fn decode(&self, x: &[f64]) -> MembershipSet {
        let [w, e, h, out] = self.all();
        let block = |k: usize, (lo, hi): (f64, f64)| {
            MembershipParams::from_inner(lo, hi, &x[k * INNER..(k + 1) * INNER])
        };
        MembershipSet {
            w: block(0, w),
            e: block(1, e),
            h: block(2, h),
            out: block(3, out),
        }
    }
}

/// Input ranges from the data, output range `[0, cap/s]`.
pub fn variable_ranges(data: &[Exemplar], spec: &PlantSpec) -> Result<VariableRanges> {
    if data.is_empty() {
        return Err(Error::Validation("no exemplars".into()));
    }
    let span = |f: fn(&Exemplar) -> f64| {
        data.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let ranges = VariableRanges {
        w: span(|x| x.w),
        e: span(|x| x.e),
        h: span(|x| x.h),
        out: (0.0, spec.max_hourly_hydrogen()),
    };
    for (lo, hi) in ranges.all() {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Validation("non-finite exemplar value".into()));
        }
    }
    Ok(ranges)
}

/// One exemplar per day: daily mean prices and wind, and the benchmark's
/// daily delivery spread evenly over 24 hours.
pub fn exemplars_from_benchmark(
    series: &HourlySeries,
    benchmark: &DispatchSolution,
) -> Result<Vec<Exemplar>> {
    if benchmark.flows.len() != series.hours() {
        return Err(Error::Validation(format!(
            "benchmark has {} hours, series has {}",
            benchmark.flows.len(),
            series.hours()
        )));
    }
    Ok(daily_means(series)
        .iter()
        .zip(benchmark.daily_hpa())
        .map(|(m, kg)| Exemplar {
            e: m.e_d,
            h: m.h_d,
            w: m.w_d,
            target: kg / HOURS_PER_DAY as f64,
        })
        .collect())
}

/// Sum of squared errors plus the squared error of the total.
pub fn training_objective(model: &FuzzyModel, data: &[Exemplar]) -> f64 {
    let mut sse = 0.0;
    let mut bias = 0.0;
    for x in data {
        let r = x.target - infer(model, x.e, x.h, x.w);
        sse += r * r;
        bias += r;
    }
    sse + bias * bias
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingResult {
    pub model: FuzzyModel,
    pub objective: f64,
    pub iterations_run: usize,
    pub objective_trace: Vec<f64>,
}

fn evaluate(x: &[f64], ranges: &VariableRanges, data: &[Exemplar]) -> f64 {
    match learn_rules(ranges.decode(x), data) {
        Ok(model) => training_objective(&model, data),
        Err(_) => f64::INFINITY,
    }
}

/// Runs the swarm over breakpoint candidates. `cfg.bounds` is replaced by the
/// bounds implied by `ranges`.
pub fn train(
    data: &[Exemplar],
    ranges: &VariableRanges,
    cfg: &PsoConfig,
) -> Result<TrainingResult> {
    if data.is_empty() {
        return Err(Error::Validation("no exemplars to train on".into()));
    }
    let cfg = PsoConfig {
        bounds: ranges.bounds(),
        ..cfg.clone()
    };
    let outcome = pso_minimize(|x| evaluate(x, ranges, data), &cfg)?;
    let model = learn_rules(ranges.decode(&outcome.best), data)?;
    Ok(TrainingResult {
        objective: training_objective(&model, data),
        model,
        iterations_run: outcome.iterations,
        objective_trace: outcome.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{RuleBase, Term};

    fn ranges() -> VariableRanges {
        VariableRanges {
            w: (0.0, 1.0),
            e: (0.0, 100.0),
            h: (1.0, 5.0),
            out: (0.0, 1.0 / 0.0576),
        }
    }

    #[test]
    fn decode_sorts_and_clamps() {
        let mut x = vec![0.5; DECISION_DIM];
        x[0] = 0.9;
        x[1] = 0.1;
        x[5] = -20.0;
        x[19] = 99.0;
        let sets = ranges().decode(&x);
        assert_eq!(*sets.w.breakpoints(), [0.0, 0.1, 0.5, 0.5, 0.5, 0.9, 1.0]);
        assert_eq!(sets.e.breakpoints()[1], 0.0);
        assert_eq!(sets.out.breakpoints()[5], 1.0 / 0.0576);
    }

    #[test]
    fn ranges_from_data() {
        let data = [
            Exemplar { e: 10.0, h: 2.0, w: 0.3, target: 1.0 },
            Exemplar { e: 50.0, h: 4.0, w: 0.1, target: 2.0 },
        ];
        let r = variable_ranges(&data, &PlantSpec::default()).unwrap();
        assert_eq!(r.e, (10.0, 50.0));
        assert_eq!(r.h, (2.0, 4.0));
        assert_eq!(r.w, (0.1, 0.3));
        assert!((r.out.1 - 17.361111111111111).abs() < 1e-12);
        assert!(variable_ranges(&[], &PlantSpec::default()).is_err());
    }

    #[test]
    fn objective_zero_for_exact_model() {
        let sets = ranges().decode(&[
            0.2, 0.3, 0.5, 0.7, 0.8, 20.0, 30.0, 50.0, 70.0, 80.0, 2.0, 2.5, 3.0, 3.5, 4.0, 3.0,
            5.0, 8.0, 11.0, 14.0,
        ]);
        let model = FuzzyModel {
            sets,
            rules: RuleBase::from_fn(|_, _, w| w),
        };
        let data: Vec<Exemplar> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&w| Exemplar {
                e: 50.0,
                h: 3.0,
                w,
                target: infer(&model, 50.0, 3.0, w),
            })
            .collect();
        assert_eq!(training_objective(&model, &data), 0.0);
    }

    #[test]
    fn objective_counts_bias_twice() {
        let model = FuzzyModel {
            sets: ranges().decode(&[0.5; DECISION_DIM]),
            rules: RuleBase::uniform(Term::Low),
        };
        let y = infer(&model, 50.0, 3.0, 0.5);
        let data = [
            Exemplar { e: 50.0, h: 3.0, w: 0.5, target: y + 1.0 },
            Exemplar { e: 50.0, h: 3.0, w: 0.5, target: y + 2.0 },
        ];
        // 1 + 4 + (1 + 2)²
        assert!((training_objective(&model, &data) - 14.0).abs() < 1e-9);
    }

    #[test]
    fn separates_two_wind_regimes() {
        let mut data = Vec::new();
        for i in 0..20 {
            let jitter = i as f64 * 0.005;
            data.push(Exemplar { e: 40.0, h: 3.0, w: 0.1 + jitter, target: 2.0 });
            data.push(Exemplar { e: 40.0, h: 3.0, w: 0.8 + jitter, target: 14.0 });
        }
        let cfg = PsoConfig {
            seed: 7,
            particles: 20,
            max_iters: 40,
            ..PsoConfig::default()
        };
        let r = variable_ranges(&data, &PlantSpec::default()).unwrap();
        let res = train(&data, &r, &cfg).unwrap();
        let calm = infer(&res.model, 40.0, 3.0, 0.15);
        let windy = infer(&res.model, 40.0, 3.0, 0.85);
        assert!(windy > calm + 5.0, "calm {calm} windy {windy}");
        assert!(res.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(res.objective, *res.objective_trace.last().unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<Exemplar> = (0..30)
            .map(|i| {
                let t = i as f64 / 29.0;
                Exemplar { e: 20.0 + 60.0 * t, h: 4.0 - 2.0 * t, w: t, target: 15.0 * t }
            })
            .collect();
        let cfg = PsoConfig {
            seed: 42,
            particles: 10,
            max_iters: 15,
            ..PsoConfig::default()
        };
        let r = variable_ranges(&data, &PlantSpec::default()).unwrap();
        let a = train(&data, &r, &cfg).unwrap();
        let b = train(&data, &r, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

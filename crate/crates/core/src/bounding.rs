//! Limits on cumulative contract deliveries.
//!
//! Benchmark runs give cumulative delivery paths over the contract period.
//! The convex hull of all their points, anchored at `(0, 0)` and
//! `(T, total)`, splits into an upper and a lower chain. A controller that
//! keeps its cumulative delivery between the chains behaves like some convex
//! mix of optimal years.
//!
//! [`extreme_paths`] gives the wind-limited corner cases of one year: deliver
//! everything as early as possible, or as late as possible.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::plant::{max_daily_hydrogen, PlantSpec};
use crate::timeseries::HourlySeries;

/// Absolute slack on non-decreasing checks and contract totals, kg.
const PATH_TOL: f64 = 1e-6;

/// Cumulative delivery at the end of each day. `points[0]` is day 0 and
/// always 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<f64>,
}

impl Trajectory {
    pub fn from_cumulative(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation(
                "a trajectory needs day 0 and at least one more day".into(),
            ));
        }
        if points[0] != 0.0 {
            return Err(Error::Validation(format!(
                "trajectory starts at {} instead of 0",
                points[0]
            )));
        }
        for (d, w) in points.windows(2).enumerate() {
            if !w[1].is_finite() || w[1] < w[0] - PATH_TOL {
                return Err(Error::Validation(format!(
                    "trajectory decreases or is not finite at day {}",
                    d + 1
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn from_daily(daily: &[f64]) -> Result<Self> {
        let mut points = Vec::with_capacity(daily.len() + 1);
        points.push(0.0);
        let mut acc = 0.0;
        for &kg in daily {
            acc += kg;
            points.push(acc);
        }
        Self::from_cumulative(points)
    }

    pub fn days(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn last(&self) -> f64 {
        self.points[self.days()]
    }
}

/// Piecewise-linear lower and upper limits on cumulative delivery.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEnvelope {
    lower: Vec<(f64, f64)>,
    upper: Vec<(f64, f64)>,
    days: usize,
    total: f64,
}

fn interpolate(chain: &[(f64, f64)], x: f64) -> f64 {
    let (x0, y0) = chain[0];
    if x <= x0 {
        return y0;
    }
    let (xn, yn) = chain[chain.len() - 1];
    if x >= xn {
        return yn;
    }
    let i = chain.partition_point(|&(cx, _)| cx <= x);
    let (xa, ya) = chain[i - 1];
    let (xb, yb) = chain[i];
    ya + (yb - ya) * (x - xa) / (xb - xa)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// One monotone-chain pass. `keep_turn` decides whether the turn at the
/// middle point is convex for the chain being built.
fn chain(points: &[(f64, f64)], keep_turn: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        if out.last().is_some_and(|q| q.0 == p.0) {
            // Points are pre-sorted so the first one at each x is the extreme.
            continue;
        }
        while out.len() >= 2 && !keep_turn(cross(out[out.len() - 2], out[out.len() - 1], p)) {
            out.pop();
        }
        out.push(p);
    }
    out
}

impl BoundEnvelope {
    /// Builds the envelope from explicit breakpoints, checking the anchors
    /// and that `lower <= upper` at every breakpoint.
    pub fn from_chains(
        lower: Vec<(f64, f64)>,
        upper: Vec<(f64, f64)>,
        days: usize,
        total: f64,
    ) -> Result<Self> {
        for c in [&lower, &upper] {
            if c.len() < 2 || c[0] != (0.0, 0.0) || c[c.len() - 1] != (days as f64, total) {
                return Err(Error::Validation(format!(
                    "envelope chain must run from (0, 0) to ({days}, {total})"
                )));
            }
            if c.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Validation(
                    "envelope breakpoints must be strictly increasing in day".into(),
                ));
            }
        }
        let env = Self {
            lower,
            upper,
            days,
            total,
        };
        for &(x, _) in env.lower.iter().chain(&env.upper) {
            if env.lower(x) > env.upper(x) + PATH_TOL {
                return Err(Error::Validation(format!(
                    "lower bound exceeds upper bound at day {x}"
                )));
            }
        }
        Ok(env)
    }

    /// Lower limit at the end of day `d`. Days beyond the period give `total`.
    pub fn lower(&self, d: f64) -> f64 {
        interpolate(&self.lower, d)
    }

    pub fn upper(&self, d: f64) -> f64 {
        interpolate(&self.upper, d)
    }

    pub fn lower_chain(&self) -> &[(f64, f64)] {
        &self.lower
    }

    pub fn upper_chain(&self) -> &[(f64, f64)] {
        &self.upper
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Convex hull of the trajectories, each truncated at `total`.
///
/// All trajectories must cover the same number of days and reach `total`
/// (within a small absolute tolerance) by the last day.
pub fn hull_envelope(trajectories: &[Trajectory], total: f64) -> Result<BoundEnvelope> {
    let Some(first) = trajectories.first() else {
        return Err(Error::Validation("no trajectories for the envelope".into()));
    };
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Validation(format!("contract total {total} must be positive")));
    }
    let days = first.days();
    let mut points = vec![(0.0, 0.0), (days as f64, total)];
    for (i, t) in trajectories.iter().enumerate() {
        if t.days() != days {
            return Err(Error::Validation(format!(
                "trajectory {i} covers {} days, expected {days}",
                t.days()
            )));
        }
        if t.last() < total - PATH_TOL {
            return Err(Error::Validation(format!(
                "trajectory {i} ends at {} kg, short of the contract total {total}",
                t.last()
            )));
        }
        points.extend(
            t.points
                .iter()
                .enumerate()
                .map(|(d, &v)| (d as f64, v.min(total))),
        );
    }
    // Lowest point first at each day for the lower chain, highest for the upper.
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let lower = chain(&points, |c| c > 0.0);
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let upper = chain(&points, |c| c < 0.0);
    // Day 0 and day T each hold a single value after truncation.
    BoundEnvelope::from_chains(lower, upper, days, total)
}

/// Keeps a proposed day target inside the envelope and today's capacity.
pub fn clamp_target(
    cumulative: f64,
    target: f64,
    day: usize,
    envelope: &BoundEnvelope,
    max_today: f64,
) -> f64 {
    let d = day as f64;
    let floor = envelope.lower(d) - cumulative;
    let ceiling = envelope.upper(d) - cumulative;
    target.max(floor).min(ceiling).min(max_today).max(0.0)
}

/// Wind-limited and full-power corner paths for one contract period.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremePaths {
    /// Deliver at full wind-limited output from day 1.
    pub fast_wind: Trajectory,
    /// Deliver only what the remaining wind can no longer cover.
    pub slow_wind: Trajectory,
    /// Day on which `fast_wind` reaches the total.
    pub t_fw: usize,
    /// First day with a nonzero `slow_wind` value.
    pub t_sw: usize,
    /// Same two paths assuming the electrolyser always runs at capacity.
    pub fast_full: Trajectory,
    pub slow_full: Trajectory,
    pub t_f: usize,
    pub t_s: usize,
}

fn fast_path(daily_max: &[f64], total: f64) -> (Trajectory, usize) {
    let mut points = vec![0.0];
    let mut acc = 0.0;
    let mut t_done = daily_max.len();
    for (d, &m) in daily_max.iter().enumerate() {
        acc += m;
        if acc >= total && t_done == daily_max.len() {
            t_done = d + 1;
        }
        points.push(acc.min(total));
    }
    (Trajectory { points }, t_done)
}

fn slow_path(daily_max: &[f64], total: f64) -> (Trajectory, usize) {
    let n = daily_max.len();
    let mut remaining = vec![0.0; n + 1];
    for d in (0..n).rev() {
        remaining[d] = remaining[d + 1] + daily_max[d];
    }
    // remaining[d] is what days d+1..=n can still produce.
    let points: Vec<f64> = (0..=n)
        .map(|d| if d == 0 { 0.0 } else { (total - remaining[d]).max(0.0) })
        .collect();
    let t_start = points.iter().position(|&v| v > 0.0).unwrap_or(n);
    (Trajectory { points }, t_start)
}

/// Corner paths for the contract in `spec` over the days of `series`
/// (or the first `hpa_days` of them).
pub fn extreme_paths(series: &HourlySeries, spec: &PlantSpec) -> Result<ExtremePaths> {
    spec.validate()?;
    let days = spec.contract_days(series.days());
    if days == 0 || days > series.days() {
        return Err(Error::Validation(format!(
            "contract period of {days} days does not fit a {}-day series",
            series.days()
        )));
    }
    let w = series.w();
    let daily_max: Vec<f64> = (0..days)
        .map(|d| max_daily_hydrogen(&w[series.day_range(d)], spec))
        .collect::<Result<_>>()?;
    let total = spec.hpa_total;
    let available: f64 = daily_max.iter().sum();
    if available < total * (1.0 - 1e-9) {
        return Err(Error::Infeasible {
            required: total,
            max_attainable: available,
        });
    }
    let full = vec![24.0 * spec.max_hourly_hydrogen(); days];
    let (fast_wind, t_fw) = fast_path(&daily_max, total);
    let (slow_wind, t_sw) = slow_path(&daily_max, total);
    let (fast_full, t_f) = fast_path(&full, total);
    let (slow_full, t_s) = slow_path(&full, total);
    Ok(ExtremePaths {
        fast_wind,
        slow_wind,
        t_fw,
        t_sw,
        fast_full,
        slow_full,
        t_f,
        t_s,
    })
}

pub const ENVELOPE_CSV_HEADER: [&str; 3] = ["day", "lower_kg", "upper_kg"];
pub const TRAJECTORY_CSV_HEADER: [&str; 2] = ["day", "cumulative_kg"];

/// Writes the limits at every whole day. Hull breakpoints sit on whole days,
/// so the file determines the envelope exactly.
pub fn write_envelope_csv(env: &BoundEnvelope, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ENVELOPE_CSV_HEADER)?;
    for d in 0..=env.days {
        let x = d as f64;
        wtr.write_record([d.to_string(), env.lower(x).to_string(), env.upper(x).to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

fn read_table<const N: usize>(reader: impl Read, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header) {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; N];
        for (k, slot) in row.iter_mut().enumerate() {
            let raw = rec.get(k).unwrap_or("");
            *slot = raw
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad `{}` value `{raw}`", i + 1, header[k])))?;
        }
        if row[0] != i as f64 {
            return Err(Error::Format(format!("row {}: expected day {i}", i + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Drops breakpoints that lie on the segment between their neighbours.
fn simplify(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        while out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let mid = a.1 + (p.1 - a.1) * (b.0 - a.0) / (p.0 - a.0);
            if (b.1 - mid).abs() <= 1e-9 * (1.0 + b.1.abs()) {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

pub fn read_envelope_csv(reader: impl Read) -> Result<BoundEnvelope> {
    let rows = read_table(reader, ENVELOPE_CSV_HEADER)?;
    if rows.len() < 2 {
        return Err(Error::Format("envelope needs at least two days".into()));
    }
    let days = rows.len() - 1;
    let total = rows[days][1];
    let lower = simplify(rows.iter().map(|r| (r[0], r[1])).collect());
    let upper = simplify(rows.iter().map(|r| (r[0], r[2])).collect());
    BoundEnvelope::from_chains(lower, upper, days, total)
}

pub fn write_trajectory_csv(t: &Trajectory, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRAJECTORY_CSV_HEADER)?;
    for (d, v) in t.points.iter().enumerate() {
        wtr.write_record([d.to_string(), v.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_trajectory_csv(reader: impl Read) -> Result<Trajectory> {
    let rows = read_table(reader, TRAJECTORY_CSV_HEADER)?;
    Trajectory::from_cumulative(rows.iter().map(|r| r[1]).collect())
}

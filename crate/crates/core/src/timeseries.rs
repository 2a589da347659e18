//! Hourly input series: electricity price, hydrogen price and wind capacity
//! factor, aligned on one timestamp axis.
//!
//! The on-disk format is a UTF-8 CSV with header `timestamp,e_eur_mwh,h_eur_kg,w`,
//! ISO-8601 timestamps and plain decimal numbers. [`save_csv`] writes floats in
//! their shortest round-tripping form, so `load_csv(save_csv(s)) == s` exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;
pub const CSV_HEADER: [&str; 4] = ["timestamp", "e_eur_mwh", "h_eur_kg", "w"];
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub year_label: String,
    timestamps: Vec<NaiveDateTime>,
    /// Electricity price, EUR/MWh.
    e: Vec<f64>,
    /// Hydrogen price, EUR/kg.
    h: Vec<f64>,
    /// Wind capacity factor.
    w: Vec<f64>,
}

impl HourlySeries {
    pub fn new(
        year_label: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
        e: Vec<f64>,
        h: Vec<f64>,
        w: Vec<f64>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if e.len() != n || h.len() != n || w.len() != n {
            return Err(Error::Validation(format!(
                "column lengths differ: timestamps {n}, e {}, h {}, w {}",
                e.len(),
                h.len(),
                w.len()
            )));
        }
        if n == 0 || n % HOURS_PER_DAY != 0 {
            return Err(Error::Validation(format!(
                "series has {n} hours, expected a positive multiple of 24"
            )));
        }
        for i in 0..n {
            let row = i + 1;
            if i > 0 && timestamps[i] <= timestamps[i - 1] {
                return Err(Error::Ordering {
                    row,
                    timestamp: timestamps[i].format(TIMESTAMP_FORMAT).to_string(),
                });
            }
            check_finite(row, "e_eur_mwh", e[i])?;
            check_finite(row, "h_eur_kg", h[i])?;
            if !(0.0..=1.0).contains(&w[i]) {
                return Err(Error::RowOutOfRange {
                    row,
                    column: "w",
                    value: w[i],
                    expected: "[0, 1]",
                });
            }
        }
        Ok(Self {
            year_label: year_label.into(),
            timestamps,
            e,
            h,
            w,
        })
    }

    /// Builds a series on a regular hourly grid starting at `start`.
    pub fn hourly(
        year_label: impl Into<String>,
        start: NaiveDateTime,
        e: Vec<f64>,
        h: Vec<f64>,
        w: Vec<f64>,
    ) -> Result<Self> {
        let timestamps = hourly_timestamps(start, e.len());
        Self::new(year_label, timestamps, e, h, w)
    }

    pub fn hours(&self) -> usize {
        self.e.len()
    }

    pub fn days(&self) -> usize {
        self.hours() / HOURS_PER_DAY
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Hour range of day `d` (0-based).
    pub fn day_range(&self, d: usize) -> std::ops::Range<usize> {
        d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY
    }
}

fn check_finite(row: usize, column: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::RowOutOfRange {
            row,
            column,
            value,
            expected: "finite values",
        })
    }
}

pub fn hourly_timestamps(start: NaiveDateTime, n: usize) -> Vec<NaiveDateTime> {
    (0..n).map(|i| start + Duration::hours(i as i64)).collect()
}

/// Parses `2017-01-01T00:00:00`, `2017-01-01 00:00:00`, `2017-01-01T00:00`
/// and RFC 3339 timestamps with an offset (converted to UTC).
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in [
        TIMESTAMP_FORMAT,
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.naive_utc())
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Reads a series file. The year label is taken from the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<HourlySeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, label)
}

pub fn read_csv(reader: impl Read, year_label: impl Into<String>) -> Result<HourlySeries> {
    let columns = read_columns(reader, &["e_eur_mwh", "h_eur_kg", "w"])?;
    let [e, h, w] = <[Vec<f64>; 3]>::try_from(columns.values).expect("three columns requested");
    HourlySeries::new(year_label, columns.timestamps, e, h, w)
}

pub fn save_csv(series: &HourlySeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(series, file)
}

pub fn write_csv(series: &HourlySeries, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for i in 0..series.hours() {
        wtr.write_record([
            format_timestamp(&series.timestamps[i]),
            series.e[i].to_string(),
            series.h[i].to_string(),
            series.w[i].to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Timestamped columns pulled out of a CSV by header name.
#[derive(Debug, Clone)]
pub struct Columns {
    pub timestamps: Vec<NaiveDateTime>,
    pub values: Vec<Vec<f64>>,
}

/// Reads `timestamp` plus the named numeric columns; other columns are ignored.
pub fn read_columns(reader: impl Read, names: &[&str]) -> Result<Columns> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column `{name}`")))
    };
    let ts_idx = find("timestamp")?;
    let idx: Vec<usize> = names.iter().map(|n| find(n)).collect::<Result<_>>()?;

    let mut timestamps = Vec::new();
    let mut values = vec![Vec::new(); names.len()];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw = record.get(ts_idx).unwrap_or("");
        let t = parse_timestamp(raw)
            .ok_or_else(|| Error::Format(format!("row {row}: bad timestamp `{raw}`")))?;
        if let Some(prev) = timestamps.last() {
            if t <= *prev {
                return Err(Error::Ordering {
                    row,
                    timestamp: raw.to_string(),
                });
            }
        }
        timestamps.push(t);
        for (k, &col) in idx.iter().enumerate() {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                Error::Format(format!("row {row}: `{}` is not a number: `{raw}`", names[k]))
            })?;
            values[k].push(v);
        }
    }
    Ok(Columns { timestamps, values })
}

pub fn load_columns(path: impl AsRef<Path>, names: &[&str]) -> Result<Columns> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_columns(file, names)
}

/// Settings for deriving hydrogen prices from electricity prices: scale to a
/// target mean, perturb each hour by a uniform relative draw, clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrogenPriceSynth {
    /// Mean of the scaled series before noise, EUR/kg.
    pub target_mean: f64,
    /// Half-width of the uniform relative perturbation.
    pub noise: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for HydrogenPriceSynth {
    fn default() -> Self {
        Self {
            target_mean: 3.0,
            noise: 0.25,
            min: 1.0,
            max: 5.0,
        }
    }
}

impl HydrogenPriceSynth {
    pub fn with_target_mean(target_mean: f64) -> Self {
        Self {
            target_mean,
            ..Self::default()
        }
    }

    pub fn generate(&self, e: &[f64], seed: u64) -> Result<Vec<f64>> {
        if e.is_empty() {
            return Err(Error::Validation("electricity price series is empty".into()));
        }
        if !(self.target_mean > 0.0) {
            return Err(Error::Validation(format!(
                "target mean must be > 0, got {}",
                self.target_mean
            )));
        }
        if !(self.noise >= 0.0) || !(self.min <= self.max) {
            return Err(Error::Validation("invalid noise or clip range".into()));
        }
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::ScalingUndefined { mean });
        }
        let scale = self.target_mean / mean;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(e.iter()
            .map(|&et| {
                let u = if self.noise > 0.0 {
                    rng.random_range(-self.noise..=self.noise)
                } else {
                    0.0
                };
                (scale * et * (1.0 + u)).clamp(self.min, self.max)
            })
            .collect())
    }
}

/// Hydrogen prices with the default ±25 % noise and [1, 5] EUR/kg clip.
pub fn synth_hydrogen_prices(e: &[f64], target_mean: f64, seed: u64) -> Result<Vec<f64>> {
    HydrogenPriceSynth::with_target_mean(target_mean).generate(e, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyMeans {
    /// 1-based day index.
    pub day_index: usize,
    pub e_d: f64,
    pub h_d: f64,
    pub w_d: f64,
}

pub fn daily_means(s: &HourlySeries) -> Vec<DailyMeans> {
    (0..s.days())
        .map(|d| {
            let r = s.day_range(d);
            DailyMeans {
                day_index: d + 1,
                e_d: mean(&s.e[r.clone()]),
                h_d: mean(&s.h[r.clone()]),
                w_d: mean(&s.w[r]),
            }
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

//! Synthetic market years for demos and tests.
//!
//! Wind follows a seasonal logistic transform of an hourly AR(1) process.
//! Electricity prices combine a seasonal and daily profile, a slow AR(1)
//! regime, a discount during windy hours, hourly noise and rare spikes.
//! Hydrogen prices are then derived from electricity prices with
//! [`HydrogenPriceSynth`].

use chrono::{NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::timeseries::{HourlySeries, HydrogenPriceSynth, HOURS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub year_label: String,
    pub start: NaiveDateTime,
    pub days: usize,
    /// Mean electricity price before spikes, EUR/MWh.
    pub price_level: f64,
    /// Relative size of price swings around the level.
    pub price_volatility: f64,
    /// Shift of the wind latent mean; positive values give a windier year.
    pub wind_bias: f64,
    pub hydrogen: HydrogenPriceSynth,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(year_label: impl Into<String>, seed: u64) -> Self {
        Self {
            year_label: year_label.into(),
            start: NaiveDate::from_ymd_opt(2019, 1, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
            days: 365,
            price_level: 45.0,
            price_volatility: 0.4,
            wind_bias: 0.0,
            hydrogen: HydrogenPriceSynth::default(),
            seed,
        }
    }

    pub fn with_days(mut self, days: usize) -> Self {
        self.days = days;
        self
    }

    pub fn with_prices(mut self, level: f64, volatility: f64) -> Self {
        self.price_level = level;
        self.price_volatility = volatility;
        self
    }

    pub fn with_wind_bias(mut self, bias: f64) -> Self {
        self.wind_bias = bias;
        self
    }
}

/// Raw hourly electricity prices and capacity factors.
pub fn market_and_wind(cfg: &ScenarioConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if cfg.days == 0 {
        return Err(Error::Validation("scenario needs at least one day".into()));
    }
    if !(cfg.price_level.is_finite() && cfg.price_level > 0.0) {
        return Err(Error::Validation(format!(
            "price level {} must be positive",
            cfg.price_level
        )));
    }
    if !(cfg.price_volatility.is_finite() && cfg.price_volatility >= 0.0) {
        return Err(Error::Validation("price volatility must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let n = cfg.days * HOURS_PER_DAY;
    let tau = std::f64::consts::TAU;

    let phi_wind: f64 = 0.97;
    let phi_regime: f64 = 0.995;
    let mut z = std.sample(&mut rng);
    let mut regime = std.sample(&mut rng);
    let mut w = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for t in 0..n {
        let day = (t / HOURS_PER_DAY) as f64;
        let hour = (t % HOURS_PER_DAY) as f64;
        let season = (tau * (day - 15.0) / 365.0).cos();

        z = phi_wind * z + (1.0 - phi_wind * phi_wind).sqrt() * std.sample(&mut rng);
        let latent = 0.1 + cfg.wind_bias + 0.45 * season + 1.6 * z;
        let wt = 1.0 / (1.0 + (-latent).exp());
        w.push(((wt - 0.03) / 0.94).clamp(0.0, 1.0));

        regime = phi_regime * regime + (1.0 - phi_regime * phi_regime).sqrt() * std.sample(&mut rng);
        let diurnal = 0.25 * (tau * (hour - 13.0) / 24.0).cos() + 0.15 * (tau * (hour - 19.0) / 12.0).cos();
        let wind_effect = -0.9 * (wt - 0.5);
        let shape = 1.0 + 0.15 * season + diurnal + wind_effect + 0.6 * regime;
        let noise = 0.25 * std.sample(&mut rng);
        let mut price = cfg.price_level * (1.0 + cfg.price_volatility * (shape - 1.0 + noise));
        if rng.random::<f64>() < 0.003 {
            price += cfg.price_level * rng.random_range(1.0..4.0);
        }
        e.push(price);
    }
    Ok((e, w))
}

/// A complete year: electricity, derived hydrogen prices and wind.
pub fn synthetic_year(cfg: &ScenarioConfig) -> Result<HourlySeries> {
    let (e, w) = market_and_wind(cfg)?;
    let h = cfg
        .hydrogen
        .generate(&e, cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1))?;
    HourlySeries::hourly(cfg.year_label.clone(), cfg.start, e, h, w)
}

/// Six years with distinct price levels and wind, used for demos and the
/// training pipeline.
pub fn demo_years(seed: u64) -> Vec<ScenarioConfig> {
    let shapes = [
        ("2017", 30.0, 0.35, 0.05),
        ("2018", 44.0, 0.30, -0.10),
        ("2019", 38.0, 0.45, 0.10),
        ("2020", 25.0, 0.60, 0.00),
        ("2021", 88.0, 0.55, -0.05),
        ("2022", 210.0, 0.50, 0.02),
    ];
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(label, level, vol, bias))| {
            let year: i32 = label.parse().expect("numeric label");
            let mut cfg = ScenarioConfig::new(format!("synthetic_{label}"), seed.wrapping_add(i as u64))
                .with_prices(level, vol)
                .with_wind_bias(bias);
            cfg.start = NaiveDate::from_ymd_opt(year, 1, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date");
            cfg
        })
        .collect()
}

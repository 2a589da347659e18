//! Physical plant: wind farm feeding an electricity bus, electrolyser feeding a
//! hydrogen bus, and the per-hour energy and mass balances every solver obeys.
//!
//! All flows are hourly, so capacities in MW double as MWh limits per step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive tolerance for the energy and mass balances.
pub const BALANCE_TOL: f64 = 1e-9;
/// Relative tolerance for the electrolysis conversion `m1 = g3 / specific_energy`.
pub const CONVERSION_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    /// Wind farm nameplate, MW.
    pub wind_capacity: f64,
    /// Electrolyser nameplate, MW.
    pub electrolyser_capacity: f64,
    /// Electricity per kilogram of hydrogen including compression, MWh/kg.
    pub specific_energy: f64,
    /// Annual contracted delivery, kg.
    pub hpa_total: f64,
    /// Contract period in days. `None` means the length of the simulated year.
    pub hpa_days: Option<usize>,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            wind_capacity: 2.0,
            electrolyser_capacity: 1.0,
            specific_energy: 0.0576,
            hpa_total: 48_000.0,
            hpa_days: None,
        }
    }
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wind_capacity", self.wind_capacity),
            ("electrolyser_capacity", self.electrolyser_capacity),
            ("specific_energy", self.specific_energy),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.hpa_total.is_finite() && self.hpa_total >= 0.0) {
            return Err(Error::Validation(format!(
                "hpa_total must be >= 0, got {}",
                self.hpa_total
            )));
        }
        if self.hpa_days == Some(0) {
            return Err(Error::Validation("hpa_days must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_contract(mut self, kg: f64) -> Self {
        self.hpa_total = kg;
        self
    }

    /// Contract period for a series of `series_days` days.
    pub fn contract_days(&self, series_days: usize) -> usize {
        self.hpa_days.unwrap_or(series_days)
    }

    /// Hourly electrolyser limit in MWh.
    pub fn electrolyser_limit(&self) -> f64 {
        self.electrolyser_capacity
    }

    /// Hydrogen output at full electrolyser load, kg/h.
    pub fn max_hourly_hydrogen(&self) -> f64 {
        self.electrolyser_capacity / self.specific_energy
    }

    /// Energy the electrolyser can absorb in an hour with `g1` MWh of wind.
    pub fn usable_energy(&self, g1: f64) -> f64 {
        g1.min(self.electrolyser_limit())
    }
}

/// Wind energy generated in one hour at capacity factor `w`, in MWh.
pub fn wind_energy(w: f64, spec: &PlantSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Validation(format!(
            "capacity factor {w} is outside [0, 1]"
        )));
    }
    Ok(w * spec.wind_capacity)
}

/// Upper bound on the hydrogen one day can produce: every hour runs the
/// electrolyser as hard as the wind allows.
pub fn max_daily_hydrogen(day_w: &[f64], spec: &PlantSpec) -> Result<f64> {
    if day_w.len() != 24 {
        return Err(Error::Validation(format!(
            "expected 24 hourly capacity factors, got {}",
            day_w.len()
        )));
    }
    max_hydrogen(day_w, spec)
}

/// Same as [`max_daily_hydrogen`] for an arbitrary number of hours.
pub fn max_hydrogen(w: &[f64], spec: &PlantSpec) -> Result<f64> {
    let mut energy = 0.0;
    for &wt in w {
        energy += spec.usable_energy(wind_energy(wt, spec)?);
    }
    Ok(energy / spec.specific_energy)
}

/// Energy and hydrogen flows of one hour.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HourFlows {
    /// Wind energy, MWh.
    pub g1: f64,
    /// Energy sold to the grid, MWh.
    pub g2: f64,
    /// Energy to the electrolyser, MWh.
    pub g3: f64,
    /// Hydrogen produced, kg.
    pub m1: f64,
    /// Hydrogen delivered under the purchase agreement, kg.
    pub m2: f64,
    /// Hydrogen sold on the market, kg.
    pub m3: f64,
}

impl HourFlows {
    /// Market revenue of the hour. Contract deliveries earn nothing here.
    pub fn revenue(&self, e: f64, h: f64) -> f64 {
        e * self.g2 + h * self.m3
    }

    /// Checks the balance, conversion and capacity relations.
    pub fn check(&self, spec: &PlantSpec) -> Result<(), String> {
        let flows = [
            ("g1", self.g1),
            ("g2", self.g2),
            ("g3", self.g3),
            ("m1", self.m1),
            ("m2", self.m2),
            ("m3", self.m3),
        ];
        for (name, v) in flows {
            if !v.is_finite() || v < -BALANCE_TOL {
                return Err(format!("{name} = {v} is negative or not finite"));
            }
        }
        if (self.g1 - self.g2 - self.g3).abs() > BALANCE_TOL {
            return Err(format!(
                "energy balance g1 = g2 + g3 violated: {} != {} + {}",
                self.g1, self.g2, self.g3
            ));
        }
        let m1_expected = self.g3 / spec.specific_energy;
        if (self.m1 - m1_expected).abs() > CONVERSION_REL_TOL * m1_expected.abs().max(1.0) {
            return Err(format!(
                "conversion m1 = g3 / specific_energy violated: {} != {}",
                self.m1, m1_expected
            ));
        }
        if (self.m1 - self.m2 - self.m3).abs() > BALANCE_TOL {
            return Err(format!(
                "mass balance m1 = m2 + m3 violated: {} != {} + {}",
                self.m1, self.m2, self.m3
            ));
        }
        if self.g3 > spec.electrolyser_limit() + BALANCE_TOL {
            return Err(format!("g3 = {} exceeds electrolyser limit", self.g3));
        }
        if self.g1 > spec.wind_capacity + BALANCE_TOL {
            return Err(format!("g1 = {} exceeds wind capacity", self.g1));
        }
        Ok(())
    }
}

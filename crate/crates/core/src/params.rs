use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and planning constants. Defaults are the reference case study
/// values: 30 km/h, 12 chargers of 60 kW per station, 60 kWh batteries,
/// a budget of 40 stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanningParams {
    /// Average travel speed, km/h.
    pub v: f64,
    /// Charging frequency per day.
    pub tau: f64,
    /// Daily charging ratio.
    pub omega: f64,
    /// Chargers per station.
    pub chargers: u32,
    /// Service rate, services per charger per day.
    pub mu: f64,
    pub soc_max: f64,
    /// Lower bound of the uniform SoC-at-plug-in distribution.
    pub soc_ch_lo: f64,
    pub soc_ch_hi: f64,
    /// Battery capacity, kWh.
    pub e_max: f64,
    /// Charger rated power, kW.
    pub p_max: f64,
    /// Charging efficiency.
    pub eta: f64,
    /// Distribution-network penalty coefficient.
    pub pi: f64,
    /// Maximum number of stations.
    pub budget: usize,
    /// Queueing time charged to a saturated station (ρ ≥ 1), hours.
    pub saturation_cap_h: f64,
    /// Horizon used for energy-demand reporting when no flow series is given.
    pub horizon_days: f64,
}

impl Default for PlanningParams {
    fn default() -> Self {
        Self {
            v: 30.0,
            tau: 0.65,
            omega: 0.2,
            chargers: 12,
            mu: 40.0,
            soc_max: 0.95,
            soc_ch_lo: 0.05,
            soc_ch_hi: 0.95,
            e_max: 60.0,
            p_max: 60.0,
            eta: 0.95,
            pi: 0.5,
            budget: 40,
            saturation_cap_h: 24.0,
            horizon_days: 7.0,
        }
    }
}

impl PlanningParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v", self.v),
            ("tau", self.tau),
            ("omega", self.omega),
            ("mu", self.mu),
            ("e_max", self.e_max),
            ("p_max", self.p_max),
            ("eta", self.eta),
            ("soc_max", self.soc_max),
            ("saturation_cap_h", self.saturation_cap_h),
            ("horizon_days", self.horizon_days),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(
                    field,
                    format!("must be positive, got {value}"),
                ));
            }
        }
        if self.chargers < 1 {
            return Err(Error::validation("chargers", "must be at least 1"));
        }
        if self.budget < 1 {
            return Err(Error::validation("budget", "must be at least 1"));
        }
        if !(self.pi.is_finite() && self.pi >= 0.0) {
            return Err(Error::validation("pi", "must be non-negative"));
        }
        if self.eta > 1.0 {
            return Err(Error::validation("eta", "must be at most 1"));
        }
        let ordered = 0.0 <= self.soc_ch_lo
            && self.soc_ch_lo < self.soc_ch_hi
            && self.soc_ch_hi <= self.soc_max
            && self.soc_max <= 1.0;
        if !ordered {
            return Err(Error::validation(
                "soc_ch_lo",
                "need 0 <= soc_ch_lo < soc_ch_hi <= soc_max <= 1",
            ));
        }
        Ok(())
    }

    /// Mean of the SoC-at-plug-in distribution.
    pub fn expected_soc_ch(&self) -> f64 {
        0.5 * (self.soc_ch_lo + self.soc_ch_hi)
    }

    pub fn apply(&mut self, overrides: &ParamOverrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(value) = overrides.$field { self.$field = value; })*
            };
        }
        take!(
            v, tau, omega, chargers, mu, soc_max, soc_ch_lo, soc_ch_hi, e_max, p_max, eta, pi,
            budget, saturation_cap_h, horizon_days
        );
    }
}

/// Partial parameter set; `Some` fields replace the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chargers: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soc_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soc_ch_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soc_ch_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "K")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation_cap_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_days: Option<f64>,
}

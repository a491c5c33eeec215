use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PlanningParams;

/// Steady-state M/M/C statistics of one station.
///
/// Rates are per day, so `t_queue_days` is in days; use
/// [`NodeQueueStats::t_queue_hours`] for the objective's unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeQueueStats {
    pub arrival_rate: f64,
    pub utilization: f64,
    pub p_available: f64,
    pub queue_len: f64,
    pub t_queue_days: f64,
    pub saturated: bool,
}

impl NodeQueueStats {
    pub fn t_queue_hours(&self) -> f64 {
        self.t_queue_days * 24.0
    }
}

/// `(Cρ)^c / c!` for `c = 0..=C`, built by recurrence.
fn poisson_terms(offered_load: f64, chargers: u32) -> impl Iterator<Item = f64> {
    (0..=chargers).scan(1.0, move |term, c| {
        if c > 0 {
            *term *= offered_load / f64::from(c);
        }
        Some(*term)
    })
}

/// Reciprocal of the idle-probability normalizer:
/// `Σ_{c<C} (Cρ)^c/c! + (Cρ)^C / (C!(1-ρ))`. Only meaningful for `ρ < 1`.
pub fn availability_denominator(utilization: f64, chargers: u32) -> f64 {
    let offered = f64::from(chargers) * utilization;
    let terms: Vec<f64> = poisson_terms(offered, chargers).collect();
    let (head, last) = terms.split_at(chargers as usize);
    head.iter().sum::<f64>() + last[0] / (1.0 - utilization)
}

/// M/M/C queue at arrival rate `lambda` with `params.chargers` servers of
/// rate `params.mu`. Saturated systems (ρ ≥ 1) report the configured cap as
/// their queueing time and infinite queue length.
pub fn queue_stats(lambda: f64, params: &PlanningParams) -> Result<NodeQueueStats> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Argument(format!(
            "arrival rate must be finite and non-negative, got {lambda}"
        )));
    }
    let chargers = params.chargers;
    if chargers < 1 || !(params.mu > 0.0) {
        return Err(Error::Argument(
            "need at least one charger and a positive service rate".into(),
        ));
    }
    let utilization = lambda / (f64::from(chargers) * params.mu);
    if utilization >= 1.0 {
        return Ok(NodeQueueStats {
            arrival_rate: lambda,
            utilization,
            p_available: 0.0,
            queue_len: f64::INFINITY,
            t_queue_days: params.saturation_cap_h / 24.0,
            saturated: true,
        });
    }

    let offered = lambda / params.mu;
    let top_term = poisson_terms(offered, chargers)
        .last()
        .expect("at least one term");
    let p_available = 1.0 / availability_denominator(utilization, chargers);
    let queue_len = utilization * p_available * top_term / (1.0 - utilization).powi(2);
    let t_queue_days = if lambda > 0.0 { queue_len / lambda } else { 0.0 };
    Ok(NodeQueueStats {
        arrival_rate: lambda,
        utilization,
        p_available,
        queue_len,
        t_queue_days,
        saturated: false,
    })
}

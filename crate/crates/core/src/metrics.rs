//! Plan-level summary figures for comparing scenarios.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::net::{FlowSeries, TrafficNetwork};
use crate::objectives::{EvalOptions, Evaluator, Placement};
use crate::params::PlanningParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_cs: usize,
    /// Share of total nodal flow at station nodes, percent.
    pub flow_supported_pct: f64,
    /// Mean travel + queueing + charging time over stations, minutes.
    /// Absent for an empty plan.
    pub avg_charging_time_min: Option<f64>,
    /// Charging energy drawn at stations over the data horizon, kWh.
    pub dn_demand_kwh: f64,
    /// Mean distance from each non-station node to its nearest station, km.
    /// Absent for an empty plan, zero when every node hosts a station.
    pub avg_travel_dist_km: Option<f64>,
    /// Aggregate objective of the plan, when one was scored.
    pub gamma_min: Option<f64>,
}

impl MetricsReport {
    pub fn dn_demand_mwh(&self) -> f64 {
        self.dn_demand_kwh / 1000.0
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_min = Some(gamma);
        self
    }

    /// Metrics of `s` using the terms already computed by `eval`.
    pub fn compute(eval: &Evaluator<'_>, s: &Placement) -> Result<Self> {
        // Validates the length.
        eval.raw(s)?;
        let net = eval.network();
        let params = eval.params();
        let stations: Vec<usize> = s.selected().collect();
        let n_cs = stations.len();

        let covered: f64 = stations.iter().map(|&n| net.flow(n)).sum();
        let flow_supported_pct = (covered / net.total_flow() * 100.0).clamp(0.0, 100.0);

        let avg_charging_time_min = (n_cs > 0).then(|| {
            stations.iter().map(|&n| eval.node_cost_hours(n)).sum::<f64>() / n_cs as f64 * 60.0
        });

        let events_per_trip = params.tau * params.omega * eval.horizon_days();
        let dn_demand_kwh = stations
            .iter()
            .map(|&n| eval.node_demand(n) * net.flow(n) * events_per_trip)
            .sum();

        let avg_travel_dist_km = (n_cs > 0).then(|| {
            let others: Vec<usize> = (0..net.len()).filter(|&n| !s.contains(n)).collect();
            if others.is_empty() {
                return 0.0;
            }
            let total: f64 = others
                .iter()
                .map(|&m| {
                    stations
                        .iter()
                        .map(|&n| net.dist(m, n))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            total / others.len() as f64
        });

        Ok(Self {
            n_cs,
            flow_supported_pct,
            avg_charging_time_min,
            dn_demand_kwh,
            avg_travel_dist_km,
            gamma_min: None,
        })
    }
}

/// Metrics of `placement` under default evaluation options.
pub fn report_metrics(
    net: &TrafficNetwork,
    series: Option<&FlowSeries>,
    params: &PlanningParams,
    placement: &Placement,
) -> Result<MetricsReport> {
    let eval = Evaluator::new(net, series, params, EvalOptions::default())?;
    MetricsReport::compute(&eval, placement)
}

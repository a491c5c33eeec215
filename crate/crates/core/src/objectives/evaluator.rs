use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    arrival_rate, charging_event_time, check_len, queue_stats, travel_time, NodeQueueStats,
    ObjectiveBounds, Placement, RawObjectives,
};
use crate::error::{Error, Result};
use crate::net::{FlowSeries, TrafficNetwork};
use crate::params::PlanningParams;

/// Which nodes of a region contribute demand to the DN penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DnSum {
    /// Only the station nodes of the region.
    #[default]
    SelectedNodes,
    /// Every node of a region that hosts at least one station.
    AllNodes,
}

/// How the plug-in SoC enters charging time and DN demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SocMode {
    /// Mean of the uniform SoC distribution.
    #[default]
    Expected,
    /// Per-node average over `draws` seeded uniform samples.
    MonteCarlo { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub dn_sum: DnSum,
    pub soc: SocMode,
}

/// Objective evaluator with every placement-independent term precomputed.
///
/// Travel, queueing and charging times, the OD-weighted distance column and
/// the per-node DN demand depend only on the node, so a placement's raw
/// objectives reduce to sums over its stations (plus per-region counts for
/// the DN term).
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    net: &'a TrafficNetwork,
    params: &'a PlanningParams,
    options: EvalOptions,
    travel_h: Vec<f64>,
    queue: Vec<NodeQueueStats>,
    charge_h: Vec<f64>,
    dis: Vec<f64>,
    /// Charging energy per event times f̂_n, kWh.
    demand: Vec<f64>,
    region_demand: Vec<f64>,
    horizon_days: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        net: &'a TrafficNetwork,
        series: Option<&FlowSeries>,
        params: &'a PlanningParams,
        options: EvalOptions,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(series) = series {
            if series.n_nodes() != net.len() {
                return Err(Error::validation(
                    "flow series",
                    format!(
                        "covers {} nodes but the network has {}",
                        series.n_nodes(),
                        net.len()
                    ),
                ));
            }
        }
        let n = net.len();
        let soc = plug_in_soc(params, options.soc, n);
        let mut travel_h = Vec::with_capacity(n);
        let mut queue = Vec::with_capacity(n);
        let mut charge_h = Vec::with_capacity(n);
        let mut demand = Vec::with_capacity(n);
        for (node, &soc_ch) in soc.iter().enumerate() {
            travel_h.push(travel_time(net, params, node)?);
            queue.push(queue_stats(arrival_rate(net, series, params, node), params)?);
            charge_h.push(charging_event_time(params, soc_ch)?);
            let energy = (params.soc_max - soc_ch) * params.e_max / params.eta;
            demand.push(energy * net.normalized_flow(node));
        }
        let dis = (0..n)
            .map(|node| {
                (0..n)
                    .filter(|&m| m != node)
                    .map(|m| net.dist(m, node) * net.normalized_od_flow(m, node))
                    .sum()
            })
            .collect();
        let region_demand = net
            .regions()
            .iter()
            .map(|members| members.iter().map(|&node| demand[node]).sum())
            .collect();
        Ok(Self {
            net,
            params,
            options,
            travel_h,
            queue,
            charge_h,
            dis,
            demand,
            region_demand,
            horizon_days: series.map_or(params.horizon_days, FlowSeries::horizon_days),
        })
    }

    pub fn network(&self) -> &TrafficNetwork {
        self.net
    }

    pub fn params(&self) -> &PlanningParams {
        self.params
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn travel_hours(&self, n: usize) -> f64 {
        self.travel_h[n]
    }

    pub fn queue(&self, n: usize) -> &NodeQueueStats {
        &self.queue[n]
    }

    pub fn charge_hours(&self, n: usize) -> f64 {
        self.charge_h[n]
    }

    /// Travel + queueing + charging time of a station at `n`, hours.
    pub fn node_cost_hours(&self, n: usize) -> f64 {
        self.travel_h[n] + self.queue[n].t_queue_hours() + self.charge_h[n]
    }

    /// Energy per charging event at `n` scaled by its normalized flow, kWh.
    pub fn node_demand(&self, n: usize) -> f64 {
        self.demand[n]
    }

    /// Days covered by the flow data: the series horizon when one was
    /// given, else `params.horizon_days`.
    pub fn horizon_days(&self) -> f64 {
        self.horizon_days
    }

    pub fn raw(&self, s: &Placement) -> Result<RawObjectives> {
        check_len(self.net, s)?;
        Ok(self.raw_unchecked(s))
    }

    pub(crate) fn raw_unchecked(&self, s: &Placement) -> RawObjectives {
        let mut out = RawObjectives::default();
        let mut stations = vec![0usize; self.net.n_regions()];
        let mut selected_demand = vec![0.0; self.net.n_regions()];
        for n in s.selected() {
            out.j_flow += self.net.flow(n);
            out.j_ch += self.node_cost_hours(n);
            out.j_dis += self.dis[n];
            let r = self.net.region_of(n);
            stations[r] += 1;
            selected_demand[r] += self.demand[n];
        }
        let demand = match self.options.dn_sum {
            DnSum::SelectedNodes => &selected_demand,
            DnSum::AllNodes => &self.region_demand,
        };
        out.j_dn = self.params.pi
            * stations
                .iter()
                .zip(demand)
                .map(|(&count, &d)| count as f64 * d)
                .sum::<f64>();
        out
    }

    /// Exact objective ranges over all placements with `1..=k` stations.
    ///
    /// Every objective is a sum of non-negative per-station terms except the
    /// DN penalty, whose per-region `count * demand` structure is maximized
    /// by a knapsack over regions.
    pub fn feasible_bounds(&self, k: usize) -> Result<ObjectiveBounds> {
        if k == 0 {
            return Err(Error::Argument("budget must be at least 1".into()));
        }
        let n = self.net.len();
        let k = k.min(n);
        let flows: Vec<f64> = (0..n).map(|i| self.net.flow(i)).collect();
        let costs: Vec<f64> = (0..n).map(|i| self.node_cost_hours(i)).collect();
        let (dn_min, dn_max) = match self.options.dn_sum {
            DnSum::SelectedNodes => {
                let min = self.params.pi * min_of(&self.demand);
                (min, self.params.pi * self.max_clustered_demand(k))
            }
            DnSum::AllNodes => {
                let per_station: Vec<f64> = (0..n)
                    .map(|i| self.params.pi * self.region_demand[self.net.region_of(i)])
                    .collect();
                (min_of(&per_station), top_k_sum(&per_station, k))
            }
        };
        Ok(ObjectiveBounds {
            min: [min_of(&flows), min_of(&costs), min_of(&self.dis), dn_min],
            max: [
                top_k_sum(&flows, k),
                top_k_sum(&costs, k),
                top_k_sum(&self.dis, k),
                dn_max,
            ],
        })
    }

    /// `max Σ_r c_r · (top-c_r demand sum in r)` subject to `Σ c_r ≤ k`.
    fn max_clustered_demand(&self, k: usize) -> f64 {
        let mut best = vec![f64::NEG_INFINITY; k + 1];
        best[0] = 0.0;
        for members in self.net.regions() {
            let mut values: Vec<f64> = members.iter().map(|&i| self.demand[i]).collect();
            values.sort_by(|a, b| b.total_cmp(a));
            let mut gain = Vec::with_capacity(values.len().min(k) + 1);
            gain.push(0.0);
            let mut prefix = 0.0;
            for (c, v) in values.iter().take(k).enumerate() {
                prefix += v;
                gain.push((c + 1) as f64 * prefix);
            }
            let mut next = best.clone();
            for used in 0..=k {
                if best[used] == f64::NEG_INFINITY {
                    continue;
                }
                for (c, g) in gain.iter().enumerate().skip(1) {
                    if used + c > k {
                        break;
                    }
                    next[used + c] = next[used + c].max(best[used] + g);
                }
            }
            best = next;
        }
        best.into_iter().fold(0.0, f64::max)
    }
}

fn plug_in_soc(params: &PlanningParams, mode: SocMode, n: usize) -> Vec<f64> {
    match mode {
        SocMode::Expected => vec![params.expected_soc_ch(); n],
        SocMode::MonteCarlo { draws, seed } => (0..n)
            .map(|node| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(node as u64);
                let draws = draws.max(1);
                let total: f64 = (0..draws)
                    .map(|_| rng.random_range(params.soc_ch_lo..=params.soc_ch_hi))
                    .sum();
                total / draws as f64
            })
            .collect(),
    }
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

fn top_k_sum(values: &[f64], k: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.iter().take(k).sum()
}

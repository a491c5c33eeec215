//! The four planning objectives, their normalization and weighted
//! aggregation.
//!
//! The free functions here compute each objective directly from its
//! definition and are the reference route. [`Evaluator`] precomputes the
//! placement-independent per-node terms and is what the solver uses in its
//! inner loop; tests check the two routes against each other.

mod evaluator;
mod normalize;
mod placement;
mod queue;

pub use evaluator::{DnSum, EvalOptions, Evaluator, SocMode};
pub use normalize::{normalize_and_aggregate, ObjectiveBounds, ObjectiveBreakdown, RawObjectives};
pub use placement::{Placement, Weights};
pub use queue::{availability_denominator, queue_stats, NodeQueueStats};

use crate::error::{Error, Result};
use crate::net::{FlowSeries, TrafficNetwork};
use crate::params::PlanningParams;

fn check_len(net: &TrafficNetwork, s: &Placement) -> Result<()> {
    if s.len() != net.len() {
        return Err(Error::LengthMismatch {
            expected: net.len(),
            found: s.len(),
        });
    }
    Ok(())
}

/// Traffic flow covered by the placement, trips/day.
pub fn flow_objective(net: &TrafficNetwork, s: &Placement) -> Result<f64> {
    check_len(net, s)?;
    Ok(s.selected().map(|n| net.flow(n)).sum())
}

/// Congestion-weighted mean travel time from node `n` to every other node,
/// hours.
pub fn travel_time(net: &TrafficNetwork, params: &PlanningParams, n: usize) -> Result<f64> {
    let count = net.len();
    if count < 2 {
        return Err(Error::Argument(
            "travel time needs at least two nodes".into(),
        ));
    }
    if n >= count {
        return Err(Error::Argument(format!("node {n} out of range")));
    }
    let own = net.normalized_flow(n);
    let weighted: f64 = (0..count)
        .filter(|&m| m != n)
        .map(|m| net.dist(m, n) * (own + net.normalized_flow(m)))
        .sum();
    Ok(weighted / (params.v * (count - 1) as f64))
}

/// Expected PEV arrivals per day at node `n`.
///
/// Without a series the historical integrals collapse to a single snapshot
/// (one period, unit horizon).
pub fn arrival_rate(
    net: &TrafficNetwork,
    series: Option<&FlowSeries>,
    params: &PlanningParams,
    n: usize,
) -> f64 {
    let f_n = net.flow(n);
    let base = f_n * params.tau * params.omega;
    match series {
        None => {
            let share = f_n / net.total_flow();
            base * share * net.normalized_flow(n)
        }
        Some(series) => {
            let own = series.node_total(n);
            let all = series.grand_total();
            if all <= 0.0 {
                return 0.0;
            }
            base * own / (series.horizon_days() * all) * (own / net.f_max())
        }
    }
}

/// Hours to charge from `soc_ch` to `soc_max`.
pub fn charging_event_time(params: &PlanningParams, soc_ch: f64) -> Result<f64> {
    if !(soc_ch >= 0.0 && soc_ch <= params.soc_max) {
        return Err(Error::Argument(format!(
            "SoC at plug-in must lie in [0, {}], got {soc_ch}",
            params.soc_max
        )));
    }
    Ok((params.soc_max - soc_ch) * params.e_max / (params.p_max * params.eta))
}

/// Sum over selected nodes of travel + queueing + charging time, hours,
/// at the expected plug-in SoC.
pub fn charging_time_objective(
    net: &TrafficNetwork,
    series: Option<&FlowSeries>,
    params: &PlanningParams,
    s: &Placement,
) -> Result<f64> {
    check_len(net, s)?;
    let t_ch = charging_event_time(params, params.expected_soc_ch())?;
    let mut total = 0.0;
    for n in s.selected() {
        let t_travel = travel_time(net, params, n)?;
        let queue = queue_stats(arrival_rate(net, series, params, n), params)?;
        total += t_travel + queue.t_queue_hours() + t_ch;
    }
    Ok(total)
}

/// OD-flow-weighted distance to the selected nodes.
pub fn travel_distance_objective(net: &TrafficNetwork, s: &Placement) -> Result<f64> {
    check_len(net, s)?;
    let count = net.len();
    let mut total = 0.0;
    for m in 0..count {
        for n in 0..count {
            if n != m && s.contains(n) {
                total += net.dist(m, n) * net.normalized_od_flow(m, n);
            }
        }
    }
    Ok(total)
}

/// Distribution-network load penalty at the expected plug-in SoC. The
/// per-region station count multiplies the region's flow-weighted charging
/// demand, so clustering stations in one region grows quadratically.
pub fn dn_objective(
    net: &TrafficNetwork,
    params: &PlanningParams,
    s: &Placement,
    dn_sum: DnSum,
) -> Result<f64> {
    check_len(net, s)?;
    let per_unit = (params.soc_max - params.expected_soc_ch()) * params.e_max / params.eta;
    let mut total = 0.0;
    for members in net.regions() {
        let stations = members.iter().filter(|&&n| s.contains(n)).count();
        if stations == 0 {
            continue;
        }
        let demand: f64 = members
            .iter()
            .filter(|&&n| dn_sum == DnSum::AllNodes || s.contains(n))
            .map(|&n| per_unit * net.normalized_flow(n))
            .sum();
        total += stations as f64 * demand;
    }
    Ok(params.pi * total)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::net::{CoordSystem, TrafficNode};

    pub(crate) fn line_network(flows: &[f64], regions: &[usize]) -> TrafficNetwork {
        let nodes = flows
            .iter()
            .zip(regions)
            .enumerate()
            .map(|(id, (&flow, &region))| TrafficNode {
                id,
                x: id as f64 * 10.0,
                y: 0.0,
                region,
                flow,
            })
            .collect();
        TrafficNetwork::new(nodes, None, None, None, CoordSystem::Planar).unwrap()
    }

    fn placement(n: usize, selected: &[usize]) -> Placement {
        Placement::from_indices(n, selected).unwrap()
    }

    #[test]
    fn flow_objective_sums_selected() {
        let net = line_network(&[10.0, 20.0, 30.0], &[0, 0, 0]);
        assert_eq!(flow_objective(&net, &Placement::empty(3)).unwrap(), 0.0);
        assert_eq!(flow_objective(&net, &Placement::full(3)).unwrap(), 60.0);
        assert_eq!(flow_objective(&net, &placement(3, &[1, 2])).unwrap(), 50.0);
        assert!(matches!(
            flow_objective(&net, &Placement::empty(2)),
            Err(Error::LengthMismatch { expected: 3, found: 2 })
        ));
    }

    fn star_network(normalized: [f64; 3]) -> TrafficNetwork {
        let nodes = normalized
            .iter()
            .enumerate()
            .map(|(id, &f)| TrafficNode {
                id,
                x: 0.0,
                y: 0.0,
                region: 0,
                flow: f * 400.0,
            })
            .collect();
        // Node 0 sits 30 km from both others; they are 40 km apart.
        let dist = vec![
            vec![0.0, 30.0, 30.0],
            vec![30.0, 0.0, 40.0],
            vec![30.0, 40.0, 0.0],
        ];
        TrafficNetwork::new(nodes, None, Some(dist), None, CoordSystem::Planar).unwrap()
    }

    #[test]
    fn travel_time_hand_value() {
        let net = star_network([0.5, 1.0, 0.25]);
        let params = PlanningParams::default();
        // (1/60)·(30·1.5 + 30·0.75)
        assert!((travel_time(&net, &params, 0).unwrap() - 1.125).abs() < 1e-12);
    }

    #[test]
    fn travel_time_is_linear_in_distance() {
        let params = PlanningParams::default();
        let net = line_network(&[5.0, 1.0, 3.0, 2.0], &[0, 0, 0, 0]);
        let doubled = TrafficNetwork::new(
            net.nodes()
                .iter()
                .map(|node| TrafficNode {
                    x: node.x * 2.0,
                    ..node.clone()
                })
                .collect(),
            None,
            None,
            None,
            CoordSystem::Planar,
        )
        .unwrap();
        for n in 0..4 {
            let a = travel_time(&net, &params, n).unwrap();
            let b = travel_time(&doubled, &params, n).unwrap();
            assert!((2.0 * a - b).abs() < 1e-12);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn travel_time_vanishes_without_flow_mass() {
        // f̂ = 0 for every node except one; the zero node's pairs with other
        // zero nodes contribute nothing.
        let net = line_network(&[0.0, 0.0, 1.0], &[0, 0, 0]);
        let params = PlanningParams::default();
        let t0 = travel_time(&net, &params, 0).unwrap();
        // only the pair with node 2 (20 km, f̂ sum 1) remains: 20 / (30·2)
        assert!((t0 - 20.0 / 60.0).abs() < 1e-12);
        let single = line_network(&[1.0], &[0]);
        assert!(matches!(travel_time(&single, &params, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn arrival_rate_snapshot_hand_values() {
        let params = PlanningParams::default();
        let net = line_network(&[100.0, 300.0], &[0, 0]);
        let expected = 0.65 * 0.2 * 100.0 * (100.0 / 400.0) * (100.0 / 300.0);
        assert!((arrival_rate(&net, None, &params, 0) - expected).abs() < 1e-12);
        assert!((arrival_rate(&net, None, &params, 0) - 1.083_333_333_333).abs() < 1e-9);

        let dominant = line_network(&[0.0, 500.0], &[0, 0]);
        assert_eq!(arrival_rate(&dominant, None, &params, 0), 0.0);
        assert!((arrival_rate(&dominant, None, &params, 1) - 0.65 * 0.2 * 500.0).abs() < 1e-12);
    }

    #[test]
    fn arrival_rate_with_series() {
        let params = PlanningParams::default();
        let net = line_network(&[100.0, 300.0], &[0, 0]);
        let series = FlowSeries::new(2.0, vec![vec![40.0, 60.0], vec![150.0, 150.0]]).unwrap();
        // f_n τ ω · S_n / (Δt ΣS) · S_n / F_max
        let expected = 100.0 * 0.65 * 0.2 * 100.0 / (2.0 * 400.0) * (100.0 / 300.0);
        assert!((arrival_rate(&net, Some(&series), &params, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn charging_event_time_hand_values() {
        let params = PlanningParams::default();
        assert_eq!(charging_event_time(&params, 0.95).unwrap(), 0.0);
        assert!((charging_event_time(&params, 0.5).unwrap() - 0.473_684_210_5).abs() < 1e-9);
        assert!((charging_event_time(&params, 0.05).unwrap() - 0.947_368_421_05).abs() < 1e-9);
        assert!(charging_event_time(&params, 0.96).is_err());
    }

    #[test]
    fn charging_time_objective_composes_components() {
        let params = PlanningParams::default();
        let net = line_network(&[100.0, 300.0, 50.0], &[0, 0, 1]);
        assert_eq!(
            charging_time_objective(&net, None, &params, &Placement::empty(3)).unwrap(),
            0.0
        );
        let per_node = |n: usize| {
            travel_time(&net, &params, n).unwrap()
                + queue_stats(arrival_rate(&net, None, &params, n), &params)
                    .unwrap()
                    .t_queue_hours()
                + charging_event_time(&params, 0.5).unwrap()
        };
        let single = charging_time_objective(&net, None, &params, &placement(3, &[1])).unwrap();
        assert_eq!(single, per_node(1));
        let pair = charging_time_objective(&net, None, &params, &placement(3, &[0, 2])).unwrap();
        assert!((pair - (per_node(0) + per_node(2))).abs() < 1e-12);
    }

    #[test]
    fn travel_distance_hand_value() {
        let nodes = vec![
            TrafficNode { id: 0, x: 0.0, y: 0.0, region: 0, flow: 1.0 },
            TrafficNode { id: 1, x: 10.0, y: 0.0, region: 0, flow: 1.0 },
        ];
        let od = vec![vec![0.0, 0.4], vec![1.0, 0.0]];
        let net = TrafficNetwork::new(nodes, None, None, Some(od), CoordSystem::Planar).unwrap();
        assert_eq!(travel_distance_objective(&net, &Placement::empty(2)).unwrap(), 0.0);
        let second = placement(2, &[1]);
        assert!((travel_distance_objective(&net, &second).unwrap() - 4.0).abs() < 1e-12);
        let full = travel_distance_objective(&net, &Placement::full(2)).unwrap();
        assert!((full - 14.0).abs() < 1e-12);
    }

    #[test]
    fn dn_objective_clustering_penalty() {
        let params = PlanningParams::default();
        let per_unit = 0.45 * 60.0 / 0.95;
        let same_region = line_network(&[50.0, 100.0], &[0, 0]);
        let both = Placement::full(2);
        let clustered = dn_objective(&same_region, &params, &both, DnSum::SelectedNodes).unwrap();
        assert!((clustered - 0.5 * 2.0 * per_unit * 1.5).abs() < 1e-9);
        assert!((clustered - 42.63).abs() < 0.01);

        let split_regions = line_network(&[50.0, 100.0], &[0, 1]);
        let split = dn_objective(&split_regions, &params, &both, DnSum::SelectedNodes).unwrap();
        assert!((split - 21.32).abs() < 0.01);
        assert!(split < clustered);

        assert_eq!(
            dn_objective(&same_region, &params, &Placement::empty(2), DnSum::SelectedNodes)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn dn_objective_all_nodes_reading() {
        let params = PlanningParams::default();
        let per_unit = 0.45 * 60.0 / 0.95;
        let net = line_network(&[50.0, 100.0, 100.0], &[0, 0, 1]);
        let only_first = placement(3, &[0]);
        let selected = dn_objective(&net, &params, &only_first, DnSum::SelectedNodes).unwrap();
        let all = dn_objective(&net, &params, &only_first, DnSum::AllNodes).unwrap();
        assert!((selected - 0.5 * per_unit * 0.5).abs() < 1e-9);
        assert!((all - 0.5 * per_unit * 1.5).abs() < 1e-9);
    }
}

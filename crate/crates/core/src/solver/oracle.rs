//! Exhaustive search for small instances.
//!
//! Scores every placement with `1..=k` stations through the direct
//! objective definitions and normalizes over the whole enumeration, so it
//! shares no code path with the solver's precomputed evaluator.

use crate::error::{Error, Result};
use crate::net::{FlowSeries, TrafficNetwork};
use crate::objectives::{
    charging_time_objective, dn_objective, flow_objective, travel_distance_objective, DnSum,
    ObjectiveBounds, Placement, RawObjectives, Weights,
};
use crate::params::PlanningParams;

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Placement,
    pub gamma: f64,
    /// Objective ranges over the full enumeration.
    pub bounds: ObjectiveBounds,
    pub evaluated: usize,
}

impl OracleResult {
    /// Aggregate of `raw` under this enumeration's normalization.
    pub fn gamma_of(&self, raw: &RawObjectives, w: &Weights) -> f64 {
        self.bounds.breakdown(raw, w).gamma
    }
}

/// `Σ_{j=1..k} C(n, j)`.
pub fn enumeration_count(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for j in 1..=k.min(n) {
        binom = binom * (n - j + 1) as u128 / j as u128;
        total += binom;
    }
    total
}

fn raw_objectives(
    net: &TrafficNetwork,
    series: Option<&FlowSeries>,
    params: &PlanningParams,
    dn_sum: DnSum,
    s: &Placement,
) -> Result<RawObjectives> {
    Ok(RawObjectives {
        j_flow: flow_objective(net, s)?,
        j_ch: charging_time_objective(net, series, params, s)?,
        j_dis: travel_distance_objective(net, s)?,
        j_dn: dn_objective(net, params, s, dn_sum)?,
    })
}

/// Global minimizer of the aggregate over all placements with `1..=k`
/// stations; ties go to the lexicographically smallest inclusion vector.
pub fn brute_force_oracle(
    net: &TrafficNetwork,
    series: Option<&FlowSeries>,
    params: &PlanningParams,
    dn_sum: DnSum,
    w: &Weights,
    k: usize,
    cap: u128,
) -> Result<OracleResult> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let n = net.len();
    let count = enumeration_count(n, k);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }

    let mut placements = Vec::with_capacity(count as usize);
    let mut raws = Vec::with_capacity(count as usize);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    // Depth-first walk over increasing index tuples.
    let mut next = 0usize;
    loop {
        if chosen.len() < k && next < n {
            chosen.push(next);
            next += 1;
            let s = Placement::from_indices(n, &chosen)?;
            raws.push(raw_objectives(net, series, params, dn_sum, &s)?);
            placements.push(s);
            continue;
        }
        match chosen.pop() {
            Some(last) => next = last + 1,
            None => break,
        }
    }

    let bounds = ObjectiveBounds::from_population(&raws)?;
    let (best, gamma) = placements
        .iter()
        .zip(&raws)
        .map(|(s, raw)| (s, bounds.breakdown(raw, w).gamma))
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)))
        .expect("at least one placement");
    Ok(OracleResult {
        best: best.clone(),
        gamma,
        bounds,
        evaluated: placements.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::synthesize_network;

    #[test]
    fn counts_small_enumerations() {
        assert_eq!(enumeration_count(5, 2), 15);
        assert_eq!(enumeration_count(20, 4), 20 + 190 + 1140 + 4845);
        assert_eq!(enumeration_count(3, 10), 7);
        let net = synthesize_network(5, 2, 0).unwrap();
        let out = brute_force_oracle(
            &net,
            None,
            &PlanningParams::default(),
            DnSum::SelectedNodes,
            &Weights::baseline(),
            2,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert_eq!(out.evaluated, 15);
    }

    #[test]
    fn flow_only_weights_pick_top_k() {
        let w = Weights::new(1.0, 0.0, 0.0, 0.0).unwrap();
        for seed in 0..5 {
            let net = synthesize_network(9, 3, seed).unwrap();
            let out = brute_force_oracle(
                &net,
                None,
                &PlanningParams::default(),
                DnSum::SelectedNodes,
                &w,
                3,
                DEFAULT_ENUMERATION_CAP,
            )
            .unwrap();
            let mut order: Vec<usize> = (0..9).collect();
            order.sort_by(|&a, &b| net.flow(b).total_cmp(&net.flow(a)));
            let mut top: Vec<usize> = order[..3].to_vec();
            top.sort_unstable();
            assert_eq!(out.best.selected().collect::<Vec<_>>(), top);
        }
    }

    #[test]
    fn full_budget_with_flow_weights_selects_everything() {
        let net = synthesize_network(6, 2, 3).unwrap();
        let w = Weights::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let out = brute_force_oracle(
            &net,
            None,
            &PlanningParams::default(),
            DnSum::SelectedNodes,
            &w,
            6,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert_eq!(out.best, Placement::full(6));
        assert_eq!(out.evaluated, 63);
    }

    #[test]
    fn cap_is_enforced() {
        let net = synthesize_network(30, 2, 0).unwrap();
        let err = brute_force_oracle(
            &net,
            None,
            &PlanningParams::default(),
            DnSum::SelectedNodes,
            &Weights::baseline(),
            10,
            1000,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { count, cap: 1000 } if count == enumeration_count(30, 10)));
    }
}

//! Named weight settings, single runs and multi-scenario sweeps.

use std::path::Path;

use chrono::Utc;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::net::{FlowSeries, TrafficNetwork};
use crate::objectives::{EvalOptions, Evaluator, Weights};
use crate::params::{ParamOverrides, PlanningParams};
use crate::record::{make_run_id, RunRecord};
use crate::solver::{solve_observed, CEConfig, NoObserver, SolveObserver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Accepts numbers or fraction strings such as `"0.5/3"`.
    #[serde(deserialize_with = "weights_from_exprs")]
    pub weights: Weights,
    #[serde(default, skip_serializing_if = "is_default")]
    pub overrides: ParamOverrides,
}

fn is_default(overrides: &ParamOverrides) -> bool {
    *overrides == ParamOverrides::default()
}

impl Scenario {
    pub fn new(name: impl Into<String>, weights: Weights) -> Self {
        Self {
            name: name.into(),
            weights,
            overrides: ParamOverrides::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightExpr {
    Number(f64),
    Text(String),
}

/// Parses `"0.25"` or `"a/b"`.
pub fn parse_weight(text: &str) -> Result<f64> {
    let bad = || Error::validation("weights", format!("cannot read weight {text:?}"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match text.split_once('/') {
        Some((num, den)) => {
            let den = number(den)?;
            if den == 0.0 {
                return Err(bad());
            }
            Ok(number(num)? / den)
        }
        None => number(text),
    }
}

fn weights_from_exprs<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Weights, D::Error> {
    let exprs = Vec::<WeightExpr>::deserialize(de)?;
    if exprs.len() != 4 {
        return Err(serde::de::Error::invalid_length(exprs.len(), &"four weights"));
    }
    let mut values = [0.0; 4];
    for (slot, expr) in values.iter_mut().zip(exprs) {
        *slot = match expr {
            WeightExpr::Number(v) => v,
            WeightExpr::Text(text) => parse_weight(&text).map_err(serde::de::Error::custom)?,
        };
    }
    Weights::try_from(values).map_err(serde::de::Error::custom)
}

/// The equal-weight baseline followed by the six favored-objective
/// settings: flow (0.5, 0.7), charging time (0.5, 0.7), DN load (0.5, 0.7).
pub fn paper_scenarios() -> Vec<Scenario> {
    let third = 0.5 / 3.0;
    let rows = [
        ("Baseline", [0.25, 0.25, 0.25, 0.25]),
        ("Scenario 1", [0.5, third, third, third]),
        ("Scenario 2", [0.7, 0.1, 0.1, 0.1]),
        ("Scenario 3", [third, 0.5, third, third]),
        ("Scenario 4", [0.1, 0.7, 0.1, 0.1]),
        ("Scenario 5", [third, third, third, 0.5]),
        ("Scenario 6", [0.1, 0.1, 0.1, 0.7]),
    ];
    rows.into_iter()
        .map(|(name, w)| Scenario::new(name, Weights::try_from(w).expect("preset weights are convex")))
        .collect()
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|err| Error::io(path, err))?;
    let scenarios: Vec<Scenario> =
        serde_json::from_str(&text).map_err(|err| Error::parse(path.display().to_string(), err))?;
    if scenarios.is_empty() {
        return Err(Error::validation("scenarios", "at least one scenario is required"));
    }
    Ok(scenarios)
}

/// Network, data and base parameters shared by the runs of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct RunInputs<'a> {
    pub net: &'a TrafficNetwork,
    pub series: Option<&'a FlowSeries>,
    pub params: &'a PlanningParams,
    pub options: EvalOptions,
    pub network_path: Option<&'a str>,
    pub flows_path: Option<&'a str>,
}

impl<'a> RunInputs<'a> {
    pub fn new(net: &'a TrafficNetwork, params: &'a PlanningParams) -> Self {
        Self {
            net,
            series: None,
            params,
            options: EvalOptions::default(),
            network_path: None,
            flows_path: None,
        }
    }
}

pub fn run_scenario(inputs: &RunInputs<'_>, scenario: &Scenario, cfg: &CEConfig) -> Result<RunRecord> {
    run_scenario_observed(inputs, scenario, cfg, &mut NoObserver)
}

/// Solves `scenario` and assembles its record. Nothing is written to disk.
pub fn run_scenario_observed(
    inputs: &RunInputs<'_>,
    scenario: &Scenario,
    cfg: &CEConfig,
    observer: &mut dyn SolveObserver,
) -> Result<RunRecord> {
    let started_at = Utc::now();
    let mut params = inputs.params.clone();
    params.apply(&scenario.overrides);
    let eval = Evaluator::new(inputs.net, inputs.series, &params, inputs.options)?;
    let outcome = solve_observed(&eval, &scenario.weights, cfg, observer)?;
    let metrics = MetricsReport::compute(&eval, &outcome.best)?.with_gamma(outcome.breakdown.gamma);
    let fingerprint = inputs.net.fingerprint();
    let finished_at = Utc::now();

    let content = serde_json::to_vec(&(&fingerprint, scenario, cfg, &params, &outcome.best))
        .expect("run content serializes");
    Ok(RunRecord {
        run_id: make_run_id(started_at, &content),
        network_fingerprint: fingerprint,
        network_path: inputs.network_path.map(str::to_string),
        flows_path: inputs.flows_path.map(str::to_string),
        scenario: scenario.clone(),
        ce: cfg.clone(),
        params,
        eval_options: inputs.options,
        placement: outcome.best,
        breakdown: outcome.breakdown,
        metrics,
        reference: outcome.reference,
        status: outcome.status,
        trace: outcome.trace,
        started_at,
        finished_at,
    })
}

#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub scenario: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<SweepFailure>,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<ComparisonRow> {
        self.records.iter().map(ComparisonRow::from_record).collect()
    }
}

/// Runs every scenario with the same CE settings and seed. A failing
/// scenario is recorded and the sweep moves on.
pub fn sweep(inputs: &RunInputs<'_>, scenarios: &[Scenario], cfg: &CEConfig) -> Result<SweepResult> {
    sweep_observed(inputs, scenarios, cfg, &mut NoObserver)
}

pub fn sweep_observed(
    inputs: &RunInputs<'_>,
    scenarios: &[Scenario],
    cfg: &CEConfig,
    observer: &mut dyn SolveObserver,
) -> Result<SweepResult> {
    if scenarios.is_empty() {
        return Err(Error::validation("scenarios", "at least one scenario is required"));
    }
    let mut out = SweepResult::default();
    for scenario in scenarios {
        match run_scenario_observed(inputs, scenario, cfg, observer) {
            Ok(record) => out.records.push(record),
            Err(err) => out.failures.push(SweepFailure {
                scenario: scenario.name.clone(),
                message: err.to_string(),
            }),
        }
    }
    Ok(out)
}

/// One row of the scenario comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub gamma_min: f64,
    pub n_cs: usize,
    pub flow_supported_pct: f64,
    pub avg_charging_time_min: Option<f64>,
    pub dn_demand_mwh: f64,
    pub avg_travel_dist_km: Option<f64>,
}

pub const COMPARISON_COLUMNS: [&str; 7] = [
    "scenario",
    "gamma_min",
    "n_cs",
    "flow_supported_pct",
    "avg_charging_time_min",
    "dn_demand_mwh",
    "avg_travel_dist_km",
];

impl ComparisonRow {
    pub fn from_record(record: &RunRecord) -> Self {
        let m = &record.metrics;
        Self {
            scenario: record.scenario.name.clone(),
            gamma_min: record.breakdown.gamma,
            n_cs: m.n_cs,
            flow_supported_pct: m.flow_supported_pct,
            avg_charging_time_min: m.avg_charging_time_min,
            dn_demand_mwh: m.dn_demand_mwh(),
            avg_travel_dist_km: m.avg_travel_dist_km,
        }
    }
}

/// CSV with a header row; absent values are empty cells.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("rows serialize");
    }
    if rows.is_empty() {
        writer.write_record(COMPARISON_COLUMNS).expect("header writes");
    }
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

/// Column-aligned text rendering; absent values print as `-`.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let opt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |v| format!("{v:.digits$}"));
    let mut cells: Vec<Vec<String>> = vec![COMPARISON_COLUMNS.iter().map(|c| c.to_string()).collect()];
    for row in rows {
        cells.push(vec![
            row.scenario.clone(),
            format!("{:.4}", row.gamma_min),
            row.n_cs.to_string(),
            format!("{:.2}", row.flow_supported_pct),
            opt(row.avg_charging_time_min, 1),
            format!("{:.1}", row.dn_demand_mwh),
            opt(row.avg_travel_dist_km, 1),
        ]);
    }
    let widths: Vec<usize> = (0..COMPARISON_COLUMNS.len())
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<width$}", width = widths[c])
                } else {
                    format!("{cell:>width$}", width = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{synthesize_network, CoordSystem, TrafficNode};
    use crate::objectives::Placement;

    #[test]
    fn weight_expressions() {
        assert_eq!(parse_weight("0.25").unwrap(), 0.25);
        assert_eq!(parse_weight("0.5/3").unwrap(), 0.5 / 3.0);
        assert!(parse_weight("1/0").is_err());
        assert!(parse_weight("a").is_err());
    }

    #[test]
    fn scenario_file_accepts_fractions() {
        let text = r#"[{"name": "S1", "weights": [0.5, "0.5/3", "0.5/3", "0.5/3"]},
                       {"name": "S2", "weights": [0.7, 0.1, 0.1, 0.1], "overrides": {"K": 10}}]"#;
        let scenarios: Vec<Scenario> = serde_json::from_str(text).unwrap();
        assert_eq!(scenarios[0].weights, paper_scenarios()[1].weights);
        assert_eq!(scenarios[1].overrides.budget, Some(10));
        assert!(serde_json::from_str::<Vec<Scenario>>(r#"[{"name": "x", "weights": [1, 1, 1, 1]}]"#).is_err());
        assert!(serde_json::from_str::<Vec<Scenario>>(r#"[{"name": "x", "weights": [1]}]"#).is_err());
    }

    #[test]
    fn presets_match_the_weight_table() {
        let presets = paper_scenarios();
        assert_eq!(presets.len(), 7);
        assert_eq!(presets[0].weights, Weights::baseline());
        assert_eq!(presets[2].weights.as_array(), [0.7, 0.1, 0.1, 0.1]);
        assert_eq!(presets[6].weights.as_array(), [0.1, 0.1, 0.1, 0.7]);
        assert_eq!(presets[5].weights.dn, 0.5);
        let text = serde_json::to_string(&presets).unwrap();
        let back: Vec<Scenario> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, presets);
    }

    #[test]
    fn two_node_single_station_run() {
        let nodes = vec![
            TrafficNode { id: 0, x: 0.0, y: 0.0, region: 0, flow: 10.0 },
            TrafficNode { id: 1, x: 3.0, y: 4.0, region: 0, flow: 30.0 },
        ];
        let net = TrafficNetwork::new(nodes, None, None, None, CoordSystem::Planar).unwrap();
        let params = PlanningParams { budget: 1, ..PlanningParams::default() };
        let scenario = Scenario::new("flow", Weights::new(1.0, 0.0, 0.0, 0.0).unwrap());
        let record = run_scenario(&RunInputs::new(&net, &params), &scenario, &CEConfig::default()).unwrap();
        assert_eq!(record.placement, Placement::from_indices(2, &[1]).unwrap());
        assert_eq!(record.metrics.n_cs, 1);
        assert!((record.metrics.flow_supported_pct - 75.0).abs() < 1e-12);
        assert_eq!(record.metrics.avg_travel_dist_km, Some(5.0));
        assert_eq!(record.metrics.gamma_min, Some(0.0));
    }

    #[test]
    fn sweep_rows_follow_scenarios() {
        let net = synthesize_network(16, 3, 2).unwrap();
        let params = PlanningParams { budget: 4, ..PlanningParams::default() };
        let inputs = RunInputs::new(&net, &params);
        let base = Scenario::new("a", Weights::baseline());
        let twin = Scenario::new("b", Weights::baseline());
        let cfg = CEConfig { seed: 3, ..CEConfig::default() };
        let result = sweep(&inputs, &[base.clone(), twin], &cfg).unwrap();
        let rows = result.rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].gamma_min, rows[1].gamma_min);
        assert_eq!(result.records[0].placement, result.records[1].placement);
        let single = run_scenario(&inputs, &base, &cfg).unwrap();
        assert_eq!(ComparisonRow::from_record(&single), rows[0]);
        assert!(sweep(&inputs, &[], &cfg).is_err());
    }

    #[test]
    fn failing_scenario_does_not_stop_the_sweep() {
        let net = synthesize_network(8, 2, 0).unwrap();
        let params = PlanningParams::default();
        let mut bad = Scenario::new("bad", Weights::baseline());
        bad.overrides.eta = Some(0.0);
        let good = Scenario::new("good", Weights::baseline());
        let result = sweep(&RunInputs::new(&net, &params), &[bad, good], &CEConfig::default()).unwrap();
        assert_eq!(result.records.len(), 1);
        assert_eq!(result.failures.len(), 1);
        assert_eq!(result.failures[0].scenario, "bad");
    }

    #[test]
    fn table_layout() {
        let rows = vec![ComparisonRow {
            scenario: "Baseline".into(),
            gamma_min: 0.248,
            n_cs: 21,
            flow_supported_pct: 42.91,
            avg_charging_time_min: Some(99.0),
            dn_demand_mwh: 8152.0,
            avg_travel_dist_km: None,
        }];
        let csv = comparison_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), COMPARISON_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "Baseline,0.248,21,42.91,99.0,8152.0,");
        assert_eq!(comparison_csv(&[]).trim(), COMPARISON_COLUMNS.join(","));
        let text = comparison_text(&rows);
        assert!(text.lines().next().unwrap().starts_with("scenario"));
        assert!(text.contains("42.91") && text.contains(" -"));
    }
}

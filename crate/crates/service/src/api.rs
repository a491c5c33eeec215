//! Request and response documents.

use chrono::{DateTime, Utc};
use csplan_core::metrics::MetricsReport;
use csplan_core::net::{CoordSystem, NetworkDocument};
use csplan_core::objectives::{EvalOptions, ObjectiveBreakdown, RawObjectives};
use csplan_core::solver::{CEConfig, IterationRecord};
use csplan_core::{ParamOverrides, Placement, RunRecord, Weights};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    /// A previously uploaded network, or `network` inline.
    #[serde(default)]
    pub network_id: Option<String>,
    #[serde(default)]
    pub network: Option<NetworkDocument>,
    /// Non-negative; scaled to sum to one.
    pub weights: Vec<f64>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub ce: CEConfig,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub eval: EvalOptions,
    #[serde(default)]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    /// A previously uploaded network, or `network` inline.
    #[serde(default)]
    pub network_id: Option<String>,
    #[serde(default)]
    pub network: Option<NetworkDocument>,
    pub placement: Placement,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub eval: EvalOptions,
}

/// Normalizes client weights, reporting problems against `weights`.
pub fn normalize_weights(raw: &[f64]) -> ApiResult<Weights> {
    let values: [f64; 4] = raw
        .try_into()
        .map_err(|_| ApiError::field("weights", format!("expected 4 weights, got {}", raw.len())))?;
    Weights::normalized(values).map_err(|err| ApiError::field("weights", err.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkCreated {
    pub id: String,
    pub n_nodes: usize,
    pub n_regions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub id: String,
    pub n_nodes: usize,
    pub n_regions: usize,
    pub coords: CoordSystem,
    pub total_flow: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveAccepted {
    pub run_id: String,
    pub network_id: String,
    /// Weights the run uses, after normalization.
    pub weights: Weights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Queued,
    Running,
    Done,
    Failed,
}

impl RunState {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunState::Done | RunState::Failed)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Progress {
    pub iteration: usize,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunStatus {
    pub run_id: String,
    pub state: RunState,
    pub progress: Progress,
    pub network_id: String,
    pub scenario: String,
    pub weights: Weights,
    pub submitted_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<RunRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub state: RunState,
    pub network_id: String,
    pub scenario: String,
    pub weights: Weights,
    pub submitted_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cs: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceResponse {
    pub run_id: String,
    pub state: RunState,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub network_id: String,
    pub raw: RawObjectives,
    /// True when a reference scale from an earlier run was available.
    pub normalized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_run_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<ObjectiveBreakdown>,
    pub metrics: MetricsReport,
}

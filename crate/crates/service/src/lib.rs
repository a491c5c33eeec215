//! HTTP/JSON planning service.
//!
//! Networks are uploaded once and addressed by content hash. Solves are
//! queued onto a small worker pool and polled; finished runs are immutable
//! and, when a runs directory is configured, written there in the same
//! format the command-line tool uses.

pub mod api;
pub mod error;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use tokio::sync::Semaphore;

use csplan_core::geojson::emit_geojson;
use csplan_core::metrics::MetricsReport;
use csplan_core::net::{load_network, NetworkDocument};
use csplan_core::objectives::{EvalOptions, Evaluator, ObjectiveBounds};
use csplan_core::record::make_run_id;
use csplan_core::scenario::{paper_scenarios, run_scenario_observed, RunInputs};
use csplan_core::solver::{CEConfig, IterationRecord, IterationView};
use csplan_core::{ParamOverrides, PlanningParams, RunRecord, Scenario, TrafficNetwork, Weights};

use api::*;
use error::{ApiError, ApiResult};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Where finished records are written and existing ones are read from.
    pub runs_dir: Option<PathBuf>,
    /// Concurrent solves.
    pub workers: usize,
    /// Directory of a static front end served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            runs_dir: None,
            workers: 1,
            static_dir: None,
        }
    }
}

struct RunEntry {
    run_id: String,
    network_id: String,
    scenario: Scenario,
    max_iters: usize,
    submitted_at: DateTime<Utc>,
    state: RunState,
    live: Vec<IterationRecord>,
    record: Option<Arc<RunRecord>>,
    error: Option<String>,
}

impl RunEntry {
    /// Moves to `next` if that is a forward transition.
    fn advance(&mut self, next: RunState) -> bool {
        let allowed = matches!(
            (self.state, next),
            (RunState::Queued, RunState::Running)
                | (RunState::Queued, RunState::Failed)
                | (RunState::Running, RunState::Done)
                | (RunState::Running, RunState::Failed)
        );
        if allowed {
            self.state = next;
        }
        allowed
    }

    fn progress(&self) -> Progress {
        let iteration = match &self.record {
            Some(record) => record.trace.len(),
            None => self.live.last().map_or(0, |r| r.iteration),
        };
        Progress {
            iteration,
            max_iters: self.max_iters,
        }
    }

    fn status(&self, probs: bool) -> RunStatus {
        RunStatus {
            run_id: self.run_id.clone(),
            state: self.state,
            progress: self.progress(),
            network_id: self.network_id.clone(),
            scenario: self.scenario.name.clone(),
            weights: self.scenario.weights,
            submitted_at: self.submitted_at,
            error: self.error.clone(),
            result: self.record.as_deref().map(|record| {
                let mut record = record.clone();
                if !probs {
                    record.trace = record.trace.without_probs();
                }
                record
            }),
        }
    }

    fn summary(&self) -> RunSummary {
        RunSummary {
            run_id: self.run_id.clone(),
            state: self.state,
            network_id: self.network_id.clone(),
            scenario: self.scenario.name.clone(),
            weights: self.scenario.weights,
            submitted_at: self.submitted_at,
            gamma_min: self.record.as_ref().map(|r| r.breakdown.gamma),
            n_cs: self.record.as_ref().map(|r| r.metrics.n_cs),
        }
    }
}

struct Reference {
    run_id: String,
    weights: Weights,
    bounds: ObjectiveBounds,
    finished_at: DateTime<Utc>,
}

struct Inner {
    networks: RwLock<BTreeMap<String, Arc<TrafficNetwork>>>,
    runs: RwLock<BTreeMap<String, RunEntry>>,
    references: RwLock<HashMap<String, Reference>>,
    workers: Arc<Semaphore>,
    runs_dir: Option<PathBuf>,
    counter: AtomicU64,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                networks: RwLock::default(),
                runs: RwLock::default(),
                references: RwLock::default(),
                workers: Arc::new(Semaphore::new(config.workers.max(1))),
                runs_dir: config.runs_dir.clone(),
                counter: AtomicU64::new(0),
            }),
        }
    }

    /// Registers the records already present in the runs directory, and
    /// the networks they name when those files still exist and match.
    pub fn load_existing_runs(&self) -> csplan_core::Result<usize> {
        let Some(dir) = &self.inner.runs_dir else {
            return Ok(0);
        };
        let records = RunRecord::load_dir(dir)?;
        let count = records.len();
        for record in records {
            if let Some(path) = &record.network_path {
                if let Ok(net) = load_network(path, false) {
                    if net.fingerprint() == record.network_fingerprint {
                        self.add_network(net);
                    }
                }
            }
            self.finish(record, None);
        }
        Ok(count)
    }

    /// Stores `net` and returns its id.
    pub fn add_network(&self, net: TrafficNetwork) -> String {
        let id = net.fingerprint();
        self.inner
            .networks
            .write()
            .unwrap()
            .entry(id.clone())
            .or_insert_with(|| Arc::new(net));
        id
    }

    fn network(&self, id: &str) -> ApiResult<Arc<TrafficNetwork>> {
        self.inner
            .networks
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("network", id))
    }

    fn resolve_network(
        &self,
        id: Option<&str>,
        doc: Option<NetworkDocument>,
    ) -> ApiResult<(String, Arc<TrafficNetwork>)> {
        match (id, doc) {
            (Some(_), Some(_)) => Err(ApiError::field(
                "network",
                "give either network_id or network, not both",
            )),
            (Some(id), None) => Ok((id.to_string(), self.network(id)?)),
            (None, Some(doc)) => {
                let id = self.add_network(doc.into_network()?);
                let net = self.network(&id)?;
                Ok((id, net))
            }
            (None, None) => Err(ApiError::field("network_id", "a network is required")),
        }
    }

    /// Inserts a finished record as a completed run (or replaces a running
    /// entry's result) and updates the network's reference scale.
    fn finish(&self, record: RunRecord, keep_id: Option<&str>) {
        let run_id = keep_id.map_or_else(|| record.run_id.clone(), str::to_string);
        {
            let mut refs = self.inner.references.write().unwrap();
            let newer = refs
                .get(&record.network_fingerprint)
                .is_none_or(|r| r.finished_at <= record.finished_at);
            if newer {
                refs.insert(
                    record.network_fingerprint.clone(),
                    Reference {
                        run_id: run_id.clone(),
                        weights: record.scenario.weights,
                        bounds: record.reference,
                        finished_at: record.finished_at,
                    },
                );
            }
        }
        let mut runs = self.inner.runs.write().unwrap();
        let entry = runs.entry(run_id.clone()).or_insert_with(|| RunEntry {
            run_id: run_id.clone(),
            network_id: record.network_fingerprint.clone(),
            scenario: record.scenario.clone(),
            max_iters: record.ce.max_iters,
            submitted_at: record.started_at,
            state: RunState::Running,
            live: Vec::new(),
            record: None,
            error: None,
        });
        if entry.advance(RunState::Done) {
            entry.live.clear();
            entry.record = Some(Arc::new(record));
        }
    }

    fn fail(&self, run_id: &str, message: String) {
        if let Some(entry) = self.inner.runs.write().unwrap().get_mut(run_id) {
            if entry.advance(RunState::Failed) {
                entry.error = Some(message);
            }
        }
    }

    fn set_state(&self, run_id: &str, state: RunState) {
        if let Some(entry) = self.inner.runs.write().unwrap().get_mut(run_id) {
            entry.advance(state);
        }
    }

    fn push_iteration(&self, run_id: &str, record: &IterationRecord) {
        if let Some(entry) = self.inner.runs.write().unwrap().get_mut(run_id) {
            entry.live.push(record.clone());
        }
    }

    fn with_run<T>(&self, id: &str, f: impl FnOnce(&RunEntry) -> ApiResult<T>) -> ApiResult<T> {
        let runs = self.inner.runs.read().unwrap();
        let entry = runs.get(id).ok_or_else(|| ApiError::not_found("run", id))?;
        f(entry)
    }

    /// Validates `req`, queues the solve and returns immediately.
    pub fn submit(&self, req: SolveRequest) -> ApiResult<SolveAccepted> {
        let weights = normalize_weights(&req.weights)?;
        if req.budget == Some(0) || req.params.budget == Some(0) {
            return Err(ApiError::field("budget", "budget must be at least 1"));
        }
        req.ce.validate()?;
        let mut overrides: ParamOverrides = req.params.clone();
        if req.budget.is_some() {
            overrides.budget = req.budget;
        }
        let scenario = Scenario {
            name: req.scenario.clone().unwrap_or_else(|| "custom".to_string()),
            weights,
            overrides,
        };
        let mut params = PlanningParams::default();
        params.apply(&scenario.overrides);
        params.validate()?;
        let (network_id, net) = self.resolve_network(req.network_id.as_deref(), req.network)?;
        // Catches series/length problems before queueing.
        Evaluator::new(&net, None, &params, req.eval)?;

        let submitted_at = Utc::now();
        let salt = self.inner.counter.fetch_add(1, Ordering::Relaxed);
        let run_id = make_run_id(
            submitted_at,
            format!("{network_id}/{salt}/{}", scenario.name).as_bytes(),
        );
        self.inner.runs.write().unwrap().insert(
            run_id.clone(),
            RunEntry {
                run_id: run_id.clone(),
                network_id: network_id.clone(),
                scenario: scenario.clone(),
                max_iters: req.ce.max_iters,
                submitted_at,
                state: RunState::Queued,
                live: Vec::new(),
                record: None,
                error: None,
            },
        );

        let state = self.clone();
        let job = Job {
            run_id: run_id.clone(),
            net,
            scenario,
            ce: req.ce,
            eval: req.eval,
        };
        tokio::spawn(async move { state.execute(job).await });
        Ok(SolveAccepted {
            run_id,
            network_id,
            weights,
        })
    }

    async fn execute(self, job: Job) {
        let Ok(_permit) = self.inner.workers.clone().acquire_owned().await else {
            self.fail(&job.run_id, "worker pool closed".into());
            return;
        };
        self.set_state(&job.run_id, RunState::Running);
        let state = self.clone();
        let run_id = job.run_id.clone();
        let outcome = tokio::task::spawn_blocking(move || state.solve_blocking(&job)).await;
        match outcome {
            Ok(Ok(record)) => self.finish(record, Some(&run_id)),
            Ok(Err(message)) => self.fail(&run_id, message),
            Err(err) => self.fail(&run_id, format!("solver task failed: {err}")),
        }
    }

    fn solve_blocking(&self, job: &Job) -> Result<RunRecord, String> {
        let base = PlanningParams::default();
        let inputs = RunInputs {
            options: job.eval,
            ..RunInputs::new(&job.net, &base)
        };
        let mut observer = |view: &IterationView<'_>| self.push_iteration(&job.run_id, view.record);
        let mut record = run_scenario_observed(&inputs, &job.scenario, &job.ce, &mut observer)
            .map_err(|err| err.to_string())?;
        record.run_id = job.run_id.clone();
        if let Some(dir) = &self.inner.runs_dir {
            record
                .save(dir)
                .map_err(|err| format!("could not store the run record: {err}"))?;
        }
        Ok(record)
    }

    pub fn evaluate(&self, req: EvaluateRequest) -> ApiResult<EvaluateResponse> {
        let (network_id, net) = self.resolve_network(req.network_id.as_deref(), req.network)?;
        let mut params = PlanningParams::default();
        params.apply(&req.params);
        if let Some(budget) = req.budget {
            params.budget = budget;
        }
        let eval = Evaluator::new(&net, None, &params, req.eval)?;
        let raw = eval.raw(&req.placement)?;
        let mut metrics = MetricsReport::compute(&eval, &req.placement)?;

        let refs = self.inner.references.read().unwrap();
        let reference = refs.get(&network_id);
        let weights = match (&req.weights, reference) {
            (Some(raw), _) => Some(normalize_weights(raw)?),
            (None, Some(r)) => Some(r.weights),
            (None, None) => None,
        };
        let breakdown = match (reference, weights) {
            (Some(r), Some(w)) => Some(r.bounds.breakdown(&raw, &w)),
            _ => None,
        };
        if let Some(b) = &breakdown {
            metrics = metrics.with_gamma(b.gamma);
        }
        Ok(EvaluateResponse {
            network_id,
            raw,
            normalized: breakdown.is_some(),
            reference_run_id: breakdown.and(reference.map(|r| r.run_id.clone())),
            breakdown,
            metrics,
        })
    }
}

struct Job {
    run_id: String,
    net: Arc<TrafficNetwork>,
    scenario: Scenario,
    ce: CEConfig,
    eval: EvalOptions,
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|err| ApiError::bad_request(format!("invalid request body: {err}")))
}

fn flag(query: &HashMap<String, String>, name: &str) -> bool {
    query
        .get(name)
        .is_some_and(|v| matches!(v.as_str(), "" | "1" | "true" | "yes"))
}

async fn post_network(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let doc: NetworkDocument = parse_body(&body)?;
    let net = doc.into_network()?;
    let created = NetworkCreated {
        n_nodes: net.len(),
        n_regions: net.n_regions(),
        id: state.add_network(net),
    };
    Ok((StatusCode::CREATED, Json(created)))
}

async fn list_networks(State(state): State<AppState>) -> Json<Vec<NetworkSummary>> {
    let networks = state.inner.networks.read().unwrap();
    Json(
        networks
            .iter()
            .map(|(id, net)| NetworkSummary {
                id: id.clone(),
                n_nodes: net.len(),
                n_regions: net.n_regions(),
                coords: net.coords(),
                total_flow: net.total_flow(),
            })
            .collect(),
    )
}

async fn get_network(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<NetworkDocument>> {
    let net = state.network(&id)?;
    Ok(Json(net.to_document(flag(&query, "dist"))))
}

async fn post_solve(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: SolveRequest = parse_body(&body)?;
    Ok((StatusCode::ACCEPTED, Json(state.submit(req)?)))
}

async fn list_runs(State(state): State<AppState>) -> Json<Vec<RunSummary>> {
    let runs = state.inner.runs.read().unwrap();
    let mut out: Vec<RunSummary> = runs.values().map(RunEntry::summary).collect();
    out.sort_by(|a, b| a.submitted_at.cmp(&b.submitted_at).then(a.run_id.cmp(&b.run_id)));
    Json(out)
}

async fn get_run(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<RunStatus>> {
    state.with_run(&id, |entry| Ok(Json(entry.status(flag(&query, "probs")))))
}

async fn get_trace(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<TraceResponse>> {
    let probs = flag(&query, "probs");
    state.with_run(&id, |entry| {
        let iterations = match entry.state {
            RunState::Queued => return Err(ApiError::conflict(format!("run {id} has not started"))),
            RunState::Failed => {
                let reason = entry.error.as_deref().unwrap_or("unknown failure");
                return Err(ApiError::conflict(format!("run {id} failed: {reason}")));
            }
            RunState::Running => entry.live.clone(),
            RunState::Done => entry
                .record
                .as_ref()
                .map(|r| r.trace.records.clone())
                .unwrap_or_default(),
        };
        let iterations = if probs {
            iterations
        } else {
            iterations
                .into_iter()
                .map(|mut r| {
                    r.probs = Vec::new();
                    r
                })
                .collect()
        };
        Ok(Json(TraceResponse {
            run_id: id.clone(),
            state: entry.state,
            iterations,
        }))
    })
}

async fn get_geojson(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let (network_id, placement) = state.with_run(&id, |entry| match &entry.record {
        Some(record) => Ok((entry.network_id.clone(), record.placement.clone())),
        None => Err(ApiError::conflict(format!("run {id} has no placement yet"))),
    })?;
    let net = state.network(&network_id)?;
    Ok(Json(emit_geojson(&net, &placement)?))
}

async fn post_evaluate(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<EvaluateResponse>> {
    let req: EvaluateRequest = parse_body(&body)?;
    Ok(Json(state.evaluate(req)?))
}

async fn list_scenarios() -> Json<Vec<Scenario>> {
    Json(paper_scenarios())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint")
}

/// All `/api/v1` routes, plus the static front end when configured.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/networks", post(post_network).get(list_networks))
        .route("/networks/{id}", get(get_network))
        .route("/solve", post(post_solve))
        .route("/runs", get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/trace", get(get_trace))
        .route("/runs/{id}/geojson", get(get_geojson))
        .route("/evaluate", post(post_evaluate))
        .route("/scenarios", get(list_scenarios))
        .fallback(not_found)
        .with_state(state);
    let app = Router::new().nest("/api/v1", api);
    match static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(&config);
    match state.load_existing_runs() {
        Ok(0) => {}
        Ok(count) => tracing::info!(count, "loaded existing run records"),
        Err(err) => tracing::warn!(%err, "could not read the runs directory"),
    }
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "plan service listening");
    axum::serve(listener, app).await
}

//! HTTP planning service.
//!
//! Scenarios and finished solutions are kept as files under the data
//! directory (`scenarios/<id>.json`, `solutions/<job>.json`) in the same
//! formats the command line uses. Solves run as background jobs that clients
//! poll.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engines::{solve, EngineConfig, EngineKind};
use crate::error::{Error, Result};
use crate::report::{SolutionFile, SCHEMA_VERSION};
use crate::scenario::io::{self, ScenarioFile};
use crate::scenario::{cases, Diagnostic, Scenario, Severity};

pub const DEFAULT_JOB_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Infeasible,
    Failed,
    Timeout,
}

impl JobStatus {
    fn is_terminal(self) -> bool {
        !matches!(self, JobStatus::Queued | JobStatus::Running)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    #[serde(default)]
    pub engine: Option<EngineKind>,
    #[serde(default)]
    pub case: Option<u8>,
    #[serde(default)]
    pub horizon: Option<u32>,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub omega: Option<u32>,
    #[serde(default)]
    pub required_ped: Option<f64>,
    #[serde(default)]
    pub forced_knockouts: Vec<u32>,
    #[serde(default)]
    pub single_agent: Option<bool>,
}

impl SolveRequest {
    fn apply(&self, base: &Scenario) -> Result<Scenario> {
        let mut sc = match self.case {
            Some(c) => cases::apply_case(base, c, self.horizon)?,
            None => {
                let mut sc = base.clone();
                if let Some(t) = self.horizon {
                    sc.horizon = t;
                }
                sc
            }
        };
        if let Some(b) = self.budget {
            sc.budget = b;
        }
        if let Some(o) = self.omega {
            sc.omega = o;
        }
        if let Some(q) = self.required_ped {
            sc.required_ped = Some(q);
        }
        if let Some(s) = self.single_agent {
            sc.single_agent = s;
        }
        if !self.forced_knockouts.is_empty() {
            sc = sc.with_forced_knockouts(self.forced_knockouts.iter().copied());
        }
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub scenario_id: String,
    pub request: SolveRequest,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SolutionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct StoredScenario {
    scenario: Scenario,
    diagnostics: Vec<Diagnostic>,
    validated: bool,
}

pub struct AppState {
    data: PathBuf,
    scenarios: RwLock<HashMap<String, Arc<StoredScenario>>>,
    jobs: RwLock<HashMap<String, Job>>,
    job_timeout: Duration,
}

/// Writes through a temporary file in the same directory so readers never
/// see a partial file.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn stored(scenario: Scenario) -> StoredScenario {
    let diagnostics = scenario.diagnostics();
    let validated = !diagnostics.iter().any(|d| d.severity == Severity::Error);
    StoredScenario {
        scenario,
        diagnostics,
        validated,
    }
}

impl AppState {
    /// Opens (creating if needed) the data directory and loads what it holds.
    pub fn open(data: impl Into<PathBuf>, job_timeout: Duration) -> Result<Arc<AppState>> {
        let data = data.into();
        let mut scenarios = HashMap::new();
        let mut jobs = HashMap::new();
        for sub in ["scenarios", "solutions"] {
            let dir = data.join(sub);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        for entry in std::fs::read_dir(data.join("scenarios")).map_err(|e| Error::io(&data, e))? {
            let path = entry.map_err(|e| Error::io(&data, e))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                let id = path.file_stem().unwrap().to_string_lossy().into_owned();
                match io::load_scenario(&path) {
                    Ok(sc) => {
                        scenarios.insert(id, Arc::new(stored(sc)));
                    }
                    Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
                }
            }
        }
        for entry in std::fs::read_dir(data.join("solutions")).map_err(|e| Error::io(&data, e))? {
            let path = entry.map_err(|e| Error::io(&data, e))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                match serde_json::from_str::<Job>(&text) {
                    Ok(job) => {
                        jobs.insert(job.id.clone(), job);
                    }
                    Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
                }
            }
        }
        Ok(Arc::new(AppState {
            data,
            scenarios: RwLock::new(scenarios),
            jobs: RwLock::new(jobs),
            job_timeout,
        }))
    }

    fn scenario(&self, id: &str) -> Option<Arc<StoredScenario>> {
        self.scenarios.read().unwrap().get(id).cloned()
    }

    fn set_job(&self, job: Job) {
        let mut jobs = self.jobs.write().unwrap();
        if jobs.get(&job.id).is_some_and(|j| j.status.is_terminal()) {
            return;
        }
        if job.status.is_terminal() {
            let path = self.data.join("solutions").join(format!("{}.json", job.id));
            if let Err(e) = write_atomic(&path, &serde_json::to_string_pretty(&job).expect("job serializes")) {
                tracing::error!("could not persist job {}: {e}", job.id);
            }
        }
        jobs.insert(job.id.clone(), job);
    }
}

fn reply(status: StatusCode, mut body: Value) -> Response {
    body["schema_version"] = SCHEMA_VERSION.into();
    (status, Json(body)).into_response()
}

fn error_reply(status: StatusCode, message: impl Into<String>, diagnostics: Vec<Diagnostic>) -> Response {
    reply(
        status,
        json!({ "error": { "message": message.into(), "diagnostics": diagnostics } }),
    )
}

fn parse_error_diagnostics(e: &Error) -> Vec<Diagnostic> {
    let field = match e {
        Error::Parse { field, .. } => field.clone(),
        Error::InvalidScenario { field, .. } => field.clone(),
        Error::UnsupportedVersion { .. } => "version".into(),
        _ => String::new(),
    };
    vec![Diagnostic {
        field,
        message: e.to_string(),
        severity: Severity::Error,
    }]
}

fn scenario_body(id: &str, s: &StoredScenario) -> Value {
    json!({
        "id": id,
        "validated": s.validated,
        "diagnostics": s.diagnostics,
        "scenario": ScenarioFile::from_scenario(&s.scenario),
    })
}

async fn create_scenario(State(st): State<Arc<AppState>>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(_) => return error_reply(StatusCode::UNPROCESSABLE_ENTITY, "body is not UTF-8", Vec::new()),
    };
    let sc = match io::from_json(text) {
        Ok(sc) => sc,
        Err(e) => {
            let d = parse_error_diagnostics(&e);
            return error_reply(StatusCode::UNPROCESSABLE_ENTITY, e.to_string(), d);
        }
    };
    let id = uuid::Uuid::new_v4().to_string();
    let path = st.data.join("scenarios").join(format!("{id}.json"));
    if let Err(e) = write_atomic(&path, &io::to_json(&sc)) {
        return error_reply(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), Vec::new());
    }
    let entry = Arc::new(stored(sc));
    st.scenarios.write().unwrap().insert(id.clone(), entry.clone());
    let status = if entry.validated {
        StatusCode::CREATED
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    reply(status, scenario_body(&id, &entry))
}

async fn get_scenario(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    match st.scenario(&id) {
        Some(s) => reply(StatusCode::OK, scenario_body(&id, &s)),
        None => error_reply(StatusCode::NOT_FOUND, format!("unknown scenario {id}"), Vec::new()),
    }
}

async fn get_tables(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(s) = st.scenario(&id) else {
        return error_reply(StatusCode::NOT_FOUND, format!("unknown scenario {id}"), Vec::new());
    };
    if !s.validated {
        return error_reply(StatusCode::CONFLICT, "scenario has validation errors", s.diagnostics.clone());
    }
    let sc = &s.scenario;
    let tb = sc.derive_tables();
    let positions: Vec<[f64; 2]> = (1..=sc.n() as u32).map(|v| {
        let (x, y) = sc.mesh.position(v);
        [x, y]
    }).collect();
    reply(
        StatusCode::OK,
        json!({
            "id": id,
            "n": sc.n(),
            "target": sc.target(),
            "omega": sc.omega,
            "positions": positions,
            "coverage_count": &tb.cover_count[1..],
            "multi_covered": tb.multi_covered,
            "evade": &tb.evade[1..],
            "evade_confused": &tb.evade_confused[1..],
        }),
    )
}

fn job_status_for(e: &Error) -> JobStatus {
    match e {
        Error::Infeasible | Error::InfeasibleByReduction | Error::HeuristicInfeasible => JobStatus::Infeasible,
        Error::ResourceLimit { .. } => JobStatus::Timeout,
        _ => JobStatus::Failed,
    }
}

async fn run_job(st: Arc<AppState>, mut job: Job, sc: Scenario) {
    job.status = JobStatus::Running;
    st.set_job(job.clone());
    let engine = job.request.engine.unwrap_or(EngineKind::Exact);
    let cfg = EngineConfig {
        time_limit: Some(st.job_timeout),
        solver_timeout: st.job_timeout,
        ..EngineConfig::default()
    };
    let case = job.request.case;
    let work = tokio::task::spawn_blocking(move || solve(&sc, engine, &cfg).map(|sol| SolutionFile::new(&sc, case, sol)));
    match tokio::time::timeout(st.job_timeout + Duration::from_secs(1), work).await {
        Ok(Ok(Ok(file))) => {
            job.status = JobStatus::Done;
            job.result = Some(file);
        }
        Ok(Ok(Err(e))) => {
            job.status = job_status_for(&e);
            job.error = Some(e.to_string());
        }
        Ok(Err(join)) => {
            job.status = JobStatus::Failed;
            job.error = Some(format!("solver task failed: {join}"));
        }
        Err(_) => {
            job.status = JobStatus::Timeout;
            job.error = Some(format!("job exceeded {} s", st.job_timeout.as_secs()));
        }
    }
    st.set_job(job);
}

async fn start_solve(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> Response {
    let Some(s) = st.scenario(&id) else {
        return error_reply(StatusCode::NOT_FOUND, format!("unknown scenario {id}"), Vec::new());
    };
    let req: SolveRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SolveRequest::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => {
                let d = vec![Diagnostic {
                    field: String::new(),
                    message: e.to_string(),
                    severity: Severity::Error,
                }];
                return error_reply(StatusCode::UNPROCESSABLE_ENTITY, format!("malformed solve request: {e}"), d);
            }
        }
    };
    if !s.validated {
        return error_reply(StatusCode::CONFLICT, "scenario has validation errors", s.diagnostics.clone());
    }
    let sc = match req.apply(&s.scenario) {
        Ok(sc) => sc,
        Err(e) => {
            let d = parse_error_diagnostics(&e);
            return error_reply(StatusCode::UNPROCESSABLE_ENTITY, e.to_string(), d);
        }
    };
    if let Err(e) = sc.validate() {
        let d = sc.diagnostics().into_iter().filter(|d| d.severity == Severity::Error).collect();
        return error_reply(StatusCode::UNPROCESSABLE_ENTITY, e.to_string(), d);
    }
    let job = Job {
        id: uuid::Uuid::new_v4().to_string(),
        scenario_id: id,
        request: req,
        status: JobStatus::Queued,
        result: None,
        error: None,
    };
    st.set_job(job.clone());
    let job_id = job.id.clone();
    tokio::spawn(run_job(st.clone(), job, sc));
    reply(StatusCode::ACCEPTED, json!({ "job_id": job_id, "status": JobStatus::Queued }))
}

async fn get_job(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    let job = st.jobs.read().unwrap().get(&id).cloned();
    match job {
        Some(j) => reply(StatusCode::OK, serde_json::to_value(j).expect("job serializes")),
        None => error_reply(StatusCode::NOT_FOUND, format!("unknown job {id}"), Vec::new()),
    }
}

async fn fallback() -> Response {
    error_reply(StatusCode::NOT_FOUND, "no such route", Vec::new())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/scenarios", post(create_scenario))
        .route("/api/scenarios/{id}", get(get_scenario))
        .route("/api/scenarios/{id}/solve", post(start_solve))
        .route("/api/scenarios/{id}/tables", get(get_tables))
        .route("/api/jobs/{id}", get(get_job))
        .fallback(fallback)
        .with_state(state)
}

pub async fn serve(addr: &str, data: &Path) -> Result<()> {
    let state = AppState::open(data, DEFAULT_JOB_TIMEOUT)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Config(format!("cannot bind {addr}: {e}")))?;
    tracing::info!("listening on {addr}, data in {}", data.display());
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::Config(format!("server error: {e}")))
}

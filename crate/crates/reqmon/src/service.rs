//! HTTP/JSON service over a directory of project files.
//!
//! Mutations of one project run one at a time behind a per-project lock;
//! reads load the file without locking, which is safe because saves replace
//! the file atomically. Monitor sessions live in memory.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;

use reqmon_core::analysis::AnalysisReport;
use reqmon_core::monitor::{group_frames, MonitorError, MonitorSession, ScoreRecord, ThresholdConfig, VerdictRecord};
use reqmon_core::project::{is_valid_project_name, Project};
use reqmon_core::reqstore::Requirement;
use reqmon_core::testgen::TestSuite;

use crate::error::{AppError, AppResult, Kind};
use crate::workflow::{self, *};

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8472;

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.kind.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if self.kind == Kind::Internal {
            log::error!("{}", self.message);
        }
        let body = json!({"error": self.message, "diagnostics": self.diagnostics});
        (status, Json(body)).into_response()
    }
}

/// Request bodies that fail to decode become 422 replies in the usual error
/// shape.
fn body<T>(b: Result<Json<T>, JsonRejection>) -> AppResult<T> {
    b.map(|Json(v)| v).map_err(|e| AppError::invalid(e.body_text()))
}

struct LiveMonitor {
    id: String,
    project: String,
    session: MonitorSession,
    requirements: Vec<String>,
    last_frame: Option<u64>,
    history: Vec<VerdictRecord>,
}

pub struct AppState {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    monitors: Mutex<HashMap<String, Arc<tokio::sync::Mutex<LiveMonitor>>>>,
    next_monitor: AtomicU64,
}

impl AppState {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            locks: Mutex::new(HashMap::new()),
            monitors: Mutex::new(HashMap::new()),
            next_monitor: AtomicU64::new(1),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, name: &str) -> AppResult<PathBuf> {
        if !is_valid_project_name(name) {
            return Err(AppError::not_found(format!("no project {name}")));
        }
        Ok(self.dir.join(format!("{name}.json")))
    }

    fn load(&self, name: &str) -> AppResult<Project> {
        let path = self.path_of(name)?;
        if !path.exists() {
            return Err(AppError::not_found(format!("no project {name}")));
        }
        Ok(Project::load(&path)?)
    }

    fn lock_for(&self, name: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(name.to_string()).or_default().clone()
    }

    fn monitor(&self, id: &str) -> AppResult<Arc<tokio::sync::Mutex<LiveMonitor>>> {
        self.monitors
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| AppError::not_found(format!("no monitor session {id}")))
    }
}

type Shared = Arc<AppState>;

/// Loads, mutates and saves one project under its lock. The closure runs
/// on the blocking pool since authoring may wait on a remote provider.
async fn mutate<T, F>(st: &Shared, name: &str, f: F) -> AppResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut Project) -> AppResult<T> + Send + 'static,
{
    let lock = st.lock_for(name);
    let _guard = lock.lock().await;
    let st = st.clone();
    let name = name.to_string();
    tokio::task::spawn_blocking(move || {
        let mut p = st.load(&name)?;
        let out = f(&mut p)?;
        p.save(&st.path_of(&name)?)?;
        Ok(out)
    })
    .await
    .map_err(|e| AppError::new(Kind::Internal, e.to_string()))?
}

async fn read<T, F>(st: &Shared, name: &str, f: F) -> AppResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Project) -> AppResult<T> + Send + 'static,
{
    let st = st.clone();
    let name = name.to_string();
    tokio::task::spawn_blocking(move || f(&st.load(&name)?))
        .await
        .map_err(|e| AppError::new(Kind::Internal, e.to_string()))?
}

#[derive(Serialize)]
struct ProjectSummary {
    name: String,
    requirements: usize,
}

async fn list_projects(State(st): State<Shared>) -> AppResult<Json<Vec<ProjectSummary>>> {
    let mut out = Vec::new();
    let entries = match std::fs::read_dir(&st.dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Json(out)),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let path = entry?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if path.extension().is_some_and(|e| e == "json") && is_valid_project_name(stem) {
            if let Ok(p) = Project::load(&path) {
                out.push(ProjectSummary {
                    name: p.name,
                    requirements: p.requirements.len(),
                });
            }
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Json(out))
}

async fn create_project(
    State(st): State<Shared>,
    b: Result<Json<NewProject>, JsonRejection>,
) -> AppResult<(StatusCode, Json<Project>)> {
    let req = body(b)?;
    let p = workflow::create_project(req)?;
    let lock = st.lock_for(&p.name);
    let _guard = lock.lock().await;
    let path = st.path_of(&p.name)?;
    if path.exists() {
        return Err(AppError::conflict(format!("project {} already exists", p.name)));
    }
    std::fs::create_dir_all(&st.dir)?;
    p.save(&path)?;
    Ok((StatusCode::CREATED, Json(p)))
}

async fn get_project(State(st): State<Shared>, UrlPath(p): UrlPath<String>) -> AppResult<Json<Project>> {
    read(&st, &p, |p| Ok(p.clone())).await.map(Json)
}

async fn add_requirement(
    State(st): State<Shared>,
    UrlPath(p): UrlPath<String>,
    b: Result<Json<NewRequirement>, JsonRejection>,
) -> AppResult<(StatusCode, Json<Requirement>)> {
    let req = body(b)?;
    let r = mutate(&st, &p, move |p| Ok(p.add_requirement(&req.id, &req.text)?.clone())).await?;
    Ok((StatusCode::CREATED, Json(r)))
}

async fn author(
    State(st): State<Shared>,
    UrlPath((p, r)): UrlPath<(String, String)>,
    b: Result<Json<AuthorRequest>, JsonRejection>,
) -> AppResult<Json<AuthorView>> {
    let req = match b {
        Err(JsonRejection::MissingJsonContentType(_)) => AuthorRequest::default(),
        other => body(other)?,
    };
    mutate(&st, &p, move |p| workflow::author(p, &r, req)).await.map(Json)
}

async fn candidates(
    State(st): State<Shared>,
    UrlPath((p, r)): UrlPath<(String, String)>,
) -> AppResult<Json<CandidatesView>> {
    read(&st, &p, move |p| candidates_view(p, &r)).await.map(Json)
}

async fn validation_next(
    State(st): State<Shared>,
    UrlPath((p, r)): UrlPath<(String, String)>,
) -> AppResult<Json<QuestionView>> {
    mutate(&st, &p, move |p| next_question(p, &r)).await.map(Json)
}

async fn validation_label(
    State(st): State<Shared>,
    UrlPath((p, r)): UrlPath<(String, String)>,
    b: Result<Json<LabelRequest>, JsonRejection>,
) -> AppResult<Json<LabelView>> {
    let req = body(b)?;
    mutate(&st, &p, move |p| label(p, &r, req)).await.map(Json)
}

#[derive(Deserialize)]
struct AnalysisQuery {
    #[serde(default)]
    all: bool,
}

async fn analysis(
    State(st): State<Shared>,
    UrlPath(p): UrlPath<String>,
    Query(q): Query<AnalysisQuery>,
) -> AppResult<Json<AnalysisReport>> {
    read(&st, &p, move |p| workflow::analysis(p, q.all)).await.map(Json)
}

async fn tests(
    State(st): State<Shared>,
    UrlPath((p, r)): UrlPath<(String, String)>,
    b: Result<Json<TestsRequest>, JsonRejection>,
) -> AppResult<Json<TestSuite>> {
    let req = match b {
        Err(JsonRejection::MissingJsonContentType(_)) => TestsRequest::default(),
        other => body(other)?,
    };
    mutate(&st, &p, move |p| workflow::tests(p, &r, req)).await.map(Json)
}

#[derive(Debug, Default, Deserialize)]
struct NewMonitor {
    #[serde(default)]
    requirements: Vec<String>,
    /// Defaults to the project's threshold configuration.
    #[serde(default)]
    thresholds: Option<ThresholdConfig>,
}

#[derive(Debug, Serialize)]
struct MonitorView {
    session_id: String,
    project: String,
    requirements: Vec<String>,
    props: Vec<String>,
    thresholds: ThresholdConfig,
    frames: u64,
}

fn monitor_view(m: &LiveMonitor) -> MonitorView {
    MonitorView {
        session_id: m.id.clone(),
        project: m.project.clone(),
        requirements: m.requirements.clone(),
        props: m.session.props().iter().map(|p| p.to_string()).collect(),
        thresholds: m.session.config().clone(),
        frames: m.session.frames(),
    }
}

async fn create_monitor(
    State(st): State<Shared>,
    UrlPath(p): UrlPath<String>,
    b: Result<Json<NewMonitor>, JsonRejection>,
) -> AppResult<(StatusCode, Json<MonitorView>)> {
    let req = match b {
        Err(JsonRejection::MissingJsonContentType(_)) => NewMonitor::default(),
        other => body(other)?,
    };
    let (props, targets, cfg) = read(&st, &p, move |p| {
        let targets = monitor_targets(p, &req.requirements)?;
        Ok((p.props()?, targets, req.thresholds.unwrap_or_else(|| p.thresholds.clone())))
    })
    .await?;
    let session = MonitorSession::new(&props, &targets, cfg)?;
    let id = format!("m{}", st.next_monitor.fetch_add(1, Ordering::Relaxed));
    let live = LiveMonitor {
        id: id.clone(),
        project: p,
        session,
        requirements: targets.into_iter().map(|(id, _)| id).collect(),
        last_frame: None,
        history: Vec::new(),
    };
    let view = monitor_view(&live);
    st.monitors
        .lock()
        .unwrap()
        .insert(id, Arc::new(tokio::sync::Mutex::new(live)));
    Ok((StatusCode::CREATED, Json(view)))
}

#[derive(Debug, Serialize)]
struct VerdictsView {
    session_id: String,
    frames: u64,
    verdicts: Vec<VerdictRecord>,
}

/// Ingests score records for one or more frames, in frame order. A batch
/// applies entirely or not at all.
async fn post_frames(
    State(st): State<Shared>,
    UrlPath(s): UrlPath<String>,
    b: Result<Json<Vec<ScoreRecord>>, JsonRejection>,
) -> AppResult<Json<VerdictsView>> {
    let records = body(b)?;
    let live = st.monitor(&s)?;
    let mut m = live.lock().await;
    let frames = group_frames(&records)?;
    if let (Some(last), Some((first, _))) = (m.last_frame, frames.first()) {
        if *first <= last {
            return Err(MonitorError::Unsorted {
                line: 1,
                frame: *first,
                previous: last,
            }
            .into());
        }
    }
    let mut session = m.session.clone();
    let mut out = Vec::new();
    for (frame, scores) in &frames {
        for (req, verdict) in session.step_scores(*frame, scores)? {
            out.push(VerdictRecord {
                frame: *frame,
                req,
                verdict,
            });
        }
    }
    m.session = session;
    if let Some((f, _)) = frames.last() {
        m.last_frame = Some(*f);
    }
    m.history.extend(out.iter().cloned());
    Ok(Json(VerdictsView {
        session_id: m.id.clone(),
        frames: m.session.frames(),
        verdicts: out,
    }))
}

async fn get_verdicts(State(st): State<Shared>, UrlPath(s): UrlPath<String>) -> AppResult<Json<VerdictsView>> {
    let live = st.monitor(&s)?;
    let m = live.lock().await;
    Ok(Json(VerdictsView {
        session_id: m.id.clone(),
        frames: m.session.frames(),
        verdicts: m.history.clone(),
    }))
}

async fn post_coverage(
    State(st): State<Shared>,
    UrlPath(p): UrlPath<String>,
    b: Result<Json<CoverageRequest>, JsonRejection>,
) -> AppResult<Json<CoverageView>> {
    let req = body(b)?;
    read(&st, &p, move |p| coverage_of(Some(&p.thresholds), req)).await.map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{p}", get(get_project))
        .route("/projects/{p}/requirements", post(add_requirement))
        .route("/projects/{p}/requirements/{r}/author", post(author))
        .route("/projects/{p}/requirements/{r}/candidates", get(candidates))
        .route("/projects/{p}/requirements/{r}/validation/next", post(validation_next))
        .route("/projects/{p}/requirements/{r}/validation/label", post(validation_label))
        .route("/projects/{p}/requirements/{r}/tests", post(tests))
        .route("/projects/{p}/analysis", get(analysis))
        .route("/projects/{p}/monitor/sessions", post(create_monitor))
        .route("/projects/{p}/coverage", post(post_coverage))
        .route("/monitor/sessions/{s}/frames", post(post_frames))
        .route("/monitor/sessions/{s}/verdicts", get(get_verdicts))
        .fallback(|| async { AppError::not_found("no such endpoint") })
        .with_state(state)
}

/// Serves until the listener fails or the process is interrupted.
pub async fn serve_on(listener: TcpListener, dir: PathBuf) -> std::io::Result<()> {
    let app = router(Arc::new(AppState::new(dir)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn serve(addr: SocketAddr, dir: PathBuf) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("serving {} on http://{}", dir.display(), listener.local_addr()?);
    serve_on(listener, dir).await
}

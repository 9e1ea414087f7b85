//! HTTP navigation service over a run artifact.
//!
//! Sessions live in memory. Each session sits behind its own mutex so its
//! commands are applied one at a time; the artifact and the navigation
//! anchors are shared read-only.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use maro_core::artifact::RunArtifact;
use maro_core::navigation::{NavigationData, NavigationSession, Snapshot};
use maro_core::problem::UncertainParamSpec;
use maro_core::problem_file::{from_json_str, semantic};
use maro_core::MaroError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Move,
    Restrict,
    Reset,
}

/// Wire form of a session command. `value` is required for `move`; for
/// `restrict` a missing or null value clears the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandMessage {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Move { objective: usize, value: f64 },
    Restrict { objective: usize, value: Option<f64> },
    Reset,
}

impl Command {
    /// Parses and resolves a command body against the objectives of `data`.
    pub fn parse(text: &str, data: &NavigationData) -> Result<Self, MaroError> {
        let msg: CommandMessage = from_json_str(text)?;
        let objective = || -> Result<usize, MaroError> {
            let name = msg
                .objective
                .as_deref()
                .ok_or_else(|| semantic(text, "objective", "missing field `objective`"))?;
            data.objective_index(name)
                .map_err(|_| semantic(text, "objective", format!("unknown objective {name:?}")))
        };
        Ok(match msg.command {
            CommandKind::Move => Command::Move {
                objective: objective()?,
                value: msg
                    .value
                    .ok_or_else(|| semantic(text, "value", "`move` needs a numeric `value`"))?,
            },
            CommandKind::Restrict => Command::Restrict {
                objective: objective()?,
                value: msg.value,
            },
            CommandKind::Reset => Command::Reset,
        })
    }

    pub fn apply(&self, session: &mut NavigationSession) -> Result<(), MaroError> {
        match *self {
            Command::Move { objective, value } => session.move_slider(objective, value).map(|_| ()),
            Command::Restrict { objective, value } => session.set_restriction(objective, value).map(|_| ()),
            Command::Reset => session.reset().map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveMeta {
    pub name: String,
    /// `[min, max]` over the robust front.
    pub range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: Option<String>,
    pub tool_version: String,
    pub format_version: u32,
    pub problem_hash: String,
    pub objectives: Vec<ObjectiveMeta>,
    pub hnv: Vec<VariableMeta>,
    pub wsv: Vec<VariableMeta>,
    pub uncertain_params: Vec<UncertainParamSpec>,
    pub robust_points: usize,
    pub pricing_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFrontView {
    pub scenario_id: usize,
    pub points: Vec<Vec<f64>>,
}

/// Objective vectors of every front in the artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontsView {
    pub objectives: Vec<String>,
    pub nominal: Vec<Vec<f64>>,
    pub maro: Vec<Vec<f64>>,
    pub mro: Option<Vec<Vec<f64>>>,
    pub scenarios: Vec<ScenarioFrontView>,
    /// Nominal re-optimization value of each robust point.
    pub nsr: Vec<Vec<f64>>,
    /// Front the prices are measured against.
    pub pricing_front: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub commands: usize,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            body: ErrorBody {
                error: format!("unknown session {id:?}"),
                path: None,
                line: None,
                column: None,
            },
        }
    }
}

impl From<MaroError> for ApiError {
    fn from(e: MaroError) -> Self {
        let status = match e {
            MaroError::InfeasibleRestrictions => StatusCode::CONFLICT,
            MaroError::Schema { .. } | MaroError::UnknownObjective(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match e {
            MaroError::Schema {
                path,
                line,
                column,
                message,
            } => ErrorBody {
                error: message,
                path: Some(path),
                line: Some(line),
                column: Some(column),
            },
            other => ErrorBody {
                error: other.to_string(),
                path: None,
                line: None,
                column: None,
            },
        };
        Self { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

struct HistoryRow {
    command: CommandKind,
    objective: Option<String>,
    value: Option<f64>,
    snapshot: Snapshot,
}

struct SessionEntry {
    session: NavigationSession,
    history: Vec<HistoryRow>,
}

/// Shared service state: the artifact, its navigation anchors, pre-rendered
/// read-only responses and the live sessions.
pub struct AppState {
    artifact: Arc<RunArtifact>,
    data: Arc<NavigationData>,
    meta_json: String,
    fronts_json: String,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(artifact: RunArtifact) -> Result<Self, MaroError> {
        let data = artifact.navigation_data()?;
        let meta = meta(&artifact, &data)?;
        let fronts = fronts_view(&artifact, &data);
        Ok(Self {
            meta_json: serde_json::to_string(&meta).expect("meta serializes"),
            fronts_json: serde_json::to_string(&fronts).expect("fronts serialize"),
            artifact: Arc::new(artifact),
            data,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn artifact(&self) -> &RunArtifact {
        &self.artifact
    }

    pub fn navigation_data(&self) -> &Arc<NavigationData> {
        &self.data
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

fn meta(artifact: &RunArtifact, data: &NavigationData) -> Result<Meta, MaroError> {
    let problem = artifact.load_problem()?;
    let spec = &problem.spec;
    let vars = |hnv: bool| {
        let it: Box<dyn Iterator<Item = &maro_core::problem::VariableSpec>> =
            if hnv { Box::new(spec.hnv()) } else { Box::new(spec.wsv()) };
        it.map(|v| VariableMeta {
            name: v.name.clone(),
            lower: v.lower,
            upper: v.upper,
        })
        .collect::<Vec<_>>()
    };
    Ok(Meta {
        name: artifact.problem.name.clone().or_else(|| artifact.problem.model.clone()),
        tool_version: artifact.tool_version.clone(),
        format_version: artifact.format_version,
        problem_hash: artifact.problem_hash.clone(),
        objectives: data
            .objective_names
            .iter()
            .zip(data.ranges())
            .map(|(name, range)| ObjectiveMeta {
                name: name.clone(),
                range,
            })
            .collect(),
        hnv: vars(true),
        wsv: vars(false),
        uncertain_params: spec.uncertainty.params.clone(),
        robust_points: data.robust.len(),
        pricing_points: data.nominal.len(),
    })
}

fn fronts_view(artifact: &RunArtifact, data: &NavigationData) -> FrontsView {
    let f = &artifact.fronts;
    FrontsView {
        objectives: data.objective_names.clone(),
        nominal: f.nominal.objective_vectors(),
        maro: f.maro.objective_vectors(),
        mro: f.mro.as_ref().map(|m| m.objective_vectors()),
        scenarios: f
            .scenarios
            .iter()
            .map(|s| ScenarioFrontView {
                scenario_id: s.scenario_id,
                points: s.front.objective_vectors(),
            })
            .collect(),
        nsr: artifact.prices.reports.iter().map(|r| r.f_nsr.clone()).collect(),
        pricing_front: artifact.prices.pricing_objectives(),
    }
}

fn json_text(text: &str) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text.to_string()).into_response()
}

async fn get_meta(State(state): State<Arc<AppState>>) -> Response {
    json_text(&state.meta_json)
}

async fn get_fronts(State(state): State<Arc<AppState>>) -> Response {
    json_text(&state.fronts_json)
}

async fn open_session(State(state): State<Arc<AppState>>) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let session = NavigationSession::open(state.data.clone())?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let view = SessionView {
        id: id.clone(),
        commands: 0,
        snapshot: session.snapshot().clone(),
    };
    let entry = SessionEntry {
        session,
        history: Vec::new(),
    };
    state
        .sessions
        .lock()
        .expect("session map poisoned")
        .insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = state.session(&id)?;
    let entry = entry.lock().expect("session poisoned");
    Ok(Json(SessionView {
        id,
        commands: entry.history.len(),
        snapshot: entry.session.snapshot().clone(),
    }))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    match state.sessions.lock().expect("session map poisoned").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(&id)),
    }
}

async fn post_command(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<Snapshot>, ApiError> {
    let entry = state.session(&id)?;
    let command = Command::parse(&body, &state.data)?;
    let mut entry = entry.lock().expect("session poisoned");
    command.apply(&mut entry.session)?;
    let snapshot = entry.session.snapshot().clone();
    let (kind, objective, value) = match command {
        Command::Move { objective, value } => (CommandKind::Move, Some(objective), Some(value)),
        Command::Restrict { objective, value } => (CommandKind::Restrict, Some(objective), value),
        Command::Reset => (CommandKind::Reset, None, None),
    };
    entry.history.push(HistoryRow {
        command: kind,
        objective: objective.map(|j| state.data.objective_names[j].clone()),
        value,
        snapshot: snapshot.clone(),
    });
    Ok(Json(snapshot))
}

/// One row per applied command; a fresh session exports only the header.
async fn export_csv(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.session(&id)?;
    let entry = entry.lock().expect("session poisoned");
    let names = &state.data.objective_names;
    let mut header: Vec<String> = vec!["step".into(), "command".into(), "objective".into(), "value".into()];
    for prefix in ["nav", "nsr", "mo", "price"] {
        header.extend(names.iter().map(|n| format!("{prefix}_{n}")));
    }
    header.push("alpha".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory csv");
    for (i, row) in entry.history.iter().enumerate() {
        let s = &row.snapshot;
        let command = serde_json::to_value(row.command).expect("kind serializes");
        let mut rec = vec![
            (i + 1).to_string(),
            command.as_str().unwrap_or_default().to_string(),
            row.objective.clone().unwrap_or_default(),
            row.value.map(|v| v.to_string()).unwrap_or_default(),
        ];
        for v in [&s.f_nav, &s.markers.nsr, &s.markers.mo, &s.markers.price] {
            rec.extend(v.iter().map(|x| x.to_string()));
        }
        rec.push(s.markers.alpha.to_string());
        w.write_record(&rec).expect("in-memory csv");
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");
    Ok(([(header::CONTENT_TYPE, "text/csv")], text).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/meta", get(get_meta))
        .route("/fronts", get(get_fronts))
        .route("/session", post(open_session))
        .route("/session/{id}", get(get_session).delete(delete_session))
        .route("/session/{id}/command", post(post_command))
        .route("/session/{id}/export.csv", get(export_csv))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

//! HTTP API over the job layer.
//!
//! Solves are queued and polled through `/api/result/{id}`; every other
//! operation answers inline. Results are keyed by the request hash, held in
//! memory and mirrored to `CACHE_DIR` when it is set.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use dashmap::mapref::entry::Entry as MapEntry;
use dashmap::DashMap;
use serde_json::{json, Value};

use crossfield::export::{canonical_json_value, mesh_json};
use crossfield::job::{preflight, run_job_on, JobRequest, JobResult, JobStatus, MeshSource};
use crossfield::Mesh;

use crate::error::{AppError, Result};
use crate::request::{parse_json, parse_request, OPERATIONS};

#[derive(Debug)]
pub struct Stored {
    pub json: String,
    pub svg: Option<String>,
    pub status: Option<JobStatus>,
    pub elapsed_ms: Option<u128>,
}

#[derive(Debug, Clone)]
enum Entry {
    Pending,
    Done(Arc<Stored>),
    Failed(u16, Arc<String>),
}

#[derive(Debug, Default)]
pub struct AppState {
    results: DashMap<String, Entry>,
    meshes: DashMap<String, Arc<Mesh>>,
    cache_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self { cache_dir, ..Default::default() }
    }

    /// Reads `CACHE_DIR` from the environment.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os("CACHE_DIR").filter(|s| !s.is_empty()).map(PathBuf::from))
    }

    fn lookup(&self, id: &str) -> Option<Entry> {
        if let Some(e) = self.results.get(id) {
            return Some(e.clone());
        }
        let stored = self.read_cache(id)?;
        let e = Entry::Done(Arc::new(stored));
        self.results.insert(id.to_string(), e.clone());
        Some(e)
    }

    fn read_cache(&self, id: &str) -> Option<Stored> {
        let dir = self.cache_dir.as_ref()?;
        let json = std::fs::read_to_string(dir.join(format!("{id}.json"))).ok()?;
        let svg = std::fs::read_to_string(dir.join(format!("{id}.svg"))).ok();
        let status = std::fs::read_to_string(dir.join(format!("{id}.status")))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok());
        Some(Stored { json, svg, status, elapsed_ms: None })
    }

    fn write_cache(&self, id: &str, s: &Stored) {
        let Some(dir) = &self.cache_dir else { return };
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            if let Some(svg) = &s.svg {
                std::fs::write(dir.join(format!("{id}.svg")), svg)?;
            }
            if let Some(status) = s.status {
                std::fs::write(dir.join(format!("{id}.status")), serde_json::to_string(&status).expect("status"))?;
            }
            std::fs::write(dir.join(format!("{id}.json")), &s.json)
        };
        if let Err(e) = write() {
            eprintln!("warning: cannot write cache entry {id}: {e}");
        }
    }

    fn finish(&self, id: &str, result: Result<JobResult>, started: Instant) -> Entry {
        let entry = match result {
            Ok(r) => {
                let stored = Stored {
                    json: r.canonical(),
                    svg: r.svg,
                    status: Some(r.status),
                    elapsed_ms: Some(started.elapsed().as_millis()),
                };
                self.write_cache(id, &stored);
                Entry::Done(Arc::new(stored))
            }
            Err(e) => Entry::Failed(e.http_status(), Arc::new(canonical_json_value(&e.to_json()))),
        };
        self.results.insert(id.to_string(), entry.clone());
        entry
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let mut r = Router::new()
        .route("/api/mesh", post(upload_mesh))
        .route("/api/result/{id}", get(get_result))
        .route("/api/result/{id}/svg", get(get_svg));
    for (op, path) in OPERATIONS {
        r = r.route(path, post(move |s: State<Arc<AppState>>, body: Bytes| submit(s, op, body)));
    }
    r.with_state(state)
}

pub async fn serve(port: u16, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("crossfield listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}

fn json_response(status: u16, body: String) -> Response {
    let mut res = (StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), body).into_response();
    res.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    res
}

fn error_response(e: &AppError) -> Response {
    json_response(e.http_status(), canonical_json_value(&e.to_json()))
}

fn done_response(id: &str, s: &Stored) -> Response {
    let mut res = json_response(200, s.json.clone());
    let h = res.headers_mut();
    h.insert("x-result-id", HeaderValue::from_str(id).expect("hex id"));
    if let Some(status) = s.status {
        let name = serde_json::to_value(status).expect("status");
        h.insert("x-job-status", HeaderValue::from_str(name.as_str().unwrap_or("")).expect("ascii"));
    }
    if let Some(ms) = s.elapsed_ms {
        h.insert("x-elapsed-ms", HeaderValue::from(ms as u64));
    }
    res
}

fn ticket(status: u16, id: &str, state: &str) -> Response {
    json_response(status, canonical_json_value(&json!({"id": id, "status": state, "result": format!("/api/result/{id}")})))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| AppError::Internal(e.to_string()))
}

async fn resolve_mesh(state: &AppState, source: &MeshSource) -> Result<Arc<Mesh>> {
    if let Some(id) = &source.mesh_id {
        return state
            .meshes
            .get(id)
            .map(|m| m.clone())
            .ok_or_else(|| AppError::field("mesh.mesh_id", format!("unknown mesh id {id}")));
    }
    let source = source.clone();
    Ok(Arc::new(blocking(move || source.load()).await??))
}

async fn submit(State(state): State<Arc<AppState>>, op: &'static str, body: Bytes) -> Response {
    match submit_inner(state, op, body).await {
        Ok(r) => r,
        Err(e) => error_response(&e),
    }
}

async fn submit_inner(state: Arc<AppState>, op: &'static str, body: Bytes) -> Result<Response> {
    let req: JobRequest = parse_request(op, parse_json(&body)?)?;
    let id = req.id()?;
    if let Some(entry) = state.lookup(&id) {
        return Ok(match (entry, op) {
            (Entry::Done(_), "solve") => ticket(200, &id, "done"),
            (Entry::Done(s), _) => done_response(&id, &s),
            (Entry::Pending, _) => ticket(202, &id, "pending"),
            (Entry::Failed(code, body), _) => json_response(code, body.to_string()),
        });
    }
    let mesh = resolve_mesh(&state, req.mesh()).await?;
    let started = Instant::now();
    if op == "solve" {
        preflight(&req, &mesh)?;
        match state.results.entry(id.clone()) {
            MapEntry::Occupied(_) => return Ok(ticket(202, &id, "pending")),
            MapEntry::Vacant(v) => {
                v.insert(Entry::Pending);
            }
        }
        let (st, jid) = (state.clone(), id.clone());
        tokio::task::spawn_blocking(move || {
            let r = run_job_on(&req, &mesh).map_err(AppError::from);
            st.finish(&jid, r, started);
        });
        return Ok(ticket(202, &id, "pending"));
    }
    let result = blocking(move || run_job_on(&req, &mesh)).await?;
    match state.finish(&id, result.map_err(AppError::from), started) {
        Entry::Done(s) => Ok(done_response(&id, &s)),
        Entry::Failed(code, body) => {
            state.results.remove(&id);
            Ok(json_response(code, body.to_string()))
        }
        Entry::Pending => unreachable!("finished jobs are never pending"),
    }
}

fn valid_id(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

fn not_found(id: &str) -> Response {
    json_response(404, canonical_json_value(&json!({"error": "not_found", "message": format!("no result with id {id}")})))
}

async fn get_result(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    if !valid_id(&id) {
        return not_found(&id);
    }
    match state.lookup(&id) {
        Some(Entry::Done(s)) => done_response(&id, &s),
        Some(Entry::Pending) => ticket(202, &id, "pending"),
        Some(Entry::Failed(code, body)) => json_response(code, body.to_string()),
        None => not_found(&id),
    }
}

async fn get_svg(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    if !valid_id(&id) {
        return not_found(&id);
    }
    match state.lookup(&id) {
        Some(Entry::Done(s)) if s.svg.is_some() => {
            let mut res = (StatusCode::OK, s.svg.clone().unwrap_or_default()).into_response();
            res.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("image/svg+xml"));
            res
        }
        Some(Entry::Pending) => ticket(202, &id, "pending"),
        _ => not_found(&id),
    }
}

async fn upload_mesh(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    match upload_inner(state, body).await {
        Ok(v) => json_response(200, canonical_json_value(&v)),
        Err(e) => error_response(&e),
    }
}

async fn upload_inner(state: Arc<AppState>, body: Bytes) -> Result<Value> {
    let text = std::str::from_utf8(&body).map_err(|_| AppError::field("", "body is not UTF-8"))?;
    let source = if text.trim_start().starts_with('{') {
        let v = parse_json(&body)?;
        let s: MeshSource = serde_path_to_error::deserialize(v)
            .map_err(|e| AppError::field(e.path().to_string().trim_start_matches('.'), e.inner().to_string()))?;
        if s.mesh_id.is_some() {
            return Err(AppError::field("mesh_id", "not accepted on upload"));
        }
        s
    } else {
        MeshSource { msh: Some(text.to_string()), ..Default::default() }
    };
    source.validate()?;
    let id = source.id()?;
    let mesh = resolve_mesh(&state, &source).await?;
    let summary = json!({
        "mesh_id": id,
        "chi": mesh.euler_characteristic(),
        "mesh": mesh_json(&mesh),
    });
    state.meshes.insert(id, mesh);
    Ok(summary)
}

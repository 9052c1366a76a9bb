//! HTTP access to a review bundle.
//!
//! Everything is read-only except `PATCH /episodes/{index}/label`, which
//! rewrites `manifest.json` through a single writer (temp file + rename).

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use lifelog_core::bundle::{write_atomic, Manifest, ReviewBundle, MANIFEST_FILE};
use lifelog_core::moments::label_episode;
use serde::Deserialize;
use tokio::sync::Mutex;

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Directory with the built viewer, served for any other GET path.
    pub viewer_dir: Option<PathBuf>,
}

struct Current {
    manifest: Manifest,
    bytes: Bytes,
}

struct AppState {
    dir: PathBuf,
    current: RwLock<Arc<Current>>,
    writer: Mutex<()>,
    viewer_dir: Option<PathBuf>,
}

impl AppState {
    fn snapshot(&self) -> Arc<Current> {
        self.current.read().expect("manifest lock poisoned").clone()
    }
}

/// Routes for one opened bundle.
pub fn router(bundle: ReviewBundle, opts: ServeOptions) -> lifelog_core::Result<Router> {
    let bytes = Bytes::from(bundle.manifest.to_json()?);
    let state = Arc::new(AppState {
        dir: bundle.dir,
        current: RwLock::new(Arc::new(Current {
            manifest: bundle.manifest,
            bytes,
        })),
        writer: Mutex::new(()),
        viewer_dir: opts.viewer_dir,
    });
    Ok(Router::new()
        .route("/manifest.json", get(manifest))
        .route("/heatmap.png", get(heatmap))
        .route("/thumbs/{file}", get(thumb))
        .route("/images/{id}", get(original))
        .route("/episodes/{index}/label", axum::routing::patch(set_label))
        .fallback(viewer)
        .with_state(state))
}

/// Opens `dir` and serves it on `addr` until the process is interrupted.
pub async fn serve(dir: &Path, addr: SocketAddr, opts: ServeOptions) -> Result<(), ServeError> {
    let bundle = ReviewBundle::open(dir)?;
    let app = router(bundle, opts)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(
        "serving {} on http://{}",
        dir.display(),
        listener.local_addr()?
    );
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Bundle(#[from] lifelog_core::Error),
    #[error("socket: {0}")]
    Io(#[from] std::io::Error),
}

fn not_found(what: &str) -> Response {
    (StatusCode::NOT_FOUND, format!("{what} not found\n")).into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("json") => "application/json",
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn send_file(path: PathBuf) -> Response {
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => not_found("file"),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn manifest(State(state): State<Arc<AppState>>) -> Response {
    let current = state.snapshot();
    (
        [(header::CONTENT_TYPE, "application/json")],
        current.bytes.clone(),
    )
        .into_response()
}

async fn heatmap(State(state): State<Arc<AppState>>) -> Response {
    let rel = state.snapshot().manifest.files.heatmap.clone();
    send_file(state.dir.join(rel)).await
}

async fn thumb(State(state): State<Arc<AppState>>, UrlPath(file): UrlPath<String>) -> Response {
    let Some(id) = file.strip_suffix(".jpg") else {
        return not_found("thumbnail");
    };
    let rel = match state.snapshot().manifest.image(id) {
        Some(img) => img.thumb.clone(),
        None => return not_found("image id"),
    };
    send_file(state.dir.join(rel)).await
}

async fn original(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    let rel = match state.snapshot().manifest.image(&id) {
        Some(img) => img.original.clone(),
        None => return not_found("image id"),
    };
    send_file(state.dir.join(rel)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelBody {
    label: String,
}

async fn set_label(
    State(state): State<Arc<AppState>>,
    UrlPath(index): UrlPath<String>,
    body: Bytes,
) -> Response {
    let Ok(index) = index.parse::<usize>() else {
        return not_found("episode");
    };
    let label = match serde_json::from_slice::<LabelBody>(&body) {
        Ok(b) => b.label,
        Err(e) => {
            return (
                StatusCode::BAD_REQUEST,
                format!("expected {{\"label\": text}}: {e}\n"),
            )
                .into_response()
        }
    };

    // One writer at a time; readers keep seeing the previous snapshot until
    // the new manifest is on disk.
    let _guard = state.writer.lock().await;
    let mut manifest = state.snapshot().manifest.clone();
    manifest.episodes = match label_episode(&manifest.episodes, index, &label) {
        Ok(eps) => eps,
        Err(_) => return not_found("episode"),
    };
    let bytes = match manifest.to_json() {
        Ok(b) => b,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    let path = state.dir.join(MANIFEST_FILE);
    let disk_bytes = bytes.clone();
    let written = tokio::task::spawn_blocking(move || write_atomic(&path, &disk_bytes)).await;
    match written {
        Ok(Ok(())) => {}
        Ok(Err(e)) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
    let episode = manifest.episodes[index].clone();
    *state.current.write().expect("manifest lock poisoned") = Arc::new(Current {
        manifest,
        bytes: Bytes::from(bytes),
    });
    axum::Json(episode).into_response()
}

async fn viewer(State(state): State<Arc<AppState>>, uri: Uri) -> Response {
    let Some(root) = &state.viewer_dir else {
        return not_found("route");
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return not_found("file");
    }
    send_file(root.join(rel)).await
}

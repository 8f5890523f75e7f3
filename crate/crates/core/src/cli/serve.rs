use std::io::Write;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;

use ngash::bundle::ViewerBundle;

use super::ServeArgs;

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>ngash</title></head>\n\
<body><p>No viewer assets configured. The bundle is at <a href=\"/bundle\">/bundle</a>.</p></body></html>\n";

struct AppState {
    bundle: Bytes,
    assets: Option<PathBuf>,
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let raw = std::fs::read(&a.bundle).with_context(|| format!("reading {}", a.bundle.display()))?;
    let text =
        std::str::from_utf8(&raw).map_err(|_| ngash::Error::Format(format!("{} is not UTF-8", a.bundle.display())))?;
    ViewerBundle::from_json(text)?.validate()?;
    if let Some(dir) = &a.assets {
        if !dir.is_dir() {
            return Err(ngash::Error::Io {
                path: dir.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "asset directory not found"),
            }
            .into());
        }
    }
    let state = Arc::new(AppState {
        bundle: Bytes::from(raw),
        assets: a.assets.clone(),
    });
    let app = Router::new()
        .route("/bundle", get(bundle))
        .route("/", get(index))
        .fallback(asset)
        .with_state(state);

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .context("starting async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("cannot bind {}:{}", a.host, a.port))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        axum::serve(listener, app).await.context("server failed")
    })
}

async fn bundle(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.bundle.clone()).into_response()
}

async fn index(State(state): State<Arc<AppState>>) -> Response {
    match &state.assets {
        Some(dir) => file_response(&dir.join("index.html")).await,
        None => ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], PLACEHOLDER).into_response(),
    }
}

async fn asset(State(state): State<Arc<AppState>>, uri: Uri) -> Response {
    let Some(dir) = &state.assets else {
        return not_found();
    };
    let rel = Path::new(uri.path().trim_start_matches('/'));
    if rel.as_os_str().is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return not_found();
    }
    file_response(&dir.join(rel)).await
}

async fn file_response(path: &Path) -> Response {
    match tokio::fs::read(path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(path))], bytes).into_response(),
        Err(_) => not_found(),
    }
}

fn not_found() -> Response {
    (StatusCode::NOT_FOUND, "not found\n").into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "wasm" => "application/wasm",
        "png" => "image/png",
        "svg" => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

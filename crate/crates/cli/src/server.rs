//! HTTP adapter for [`Service`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};

use crate::session::Service;

async fn dispatch(State(service): State<Arc<Service>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let Ok(body) = String::from_utf8(body.to_vec()) else {
        return (StatusCode::BAD_REQUEST, Json(serde_json::json!({ "error": "body is not UTF-8" }))).into_response();
    };
    let path = uri.path_and_query().map_or_else(|| uri.path().to_owned(), ToString::to_string);
    // Session locks are synchronous, so run off the async workers.
    let result = tokio::task::spawn_blocking(move || service.handle(method.as_str(), &path, &body)).await;
    match result {
        Ok((status, json)) => (StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), Json(json)).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": e.to_string() }))).into_response(),
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(dispatch).with_state(service)
}

pub async fn serve(service: Service, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}/api/v1/", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service))).await?;
    Ok(())
}

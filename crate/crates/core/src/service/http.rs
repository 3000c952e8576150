use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use tokio::net::TcpListener;

use super::{ApiRequest, ApiResponse, Method, Service, ServiceConfig, ServiceError};

/// An axum router that hands every request to the service.
pub fn router(service: Service) -> Router {
    Router::new().fallback(handle).with_state(service)
}

async fn handle(
    State(service): State<Service>,
    method: axum::http::Method,
    uri: Uri,
    Query(query): Query<BTreeMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let Ok(method) = method.as_str().parse::<Method>() else {
        return StatusCode::METHOD_NOT_ALLOWED.into_response();
    };
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::to_string);
    let req = ApiRequest { method, path: uri.path().to_string(), query, token, body: body.to_vec() };
    // the engine does blocking file I/O
    let resp = tokio::task::spawn_blocking(move || service.handle(&req)).await;
    match resp {
        Ok(r) => to_http(r),
        Err(_) => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    }
}

fn to_http(r: ApiResponse) -> Response {
    let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, r.content_type)], r.body).into_response()
}

/// Serves on an already bound listener until the future is dropped.
pub async fn serve_listener(listener: TcpListener, service: Service) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}

/// Opens the store and serves until interrupted.
pub async fn serve(config: &ServiceConfig) -> Result<(), ServiceError> {
    let engine = config.open_engine()?;
    let listener =
        TcpListener::bind(config.bind).await.map_err(|source| ServiceError::Bind { addr: config.bind, source })?;
    axum::serve(listener, router(Service::new(engine)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

//! Ollama-shaped mock inference server for offline runs.
//!
//! `POST /api/generate` takes `{"model", "prompt", ...}` and answers
//! `{"model", "response", "done": true}` where `response` comes from the
//! keyword rules in [`affekt_core::orchestrator::mock_respond`].

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use affekt_core::orchestrator::{mock_respond, MockFault, DEFAULT_ROUTE, MALFORMED_OUTPUT};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::Mutex;

#[derive(Debug, Clone)]
pub struct MockServerConfig {
    pub latency: Duration,
    pub fault: MockFault,
    /// Handle one request at a time.
    pub serial: bool,
    /// How long a `timeout` fault stalls before answering.
    pub stall: Duration,
}

impl Default for MockServerConfig {
    fn default() -> Self {
        Self {
            latency: Duration::ZERO,
            fault: MockFault::None,
            serial: false,
            stall: Duration::from_secs(600),
        }
    }
}

struct MockState {
    config: MockServerConfig,
    gate: Mutex<()>,
    calls: AtomicU64,
}

#[derive(Deserialize)]
struct GenerateRequest {
    #[serde(default)]
    model: String,
    prompt: String,
}

async fn generate(State(state): State<Arc<MockState>>, Json(req): Json<GenerateRequest>) -> Response {
    state.calls.fetch_add(1, Ordering::Relaxed);
    let _guard = if state.config.serial {
        Some(state.gate.lock().await)
    } else {
        None
    };
    if !state.config.latency.is_zero() {
        tokio::time::sleep(state.config.latency).await;
    }
    let text = match state.config.fault {
        MockFault::None => mock_respond(&req.prompt),
        MockFault::Malformed => MALFORMED_OUTPUT.to_string(),
        MockFault::Timeout => {
            tokio::time::sleep(state.config.stall).await;
            mock_respond(&req.prompt)
        }
        MockFault::Drop => {
            return (StatusCode::SERVICE_UNAVAILABLE, "endpoint unavailable").into_response();
        }
    };
    Json(json!({ "model": req.model, "response": text, "done": true })).into_response()
}

pub fn mock_router(config: MockServerConfig) -> Router {
    let state = Arc::new(MockState {
        config,
        gate: Mutex::new(()),
        calls: AtomicU64::new(0),
    });
    Router::new().route(DEFAULT_ROUTE, post(generate)).with_state(state)
}

/// Bind and serve the mock; returns the bound address through `on_bind`.
pub async fn mock_serve(
    addr: SocketAddr,
    config: MockServerConfig,
    on_bind: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tracing::info!(addr = %local, fault = ?config.fault, "mock inference endpoint");
    on_bind(local);
    axum::serve(listener, mock_router(config)).await
}

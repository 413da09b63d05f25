use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use super::mock::MockEndpoint;
use super::prompt::InferenceRequest;

pub const DEFAULT_ROUTE: &str = "/api/generate";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("unreadable response body: {0}")]
    Body(String),
}

impl TransportError {
    pub fn kind(&self) -> &'static str {
        match self {
            TransportError::Timeout => "timeout",
            TransportError::Connection(_) => "connection",
            TransportError::Status(_) => "http_status",
            TransportError::Body(_) => "body",
        }
    }
}

/// Something that answers generate calls with the model's text output.
pub trait Backend: Send + Sync {
    fn generate(&self, request: &InferenceRequest) -> Result<String, TransportError>;
}

/// A configured endpoint: a stable id for logs and counts, plus its backend.
#[derive(Clone)]
pub struct Endpoint {
    pub id: String,
    pub url: String,
    pub backend: Arc<dyn Backend>,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("id", &self.id)
            .field("url", &self.url)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad endpoint `{url}`: {reason}")]
pub struct EndpointParseError {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TransportConfig {
    pub route: String,
    pub timeout: Duration,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            route: DEFAULT_ROUTE.to_string(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl Endpoint {
    pub fn new(id: impl Into<String>, url: impl Into<String>, backend: Arc<dyn Backend>) -> Self {
        Self {
            id: id.into(),
            url: url.into(),
            backend,
        }
    }

    /// `http://host:port` (id `host:port`) or `mock://name?...` (id `name`).
    pub fn connect(url: &str, config: &TransportConfig) -> Result<Self, EndpointParseError> {
        let err = |reason: &str| EndpointParseError {
            url: url.to_string(),
            reason: reason.to_string(),
        };
        let url = url.trim();
        if let Some(rest) = url.strip_prefix("mock://") {
            let mock = MockEndpoint::from_spec(rest).map_err(|r| err(&r))?;
            let id = mock.name().to_string();
            return Ok(Self::new(id, url, Arc::new(mock)));
        }
        let authority = url
            .strip_prefix("http://")
            .or_else(|| url.strip_prefix("https://"))
            .ok_or_else(|| err("expected an http://, https:// or mock:// URL"))?;
        let host = authority.split('/').next().unwrap_or_default();
        if host.is_empty() {
            return Err(err("missing host"));
        }
        let base = url.trim_end_matches('/');
        let route = if config.route.starts_with('/') {
            config.route.clone()
        } else {
            format!("/{}", config.route)
        };
        let backend = HttpBackend::new(format!("{base}{route}"), config.timeout);
        Ok(Self::new(host, url, Arc::new(backend)))
    }
}

/// Parse a comma-separated endpoint list. Ids must be distinct.
pub fn parse_endpoints(list: &str, config: &TransportConfig) -> Result<Vec<Endpoint>, EndpointParseError> {
    let mut endpoints: Vec<Endpoint> = Vec::new();
    for url in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let e = Endpoint::connect(url, config)?;
        if endpoints.iter().any(|x| x.id == e.id) {
            return Err(EndpointParseError {
                url: url.to_string(),
                reason: format!("duplicate endpoint id `{}`", e.id),
            });
        }
        endpoints.push(e);
    }
    if endpoints.is_empty() {
        return Err(EndpointParseError {
            url: list.to_string(),
            reason: "no endpoints given".into(),
        });
    }
    Ok(endpoints)
}

/// Blocking HTTP client for generate-style routes.
///
/// Accepts a JSON object with a string `response` field, newline-delimited
/// chunks of such objects (concatenated), or any other body verbatim.
pub struct HttpBackend {
    url: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(url: String, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { url, agent }
    }
}

impl Backend for HttpBackend {
    fn generate(&self, request: &InferenceRequest) -> Result<String, TransportError> {
        let mut response = self.agent.post(&self.url).send_json(request).map_err(map_ureq)?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status));
        }
        let body = response.body_mut().read_to_string().map_err(map_ureq)?;
        Ok(extract_text(&body))
    }
}

fn map_ureq(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::StatusCode(code) => TransportError::Status(code),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
        ureq::Error::Io(io) => TransportError::Connection(io.to_string()),
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
            TransportError::Connection(e.to_string())
        }
        other => TransportError::Body(other.to_string()),
    }
}

/// Pull the model text out of a generate-route response body.
pub fn extract_text(body: &str) -> String {
    let response_field = |line: &str| {
        serde_json::from_str::<serde_json::Value>(line)
            .ok()
            .and_then(|v| v.get("response").and_then(|r| r.as_str()).map(str::to_owned))
    };
    if let Some(text) = response_field(body.trim()) {
        return text;
    }
    let lines: Vec<&str> = body.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() > 1 {
        let chunks: Option<Vec<String>> = lines.iter().map(|l| response_field(l)).collect();
        if let Some(chunks) = chunks {
            return chunks.concat();
        }
    }
    body.to_string()
}

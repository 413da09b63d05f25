//! Read-only JSON API over a run store, served under `/v1`.
//!
//! | route | payload |
//! |---|---|
//! | `GET /v1/feed/summary` | average affect, dominant class and API over a window |
//! | `GET /v1/feed/headlines` | filtered, paginated headline rows |
//! | `GET /v1/outlets/distribution` | per-outlet coarse distributions |
//! | `GET /v1/trends/intensity` | rolling daily valence and arousal |
//! | `GET /v1/polarization` | pairwise JSD matrix and polarization index |
//! | `GET /v1/headline/{id}` | one headline with its emotion breakdown |
//!
//! Response schemas live in `schemas/`. Errors are JSON objects with an
//! `error` code and a `message`; parameter errors also name the `param`.

pub mod mock_server;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::Arc;

use affekt_core::metrics::rolling_by_days;
use affekt_core::store::{parse_bound, Headline, LoadedRun, QueryFilter, Store, StoreError};
use affekt_core::CoarseClass;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{json, Value};

pub const DEFAULT_TOP_K: usize = 3;
pub const MAX_TREND_WINDOW_DAYS: u32 = 366;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    param: Option<&'static str>,
}

impl ApiError {
    fn no_data() -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "no_data",
            message: "the store has no complete run".into(),
            param: None,
        }
    }

    fn missing(artifact: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "missing_artifact",
            message: format!("the current run has no {artifact} artifact"),
            param: None,
        }
    }

    fn bad_param(param: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
            param: Some(param),
        }
    }

    fn not_found(message: String) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message,
            param: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(p) = self.param {
            body["param"] = json!(p);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidFilter { param, message } => ApiError::bad_param(param, message),
            other => ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "internal",
                message: other.to_string(),
                param: None,
            },
        }
    }
}

type ApiResult = Result<Json<Value>, ApiError>;
type Params = Query<HashMap<String, String>>;

fn current(store: &Store) -> Result<&LoadedRun, ApiError> {
    store.current().ok_or_else(ApiError::no_data)
}

fn to_value(v: impl Serialize) -> Json<Value> {
    Json(serde_json::to_value(v).expect("payloads serialize"))
}

fn parse_usize(params: &HashMap<String, String>, name: &'static str, default: usize) -> Result<usize, ApiError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_param(name, format!("`{v}` is not a non-negative integer"))),
    }
}

fn parse_date(params: &HashMap<String, String>, name: &'static str, end_of_day: bool) -> Result<Option<DateTime<Utc>>, ApiError> {
    params
        .get(name)
        .map(|v| {
            parse_bound(v, end_of_day)
                .ok_or_else(|| ApiError::bad_param(name, format!("`{v}` is not a YYYY-MM-DD date or RFC 3339 time")))
        })
        .transpose()
}

fn filter_from(params: &HashMap<String, String>) -> Result<QueryFilter, ApiError> {
    let defaults = QueryFilter::default();
    let filter = QueryFilter {
        outlet: params.get("outlet").cloned(),
        emotion: params.get("emotion").cloned(),
        label: params.get("label").cloned(),
        from: parse_date(params, "from", false)?,
        to: parse_date(params, "to", true)?,
        limit: parse_usize(params, "limit", defaults.limit)?,
        offset: parse_usize(params, "offset", 0)?,
    };
    filter.validate()?;
    Ok(filter)
}

fn published(h: &Headline) -> Option<DateTime<Utc>> {
    h.record.has_date().then_some(h.record.published_at)
}

fn headline_row(h: &Headline) -> Value {
    json!({
        "record_id": h.record.record_id,
        "outlet": h.record.outlet,
        "published_at": published(h),
        "section": h.record.section,
        "headline": h.record.headline,
        "dominant_emotion": h.annotation.dominant,
        "coarse_emotion": h.coarse,
        "confidence": h.annotation.confidence,
        "valence": h.affect.valence,
        "arousal": h.affect.arousal,
    })
}

async fn feed_summary(State(store): State<Arc<Store>>, Query(params): Params) -> ApiResult {
    let run = current(&store)?;
    let filter = QueryFilter {
        limit: 1,
        ..filter_from(&params)?
    };
    let rows: Vec<&Headline> = run.headlines().iter().filter(|h| filter.matches(h)).collect();
    let n = rows.len();
    let mean = |f: fn(&Headline) -> f64| (n > 0).then(|| rows.iter().map(|h| f(h)).sum::<f64>() / n as f64);

    let mut counts = [0u64; CoarseClass::ALL.len()];
    for h in &rows {
        counts[h.coarse.index()] += 1;
    }
    // first maximum in class order, matching the distribution artifact
    let dominant = (n > 0).then(|| {
        let mut best = 0;
        for i in 1..counts.len() {
            if counts[i] > counts[best] {
                best = i;
            }
        }
        CoarseClass::ALL[best]
    });
    let shares: BTreeMap<&str, f64> = CoarseClass::ALL
        .iter()
        .filter(|_| n > 0)
        .map(|c| (c.as_str(), counts[c.index()] as f64 / n as f64))
        .collect();
    let dated = rows.iter().filter_map(|h| published(h));
    let (first, last) = dated.fold((None, None), |(lo, hi): (Option<DateTime<Utc>>, Option<DateTime<Utc>>), t| {
        (Some(lo.map_or(t, |l| l.min(t))), Some(hi.map_or(t, |h| h.max(t))))
    });
    Ok(Json(json!({
        "run_id": run.run_id,
        "avg_valence": mean(|h| h.affect.valence),
        "avg_arousal": mean(|h| h.affect.arousal),
        "dominant_emotion": dominant,
        "coarse_shares": if n > 0 { json!(shares) } else { Value::Null },
        "api": run.aggregates.polarization.as_ref().map(|p| p.api),
        "total_headlines": n,
        "window": { "from": filter.from.or(first), "to": filter.to.or(last) },
    })))
}

async fn feed_headlines(State(store): State<Arc<Store>>, Query(params): Params) -> ApiResult {
    let run = current(&store)?;
    let filter = filter_from(&params)?;
    let page = run.query(&filter)?;
    Ok(Json(json!({
        "run_id": run.run_id,
        "total": page.total,
        "offset": page.offset,
        "limit": page.limit,
        "items": page.items.iter().map(|h| headline_row(h)).collect::<Vec<_>>(),
    })))
}

async fn outlet_distribution(State(store): State<Arc<Store>>) -> ApiResult {
    let run = current(&store)?;
    let profiles = run.aggregates.profiles.as_ref().ok_or_else(|| ApiError::missing("profiles"))?;
    let outlets: Vec<Value> = profiles
        .profiles
        .iter()
        .map(|p| {
            json!({
                "outlet": p.outlet,
                "item_count": p.item_count,
                "counts": p.distribution.counts,
                "shares": p.distribution.shares,
                "dominant_emotion": p.distribution.dominant(),
                "negativity_ratio": p.negativity_ratio,
                "mean_valence": p.mean_affect.map(|a| a.valence),
                "mean_arousal": p.mean_affect.map(|a| a.arousal),
            })
        })
        .collect();
    Ok(Json(json!({
        "run_id": run.run_id,
        "level": "coarse",
        "labels": CoarseClass::ALL,
        "outlets": outlets,
    })))
}

async fn trends_intensity(State(store): State<Arc<Store>>, Query(params): Params) -> ApiResult {
    let run = current(&store)?;
    let trends = run.aggregates.trends.as_ref().ok_or_else(|| ApiError::missing("trends"))?;
    let window = parse_usize(&params, "window", trends.window_days as usize)?;
    if window < 1 || window > MAX_TREND_WINDOW_DAYS as usize {
        return Err(ApiError::bad_param(
            "window",
            format!("{window} is outside [1, {MAX_TREND_WINDOW_DAYS}] days"),
        ));
    }
    let points = rolling_by_days(&trends.daily, window as u32).expect("window validated");
    Ok(Json(json!({
        "run_id": run.run_id,
        "window_days": window,
        "points": points,
    })))
}

async fn polarization(State(store): State<Arc<Store>>) -> ApiResult {
    let run = current(&store)?;
    let report = run.aggregates.polarization.as_ref().ok_or_else(|| ApiError::missing("polarization"))?;
    let mut body = to_value(report).0;
    body["run_id"] = json!(run.run_id);
    Ok(Json(body))
}

async fn headline_detail(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> ApiResult {
    let run = current(&store)?;
    let full = match params.get("full").map(String::as_str) {
        None | Some("false") | Some("0") => false,
        Some("true") | Some("1") => true,
        Some(other) => return Err(ApiError::bad_param("full", format!("`{other}` is not a boolean"))),
    };
    let h = run
        .headline(&id)
        .ok_or_else(|| ApiError::not_found(format!("no headline {id}")))?;
    let ranked = h.annotation.probabilities.ranked();
    let take = if full { ranked.len() } else { DEFAULT_TOP_K };
    let breakdown: Vec<Value> = ranked
        .iter()
        .take(take)
        .map(|(label, p)| json!({ "label": label, "percent": p * 100.0 }))
        .collect();

    let group = run.group_of(&id);
    let cross_outlet: Vec<Value> = group
        .map(|g| {
            g.record_ids
                .iter()
                .filter_map(|rid| run.headline(rid))
                .filter(|other| other.record.outlet != h.record.outlet)
                .map(|other| {
                    json!({
                        "record_id": other.record.record_id,
                        "outlet": other.record.outlet,
                        "headline": other.record.headline,
                        "dominant_emotion": other.annotation.dominant,
                        "valence": other.affect.valence,
                        "arousal": other.affect.arousal,
                    })
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(Json(json!({
        "run_id": run.run_id,
        "record": headline_row(h),
        "dominant_emotion": h.annotation.dominant,
        "confidence": h.annotation.confidence,
        "emotion_breakdown": breakdown,
        "affect": h.affect,
        "group_id": group.map(|g| g.group_id.clone()),
        "cross_outlet": cross_outlet,
    })))
}

async fn not_found_fallback() -> ApiError {
    ApiError::not_found("no such route".into())
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/v1/feed/summary", get(feed_summary))
        .route("/v1/feed/headlines", get(feed_headlines))
        .route("/v1/outlets/distribution", get(outlet_distribution))
        .route("/v1/trends/intensity", get(trends_intensity))
        .route("/v1/polarization", get(polarization))
        .route("/v1/headline/{id}", get(headline_detail))
        .fallback(not_found_fallback)
        .with_state(store)
}

pub async fn serve(store: Arc<Store>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving /v1");
    axum::serve(listener, router(store)).await
}

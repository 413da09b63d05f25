use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use affekt_api::mock_server::{mock_serve, MockServerConfig};
use affekt_api::router;
use affekt_core::orchestrator::{
    build_prompt, Endpoint, InferenceRequest, MockFault, TransportConfig, TransportError,
};
use affekt_core::store::Store;
use affekt_core::synthetic::{populate_store, synthetic_corpus};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    jsonschema::options()
        .should_validate_formats(true)
        .build(&serde_json::from_str(&text).unwrap())
        .unwrap()
}

fn assert_conforms(name: &str, body: &Value) {
    let validator = schema(name);
    let errors: Vec<String> = validator.iter_errors(body).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}\n{body:#}");
}

async fn get(store: &Arc<Store>, uri: &str) -> (StatusCode, Value) {
    let response = router(store.clone())
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn fixture() -> (tempfile::TempDir, Arc<Store>) {
    let dir = tempfile::tempdir().unwrap();
    populate_store(dir.path(), &synthetic_corpus(600, 11)).unwrap();
    let store = Store::open(dir.path()).unwrap();
    assert!(store.current().is_some());
    (dir, Arc::new(store))
}

#[tokio::test]
async fn every_route_matches_its_schema() {
    let (_dir, store) = fixture();
    let id = store.current().unwrap().headlines()[0].record.record_id.clone();
    let routes = [
        ("feed_summary", "/v1/feed/summary".to_string()),
        ("feed_summary", "/v1/feed/summary?outlet=Jugantor&from=2024-01-10&to=2024-01-20".to_string()),
        ("feed_summary", "/v1/feed/summary?from=2030-01-01".to_string()),
        ("feed_headlines", "/v1/feed/headlines?limit=20&offset=5".to_string()),
        ("feed_headlines", "/v1/feed/headlines?emotion=fear&limit=1000".to_string()),
        ("outlets_distribution", "/v1/outlets/distribution".to_string()),
        ("trends_intensity", "/v1/trends/intensity".to_string()),
        ("trends_intensity", "/v1/trends/intensity?window=30".to_string()),
        ("polarization", "/v1/polarization".to_string()),
        ("headline", format!("/v1/headline/{id}")),
        ("headline", format!("/v1/headline/{id}?full=true")),
    ];
    for (name, uri) in routes {
        let (status, body) = get(&store, &uri).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {body}");
        assert_conforms(name, &body);
    }
}

#[tokio::test]
async fn bad_parameters_are_named() {
    let (_dir, store) = fixture();
    let cases = [
        ("/v1/feed/headlines?limit=0", "limit"),
        ("/v1/feed/headlines?limit=1001", "limit"),
        ("/v1/feed/headlines?limit=ten", "limit"),
        ("/v1/feed/headlines?offset=-1", "offset"),
        ("/v1/feed/headlines?from=2024-13-01", "from"),
        ("/v1/feed/summary?to=yesterday", "to"),
        ("/v1/feed/headlines?from=2024-02-01&to=2024-01-01", "from"),
        ("/v1/feed/headlines?emotion=bliss", "emotion"),
        ("/v1/feed/headlines?label=bliss", "label"),
        ("/v1/trends/intensity?window=0", "window"),
        ("/v1/headline/x?full=maybe", "full"),
    ];
    for (uri, param) in cases {
        let (status, body) = get(&store, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}: {body}");
        assert_eq!(body["param"], param, "{uri}: {body}");
        assert_conforms("error", &body);
    }
    let (status, body) = get(&store, "/v1/headline/nope").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not_found");
    let (status, _) = get(&store, "/v2/anything").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn empty_store_reports_no_data() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    for uri in ["/v1/feed/summary", "/v1/feed/headlines", "/v1/polarization", "/v1/outlets/distribution"] {
        let (status, body) = get(&store, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(body["error"], "no_data");
        assert_conforms("error", &body);
    }
}

#[tokio::test]
async fn summary_agrees_with_rows_and_artifacts() {
    let (_dir, store) = fixture();
    let run = store.current().unwrap();
    let (_, summary) = get(&store, "/v1/feed/summary").await;
    let n = run.headlines().len();
    assert_eq!(summary["total_headlines"], n);

    let oracle: f64 = run.headlines().iter().map(|h| h.affect.valence).sum::<f64>() / n as f64;
    assert!((summary["avg_valence"].as_f64().unwrap() - oracle).abs() < 1e-12);
    let artifact = run.aggregates.distribution.as_ref().unwrap().mean_affect.unwrap();
    assert!((summary["avg_valence"].as_f64().unwrap() - artifact.valence).abs() < 1e-12);
    assert!((summary["avg_arousal"].as_f64().unwrap() - artifact.arousal).abs() < 1e-12);

    let shares = summary["coarse_shares"].as_object().unwrap();
    let best = shares.values().map(|v| v.as_f64().unwrap()).fold(f64::MIN, f64::max);
    assert_eq!(shares[summary["dominant_emotion"].as_str().unwrap()].as_f64().unwrap(), best);
    let (_, polar) = get(&store, "/v1/polarization").await;
    assert_eq!(summary["api"], polar["api"]);

    // emotion filter totals match the per-outlet distribution
    let (_, dist) = get(&store, "/v1/outlets/distribution").await;
    let fear: u64 = dist["outlets"].as_array().unwrap().iter().map(|o| o["counts"]["fear"].as_u64().unwrap()).sum();
    let (_, page) = get(&store, "/v1/feed/headlines?emotion=fear&limit=1").await;
    assert_eq!(page["total"].as_u64().unwrap(), fear);
}

#[tokio::test]
async fn headline_detail_breakdown_and_links() {
    let (_dir, store) = fixture();
    let run = store.current().unwrap();
    let grouped = run
        .headlines()
        .iter()
        .find(|h| run.group_of(&h.record.record_id).is_some())
        .expect("fixture has matched stories");
    let (_, body) = get(&store, &format!("/v1/headline/{}", grouped.record.record_id)).await;
    let breakdown = body["emotion_breakdown"].as_array().unwrap();
    assert_eq!(breakdown.len(), 3);
    let percents: Vec<f64> = breakdown.iter().map(|b| b["percent"].as_f64().unwrap()).collect();
    assert!(percents.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(breakdown[0]["label"], body["dominant_emotion"]);
    assert!(percents.iter().sum::<f64>() <= 100.0 + 1e-9);
    let cross = body["cross_outlet"].as_array().unwrap();
    assert!(!cross.is_empty());
    assert!(cross.iter().all(|c| c["outlet"] != body["record"]["outlet"]));

    let (_, full) = get(&store, &format!("/v1/headline/{}?full=true", grouped.record.record_id)).await;
    let total: f64 = full["emotion_breakdown"].as_array().unwrap().iter().map(|b| b["percent"].as_f64().unwrap()).sum();
    assert!((total - 100.0).abs() < 1e-6);
}

#[tokio::test]
async fn trend_window_of_one_is_the_daily_mean() {
    let (_dir, store) = fixture();
    let run = store.current().unwrap();
    let daily = &run.aggregates.trends.as_ref().unwrap().daily;
    let (_, body) = get(&store, "/v1/trends/intensity?window=1").await;
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), daily.len());
    for (p, d) in points.iter().zip(daily) {
        assert_eq!(p["count"].as_u64().unwrap(), d.count);
        assert!((p["valence"].as_f64().unwrap() - d.mean_valence).abs() < 1e-12);
    }
}

async fn spawn_mock(config: MockServerConfig) -> String {
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(async move {
        mock_serve("127.0.0.1:0".parse().unwrap(), config, |addr| {
            let _ = tx.send(addr);
        })
        .await
        .unwrap();
    });
    format!("http://{}", rx.await.unwrap())
}

fn call(url: String, timeout: Duration) -> Result<String, TransportError> {
    let endpoint = Endpoint::connect(&url, &TransportConfig { timeout, ..TransportConfig::default() }).unwrap();
    let record = &synthetic_corpus(1, 3)[0];
    let request = InferenceRequest {
        record_id: record.record_id.clone(),
        model: "gemma3:4b".into(),
        prompt: build_prompt(record, 1000),
        temperature: 0.0,
        max_tokens: 256,
    };
    endpoint.backend.generate(&request)
}

#[tokio::test(flavor = "multi_thread")]
async fn mock_server_speaks_the_generate_protocol() {
    let healthy = spawn_mock(MockServerConfig::default()).await;
    let text = tokio::task::spawn_blocking(move || call(healthy, Duration::from_secs(5))).await.unwrap().unwrap();
    let parsed: Value = serde_json::from_str(&text).unwrap();
    assert!(parsed["dominant_emotion"].is_string());

    let down = spawn_mock(MockServerConfig { fault: MockFault::Drop, ..Default::default() }).await;
    let err = tokio::task::spawn_blocking(move || call(down, Duration::from_secs(5))).await.unwrap().unwrap_err();
    assert!(matches!(err, TransportError::Status(503)), "{err:?}");

    let stalled = spawn_mock(MockServerConfig { fault: MockFault::Timeout, ..Default::default() }).await;
    let err = tokio::task::spawn_blocking(move || call(stalled, Duration::from_millis(200))).await.unwrap().unwrap_err();
    assert!(matches!(err, TransportError::Timeout), "{err:?}");
}

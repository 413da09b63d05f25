//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p affekt-cli --test acceptance`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use affekt_api::router;
use affekt_core::annotation::Probabilities;
use affekt_core::ingest::{ingest, write_corpus, InputFormat};
use affekt_core::metrics::{affect_of, distribution, jsd, match_stories, negativity_ratio, Level, MatchConfig};
use affekt_core::orchestrator::{
    read_annotations, read_failures, run_batch, Endpoint, FailureReason, MockEndpoint, RunConfig, RunControl,
    ANNOTATIONS_FILE,
};
use affekt_core::store::Store;
use affekt_core::synthetic::{populate_store, synthetic_corpus};
use affekt_core::taxonomy::LABEL_COUNT;
use affekt_core::{CleaningReport, EmotionLabel, Exec, IngestConfig, NegativeSet, NewsRecord, Taxonomy};
use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn expand(counts: impl IntoIterator<Item = (EmotionLabel, u64)>) -> Vec<EmotionLabel> {
    counts.into_iter().flat_map(|(l, n)| std::iter::repeat_n(l, n as usize)).collect()
}

fn dominant_table() -> (Value, Vec<EmotionLabel>) {
    let table: Value = serde_json::from_str(&fs::read_to_string(core_fixture("dominant_distribution.json")).unwrap()).unwrap();
    let labels = expand(table["rows"].as_array().unwrap().iter().map(|r| {
        (r["label"].as_str().unwrap().parse().unwrap(), r["count"].as_u64().unwrap())
    }));
    (table, labels)
}

fn dominant_distribution_check() -> Outcome {
    let (table, labels) = dominant_table();
    let start = Instant::now();
    let dist = distribution(&labels, Level::Fine, &Taxonomy::default(), Exec::default());
    let elapsed = start.elapsed();
    let mut worst = (0.0f64, String::new());
    for row in table["rows"].as_array().unwrap() {
        let label = row["label"].as_str().unwrap();
        let diff = (dist.share_of(label).unwrap() * 100.0 - row["percent"].as_f64().unwrap()).abs();
        if diff > worst.0 {
            worst = (diff, label.to_string());
        }
    }
    check(
        worst.0 <= 0.005 && elapsed < Duration::from_secs(1),
        format!("max |Δ| {:.5} pp ({}) ≤ 0.005 pp, {:?} < 1s", worst.0, worst.1, elapsed),
    )
}

fn negativity() -> Outcome {
    let (_, labels) = dominant_table();
    let tax = Taxonomy::default();
    let corpus = negativity_ratio(&distribution(&labels, Level::Fine, &tax, Exec::default()), &NegativeSet::default())
        .unwrap()
        * 100.0;
    let outlet: Value = serde_json::from_str(&fs::read_to_string(core_fixture("prothom_alo.json")).unwrap()).unwrap();
    let outlet_labels = expand(
        outlet["counts"].as_object().unwrap().iter().map(|(k, v)| (k.parse().unwrap(), v.as_u64().unwrap())),
    );
    let po = negativity_ratio(&distribution(&outlet_labels, Level::Fine, &tax, Exec::default()), &NegativeSet::default())
        .unwrap()
        * 100.0;
    check(
        (corpus - 50.42).abs() <= 0.01 && (po - 51.82).abs() <= 0.05,
        format!("corpus {corpus:.4}% (50.42 ± 0.01), outlet fixture {po:.4}% (51.82 ± 0.05, sadness share back-solved)"),
    )
}

fn reference_jsd(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter().zip(m).filter(|(x, _)| **x > 0.0).map(|(x, y)| x * (x / y).log2()).sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    (kl(p, &m) + kl(q, &m)) / 2.0
}

fn random_distribution(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random() }).collect();
    if v.iter().all(|x| *x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn jsd_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut max_oracle_gap = 0.0f64;
    for trial in 0..10_000 {
        let len = 2 + trial % 27;
        let (p, q) = (random_distribution(&mut rng, len), random_distribution(&mut rng, len));
        let pq = jsd(&p, &q).unwrap();
        if pq != jsd(&q, &p).unwrap() || jsd(&p, &p).unwrap() != 0.0 || !(0.0..=1.0).contains(&pq) {
            violations += 1;
        }
        max_oracle_gap = max_oracle_gap.max((pq - reference_jsd(&p, &q)).abs());
    }
    let hand = jsd(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
    let elapsed = start.elapsed();
    check(
        violations == 0 && (hand - 0.31128).abs() <= 1e-4 && elapsed < Duration::from_secs(10),
        format!(
            "10000 pairs, {violations} violations, max |Δ| vs KL reference {max_oracle_gap:.1e}; jsd((.5,.5),(1,0)) = {hand:.6} (0.31128 ± 1e-4); {elapsed:?} < 10s"
        ),
    )
}

fn affect_anchor() -> Outcome {
    let tax = Taxonomy::default();
    let s = affect_of(&Probabilities::one_hot(EmotionLabel::Sadness), &tax);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let p: [f64; LABEL_COUNT] = random_distribution(&mut rng, LABEL_COUNT).try_into().unwrap();
        let q: [f64; LABEL_COUNT] = random_distribution(&mut rng, LABEL_COUNT).try_into().unwrap();
        let t: f64 = rng.random();
        let mix: [f64; LABEL_COUNT] = std::array::from_fn(|i| t * p[i] + (1.0 - t) * q[i]);
        let (a, b, m) = (
            affect_of(&Probabilities::from_array(p), &tax),
            affect_of(&Probabilities::from_array(q), &tax),
            affect_of(&Probabilities::from_array(mix), &tax),
        );
        worst = worst
            .max((m.valence - (t * a.valence + (1.0 - t) * b.valence)).abs())
            .max((m.arousal - (t * a.arousal + (1.0 - t) * b.arousal)).abs());
    }
    check(
        s.valence == -0.70 && s.arousal == 0.65 && worst <= 1e-12,
        format!("sadness → ({}, {}) exact; linearity max |Δ| {worst:.1e} ≤ 1e-12 over 1000 mixtures", s.valence, s.arousal),
    )
}

fn mock_pool(n: usize, latency: Duration, serial: bool) -> (Vec<Endpoint>, Vec<Arc<MockEndpoint>>) {
    let handles: Vec<Arc<MockEndpoint>> = (1..=n)
        .map(|i| {
            let m = MockEndpoint::new(format!("e{i}"), latency);
            Arc::new(if serial { m.serialized() } else { m })
        })
        .collect();
    let endpoints = handles
        .iter()
        .map(|m| Endpoint::new(m.name(), format!("mock://{}", m.name()), m.clone()))
        .collect();
    (endpoints, handles)
}

fn orchestrator_balance_and_failover() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = synthetic_corpus(30_000, 77);
    corpus[4_321] = NewsRecord::new("Jugantor", None, None, "ভাঙা \u{FFFD} শিরোনাম এখানে", None);
    corpus[21_987] = NewsRecord::new("Jugantor", None, None, "অচল \u{FFFE} লেখা এখানে", None);
    let path = write_corpus(&dir.path().join("corpus"), &corpus, &CleaningReport::default()).unwrap();
    let config = RunConfig {
        workers: 6,
        backoff_base: Duration::from_millis(10),
        backoff_cap: Duration::from_millis(100),
        ..RunConfig::default()
    };
    let start = Instant::now();

    let (endpoints, _) = mock_pool(3, Duration::from_millis(1), false);
    let healthy = run_batch(&path, &dir.path().join("runs"), endpoints, &config, &RunControl::new()).unwrap();
    let counts: Vec<u64> = healthy.report.per_endpoint_counts.values().copied().collect();
    let balanced = counts.iter().all(|c| c.abs_diff(10_000) <= 6);
    let invalid = read_failures(&healthy.run_dir).unwrap();
    let invalid_ok = invalid.len() == 2 && invalid.iter().all(|f| f.reason == FailureReason::InvalidInput);

    let (endpoints, handles) = mock_pool(3, Duration::from_millis(1), false);
    let victim = handles[1].clone();
    let control = RunControl::with_observer(move |p, _| {
        if p.written == 10_000 {
            victim.kill();
        }
    });
    let failover = run_batch(&path, &dir.path().join("runs"), endpoints, &config, &control).unwrap();
    let elapsed = start.elapsed();
    check(
        healthy.complete && balanced && invalid_ok && failover.complete && failover.report.failed <= 2
            && elapsed < Duration::from_secs(300),
        format!(
            "healthy {:?} (±6 of 10000), failures {} invalid_input; e2 killed at 10000 → complete={}, failed {} ≤ 2, {:?}; {elapsed:.1?} < 5 min",
            counts,
            invalid.len(),
            failover.complete,
            failover.report.failed,
            failover.report.per_endpoint_counts.values().collect::<Vec<_>>(),
        ),
    )
}

fn line_count(path: &Path) -> usize {
    fs::read(path).map(|b| b.iter().filter(|c| **c == b'\n').count()).unwrap_or(0)
}

fn crash_safe_resume() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let n = 6_000;
    let corpus = synthetic_corpus(n, 31);
    let path = write_corpus(&dir.path().join("corpus"), &corpus, &CleaningReport::default()).unwrap();
    let runs = dir.path().join("runs");
    let endpoints = "mock://m1?latency_ms=2,mock://m2?latency_ms=2,mock://m3?latency_ms=2";
    let seed: u64 = rand::rng().random();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..3).map(|_| rng.random_range(300..n - 300)).collect();
    points.sort();

    let classify = |resume: Option<&Path>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_affekt"));
        cmd.args(["classify", "--endpoints", endpoints, "--workers", "6", "--checkpoint-every", "100"])
            .env("RUST_LOG", "warn")
            .stdout(Stdio::null())
            .stderr(Stdio::null());
        match resume {
            Some(run) => cmd.arg("--resume").arg(run),
            None => cmd.arg("--corpus").arg(&path).arg("--run-dir").arg(&runs),
        };
        cmd.spawn().unwrap()
    };

    let mut run_dir: Option<PathBuf> = None;
    let mut killed_at = Vec::new();
    for target in &points {
        let mut child = classify(run_dir.as_deref());
        let deadline = Instant::now() + Duration::from_secs(120);
        loop {
            if run_dir.is_none() {
                run_dir = fs::read_dir(&runs).ok().and_then(|mut it| it.next()).map(|e| e.unwrap().path());
            }
            let written = run_dir.as_ref().map_or(0, |d| line_count(&d.join(ANNOTATIONS_FILE)));
            if written >= *target || Instant::now() > deadline {
                break;
            }
            if child.try_wait().unwrap().is_some() {
                break;
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        child.kill().ok();
        child.wait().unwrap();
        killed_at.push(run_dir.as_ref().map_or(0, |d| line_count(&d.join(ANNOTATIONS_FILE))));
    }
    let run_dir = run_dir.ok_or("no run directory was created")?;
    let status = classify(Some(&run_dir)).wait().unwrap();

    let annotations = read_annotations(&run_dir).map_err(|e| e.to_string())?;
    let failures = read_failures(&run_dir).map_err(|e| e.to_string())?;
    let mut seen = HashSet::new();
    let mut duplicates = 0;
    for id in annotations.iter().map(|a| &a.record_id).chain(failures.iter().map(|f| &f.record_id)) {
        if !seen.insert(id.clone()) {
            duplicates += 1;
        }
    }
    let gaps = corpus.iter().filter(|r| !seen.contains(&r.record_id)).count();
    check(
        status.success() && duplicates == 0 && gaps == 0 && annotations.len() + failures.len() == n,
        format!(
            "seed {seed}: SIGKILL at {killed_at:?} lines (targets {points:?}); final {} annotations + {} failures, {duplicates} duplicates, {gaps} gaps",
            annotations.len(),
            failures.len()
        ),
    )
}

fn throughput_scaling() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(300, 5);
    let path = write_corpus(&dir.path().join("corpus"), &corpus, &CleaningReport::default()).unwrap();
    let rate = |endpoints: usize, workers: usize| {
        let (pool, _) = mock_pool(endpoints, Duration::from_millis(10), true);
        let config = RunConfig { workers, ..RunConfig::default() };
        let start = Instant::now();
        let out = run_batch(&path, &dir.path().join("runs"), pool, &config, &RunControl::new()).unwrap();
        assert!(out.complete);
        corpus.len() as f64 / start.elapsed().as_secs_f64()
    };
    let base = rate(1, 1);
    let scaled = rate(3, 6);
    let ratio = scaled / base;
    check(
        ratio >= 2.5,
        format!("1×1 {base:.1} items/s, 3×6 {scaled:.1} items/s, ratio {ratio:.2} ≥ 2.5 (10 ms serialized mocks)"),
    )
}

async fn get(store: &Arc<Store>, uri: &str) -> Value {
    let response = router(store.clone()).oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    assert!(response.status().is_success(), "{uri}: {}", response.status());
    serde_json::from_slice(&response.into_body().collect().await.unwrap().to_bytes()).unwrap()
}

struct Tally {
    compared: usize,
    mismatches: Vec<String>,
}

impl Tally {
    fn num(&mut self, what: impl Into<String>, served: &Value, expected: f64, tol: f64) {
        self.compared += 1;
        match served.as_f64() {
            Some(v) if (v - expected).abs() <= tol => {}
            _ => self.mismatches.push(format!("{}: {served} vs {expected}", what.into())),
        }
    }

    fn eq(&mut self, what: impl Into<String>, served: &Value, expected: &Value) {
        self.compared += 1;
        if served != expected {
            self.mismatches.push(format!("{}: {served} vs {expected}", what.into()));
        }
    }
}

/// Probability-weighted anchors, written out here rather than borrowed.
fn oracle_affect(p: &Probabilities, anchors: &HashMap<EmotionLabel, (f64, f64)>) -> (f64, f64) {
    EmotionLabel::ALL.iter().fold((0.0, 0.0), |(v, a), l| {
        let (av, aa) = anchors[l];
        (v + p.get(*l) * av, a + p.get(*l) * aa)
    })
}

fn api_consistency() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    populate_store(dir.path(), &synthetic_corpus(1_000, 123)).map_err(|e| e.to_string())?;
    let store = Arc::new(Store::open(dir.path()).map_err(|e| e.to_string())?);
    let run = store.current().ok_or("no run served")?;
    let aggregates = &run.aggregates;
    let tax = Taxonomy::default();
    let anchors: HashMap<EmotionLabel, (f64, f64)> =
        tax.rows().into_iter().map(|r| (r.label, (r.valence, r.arousal))).collect();
    const TOL: f64 = 1e-9;
    let mut t = Tally { compared: 0, mismatches: Vec::new() };

    let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
    rt.block_on(async {
        // per-item oracle
        let per_item: HashMap<String, (f64, f64)> = run
            .headlines()
            .iter()
            .map(|h| (h.record.record_id.clone(), oracle_affect(&h.annotation.probabilities, &anchors)))
            .collect();
        let n = per_item.len() as f64;

        let summary = get(&store, "/v1/feed/summary").await;
        t.num("summary.total_headlines", &summary["total_headlines"], n, 0.0);
        t.num("summary.avg_valence", &summary["avg_valence"], per_item.values().map(|x| x.0).sum::<f64>() / n, TOL);
        t.num("summary.avg_arousal", &summary["avg_arousal"], per_item.values().map(|x| x.1).sum::<f64>() / n, TOL);
        let polar = aggregates.polarization.as_ref().unwrap();
        t.num("summary.api", &summary["api"], polar.api, 0.0);
        let coarse = &aggregates.distribution.as_ref().unwrap().coarse;
        for (class, share) in coarse.shares.as_ref().unwrap() {
            t.num(format!("summary.coarse_shares.{class}"), &summary["coarse_shares"][class], *share, TOL);
        }
        t.eq("summary.dominant_emotion", &summary["dominant_emotion"], &Value::from(coarse.dominant().unwrap()));

        let page = get(&store, "/v1/feed/headlines?limit=1000").await;
        t.num("headlines.total", &page["total"], n, 0.0);
        for row in page["items"].as_array().unwrap() {
            let id = row["record_id"].as_str().unwrap();
            let h = run.headline(id).unwrap();
            let (v, a) = per_item[id];
            t.num(format!("headlines[{id}].valence"), &row["valence"], v, TOL);
            t.num(format!("headlines[{id}].arousal"), &row["arousal"], a, TOL);
            t.num(format!("headlines[{id}].confidence"), &row["confidence"], h.annotation.confidence, 0.0);
        }

        let dist = get(&store, "/v1/outlets/distribution").await;
        let profiles = &aggregates.profiles.as_ref().unwrap().profiles;
        for (served, p) in dist["outlets"].as_array().unwrap().iter().zip(profiles) {
            let o = &p.outlet;
            t.eq(format!("outlets[{o}].outlet"), &served["outlet"], &Value::from(o.as_str()));
            t.num(format!("outlets[{o}].item_count"), &served["item_count"], p.item_count as f64, 0.0);
            for (class, count) in &p.distribution.counts {
                t.num(format!("outlets[{o}].counts.{class}"), &served["counts"][class], *count as f64, 0.0);
            }
            for (class, share) in p.distribution.shares.as_ref().unwrap() {
                t.num(format!("outlets[{o}].shares.{class}"), &served["shares"][class], *share, 0.0);
            }
            t.num(format!("outlets[{o}].negativity_ratio"), &served["negativity_ratio"], p.negativity_ratio.unwrap(), 0.0);
            let items: Vec<&(f64, f64)> =
                run.headlines().iter().filter(|h| &h.record.outlet == o).map(|h| &per_item[&h.record.record_id]).collect();
            let k = items.len() as f64;
            t.num(format!("outlets[{o}].mean_valence"), &served["mean_valence"], items.iter().map(|x| x.0).sum::<f64>() / k, TOL);
            t.num(format!("outlets[{o}].mean_arousal"), &served["mean_arousal"], items.iter().map(|x| x.1).sum::<f64>() / k, TOL);
        }

        let trends = get(&store, "/v1/trends/intensity?window=7").await;
        let mut by_day: BTreeMap<chrono::NaiveDate, Vec<(f64, f64)>> = BTreeMap::new();
        for h in run.headlines() {
            by_day.entry(h.record.published_at.date_naive()).or_default().push(per_item[&h.record.record_id]);
        }
        let points = trends["points"].as_array().unwrap();
        t.num("trends.points", &Value::from(points.len()), by_day.len() as f64, 0.0);
        for point in points {
            let date: chrono::NaiveDate = point["date"].as_str().unwrap().parse().unwrap();
            let window: Vec<&(f64, f64)> = by_day
                .range(date - chrono::Duration::days(6)..=date)
                .flat_map(|(_, v)| v.iter())
                .collect();
            let k = window.len() as f64;
            t.num(format!("trends[{date}].count"), &point["count"], k, 0.0);
            t.num(format!("trends[{date}].valence"), &point["valence"], window.iter().map(|x| x.0).sum::<f64>() / k, TOL);
            t.num(format!("trends[{date}].arousal"), &point["arousal"], window.iter().map(|x| x.1).sum::<f64>() / k, TOL);
        }

        let served = get(&store, "/v1/polarization").await;
        let shares: Vec<Vec<f64>> = profiles.iter().map(|p| p.distribution.share_vector().unwrap()).collect();
        let mut pair_sum = (0.0, 0);
        for i in 0..shares.len() {
            for j in 0..shares.len() {
                let d = reference_jsd(&shares[i], &shares[j]);
                t.num(format!("polarization.pairwise_jsd[{i}][{j}]"), &served["pairwise_jsd"][i][j], d, TOL);
                if i < j {
                    pair_sum = (pair_sum.0 + d, pair_sum.1 + 1);
                }
            }
        }
        t.num("polarization.api", &served["api"], pair_sum.0 / pair_sum.1 as f64, TOL);
        t.num("polarization.jsd", &served["jsd"], polar.jsd.unwrap(), 0.0);
        t.num("polarization.matched_story_count", &served["matched_story_count"], polar.matched_story_count as f64, 0.0);
        let matches = aggregates.matches.as_ref().unwrap();
        t.num("matches.groups", &Value::from(matches.groups.len()), polar.matched_story_count as f64, 0.0);

        for h in run.headlines().iter().step_by(97) {
            let id = &h.record.record_id;
            let detail = get(&store, &format!("/v1/headline/{id}?full=true")).await;
            for entry in detail["emotion_breakdown"].as_array().unwrap() {
                let label: EmotionLabel = entry["label"].as_str().unwrap().parse().unwrap();
                t.num(format!("headline[{id}].{label}"), &entry["percent"], h.annotation.probabilities.get(label) * 100.0, TOL);
            }
            let (v, a) = per_item[id];
            t.num(format!("headline[{id}].affect.valence"), &detail["affect"]["valence"], v, TOL);
            t.num(format!("headline[{id}].affect.arousal"), &detail["affect"]["arousal"], a, TOL);
        }
    });

    check(
        t.mismatches.is_empty() && t.compared > 1_000,
        format!(
            "{} numeric fields across 6 routes on a 1000-item store, {} mismatches (tolerance 1e-9 for recomputed means, exact for artifact values){}",
            t.compared,
            t.mismatches.len(),
            t.mismatches.first().map(|m| format!("; first: {m}")).unwrap_or_default()
        ),
    )
}

fn story_matching() -> Outcome {
    let (corpus, report) =
        ingest(&core_fixture("matching.jsonl"), InputFormat::Jsonl, &IngestConfig::default()).map_err(|e| e.to_string())?;
    let truth: Value = serde_json::from_str(&fs::read_to_string(core_fixture("matching_truth.json")).unwrap()).unwrap();
    let expected = truth["group_count"].as_u64().unwrap() as usize;
    let reference = match_stories(&corpus, &[], &MatchConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut stable = true;
    for _ in 0..20 {
        let mut shuffled = corpus.clone();
        shuffled.shuffle(&mut rng);
        stable &= match_stories(&shuffled, &[], &MatchConfig::default()) == reference;
    }
    check(
        reference.groups.len() == expected && stable && report.kept_count == report.input_count,
        format!(
            "{} groups vs {expected} planted over {} records; identical under 20 shuffles: {stable}",
            reference.groups.len(),
            corpus.len()
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Dominant-emotion distribution", dominant_distribution_check),
        ("Negativity ratio", negativity),
        ("JSD properties", jsd_properties),
        ("Affect anchoring", affect_anchor),
        ("Orchestrator balance and failover", orchestrator_balance_and_failover),
        ("Crash-safe resume", crash_safe_resume),
        ("Throughput scaling", throughput_scaling),
        ("Metrics/API consistency", api_consistency),
        ("Story matching", story_matching),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

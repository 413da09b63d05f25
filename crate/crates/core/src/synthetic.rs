//! Deterministic synthetic corpora for tests, benches and demos.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use sha2::{Digest, Sha256};

use crate::ingest::{write_corpus, CleaningReport, NewsRecord};
use crate::metrics::{compute_metrics, write_artifacts, MetricsConfig};
use crate::orchestrator::{read_annotations, run_batch, Endpoint, MockEndpoint, RunConfig, RunControl};
use crate::store::{CORPUS_DIR, METRICS_DIR, RUNS_DIR};
use crate::taxonomy::Taxonomy;

pub const OUTLETS: [&str; 3] = ["Prothom Alo", "Jugantor", "Kaler Kantho"];

const SUBJECTS: [&str; 8] = [
    "ঢাকায়",
    "চট্টগ্রামে",
    "সিলেটে",
    "রাজশাহীতে",
    "খুলনায়",
    "বরিশালে",
    "রংপুরে",
    "ময়মনসিংহে",
];

const EVENTS: [&str; 8] = [
    "বস্তিতে আগুন",
    "উৎসবের প্রস্তুতি",
    "সড়ক দুর্ঘটনায় মৃত্যু",
    "বাজারে আতঙ্ক",
    "প্রকল্প ব্যর্থ",
    "নতুন সেতু উদ্বোধন",
    "বিশ্ববিদ্যালয়ে সংঘর্ষ",
    "ক্রিকেটে জয়",
];

const DETAILS: [&str; 6] = [
    "পরিস্থিতি নিয়ন্ত্রণে",
    "তদন্ত কমিটি গঠন",
    "স্থানীয়দের প্রতিক্রিয়া",
    "প্রশাসনের বক্তব্য",
    "বিশেষজ্ঞদের মত",
    "সরেজমিন প্রতিবেদন",
];

fn bengali_digits(mut n: usize) -> String {
    const DIGITS: [char; 10] = ['০', '১', '২', '৩', '৪', '৫', '৬', '৭', '৮', '৯'];
    let mut out = Vec::new();
    loop {
        out.push(DIGITS[n % 10]);
        n /= 10;
        if n == 0 {
            break;
        }
    }
    out.iter().rev().collect()
}

/// SplitMix64 step, so the sequence is fixed across platforms.
fn mix(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` distinct Bengali headlines spread over three outlets and 60 days.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<NewsRecord> {
    let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    (0..n)
        .map(|i| {
            let r = mix(seed, i as u64);
            let outlet = OUTLETS[i % OUTLETS.len()];
            let headline = format!(
                "{} {}: {} {}",
                SUBJECTS[(r % 8) as usize],
                EVENTS[((r >> 8) % 8) as usize],
                DETAILS[((r >> 16) % 6) as usize],
                bengali_digits(i)
            );
            let minutes = (r >> 24) % (60 * 24 * 60);
            let at = start + Duration::minutes(minutes as i64);
            NewsRecord::new(outlet, Some(at), Some("national".into()), headline, None)
        })
        .collect()
}

/// Add one complete run over `corpus` to the store at `root`,
/// classified by three in-process mocks, with metrics written. The corpus
/// goes under `corpus/<digest>/`. Returns the run directory.
pub fn populate_store(
    root: &Path,
    corpus: &[NewsRecord],
) -> Result<PathBuf, Box<dyn std::error::Error + Send + Sync>> {
    let mut digest = Sha256::new();
    for r in corpus {
        digest.update(r.record_id.as_bytes());
    }
    let name = hex::encode(&digest.finalize()[..6]);
    let corpus_path = write_corpus(&root.join(CORPUS_DIR).join(name), corpus, &CleaningReport::default())?;
    let endpoints = (1..=3)
        .map(|i| {
            let name = format!("mock{i}");
            let mock = Arc::new(MockEndpoint::new(name.clone(), std::time::Duration::ZERO));
            Endpoint::new(name.clone(), format!("mock://{name}"), mock)
        })
        .collect();
    let out = run_batch(
        &corpus_path,
        &root.join(RUNS_DIR),
        endpoints,
        &RunConfig::default(),
        &RunControl::new(),
    )?;
    let annotations = read_annotations(&out.run_dir)?;
    let artifacts = compute_metrics(corpus, &annotations, &Taxonomy::default(), &MetricsConfig::default())?;
    write_artifacts(&out.run_dir.join(METRICS_DIR), &artifacts)?;
    Ok(out.run_dir)
}

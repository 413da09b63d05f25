//! Cross-outlet story matching by term-frequency cosine within a time window.

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::annotation::EmotionAnnotation;
use crate::exec::Exec;
use crate::ingest::NewsRecord;
use crate::taxonomy::EmotionLabel;
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub window_hours: i64,
    pub similarity_threshold: f64,
    pub exec: Exec,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            window_hours: 48,
            similarity_threshold: 0.6,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedStoryGroup {
    pub group_id: String,
    pub record_ids: Vec<String>,
    pub outlets: Vec<String>,
    pub time_span: TimeSpan,
    pub per_outlet_dominant: BTreeMap<String, EmotionLabel>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchOutcome {
    pub groups: Vec<MatchedStoryGroup>,
    /// Records skipped because they carry no publication date.
    pub undated_records: usize,
}

/// Sparse term-frequency vector, sorted by term id.
struct TermVector {
    terms: Vec<(u32, f64)>,
    norm: f64,
}

impl TermVector {
    fn cosine(&self, other: &TermVector) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (self.terms[i], other.terms[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        dot / (self.norm * other.norm)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component roots are canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of `members` using only edges between members.
/// Returns components as sorted index lists, ordered by smallest member.
fn components(members: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let local: HashMap<usize, usize> = members.iter().enumerate().map(|(k, m)| (*m, k)).collect();
    let mut uf = UnionFind::new(members.len());
    for (a, b) in edges {
        if let (Some(&x), Some(&y)) = (local.get(a), local.get(b)) {
            uf.union(x, y);
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, m) in members.iter().enumerate() {
        by_root.entry(uf.find(k)).or_default().push(*m);
    }
    by_root.into_values().filter(|c| c.len() >= 2).collect()
}

/// Group headlines from different outlets that are lexically similar and
/// published close together.
///
/// Pairs from distinct outlets within `window_hours` whose cosine similarity
/// reaches the threshold are linked; groups are the connected components.
/// A component whose time span exceeds the window is cut greedily in time
/// order into window-sized segments, each re-split into components, so every
/// group's members lie within the window of each other. Records are put in
/// `(published_at, record_id)` order first, which makes the output
/// independent of input order.
pub fn match_stories(
    corpus: &[NewsRecord],
    annotations: &[EmotionAnnotation],
    config: &MatchConfig,
) -> MatchOutcome {
    let mut dated: Vec<&NewsRecord> = corpus.iter().filter(|r| r.has_date()).collect();
    let undated_records = corpus.len() - dated.len();
    dated.sort_by(|a, b| {
        a.published_at
            .cmp(&b.published_at)
            .then_with(|| a.record_id.cmp(&b.record_id))
    });

    let mut vocab: HashMap<String, u32> = HashMap::new();
    let vectors: Vec<TermVector> = dated
        .iter()
        .map(|r| {
            let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
            for tok in tokenize(&r.headline) {
                let next = vocab.len() as u32;
                let id = *vocab.entry(tok).or_insert(next);
                *tf.entry(id).or_default() += 1.0;
            }
            let norm = tf.values().map(|v| v * v).sum::<f64>().sqrt();
            TermVector {
                terms: tf.into_iter().collect(),
                norm,
            }
        })
        .collect();

    let window = chrono::Duration::hours(config.window_hours);
    let threshold = config.similarity_threshold;
    let edges: Vec<(usize, usize)> = config
        .exec
        .map_range(dated.len(), |i| {
            let mut out = Vec::new();
            for j in (i + 1)..dated.len() {
                if dated[j].published_at - dated[i].published_at > window {
                    break;
                }
                if dated[i].outlet != dated[j].outlet
                    && vectors[i].cosine(&vectors[j]) >= threshold
                {
                    out.push((i, j));
                }
            }
            out
        })
        .into_iter()
        .flatten()
        .collect();

    let all: Vec<usize> = (0..dated.len()).collect();
    let mut group_members: Vec<Vec<usize>> = Vec::new();
    for component in components(&all, &edges) {
        let span = dated[*component.last().unwrap()].published_at
            - dated[component[0]].published_at;
        if span <= window {
            group_members.push(component);
            continue;
        }
        let mut segment: Vec<usize> = Vec::new();
        for idx in component {
            if let Some(&first) = segment.first() {
                if dated[idx].published_at - dated[first].published_at > window {
                    group_members.extend(components(&segment, &edges));
                    segment.clear();
                }
            }
            segment.push(idx);
        }
        group_members.extend(components(&segment, &edges));
    }
    group_members.sort_by_key(|g| g[0]);

    let by_id: HashMap<&str, EmotionLabel> = annotations
        .iter()
        .map(|a| (a.record_id.as_str(), a.dominant))
        .collect();

    let groups = group_members
        .into_iter()
        .enumerate()
        .map(|(n, members)| {
            let mut votes: BTreeMap<String, BTreeMap<EmotionLabel, usize>> = BTreeMap::new();
            let mut outlets: Vec<String> = Vec::new();
            for &m in &members {
                let r = dated[m];
                if !outlets.contains(&r.outlet) {
                    outlets.push(r.outlet.clone());
                }
                if let Some(label) = by_id.get(r.record_id.as_str()) {
                    *votes
                        .entry(r.outlet.clone())
                        .or_default()
                        .entry(*label)
                        .or_default() += 1;
                }
            }
            outlets.sort();
            let per_outlet_dominant = votes
                .into_iter()
                .map(|(outlet, counts)| {
                    let mut best = (EmotionLabel::Neutral, 0);
                    for (label, c) in counts {
                        if c > best.1 {
                            best = (label, c);
                        }
                    }
                    (outlet, best.0)
                })
                .collect();
            MatchedStoryGroup {
                group_id: format!("g{:05}", n + 1),
                record_ids: members.iter().map(|m| dated[*m].record_id.clone()).collect(),
                outlets,
                time_span: TimeSpan {
                    start: dated[members[0]].published_at,
                    end: dated[*members.last().unwrap()].published_at,
                },
                per_outlet_dominant,
            }
        })
        .collect();

    MatchOutcome {
        groups,
        undated_records,
    }
}

use serde::{Deserialize, Serialize};

use super::profiles::OutletEmotionProfile;
use super::MetricsError;
use crate::exec::Exec;

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

fn check_distribution(p: &[f64], name: &str) -> Result<(), MetricsError> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(MetricsError::InvalidArgument(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    let mass: f64 = p.iter().sum();
    if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(MetricsError::InvalidArgument(format!(
            "{name} sums to {mass}, not 1"
        )));
    }
    Ok(())
}

/// `x * log2(x / m)` with `0 * log 0 = 0`.
fn kl_term(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / m).log2()
    }
}

/// Jensen–Shannon divergence with base-2 logarithms, in `[0, 1]`.
///
/// Each summand is symmetric in `(p_i, q_i)` term by term, so
/// `jsd(p, q) == jsd(q, p)` holds bit for bit.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    if p.len() != q.len() || p.is_empty() {
        return Err(MetricsError::InvalidArgument(format!(
            "supports differ: {} vs {} entries",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            0.5 * kl_term(a, m) + 0.5 * kl_term(b, m)
        })
        .sum();
    Ok(total.clamp(0.0, 1.0))
}

/// Symmetric matrix of pairwise divergences with a zero diagonal.
pub fn pairwise_jsd(dists: &[Vec<f64>], exec: Exec) -> Result<Vec<Vec<f64>>, MetricsError> {
    let n = dists.len();
    let upper = exec.map_range(n, |i| {
        ((i + 1)..n)
            .map(|j| jsd(&dists[i], &dists[j]))
            .collect::<Result<Vec<f64>, _>>()
    });
    let mut matrix = vec![vec![0.0; n]; n];
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, value) in row?.into_iter().enumerate() {
            let j = i + 1 + offset;
            matrix[i][j] = value;
            matrix[j][i] = value;
        }
    }
    Ok(matrix)
}

fn mean_upper(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += matrix[i][j];
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Outlets sorted by name with a defined coarse distribution.
fn canonical_profiles(profiles: &[OutletEmotionProfile]) -> Vec<&OutletEmotionProfile> {
    let mut sorted: Vec<&OutletEmotionProfile> = profiles
        .iter()
        .filter(|p| p.distribution.shares.is_some())
        .collect();
    sorted.sort_by(|a, b| a.outlet.cmp(&b.outlet));
    sorted
}

fn share_vectors(profiles: &[&OutletEmotionProfile]) -> Result<Vec<Vec<f64>>, MetricsError> {
    let level = profiles.first().map(|p| p.distribution.level);
    profiles
        .iter()
        .map(|p| {
            if Some(p.distribution.level) != level {
                return Err(MetricsError::InvalidArgument(
                    "profiles mix distribution levels".into(),
                ));
            }
            Ok(p.distribution.share_vector().expect("filtered to defined shares"))
        })
        .collect()
}

/// Affective Polarization Index: mean pairwise divergence between outlet
/// distributions. Zero with fewer than two outlets. Outlets are put in name
/// order first, so the result does not depend on the input order.
pub fn api_index(profiles: &[OutletEmotionProfile]) -> Result<f64, MetricsError> {
    let sorted = canonical_profiles(profiles);
    let vectors = share_vectors(&sorted)?;
    Ok(mean_upper(&pairwise_jsd(&vectors, Exec::Sequential)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub outlets: Vec<String>,
    pub pairwise_jsd: Vec<Vec<f64>>,
    /// Mean of the upper triangle of `pairwise_jsd`.
    pub api: f64,
    /// Mean divergence of each outlet from the pooled distribution of all
    /// outlets; `None` without outlets.
    pub jsd: Option<f64>,
    pub matched_story_count: u64,
}

pub fn polarization(
    profiles: &[OutletEmotionProfile],
    matched_story_count: u64,
    exec: Exec,
) -> Result<PolarizationReport, MetricsError> {
    let sorted = canonical_profiles(profiles);
    let vectors = share_vectors(&sorted)?;
    let matrix = pairwise_jsd(&vectors, exec)?;

    let jsd_vs_pooled = match sorted.first() {
        None => None,
        Some(first) => {
            let width = first.distribution.counts.len();
            let mut pooled = vec![0u64; width];
            for p in &sorted {
                for (acc, c) in pooled.iter_mut().zip(p.distribution.count_vector()) {
                    *acc += c;
                }
            }
            let total: u64 = pooled.iter().sum();
            let pooled: Vec<f64> = pooled.iter().map(|c| *c as f64 / total as f64).collect();
            let sum = vectors
                .iter()
                .map(|v| jsd(v, &pooled))
                .sum::<Result<f64, _>>()?;
            Some(sum / vectors.len() as f64)
        }
    };

    Ok(PolarizationReport {
        outlets: sorted.iter().map(|p| p.outlet.clone()).collect(),
        api: mean_upper(&matrix),
        pairwise_jsd: matrix,
        jsd: jsd_vs_pooled,
        matched_story_count,
    })
}

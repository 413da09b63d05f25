use std::collections::{BTreeMap, HashMap};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::affect::affect_of;
use super::MetricsError;
use crate::annotation::EmotionAnnotation;
use crate::ingest::NewsRecord;
use crate::taxonomy::Taxonomy;

pub const DEFAULT_WINDOW_DAYS: u32 = 7;
pub const DEFAULT_INDEX_WINDOW: usize = 1_000;
/// Upper bound on points kept in the position-indexed series.
const INDEX_SERIES_POINTS: usize = 1_000;

/// Trailing mean with an expanding head: `out[i]` averages
/// `series[max(0, i + 1 - window) ..= i]`.
pub fn rolling_mean(series: &[f64], window: usize) -> Result<Vec<f64>, MetricsError> {
    if window < 1 {
        return Err(MetricsError::InvalidArgument("window must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, x) in series.iter().enumerate() {
        if i >= window && i % window == 0 {
            // resum once per window to keep rounding drift bounded
            sum = series[i + 1 - window..=i].iter().sum();
        } else {
            sum += x;
            if i >= window {
                sum -= series[i - window];
            }
        }
        let n = (i + 1).min(window);
        out.push(sum / n as f64);
    }
    Ok(out)
}

/// Per-day sums of item affect. Sums are kept so windows over several days
/// can be weighted by item count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyBucket {
    pub date: NaiveDate,
    pub count: u64,
    pub valence_sum: f64,
    pub arousal_sum: f64,
    pub mean_valence: f64,
    pub mean_arousal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub date: NaiveDate,
    /// Items inside the window ending at `date`.
    pub count: u64,
    pub valence: f64,
    pub arousal: f64,
}

/// Buckets for dated records that have an annotation, ascending by date.
pub fn daily_buckets(
    corpus: &[NewsRecord],
    annotations: &[EmotionAnnotation],
    taxonomy: &Taxonomy,
) -> Vec<DailyBucket> {
    let dates: HashMap<&str, NaiveDate> = corpus
        .iter()
        .filter(|r| r.has_date())
        .map(|r| (r.record_id.as_str(), r.published_at.date_naive()))
        .collect();
    let mut sums: BTreeMap<NaiveDate, (u64, f64, f64)> = BTreeMap::new();
    for ann in annotations {
        let Some(date) = dates.get(ann.record_id.as_str()) else {
            continue;
        };
        let s = affect_of(&ann.probabilities, taxonomy);
        let e = sums.entry(*date).or_default();
        e.0 += 1;
        e.1 += s.valence;
        e.2 += s.arousal;
    }
    sums.into_iter()
        .map(|(date, (count, v, a))| DailyBucket {
            date,
            count,
            valence_sum: v,
            arousal_sum: a,
            mean_valence: v / count as f64,
            mean_arousal: a / count as f64,
        })
        .collect()
}

/// Item-weighted means over the calendar window `(date - window_days, date]`,
/// one point per bucket. `window_days = 1` returns the per-day means.
pub fn rolling_by_days(
    buckets: &[DailyBucket],
    window_days: u32,
) -> Result<Vec<TrendPoint>, MetricsError> {
    if window_days < 1 {
        return Err(MetricsError::InvalidArgument("window must be at least 1 day".into()));
    }
    let mut points = Vec::with_capacity(buckets.len());
    let mut start = 0;
    for (i, bucket) in buckets.iter().enumerate() {
        let earliest = bucket
            .date
            .checked_sub_days(Days::new(u64::from(window_days) - 1))
            .unwrap_or(NaiveDate::MIN);
        while buckets[start].date < earliest {
            start += 1;
        }
        let window = &buckets[start..=i];
        let count: u64 = window.iter().map(|b| b.count).sum();
        let v: f64 = window.iter().map(|b| b.valence_sum).sum();
        let a: f64 = window.iter().map(|b| b.arousal_sum).sum();
        points.push(TrendPoint {
            date: bucket.date,
            count,
            valence: v / count as f64,
            arousal: a / count as f64,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPoint {
    pub index: usize,
    pub valence: f64,
    pub arousal: f64,
}

/// Rolling affect over item position, thinned to at most ~1,000 points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub window: usize,
    pub stride: usize,
    pub len: usize,
    pub points: Vec<IndexPoint>,
}

pub fn index_series(
    annotations: &[EmotionAnnotation],
    taxonomy: &Taxonomy,
    window: usize,
) -> Result<IndexSeries, MetricsError> {
    let scores: Vec<_> = annotations
        .iter()
        .map(|a| affect_of(&a.probabilities, taxonomy))
        .collect();
    let valence: Vec<f64> = scores.iter().map(|s| s.valence).collect();
    let arousal: Vec<f64> = scores.iter().map(|s| s.arousal).collect();
    let rv = rolling_mean(&valence, window)?;
    let ra = rolling_mean(&arousal, window)?;
    let stride = scores.len().div_ceil(INDEX_SERIES_POINTS).max(1);
    let points = (0..scores.len())
        .step_by(stride)
        .map(|i| IndexPoint {
            index: i,
            valence: rv[i],
            arousal: ra[i],
        })
        .collect();
    Ok(IndexSeries {
        window,
        stride,
        len: scores.len(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendsArtifact {
    pub window_days: u32,
    pub daily: Vec<DailyBucket>,
    pub rolling: Vec<TrendPoint>,
    pub index_series: IndexSeries,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_one_is_identity() {
        let s = [0.3, -0.2, 0.9, 0.0];
        assert_eq!(rolling_mean(&s, 1).unwrap(), s.to_vec());
    }

    #[test]
    fn constant_series() {
        assert_eq!(rolling_mean(&[0.5; 6], 3).unwrap(), vec![0.5; 6]);
    }

    #[test]
    fn expanding_head() {
        assert_eq!(
            rolling_mean(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            vec![1.0, 1.5, 2.5, 3.5]
        );
        assert_eq!(rolling_mean(&[1.0, 2.0], 10).unwrap(), vec![1.0, 1.5]);
    }

    #[test]
    fn zero_window_is_an_error() {
        assert!(rolling_mean(&[1.0], 0).is_err());
        assert!(rolling_by_days(&[], 0).is_err());
    }

    fn bucket(day: u32, count: u64, v: f64) -> DailyBucket {
        DailyBucket {
            date: NaiveDate::from_ymd_opt(2024, 1, day).unwrap(),
            count,
            valence_sum: v * count as f64,
            arousal_sum: 0.5 * count as f64,
            mean_valence: v,
            mean_arousal: 0.5,
        }
    }

    #[test]
    fn calendar_window_weights_by_count() {
        let buckets = [bucket(1, 1, 1.0), bucket(2, 3, 0.0), bucket(9, 2, -1.0)];
        let raw = rolling_by_days(&buckets, 1).unwrap();
        let means: Vec<f64> = raw.iter().map(|p| p.valence).collect();
        assert_eq!(means, vec![1.0, 0.0, -1.0]);

        let weekly = rolling_by_days(&buckets, 7).unwrap();
        assert_eq!(weekly[1].count, 4);
        assert!((weekly[1].valence - 0.25).abs() < 1e-15);
        // day 9 window covers days 3..=9
        assert_eq!(weekly[2].count, 2);
        assert_eq!(weekly[2].valence, -1.0);
    }
}

use serde::{Deserialize, Serialize};

use super::GapBucket;

/// Metrics for one enhanced clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    pub in_si_sdr: Vec<f64>,
    pub in_sdr: Vec<f64>,
    pub in_sdr_gap: f64,
    /// `None` when the gap exceeds the 12 dB bucket range.
    pub bucket: Option<GapBucket>,
    /// Channel whose clean reference the output was scored against.
    pub selected_channel: usize,
    pub out_si_sdr: f64,
    pub out_sdr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket: GapBucket,
    pub count: usize,
    /// Unweighted clip means; NaN for an empty bucket.
    pub mean_out_si_sdr: f64,
    pub mean_out_sdr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    /// True when the scoring reference was picked using the clean signals.
    pub oracle_reference: bool,
    pub records: Vec<ClipRecord>,
    pub buckets: Vec<BucketSummary>,
}

impl MetricsReport {
    pub fn new(method: impl Into<String>, oracle_reference: bool, records: Vec<ClipRecord>) -> Self {
        let buckets = GapBucket::ALL
            .iter()
            .map(|&bucket| {
                let members: Vec<&ClipRecord> = records.iter().filter(|r| r.bucket == Some(bucket)).collect();
                let n = members.len();
                let mean = |f: fn(&ClipRecord) -> f64| {
                    if n == 0 {
                        f64::NAN
                    } else {
                        members.iter().map(|r| f(r)).sum::<f64>() / n as f64
                    }
                };
                BucketSummary {
                    bucket,
                    count: n,
                    mean_out_si_sdr: mean(|r| r.out_si_sdr),
                    mean_out_sdr: mean(|r| r.out_sdr),
                }
            })
            .collect();
        Self { method: method.into(), oracle_reference, records, buckets }
    }

    pub fn bucket(&self, bucket: GapBucket) -> &BucketSummary {
        &self.buckets[bucket as usize]
    }

    pub fn mean_out_si_sdr(&self) -> f64 {
        self.records.iter().map(|r| r.out_si_sdr).sum::<f64>() / self.records.len().max(1) as f64
    }

    pub fn mean_out_sdr(&self) -> f64 {
        self.records.iter().map(|r| r.out_sdr).sum::<f64>() / self.records.len().max(1) as f64
    }

    /// Clips whose gap fell outside every bucket.
    pub fn unbucketed(&self) -> usize {
        self.records.iter().filter(|r| r.bucket.is_none()).count()
    }
}

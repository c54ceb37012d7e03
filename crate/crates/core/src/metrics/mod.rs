//! Signal-level quality measures and the input-SDR-gap bucketing used to
//! slice results.
//!
//! `si_sdr` and `sdr_proj` both take `(estimate, reference)`: the second
//! argument is always the clean signal being measured against.

mod report;
mod sdr;
mod si_sdr;

pub use report::{BucketSummary, ClipRecord, MetricsReport};
pub use sdr::{in_sdr_gap, in_sdrs, sdr_proj, DEFAULT_FILTER_LEN};
pub use si_sdr::{si_sdr, si_sdr_with_grad};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest value any metric reports, in dB; the floor is its negation.
pub const DB_CAP: f64 = 120.0;

/// Largest representable in-SDR gap.
pub const MAX_GAP_DB: f64 = 12.0;

/// Input SDR gap ranges `[0, 3]`, `(3, 6]` and `(6, 12]` dB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GapBucket {
    Low,
    Mid,
    High,
}

impl GapBucket {
    pub const ALL: [GapBucket; 3] = [GapBucket::Low, GapBucket::Mid, GapBucket::High];

    pub fn label(self) -> &'static str {
        match self {
            GapBucket::Low => "[0,3]",
            GapBucket::Mid => "(3,6]",
            GapBucket::High => "(6,12]",
        }
    }
}

impl std::fmt::Display for GapBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Bucket of an in-SDR gap. Right endpoints are closed.
pub fn bucket_of(gap_db: f64) -> Result<GapBucket> {
    if !(0.0..=MAX_GAP_DB).contains(&gap_db) {
        return Err(Error::OutOfRange { value: gap_db, lo: 0.0, hi: MAX_GAP_DB });
    }
    Ok(if gap_db <= 3.0 {
        GapBucket::Low
    } else if gap_db <= 6.0 {
        GapBucket::Mid
    } else {
        GapBucket::High
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn clamp_db(value: f64) -> f64 {
    value.clamp(-DB_CAP, DB_CAP)
}

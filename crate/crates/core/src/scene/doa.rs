use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacing of DOA samples in a trajectory, seconds.
pub const DOA_SPACING: f64 = 0.05;

/// `(x, y, z) = (cos el cos az, cos el sin az, sin el)`.
pub fn doa_to_cartesian(azimuth: f64, elevation: f64) -> [f64; 3] {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    [ce * ca, ce * sa, se]
}

/// Inverse of [`doa_to_cartesian`] for a unit vector: `(azimuth, elevation)`.
pub fn cartesian_to_doa(dir: [f64; 3]) -> (f64, f64) {
    (dir[1].atan2(dir[0]), dir[2].clamp(-1.0, 1.0).asin())
}

/// Target direction sampled every [`DOA_SPACING`] seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaTrajectory {
    pub timestamps: Vec<f64>,
    pub directions: Vec<[f64; 3]>,
}

impl DoaTrajectory {
    /// Samples `direction_at(t)` on the grid `0, 0.05, …` up to and including
    /// the first point at or beyond `duration`.
    pub fn sample(duration: f64, mut direction_at: impl FnMut(f64) -> [f64; 3]) -> Self {
        let count = (duration / DOA_SPACING - 1e-9).ceil().max(0.0) as usize + 1;
        let timestamps: Vec<f64> = (0..count).map(|j| j as f64 * DOA_SPACING).collect();
        let directions = timestamps.iter().map(|&t| direction_at(t)).collect();
        Self { timestamps, directions }
    }

    pub fn from_angles(timestamps: Vec<f64>, angles: &[(f64, f64)]) -> Result<Self> {
        if timestamps.len() != angles.len() {
            return Err(Error::invalid("timestamp and angle counts differ"));
        }
        let traj = Self { timestamps, directions: angles.iter().map(|&(a, e)| doa_to_cartesian(a, e)).collect() };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestamps.is_empty() {
            return Err(Error::invalid("empty DOA trajectory"));
        }
        if self.timestamps.len() != self.directions.len() {
            return Err(Error::invalid("timestamp and direction counts differ"));
        }
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("DOA timestamps must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn angles(&self) -> Vec<(f64, f64)> {
        self.directions.iter().map(|&d| cartesian_to_doa(d)).collect()
    }
}

/// Component-wise linear interpolation of the trajectory's cartesian
/// coordinates at `times`, clamped to the end points. Not renormalised.
pub fn interpolate_doa(traj: &DoaTrajectory, times: &[f64]) -> Result<Vec<[f64; 3]>> {
    traj.validate()?;
    let ts = &traj.timestamps;
    let ds = &traj.directions;
    Ok(times
        .iter()
        .map(|&t| {
            if t <= ts[0] {
                return ds[0];
            }
            if t >= ts[ts.len() - 1] {
                return ds[ds.len() - 1];
            }
            let hi = ts.partition_point(|&x| x <= t);
            let lo = hi - 1;
            let w = (t - ts[lo]) / (ts[hi] - ts[lo]);
            std::array::from_fn(|k| ds[lo][k] + w * (ds[hi][k] - ds[lo][k]))
        })
        .collect())
}

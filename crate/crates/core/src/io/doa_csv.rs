use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::DoaTrajectory;

#[derive(Debug, Serialize, Deserialize)]
struct DoaRow {
    time_s: f64,
    azimuth_rad: f64,
    elevation_rad: f64,
}

pub fn write_doa_csv(path: impl AsRef<Path>, traj: &DoaTrajectory) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (&time_s, (azimuth_rad, elevation_rad)) in traj.timestamps.iter().zip(traj.angles()) {
        w.serialize(DoaRow { time_s, azimuth_rad, elevation_rad }).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads angles and converts them to unit vectors.
pub fn read_doa_csv(path: impl AsRef<Path>) -> Result<DoaTrajectory> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let rows = r.deserialize::<DoaRow>().collect::<Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))?;
    let times = rows.iter().map(|r| r.time_s).collect();
    let angles: Vec<(f64, f64)> = rows.iter().map(|r| (r.azimuth_rad, r.elevation_rad)).collect();
    DoaTrajectory::from_angles(times, &angles).map_err(|e| Error::parse(path, e))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::io(path, source),
            other => Error::parse(path, format!("{other:?}")),
        }
    } else {
        Error::parse(path, e)
    }
}

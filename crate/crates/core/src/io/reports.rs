use std::path::Path;

use super::doa_csv::csv_err;
use crate::error::{Error, Result};
use crate::eval::{EnergyAnalysis, SelectionStats};
use crate::metrics::MetricsReport;
use crate::train::{EpochStats, SelectionEntry};

fn db(v: f64) -> String {
    format!("{v:.4}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per gap bucket plus an `all` row.
pub fn write_metrics_csv(path: impl AsRef<Path>, report: &MetricsReport) -> Result<()> {
    let mut rows: Vec<Vec<String>> = report
        .buckets
        .iter()
        .map(|b| {
            vec![
                report.method.clone(),
                b.bucket.label().to_string(),
                b.count.to_string(),
                db(b.mean_out_si_sdr),
                db(b.mean_out_sdr),
                report.oracle_reference.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        report.method.clone(),
        "all".into(),
        report.records.len().to_string(),
        db(report.mean_out_si_sdr()),
        db(report.mean_out_sdr()),
        report.oracle_reference.to_string(),
    ]);
    write_rows(
        path.as_ref(),
        &["method", "gap_bucket", "clips", "out_si_sdr_db", "out_sdr_db", "oracle_reference"],
        rows,
    )
}

pub fn write_clip_metrics_csv(path: impl AsRef<Path>, report: &MetricsReport) -> Result<()> {
    let join = |v: &[f64]| v.iter().map(|x| db(*x)).collect::<Vec<_>>().join(";");
    let rows = report.records.iter().map(|r| {
        vec![
            r.clip_id.clone(),
            r.bucket.map_or_else(|| "none".to_string(), |b| b.label().to_string()),
            db(r.in_sdr_gap),
            join(&r.in_si_sdr),
            join(&r.in_sdr),
            r.selected_channel.to_string(),
            db(r.out_si_sdr),
            db(r.out_sdr),
        ]
    });
    write_rows(
        path.as_ref(),
        &[
            "clip_id",
            "gap_bucket",
            "in_sdr_gap_db",
            "in_si_sdr_db",
            "in_sdr_db",
            "reference_channel",
            "out_si_sdr_db",
            "out_sdr_db",
        ],
        rows,
    )
}

/// Ranked energy totals; rank 0 is the most energetic masked channel.
pub fn write_energy_csv(path: impl AsRef<Path>, energy: &EnergyAnalysis) -> Result<()> {
    let last = energy.rank_totals.len() - 1;
    let rows = energy.rank_totals.iter().zip(&energy.proportions).enumerate().map(|(k, (t, p))| {
        let label = match k {
            0 => "most".to_string(),
            k if k == last => "least".to_string(),
            k => format!("rank{k}"),
        };
        vec![label, format!("{t:.6e}"), format!("{:.4}", 100.0 * p)]
    });
    write_rows(path.as_ref(), &["channel_rank", "energy", "proportion_percent"], rows)
}

pub fn write_selection_stats_csv(path: impl AsRef<Path>, stats: &SelectionStats) -> Result<()> {
    let rows = stats
        .counts
        .iter()
        .zip(&stats.fractions)
        .enumerate()
        .map(|(c, (n, f))| vec![c.to_string(), n.to_string(), format!("{f:.4}")]);
    write_rows(path.as_ref(), &["channel", "clips", "fraction"], rows)
}

pub fn write_history_csv(path: impl AsRef<Path>, history: &[EpochStats]) -> Result<()> {
    let rows = history.iter().map(|h| vec![h.epoch.to_string(), format!("{:e}", h.lr), db(h.mean_loss)]);
    write_rows(path.as_ref(), &["epoch", "lr", "mean_loss_db"], rows)
}

pub fn write_selection_log_csv(path: impl AsRef<Path>, log: &[SelectionEntry]) -> Result<()> {
    let rows = log
        .iter()
        .map(|s| vec![s.epoch.to_string(), s.step.to_string(), s.clip_id.clone(), s.channel.to_string(), db(s.loss)]);
    write_rows(path.as_ref(), &["epoch", "step", "clip_id", "channel", "loss_db"], rows)
}

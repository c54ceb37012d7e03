//! Files: WAV audio, DOA tracks, dataset manifests, checkpoints and CSV
//! reports.

mod checkpoint;
mod doa_csv;
mod manifest;
mod reports;
mod wav;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta, FORMAT_VERSION,
    MAGIC,
};
pub use doa_csv::{read_doa_csv, write_doa_csv};
pub use manifest::{export_clips, Manifest, ManifestRecord, Split};
pub use reports::{
    write_clip_metrics_csv, write_energy_csv, write_history_csv, write_metrics_csv, write_selection_log_csv,
    write_selection_stats_csv,
};
pub use wav::{read_wav, write_wav};

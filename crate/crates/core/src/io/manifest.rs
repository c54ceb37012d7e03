use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_doa_csv, read_wav};
use crate::error::{Error, Result};
use crate::scene::{SceneConfig, TrainingClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
}

/// One clip's files, relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub clip_id: String,
    pub mixture_wav: PathBuf,
    pub refs_wav: PathBuf,
    pub doa_csv: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Scene settings the clips were simulated with, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneConfig>,
    pub records: Vec<ManifestRecord>,
    /// Directory relative paths resolve against; not serialised.
    #[serde(skip)]
    pub root: PathBuf,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for r in &m.records {
            for p in [&r.mixture_wav, &r.refs_wav, &r.doa_csv] {
                if !m.root.join(p).is_file() {
                    return Err(Error::parse(path, format!("record {}: missing file {}", r.clip_id, p.display())));
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Reads every clip in `split` (all clips for `None`), checking that
    /// they share a channel count and that mixture and references agree.
    pub fn load_clips(&self, split: Option<Split>) -> Result<Vec<TrainingClip>> {
        let mut clips: Vec<TrainingClip> = Vec::new();
        for r in self.records.iter().filter(|r| split.is_none_or(|s| r.split == s)) {
            let mixture = read_wav(self.root.join(&r.mixture_wav))?;
            let refs = read_wav(self.root.join(&r.refs_wav))?;
            let doa = read_doa_csv(self.root.join(&r.doa_csv))?;
            if mixture.num_channels() != refs.num_channels() || mixture.len() != refs.len() {
                return Err(Error::invalid(format!(
                    "record {}: mixture is {}x{}, references are {}x{}",
                    r.clip_id,
                    mixture.num_channels(),
                    mixture.len(),
                    refs.num_channels(),
                    refs.len()
                )));
            }
            if let Some(first) = clips.first() {
                if first.channels() != mixture.num_channels() {
                    return Err(Error::invalid(format!(
                        "record {}: {} channels, but {} has {}",
                        r.clip_id,
                        mixture.num_channels(),
                        first.clip_id,
                        first.channels()
                    )));
                }
            }
            clips.push(TrainingClip::from_parts(r.clip_id.clone(), mixture, refs, doa)?);
        }
        Ok(clips)
    }
}

/// Writes each clip's mixture, references and DOA track under `dir/clips`
/// and a `manifest.json` in `dir` listing them.
pub fn export_clips(
    dir: impl AsRef<Path>,
    clips: &[(TrainingClip, Split)],
    scene: Option<SceneConfig>,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    let clip_dir = dir.join("clips");
    std::fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;
    let mut records = Vec::with_capacity(clips.len());
    for (clip, split) in clips {
        let rel = |suffix: &str| PathBuf::from("clips").join(format!("{}{suffix}", clip.clip_id));
        let record = ManifestRecord {
            clip_id: clip.clip_id.clone(),
            mixture_wav: rel("_mix.wav"),
            refs_wav: rel("_refs.wav"),
            doa_csv: rel("_doa.csv"),
            split: *split,
        };
        super::write_wav(dir.join(&record.mixture_wav), &clip.mixture)?;
        super::write_wav(dir.join(&record.refs_wav), &clip.refs)?;
        super::write_doa_csv(dir.join(&record.doa_csv), &clip.doa)?;
        records.push(record);
    }
    let manifest = Manifest { scene, records, root: dir.to_path_buf() };
    manifest.save(dir.join("manifest.json"))?;
    Ok(manifest)
}

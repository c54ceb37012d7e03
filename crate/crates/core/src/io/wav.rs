use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::MultiChannelWaveform;

fn wav_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::parse(path, other),
    }
}

/// Writes interleaved 32-bit float PCM. Samples are rounded to `f32`.
pub fn write_wav(path: impl AsRef<Path>, wave: &MultiChannelWaveform) -> Result<()> {
    let path = path.as_ref();
    let channels = u16::try_from(wave.num_channels()).map_err(|_| Error::invalid("too many channels for WAV"))?;
    if channels == 0 {
        return Err(Error::invalid("cannot write a WAV with no channels"));
    }
    let spec = WavSpec { channels, sample_rate: wave.sample_rate(), bits_per_sample: 32, sample_format: SampleFormat::Float };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for t in 0..wave.len() {
        for ch in wave.channels() {
            writer.write_sample(ch[t] as f32).map_err(|e| wav_err(path, e))?;
        }
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

/// Reads float or integer PCM; integers are scaled to `[-1, 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<MultiChannelWaveform> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let samples: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => {
            reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>().map_err(|e| wav_err(path, e))?
        }
        SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| wav_err(path, e))?
        }
    };
    if channels == 0 || !samples.len().is_multiple_of(channels) {
        return Err(Error::parse(path, "sample count is not a multiple of the channel count"));
    }
    let mut out = vec![Vec::with_capacity(samples.len() / channels); channels];
    for frame in samples.chunks_exact(channels) {
        for (c, v) in frame.iter().enumerate() {
            out[c].push(*v);
        }
    }
    MultiChannelWaveform::new(out, spec.sample_rate)
}

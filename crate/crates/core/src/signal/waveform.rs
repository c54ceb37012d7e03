use crate::error::{Error, Result};

/// A `C × T` block of real samples: a mixture, a reference set or a residual.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelWaveform {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl MultiChannelWaveform {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::invalid("waveform needs at least one channel"));
        };
        let len = first.len();
        if let Some(c) = channels.iter().position(|ch| ch.len() != len) {
            return Err(Error::invalid(format!(
                "channel {c} has {} samples, channel 0 has {len}",
                channels[c].len()
            )));
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("waveform contains non-finite samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn zeros(channels: usize, len: usize, sample_rate: u32) -> Self {
        Self { channels: vec![vec![0.0; len]; channels.max(1)], sample_rate }
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            channels: self.channels.iter().map(|ch| ch[start..end].to_vec()).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Element-wise `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.num_channels() != other.num_channels() || self.len() != other.len() {
            return Err(Error::invalid("waveform shapes differ"));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self { channels, sample_rate: self.sample_rate })
    }

    /// Copy with channel `first` moved to index 0, the rest keeping their order.
    pub fn with_channel_first(&self, first: usize) -> Self {
        Self { channels: reorder_first(&self.channels, first), sample_rate: self.sample_rate }
    }
}

pub(crate) fn reorder_first<T: Clone>(items: &[T], first: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(items.len());
    out.push(items[first].clone());
    out.extend(items.iter().enumerate().filter(|(i, _)| *i != first).map(|(_, x)| x.clone()));
    out
}

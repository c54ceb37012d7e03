//! Time-frequency analysis and the mask-domain filter-and-sum combiner.
//!
//! Everything here is a pure function of its inputs. Spectrograms are stored
//! frame-major (`values[frame * freq_bins + bin]`) so one STFT frame is a
//! contiguous slice.

mod masking;
mod stft;
mod waveform;

pub use masking::{apply_masks, apply_masks_adjoint, stack_features, ComplexMaskSet, FeatureTensor};
pub use stft::{istft, istft_adjoint, stft, ComplexSpectrogram, StftConfig, Window};
pub use waveform::MultiChannelWaveform;

pub use rustfft::num_complex::Complex64;

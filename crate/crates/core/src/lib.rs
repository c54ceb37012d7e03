//! Multi-channel complex masking for single-talker speech enhancement, with
//! a choice of how the target microphone is picked.
//!
//! A frequency-then-time recurrent network, conditioned on the talker's
//! direction, predicts complex masks for the STFT of each microphone. The
//! masked spectra are summed and resynthesised. Training minimises negative
//! SI-SDR against a clean reference channel that is either fixed or chosen
//! per clip.
//!
//! ```
//! use mcmask::net::{init_params, NetConfig};
//! use mcmask::scene::{simulate_clip, SceneConfig};
//! use mcmask::signal::StftConfig;
//! use mcmask::train::{enhance, select_reference, MethodPolicy};
//!
//! let clip = simulate_clip(&SceneConfig { clip_len: 0.2, ..SceneConfig::default() }, 0)?;
//! let stft = StftConfig::default();
//! let params = init_params(&NetConfig::new(2, stft.freq_bins(), 2).with_hidden(4, 4), 1)?;
//! let out = enhance(&clip, &params, MethodPolicy::MM_AUTO_OUT, &stft)?;
//! let picked = select_reference(&out.waveform, &clip.refs)?;
//! assert!(picked.channel < 2);
//! # Ok::<(), mcmask::Error>(())
//! ```
//!
//! The `mcmask` binary wraps simulation, training, enhancement and the
//! evaluation reports; the guide in `book/` walks through each module.

pub mod error;
pub mod eval;
pub mod io;
pub mod metrics;
pub mod net;
pub mod scene;
pub mod signal;
pub mod train;

pub use error::{Error, Result};

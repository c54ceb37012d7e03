//! `RCMM` binary checkpoints.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic      b"RCMM"
//! version    u32 (= 1)
//! net_cfg    channels_in, freq_bins, f_hidden, t_hidden, output_channels: u32; precision: u8 (0 = f32, 1 = f64)
//! tensors    table (below)
//! optimizer  u8 flag; if 1: beta1, beta2, eps: f64; step: u64; first-moment table; second-moment table
//! metadata   epoch: u32; lr: f64; seed: u64
//!
//! table      count: u32, then per tensor:
//!            name_len: u16, name: UTF-8, ndim: u8, dims: u64 × ndim, dtype: u8 (0 = f32, 1 = f64), data
//! ```
//!
//! Parameters are stored at their configured precision, moments always as
//! `f64`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::net::{ModelParams, NetConfig, Precision};
use crate::train::{AdamConfig, AdamState};

pub const MAGIC: &[u8; 4] = b"RCMM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMeta {
    /// Epochs completed.
    pub epoch: u32,
    /// Learning rate of the last epoch.
    pub lr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub optimizer: Option<AdamState>,
    pub meta: TrainingMeta,
}

const F32_TAG: u8 = 0;
const F64_TAG: u8 = 1;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn put_table(out: &mut Vec<u8>, params: &ModelParams, dtype: u8) -> Result<()> {
    let tensors = params.tensors();
    out.extend((tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend((name.len() as u16).to_le_bytes());
        out.extend(name.as_bytes());
        out.push(u8::try_from(t.shape.len()).map_err(|_| fmt_err("tensor rank above 255"))?);
        for &d in &t.shape {
            out.extend((d as u64).to_le_bytes());
        }
        out.push(dtype);
        for &v in &t.data {
            if dtype == F32_TAG {
                out.extend((v as f32).to_le_bytes());
            } else {
                out.extend(v.to_le_bytes());
            }
        }
    }
    Ok(())
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    ckpt.params.validate()?;
    let cfg = &ckpt.params.config;
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(FORMAT_VERSION.to_le_bytes());
    for d in [cfg.channels_in, cfg.freq_bins, cfg.f_hidden, cfg.t_hidden, cfg.output_channels] {
        out.extend(u32::try_from(d).map_err(|_| fmt_err("dimension exceeds u32"))?.to_le_bytes());
    }
    let dtype = match cfg.precision {
        Precision::F32 => F32_TAG,
        Precision::F64 => F64_TAG,
    };
    out.push(dtype);
    put_table(&mut out, &ckpt.params, dtype)?;
    match &ckpt.optimizer {
        None => out.push(0),
        Some(opt) => {
            out.push(1);
            for v in [opt.config.beta1, opt.config.beta2, opt.config.eps] {
                out.extend(v.to_le_bytes());
            }
            out.extend(opt.step.to_le_bytes());
            put_table(&mut out, &opt.m, F64_TAG)?;
            put_table(&mut out, &opt.v, F64_TAG)?;
        }
    }
    out.extend(ckpt.meta.epoch.to_le_bytes());
    out.extend(ckpt.meta.lr.to_le_bytes());
    out.extend(ckpt.meta.seed.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| fmt_err("truncated checkpoint"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

/// Reads a table into a zeroed `template`, requiring the same names and
/// shapes in the same order.
fn get_table(cur: &mut Cursor, mut template: ModelParams) -> Result<ModelParams> {
    let count = cur.u32()? as usize;
    let mut slots = template.tensors_mut();
    if count != slots.len() {
        return Err(fmt_err(format!("expected {} tensors, found {count}", slots.len())));
    }
    for (expected, t) in slots.iter_mut() {
        let len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(len)?).map_err(|_| fmt_err("tensor name is not UTF-8"))?;
        if name != *expected {
            return Err(fmt_err(format!("expected tensor {expected}, found {name}")));
        }
        let ndim = cur.u8()? as usize;
        let dims = (0..ndim).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims != t.shape {
            return Err(fmt_err(format!("tensor {name} has shape {dims:?}, expected {:?}", t.shape)));
        }
        match cur.u8()? {
            F32_TAG => {
                for v in t.data.iter_mut() {
                    *v = f32::from_le_bytes(cur.array()?) as f64;
                }
            }
            F64_TAG => {
                for v in t.data.iter_mut() {
                    *v = cur.f64()?;
                }
            }
            tag => return Err(fmt_err(format!("unknown dtype tag {tag} for {name}"))),
        }
    }
    drop(slots);
    Ok(template)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(fmt_err("not an RCMM checkpoint"));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!("unsupported checkpoint version {version}")));
    }
    let mut dims = [0usize; 5];
    for d in dims.iter_mut() {
        *d = cur.u32()? as usize;
    }
    let precision = match cur.u8()? {
        F32_TAG => Precision::F32,
        F64_TAG => Precision::F64,
        tag => return Err(fmt_err(format!("unknown precision tag {tag}"))),
    };
    let config = NetConfig {
        channels_in: dims[0],
        freq_bins: dims[1],
        f_hidden: dims[2],
        t_hidden: dims[3],
        output_channels: dims[4],
        precision,
    };
    config.validate().map_err(|e| fmt_err(e.to_string()))?;
    let params = get_table(&mut cur, ModelParams::zeros(config))?;
    let optimizer = match cur.u8()? {
        0 => None,
        1 => {
            let adam = AdamConfig { beta1: cur.f64()?, beta2: cur.f64()?, eps: cur.f64()? };
            let step = cur.u64()?;
            let m = get_table(&mut cur, ModelParams::zeros(config))?;
            let v = get_table(&mut cur, ModelParams::zeros(config))?;
            Some(AdamState { config: adam, step, m, v })
        }
        flag => return Err(fmt_err(format!("bad optimizer flag {flag}"))),
    };
    let meta = TrainingMeta { epoch: cur.u32()?, lr: cur.f64()?, seed: cur.u64()? };
    if cur.pos != bytes.len() {
        return Err(fmt_err(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    params.validate().map_err(|e| fmt_err(e.to_string()))?;
    Ok(Checkpoint { params, optimizer, meta })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(ckpt)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

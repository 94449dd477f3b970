//! Binary model checkpoint format (PCGM).
//!
//! Layout, all little-endian:
//!   magic      4 bytes  "PCGM"
//!   version    u32      1
//!   input_dim  u32
//!   hidden     u32      per direction
//!   layers     u32      BiLSTM layer count (2)
//!   classes    u32
//!   payload    f64      all parameters in the fixed order documented on
//!                       [`ModelParams::param_slices`]
//!
//! An optional trailer makes a checkpoint self-describing:
//!   magic      4 bytes  "META"
//!   cfg_len    u32      UTF-8 `key = value` pipeline config text
//!   cfg        bytes
//!   q          u32      feature rows
//!   mean       q f64
//!   std        q f64

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::config::PipelineConfig;
use crate::dsp::FeatureStats;
use crate::error::{Error, Result};
use crate::nn::params::ModelParams;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PCGM";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const META_MAGIC: &[u8; 4] = b"META";
const LSTM_LAYERS: u32 = 2;

/// Pipeline settings and standardization stats embedded with a model.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub config: PipelineConfig,
    pub stats: FeatureStats,
}

/// A loaded checkpoint; `meta` is present when the file carries a trailer.
pub struct Checkpoint {
    pub model: ModelParams,
    pub meta: Option<CheckpointMeta>,
}

pub fn save_checkpoint(model: &ModelParams, path: &Path) -> Result<()> {
    save_checkpoint_with_meta(model, None, path)
}

pub fn save_checkpoint_with_meta(
    model: &ModelParams,
    meta: Option<&CheckpointMeta>,
    path: &Path,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut out = |buf: &[u8]| w.write_all(buf).map_err(|e| Error::io(path, e));
    out(CHECKPOINT_MAGIC)?;
    out(&CHECKPOINT_VERSION.to_le_bytes())?;
    out(&(model.input_dim as u32).to_le_bytes())?;
    out(&(model.hidden as u32).to_le_bytes())?;
    out(&LSTM_LAYERS.to_le_bytes())?;
    out(&(model.classes as u32).to_le_bytes())?;
    for slice in model.param_slices() {
        for &v in slice {
            out(&v.to_le_bytes())?;
        }
    }
    if let Some(meta) = meta {
        if meta.stats.q() != model.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "stats cover {} rows, model expects {}",
                meta.stats.q(),
                model.input_dim
            )));
        }
        let cfg = meta.config.to_config_str();
        out(META_MAGIC)?;
        out(&(cfg.len() as u32).to_le_bytes())?;
        out(cfg.as_bytes())?;
        out(&(meta.stats.q() as u32).to_le_bytes())?;
        for &v in &meta.stats.mean {
            out(&v.to_le_bytes())?;
        }
        for &v in &meta.stats.std {
            out(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(
                "checkpoint",
                self.path,
                format!(
                    "truncated: needed {} bytes at offset {}, file has {}",
                    n,
                    self.pos,
                    self.buf.len()
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    Ok(load_checkpoint_full(path)?.model)
}

pub fn load_checkpoint_full(path: &Path) -> Result<Checkpoint> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        buf: &buf,
        pos: 0,
        path,
    };

    if c.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", path, "bad magic"));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            "checkpoint",
            path,
            format!("unsupported version {version}"),
        ));
    }
    let input_dim = c.u32()? as usize;
    let hidden = c.u32()? as usize;
    let layers = c.u32()?;
    let classes = c.u32()? as usize;
    if layers != LSTM_LAYERS {
        return Err(Error::format(
            "checkpoint",
            path,
            format!("descriptor says {layers} recurrent layers, expected {LSTM_LAYERS}"),
        ));
    }
    if input_dim == 0 || hidden == 0 || classes == 0 {
        return Err(Error::format("checkpoint", path, "zero dimension in descriptor"));
    }

    let mut model = ModelParams::zeros(input_dim, hidden, classes);
    for slice in model.param_slices_mut() {
        for v in slice {
            *v = c.f64()?;
        }
    }

    let meta = if c.remaining() == 0 {
        None
    } else {
        if c.take(4)? != META_MAGIC {
            return Err(Error::format(
                "checkpoint",
                path,
                "trailing bytes after parameters are not a metadata trailer",
            ));
        }
        let cfg_len = c.u32()? as usize;
        let cfg_text = std::str::from_utf8(c.take(cfg_len)?)
            .map_err(|_| Error::format("checkpoint", path, "config trailer is not UTF-8"))?;
        let config = PipelineConfig::from_config_str(cfg_text)?;
        let q = c.u32()? as usize;
        if q != input_dim {
            return Err(Error::format(
                "checkpoint",
                path,
                format!("stats cover {q} rows, model expects {input_dim}"),
            ));
        }
        let mut mean = Vec::with_capacity(q);
        for _ in 0..q {
            mean.push(c.f64()?);
        }
        let mut std = Vec::with_capacity(q);
        for _ in 0..q {
            std.push(c.f64()?);
        }
        if c.remaining() != 0 {
            return Err(Error::format(
                "checkpoint",
                path,
                format!("{} unexpected trailing bytes", c.remaining()),
            ));
        }
        Some(CheckpointMeta {
            config,
            stats: FeatureStats { mean, std },
        })
    };
    Ok(Checkpoint { model, meta })
}

//! Minimal RIFF/WAVE reader and writer.
//!
//! Reading supports 16-bit integer PCM and 32-bit IEEE float; multi-channel
//! files are reduced to the first channel with a warning. Writing emits
//! mono 32-bit IEEE float.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Signal;

/// Scale applied to 16-bit PCM samples.
pub const PCM16_SCALE: f64 = 1.0 / 32768.0;

fn rd_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn rd_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a WAV file into a [`Signal`]; integer PCM is scaled to [-1, 1].
pub fn read_wav(path: &Path) -> Result<Signal> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let bad = |detail: &str| Error::format("wav", path, detail.to_string());

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("missing RIFF/WAVE header"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<(usize, usize)> = None; // offset, len
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = rd_u32(&bytes, at + 4) as usize;
        let body = at + 8;
        if body + size > bytes.len() {
            return Err(bad("chunk extends past end of file"));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                fmt = Some((
                    rd_u16(&bytes, body),
                    rd_u16(&bytes, body + 2),
                    rd_u32(&bytes, body + 4),
                    rd_u16(&bytes, body + 14),
                ));
            }
            b"data" => data = Some((body, size)),
            _ => {}
        }
        at = body + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| bad("missing fmt chunk"))?;
    let (data_at, data_len) = data.ok_or_else(|| bad("missing data chunk"))?;
    if data_len == 0 {
        return Err(bad("zero-length data chunk"));
    }
    if channels == 0 || rate == 0 {
        return Err(bad("fmt chunk has zero channels or rate"));
    }
    if channels > 1 {
        eprintln!(
            "warning: {} has {} channels; taking channel 0",
            path.display(),
            channels
        );
    }

    let ch = channels as usize;
    let samples: Vec<f64> = match (format, bits) {
        (1, 16) => {
            let frame = 2 * ch;
            (0..data_len / frame)
                .map(|i| {
                    let at = data_at + i * frame;
                    i16::from_le_bytes([bytes[at], bytes[at + 1]]) as f64 * PCM16_SCALE
                })
                .collect()
        }
        (3, 32) => {
            let frame = 4 * ch;
            (0..data_len / frame)
                .map(|i| {
                    let at = data_at + i * frame;
                    f32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
                        as f64
                })
                .collect()
        }
        _ => {
            return Err(bad(&format!(
                "unsupported encoding: format tag {format}, {bits} bits"
            )))
        }
    };
    if samples.is_empty() {
        return Err(bad("data chunk holds no complete frame"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(bad("non-finite sample values"));
    }

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Signal::new(samples, rate as f64, id)
}

/// Writes a mono 32-bit IEEE float WAV file.
pub fn write_wav(signal: &Signal, path: &Path) -> Result<()> {
    let n = signal.len() as u32;
    let data_len = n * 4;
    let rate = signal.fs.round() as u32;
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut out = |buf: &[u8]| w.write_all(buf).map_err(|e| Error::io(path, e));

    out(b"RIFF")?;
    out(&(36 + data_len).to_le_bytes())?;
    out(b"WAVE")?;
    out(b"fmt ")?;
    out(&16u32.to_le_bytes())?;
    out(&3u16.to_le_bytes())?; // IEEE float
    out(&1u16.to_le_bytes())?; // mono
    out(&rate.to_le_bytes())?;
    out(&(rate * 4).to_le_bytes())?;
    out(&4u16.to_le_bytes())?;
    out(&32u16.to_le_bytes())?;
    out(b"data")?;
    out(&data_len.to_le_bytes())?;
    for &s in &signal.samples {
        out(&(s as f32).to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

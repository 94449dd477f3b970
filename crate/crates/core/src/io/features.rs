//! Binary feature-matrix format (PCGF).
//!
//! Layout, all little-endian:
//!   magic   4 bytes  "PCGF"
//!   version u32      1
//!   q       u32      feature rows
//!   p       u64      timestamps
//!   payload q*p f32  row-major (row = frequency bin)
//!
//! Values are stored as f32; in-memory matrices are f64, so a round trip is
//! bit-exact whenever the values are f32-representable (which holds for
//! everything this crate writes through this path).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"PCGF";
pub const FEATURE_VERSION: u32 = 1;

pub fn write_features(f: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut out = |buf: &[u8]| w.write_all(buf).map_err(|e| Error::io(path, e));
    out(FEATURE_MAGIC)?;
    out(&FEATURE_VERSION.to_le_bytes())?;
    out(&(f.q() as u32).to_le_bytes())?;
    out(&(f.p() as u64).to_le_bytes())?;
    for row in f.values.rows() {
        for &v in row {
            out(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::format("features", path, detail);

    if bytes.len() < 20 {
        return Err(bad("file shorter than header".into()));
    }
    if &bytes[0..4] != FEATURE_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let q = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let p = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected = 20 + 4 * q * p;
    if bytes.len() < expected {
        return Err(bad(format!(
            "truncated payload: {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(bad(format!(
            "trailing bytes: {} past expected {expected}",
            bytes.len() - expected
        )));
    }
    let mut values = Array2::zeros((q, p));
    let mut at = 20;
    for i in 0..q {
        for t in 0..p {
            values[(i, t)] =
                f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64;
            at += 4;
        }
    }
    Ok(FeatureMatrix {
        values,
        bin_freqs: None,
        fs: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_f32_matrix(seed: u64, q: usize, p: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix {
            values: Array2::from_shape_fn((q, p), |_| rng.random::<f32>() as f64),
            bin_freqs: None,
            fs: 1000.0,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pcgf");
        let f = random_f32_matrix(1, 7, 31);
        write_features(&f, &path).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn file_size_is_header_plus_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pcgf");
        write_features(&random_f32_matrix(2, 2, 3), &path).unwrap();
        // 4 magic + 4 version + 4 q + 8 p = 20-byte header, then 6 f32.
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 20 + 24);
    }

    #[test]
    fn truncated_and_padded_files_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pcgf");
        write_features(&random_f32_matrix(3, 2, 3), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(read_features(&path).is_err());

        let mut padded = bytes.clone();
        padded.push(0);
        std::fs::write(&path, &padded).unwrap();
        assert!(read_features(&path).is_err());

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(read_features(&path).is_err());

        let mut bad_version = bytes;
        bad_version[4] = 9;
        std::fs::write(&path, &bad_version).unwrap();
        assert!(read_features(&path).is_err());
    }
}

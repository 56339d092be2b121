//! Field snapshots: a raw little-endian `f64` payload (x fastest) plus a JSON
//! sidecar at `<payload>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    #[serde(rename = "L")]
    pub len: f64,
    pub d: usize,
    pub time: f64,
    pub name: String,
    pub checksum_crc32: u32,
    pub byte_order: String,
    pub dtype: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn encode(values: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Writes the payload and its sidecar; returns the metadata written.
pub fn save_snapshot(f: &ScalarField, time: f64, name: &str, path: &Path) -> Result<SnapshotMeta> {
    let bytes = encode(f.data());
    let meta = SnapshotMeta {
        n: f.grid().n(),
        len: f.grid().len(),
        d: DIM,
        time,
        name: name.to_string(),
        checksum_crc32: crc32fast::hash(&bytes),
        byte_order: "LE".into(),
        dtype: "f64".into(),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, &bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

pub fn load_snapshot(path: &Path) -> Result<(ScalarField, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    if meta.byte_order != "LE" || meta.dtype != "f64" {
        return Err(Error::Snapshot(format!(
            "unsupported encoding {}/{}",
            meta.byte_order, meta.dtype
        )));
    }
    let bytes = fs::read(path)?;
    let found = crc32fast::hash(&bytes);
    if found != meta.checksum_crc32 {
        return Err(Error::ChecksumMismatch {
            expected: meta.checksum_crc32,
            found,
        });
    }
    let grid = Grid::new(meta.n, meta.len)?;
    if bytes.len() != 8 * grid.num_cells() {
        let found_n = ((bytes.len() / 8) as f64).cbrt().round() as usize;
        return Err(Error::GridMismatch {
            expected: meta.n,
            found: found_n,
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((ScalarField::from_vec(grid, data)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_preset, Preset};

    fn field() -> ScalarField {
        let g = make_grid(16, 8.0).unwrap();
        sample_preset(
            &g,
            &Preset::RandomBumps {
                seed: 3,
                count: 3,
                mass: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let f = field();
        save_snapshot(&f, 0.5, "u", &path).unwrap();
        let (g, meta) = load_snapshot(&path).unwrap();
        assert_eq!(meta.time, 0.5);
        assert_eq!(meta.n, 16);
        assert!(f
            .data()
            .iter()
            .zip(g.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let side: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        for key in ["n", "L", "d", "time", "name", "checksum_crc32", "byte_order", "dtype"] {
            assert!(side.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn corrupted_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        save_snapshot(&field(), 0.0, "u", &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[100] ^= 0x5a;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_snapshot(&path), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn sidecar_grid_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let mut meta = save_snapshot(&field(), 0.0, "u", &path).unwrap();
        meta.n = 32;
        fs::write(sidecar_path(&path), serde_json::to_string(&meta).unwrap()).unwrap();
        assert!(matches!(load_snapshot(&path), Err(Error::GridMismatch { .. })));
    }
}

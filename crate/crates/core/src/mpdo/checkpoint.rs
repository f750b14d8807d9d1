//! Binary checkpoints: 8-byte magic, `u32` format version, `u64` length of a
//! JSON metadata block, the metadata, then every tensor as little-endian
//! `(re, im)` pairs of `f64` in storage order.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CanonicalForm, Mpdo};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"QJMPDO\r\n";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Run context stored next to the tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub sites: usize,
    pub chi_max: usize,
    pub dt: f64,
    pub time: f64,
    pub seed: u64,
    pub log_scale: f64,
    pub form: CanonicalForm,
    /// `(left, right)` of every site tensor.
    pub shapes: Vec<(usize, usize)>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Writes `mpdo` with run context; `sites`, `log_scale`, `form` and `shapes`
/// of `meta` are overwritten from the state.
pub fn save_checkpoint(path: &Path, mpdo: &Mpdo, meta: &CheckpointMeta) -> Result<()> {
    let meta = CheckpointMeta {
        sites: mpdo.sites(),
        log_scale: mpdo.log_scale,
        form: mpdo.form,
        shapes: mpdo.tensors.iter().map(|t| (t.left, t.right)).collect(),
        ..meta.clone()
    };
    let json = serde_json::to_vec(&meta).map_err(|e| corrupt(e.to_string()))?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for t in &mpdo.tensors {
        for z in &t.data {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Mpdo, CheckpointMeta)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = &bytes[..];
    let mut take = |n: usize| -> Result<&[u8]> {
        if cursor.len() < n {
            return Err(corrupt("truncated checkpoint"));
        }
        let (head, tail) = cursor.split_at(n);
        cursor = tail;
        Ok(head)
    };
    if take(8)? != MAGIC {
        return Err(corrupt("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported checkpoint version {version}")));
    }
    let len = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let meta: CheckpointMeta = serde_json::from_slice(take(len)?).map_err(|e| corrupt(e.to_string()))?;
    if meta.shapes.len() != meta.sites {
        return Err(corrupt("shape list does not match the site count"));
    }
    let mut tensors = Vec::with_capacity(meta.sites);
    for &(left, right) in &meta.shapes {
        let n = left * 4 * right;
        let raw = take(16 * n)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        tensors.push((left, right, data));
    }
    if !cursor.is_empty() {
        return Err(corrupt("trailing bytes after the last tensor"));
    }
    let mut mpdo = Mpdo::from_tensors(tensors).map_err(|e| corrupt(e.to_string()))?;
    mpdo.log_scale = meta.log_scale;
    mpdo.form = meta.form;
    Ok((mpdo, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpdo::tests::random_mpdo;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            sites: 0,
            chi_max: 32,
            dt: 0.01,
            time: 1.5,
            seed: 42,
            log_scale: 0.0,
            form: CanonicalForm::None,
            shapes: vec![],
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.qjc");
        let mut m = random_mpdo(&[3, 5, 2], 1);
        m.canonicalize(CanonicalForm::Mixed(2)).unwrap();
        save_checkpoint(&path, &m, &meta()).unwrap();
        let (back, info) = load_checkpoint(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(info.sites, 4);
        assert_eq!(info.seed, 42);
        assert_eq!(info.shapes, vec![(1, 3), (3, 5), (5, 2), (2, 1)]);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.qjc");
        save_checkpoint(&path, &random_mpdo(&[2], 2), &meta()).unwrap();
        let good = std::fs::read(&path).unwrap();

        std::fs::write(&path, &good[..good.len() - 3]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        let mut bad = good.clone();
        bad[8] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
    }
}

//! Checkpoint container: a magic line, a one-line JSON manifest, then a
//! raw little-endian blob of tensor data. Entries are laid out in
//! sorted path order, so identical state always produces identical
//! bytes.

use super::{Real, Tensor};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CKPT_MAGIC: &str = "KFORGE-CKPT-1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint magic: expected `{expected}`, found `{found}`")]
    BadMagic { expected: String, found: String },
    #[error("checkpoint manifest is not valid JSON: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("checkpoint blob truncated: entry `{path}` needs bytes [{start}, {end}), blob has {len}")]
    Truncated {
        path: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("dtype mismatch for `{path}`: checkpoint holds {found}, loader expects {expected}")]
    DtypeMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("entry `{path}` declares shape {shape:?} but {count} elements")]
    ShapeCount {
        path: String,
        shape: Vec<usize>,
        count: usize,
    },
    #[error("checkpoint is missing parameter `{name}`")]
    MissingParam { name: String },
    #[error("checkpoint holds unexpected parameter `{name}`")]
    UnexpectedParam { name: String },
    #[error("shape mismatch for `{name}`: model has {model:?}, checkpoint has {ckpt:?}")]
    ParamShape {
        name: String,
        model: Vec<usize>,
        ckpt: Vec<usize>,
    },
    #[error("checkpoint meta key `{key}` is missing or malformed")]
    Meta { key: String },
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    path: String,
    dtype: String,
    shape: Vec<usize>,
    /// Byte offset into the blob.
    offset: usize,
    /// Byte length.
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    meta: BTreeMap<String, String>,
    tensors: Vec<ManifestEntry>,
}

/// Writes `entries` (path -> tensor) plus string metadata to `path`.
pub fn save_checkpoint<T: Real>(
    path: &Path,
    meta: &BTreeMap<String, String>,
    entries: &BTreeMap<String, Tensor<T>>,
) -> Result<(), CheckpointError> {
    let mut manifest = Manifest {
        meta: meta.clone(),
        tensors: Vec::with_capacity(entries.len()),
    };
    let mut blob: Vec<u8> = Vec::new();
    for (name, tensor) in entries {
        let offset = blob.len();
        for &v in tensor.data() {
            blob.extend_from_slice(&v.to_le_bytes_vec());
        }
        manifest.tensors.push(ManifestEntry {
            path: name.clone(),
            dtype: T::DTYPE.to_string(),
            shape: tensor.shape().to_vec(),
            offset,
            len: blob.len() - offset,
        });
    }
    let manifest_line = serde_json::to_string(&manifest)?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        writeln!(f, "{}", CKPT_MAGIC)?;
        writeln!(f, "{}", manifest_line)?;
        f.write_all(&blob)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a checkpoint written by `save_checkpoint` with the same
/// element type. Returns (meta, path -> tensor); tensors are constants.
#[allow(clippy::type_complexity)]
pub fn load_checkpoint<T: Real>(
    path: &Path,
) -> Result<(BTreeMap<String, String>, BTreeMap<String, Tensor<T>>), CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let first_nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CheckpointError::BadMagic {
            expected: CKPT_MAGIC.to_string(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(32)]).into_owned(),
        })?;
    let magic = String::from_utf8_lossy(&bytes[..first_nl]).into_owned();
    if magic != CKPT_MAGIC {
        return Err(CheckpointError::BadMagic {
            expected: CKPT_MAGIC.to_string(),
            found: magic,
        });
    }
    let rest = &bytes[first_nl + 1..];
    let second_nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| {
        CheckpointError::BadMagic {
            expected: "manifest line".to_string(),
            found: "end of file".to_string(),
        }
    })?;
    let manifest: Manifest = serde_json::from_slice(&rest[..second_nl])?;
    let blob = &rest[second_nl + 1..];

    let mut out = BTreeMap::new();
    for entry in &manifest.tensors {
        if entry.dtype != T::DTYPE {
            return Err(CheckpointError::DtypeMismatch {
                path: entry.path.clone(),
                found: entry.dtype.clone(),
                expected: T::DTYPE.to_string(),
            });
        }
        let end = entry.offset + entry.len;
        if end > blob.len() {
            return Err(CheckpointError::Truncated {
                path: entry.path.clone(),
                start: entry.offset,
                end,
                len: blob.len(),
            });
        }
        let count = entry.len / T::BYTE_WIDTH;
        if entry.len % T::BYTE_WIDTH != 0 || count != entry.shape.iter().product::<usize>() {
            return Err(CheckpointError::ShapeCount {
                path: entry.path.clone(),
                shape: entry.shape.clone(),
                count,
            });
        }
        let data: Vec<T> = blob[entry.offset..end]
            .chunks_exact(T::BYTE_WIDTH)
            .map(T::from_le_slice)
            .collect();
        out.insert(entry.path.clone(), Tensor::from_vec(data, &entry.shape));
    }
    Ok((manifest.meta, out))
}

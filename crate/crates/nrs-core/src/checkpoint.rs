//! Versioned binary model checkpoints.
//!
//! Layout: an 8-byte magic, a format version, a JSON metadata header (the
//! network spec plus the training-set normalization statistics and label
//! map), then each state tensor as name + shape + raw little-endian f64
//! bits. Raw bits make the round trip exact; the permutation plan itself is
//! regenerated from the seed stored in the spec, which is deterministic by
//! construction.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{LabelMap, NormStats};
use crate::error::{NrsError, Result};
use crate::net::{Network, NetworkSpec};

const MAGIC: &[u8; 8] = b"NRSCKPT\0";
const VERSION: u32 = 1;

/// Everything needed to restore and use a trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub spec: NetworkSpec,
    pub norm: Option<NormStats>,
    pub label_map: Option<LabelMap>,
}

pub fn save_checkpoint(path: impl AsRef<Path>, net: &Network, meta: &CheckpointMeta) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    let header = serde_json::to_vec(meta)
        .map_err(|e| NrsError::Checkpoint(format!("cannot encode metadata: {e}")))?;
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);

    let tensors = net.state_tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, tensor) in tensors {
        let name_bytes = name.as_bytes();
        out.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(name_bytes);
        out.push(tensor.rank() as u8);
        for &dim in tensor.shape() {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    let mut file = fs::File::create(path.as_ref())?;
    file.write_all(&out)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(NrsError::Checkpoint("truncated file".into()));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Loads a checkpoint, rebuilding the network shape from the stored spec and
/// overwriting every state tensor with the stored bits.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Network, CheckpointMeta)> {
    let mut buf = Vec::new();
    fs::File::open(path.as_ref())?.read_to_end(&mut buf)?;
    let mut cur = Cursor { buf: &buf, pos: 0 };

    if cur.take(8)? != MAGIC {
        return Err(NrsError::Checkpoint("bad magic; not a checkpoint file".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(NrsError::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let header_len = cur.u32()? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| NrsError::Checkpoint(format!("cannot decode metadata: {e}")))?;

    // seed_model only affects initial weights, which are overwritten below
    let mut net = meta.spec.build(0)?;

    let tensor_count = cur.u32()? as usize;
    let mut stored: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let name_len = cur.u16()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|_| NrsError::Checkpoint("non-utf8 tensor name".into()))?;
        let rank = cur.take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u64()? as usize);
        }
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_bits(cur.u64()?));
        }
        stored.push((name, shape, data));
    }

    let mut slots = net.state_tensors_mut();
    if slots.len() != stored.len() {
        return Err(NrsError::Checkpoint(format!(
            "checkpoint holds {} tensors, model expects {}",
            stored.len(),
            slots.len()
        )));
    }
    for (slot, (name, shape, data)) in slots.iter_mut().zip(stored) {
        if slot.0 != name {
            return Err(NrsError::Checkpoint(format!(
                "tensor order mismatch: found '{name}', expected '{}'",
                slot.0
            )));
        }
        if slot.1.shape() != shape.as_slice() {
            return Err(NrsError::Checkpoint(format!(
                "tensor '{name}' has shape {shape:?}, expected {:?}",
                slot.1.shape()
            )));
        }
        slot.1.data_mut().copy_from_slice(&data);
    }

    Ok((net, meta))
}

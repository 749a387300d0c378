//! Binary checkpoint: magic `SSDC`, little-endian `u32` version and tensor
//! count, then per tensor a length-prefixed UTF-8 name, `u32` rank, `u32`
//! dims and `f32` payload.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor_nn::Tensor;

use super::files::write_atomic;

const MAGIC: &[u8; 4] = b"SSDC";
pub const CHECKPOINT_VERSION: u32 = 1;

fn bad(detail: impl Into<String>) -> Error {
    Error::Checkpoint(detail.into())
}

pub fn encode_checkpoint(tensors: &[(String, Tensor<f32>)]) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.extend(CHECKPOINT_VERSION.to_le_bytes());
    out.extend((tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend((name.len() as u32).to_le_bytes());
        out.extend(name.as_bytes());
        out.extend((t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend((d as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| bad(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Vec<(String, Tensor<f32>)>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let count = r.u32("tensor count")?;
    let mut out: Vec<(String, Tensor<f32>)> = Vec::new();
    for _ in 0..count {
        let len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "tensor name")?)
            .map_err(|_| bad("tensor name is not UTF-8"))?
            .to_string();
        if out.iter().any(|(n, _)| *n == name) {
            return Err(bad(format!("duplicate tensor '{name}'")));
        }
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| bad(format!("tensor '{name}' is too large")))?;
        let bytes_needed = n
            .checked_mul(4)
            .ok_or_else(|| bad(format!("tensor '{name}' is too large")))?;
        let payload = r.take(bytes_needed, &format!("payload of '{name}'"))?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let t = Tensor::new(&shape, data).map_err(|e| bad(format!("tensor '{name}': {e}")))?;
        out.push((name, t));
    }
    if r.pos != bytes.len() {
        return Err(bad(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - r.pos
        )));
    }
    Ok(out)
}

pub fn save_checkpoint(path: &Path, tensors: &[(String, Tensor<f32>)]) -> Result<()> {
    write_atomic(path, &encode_checkpoint(tensors))
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Tensor<f32>)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

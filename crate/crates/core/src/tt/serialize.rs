//! Binary and JSON containers for tensor trains.
//!
//! Binary layout (little-endian): magic `QTT1`, `u16` version, `u16` core
//! count, then for each core `u32` left bond, `u16` physical dimension,
//! `u32` right bond and the row-major complex128 entries (re, im pairs).
//! The JSON form carries the same fields with base64-encoded payloads.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use super::{Core, TensorTrain};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"QTT1";
const VERSION: u16 = 1;

fn encode_data(data: &[c64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * data.len());
    for z in data {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn decode_data(bytes: &[u8]) -> Vec<c64> {
    bytes
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            c64::new(re, im)
        })
        .collect()
}

fn check_header(count: usize, cores: &[Core]) -> Result<()> {
    if count > u16::MAX as usize {
        return Err(Error::invalid("too many cores for the container format"));
    }
    for c in cores {
        if c.left > u32::MAX as usize || c.right > u32::MAX as usize || c.phys > u16::MAX as usize {
            return Err(Error::invalid(
                "core dimensions exceed the container format",
            ));
        }
    }
    Ok(())
}

pub fn to_bytes(tt: &TensorTrain) -> Result<Vec<u8>> {
    check_header(tt.len(), tt.cores())?;
    let mut out = Vec::with_capacity(8 + tt.memory_bytes() + 10 * tt.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tt.len() as u16).to_le_bytes());
    for c in tt.cores() {
        out.extend_from_slice(&(c.left as u32).to_le_bytes());
        out.extend_from_slice(&(c.phys as u16).to_le_bytes());
        out.extend_from_slice(&(c.right as u32).to_le_bytes());
        out.extend_from_slice(&encode_data(&c.data));
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::invalid("truncated QTT container"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<TensorTrain> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::invalid("bad magic, expected QTT1"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::invalid(format!(
            "unsupported container version {version}"
        )));
    }
    let count = r.u16()? as usize;
    let mut cores = Vec::with_capacity(count);
    for _ in 0..count {
        let left = r.u32()? as usize;
        let phys = r.u16()? as usize;
        let right = r.u32()? as usize;
        let len = left
            .checked_mul(phys)
            .and_then(|v| v.checked_mul(right))
            .and_then(|v| v.checked_mul(16))
            .ok_or_else(|| Error::invalid("core size overflow"))?;
        let data = decode_data(r.take(len)?);
        cores.push(Core::new(left, phys, right, data)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::invalid("trailing bytes after QTT container"));
    }
    TensorTrain::new(cores)
}

#[derive(Serialize, Deserialize)]
struct JsonCore {
    left: usize,
    physical: usize,
    right: usize,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct JsonTrain {
    magic: String,
    version: u16,
    cores: Vec<JsonCore>,
}

pub fn to_json(tt: &TensorTrain) -> Result<String> {
    check_header(tt.len(), tt.cores())?;
    let doc = JsonTrain {
        magic: "QTT1".into(),
        version: VERSION,
        cores: tt
            .cores()
            .iter()
            .map(|c| JsonCore {
                left: c.left,
                physical: c.phys,
                right: c.right,
                data: B64.encode(encode_data(&c.data)),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))
}

pub fn from_json(s: &str) -> Result<TensorTrain> {
    let doc: JsonTrain =
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("malformed QTT JSON: {e}")))?;
    if doc.magic != "QTT1" || doc.version != VERSION {
        return Err(Error::invalid("unsupported QTT JSON header"));
    }
    let cores = doc
        .cores
        .into_iter()
        .map(|c| {
            let raw = B64
                .decode(c.data.as_bytes())
                .map_err(|e| Error::invalid(format!("bad base64 payload: {e}")))?;
            if raw.len() % 16 != 0 {
                return Err(Error::invalid(
                    "payload is not a whole number of complex128 values",
                ));
            }
            Core::new(c.left, c.physical, c.right, decode_data(&raw))
        })
        .collect::<Result<Vec<_>>>()?;
    TensorTrain::new(cores)
}

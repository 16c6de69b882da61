//! Binary trainer checkpoints.
//!
//! Little-endian layout: magic `PZCK`, version `u16`, config hash `u64`,
//! generation `u64`, Adam step count `u64`, then three length-prefixed
//! `f64` arrays (`u64` length, then values): parameters, first moments,
//! second moments. A CRC32 of everything before it closes the file.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::es::{AdamState, TrainerState};

pub const MAGIC: [u8; 4] = *b"PZCK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: u64,
    pub state: TrainerState,
}

fn put_array(buf: &mut Vec<u8>, values: &[f64]) {
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated")?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn array(&mut self) -> std::result::Result<Vec<f64>, String> {
        let n = usize::try_from(self.u64()?).map_err(|_| "array too long")?;
        let bytes = self.take(n.checked_mul(8).ok_or("array too long")?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let s = &self.state;
        let mut buf = Vec::with_capacity(48 + 24 * s.theta.len());
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.config_hash.to_le_bytes());
        buf.extend_from_slice(&s.generation.to_le_bytes());
        buf.extend_from_slice(&s.adam.t.to_le_bytes());
        put_array(&mut buf, &s.theta);
        put_array(&mut buf, &s.adam.m);
        put_array(&mut buf, &s.adam.v);
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        buf
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 4 + 2 + 4 {
            return Err("file too short".into());
        }
        if bytes[..4] != MAGIC {
            return Err("not a checkpoint (bad magic)".into());
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(format!("unsupported checkpoint version {version} (expected {VERSION})"));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
            return Err("checksum mismatch".into());
        }
        let mut r = Reader { bytes: body, at: 6 };
        let config_hash = r.u64()?;
        let generation = r.u64()?;
        let t = r.u64()?;
        let theta = r.array()?;
        let m = r.array()?;
        let v = r.array()?;
        if r.at != body.len() {
            return Err("trailing bytes".into());
        }
        if m.len() != theta.len() || v.len() != theta.len() {
            return Err("moment vectors differ in length from the parameters".into());
        }
        let mut adam = AdamState::new(0);
        adam.m = m;
        adam.v = v;
        adam.t = t;
        Ok(Checkpoint {
            config_hash,
            state: TrainerState { theta, adam, generation },
        })
    }

    /// Writes through a temporary file and a rename, so a crash never
    /// leaves a half-written checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.encode())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        Checkpoint::decode(&bytes).map_err(|msg| Error::Checkpoint {
            path: path.to_path_buf(),
            msg,
        })
    }
}

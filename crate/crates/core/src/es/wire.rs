//! Binary message exchanged by workers every generation.
//!
//! Little-endian layout:
//!
//! | bytes | field |
//! |------:|-------|
//! | 4 | magic `PZES` |
//! | 2 | version (`1`) |
//! | 8 | generation |
//! | 4 | sender rank |
//! | 4 | value count `c` |
//! | 8c | `f64` values |
//! | 4 | CRC32 of everything above |

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PZES";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 8 + 4 + 4;
pub const TRAILER_LEN: usize = 4;

/// Generations with this bit set tag the parameter-hash round that
/// follows each delta round.
pub const CHECK_ROUND: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub generation: u64,
    pub rank: u32,
    pub values: Vec<f64>,
}

impl Message {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 8 * self.values.len() + TRAILER_LEN
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.encoded_len());
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.generation.to_le_bytes());
        buf.extend_from_slice(&self.rank.to_le_bytes());
        buf.extend_from_slice(&(self.values.len() as u32).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN + TRAILER_LEN {
            return Err(Error::Protocol(format!("message of {} bytes is too short", bytes.len())));
        }
        let (body, crc) = bytes.split_at(bytes.len() - TRAILER_LEN);
        let crc = u32::from_le_bytes(crc.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != crc {
            return Err(Error::Protocol("checksum mismatch".into()));
        }
        if body[..4] != MAGIC {
            return Err(Error::Protocol("bad magic".into()));
        }
        let version = u16::from_le_bytes([body[4], body[5]]);
        if version != VERSION {
            return Err(Error::Protocol(format!("unsupported version {version}")));
        }
        let generation = u64::from_le_bytes(body[6..14].try_into().expect("8 bytes"));
        let rank = u32::from_le_bytes(body[14..18].try_into().expect("4 bytes"));
        let count = u32::from_le_bytes(body[18..22].try_into().expect("4 bytes")) as usize;
        if body.len() != HEADER_LEN + 8 * count {
            return Err(Error::Protocol(format!("declared {count} values but body holds {} bytes", body.len() - HEADER_LEN)));
        }
        let values = body[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Message {
            generation,
            rank,
            values,
        })
    }
}

//! Binary cache files for complexity tables.
//!
//! Layout (all multi-byte integers little-endian):
//!   magic "KLAB1" (5 bytes)
//!   format version  u16
//!   machine fingerprint (32 bytes)
//!   mode byte (0 plain, 1 prefix)
//!   P u32, T u32
//!   entry count u64
//!   entries, sorted by (condition, target) length-lex:
//!     condition length u16, condition bits padded to whole bytes,
//!     target length u16, target bits,
//!     value u16 (0xFFFF = Infinity),
//!     witness length u16, witness bits
//!   SHA-256 digest of everything prior (32 bytes)
//!
//! Loading verifies the digest and refuses tables whose fingerprint, mode,
//! P or T disagree with the requested configuration, so stale caches can
//! never contaminate a run.

use std::fs;
use std::io::{self};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{ComplexityTable, Value};
use crate::bitcodec::BitString;
use crate::machine::{hex32, Mode};

const MAGIC: &[u8; 5] = b"KLAB1";
const FORMAT_VERSION: u16 = 1;
const INFINITY: u16 = 0xFFFF;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error("io failure: {0}")]
    IoFailure(#[from] io::Error),
}

/// What the loader must find in the file for it to be accepted.
#[derive(Debug, Clone, Copy)]
pub struct CacheExpectation {
    pub machine_fingerprint: [u8; 32],
    pub mode: Mode,
    pub max_program_len: u32,
    pub budget: u32,
}

fn push_bitstring(buf: &mut Vec<u8>, s: &BitString) {
    buf.extend_from_slice(&(s.len() as u16).to_le_bytes());
    buf.extend_from_slice(&s.to_padded_bytes());
}

/// Serializes the table to its canonical byte form (identical for identical
/// tables regardless of how they were built).
pub fn encode_table(table: &ComplexityTable) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&table.machine_fingerprint);
    buf.push(table.mode.to_byte());
    buf.extend_from_slice(&table.max_program_len.to_le_bytes());
    buf.extend_from_slice(&table.budget.to_le_bytes());
    let rows = table.iter_sorted();
    buf.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    for (cond, target, entry) in rows {
        push_bitstring(&mut buf, cond);
        push_bitstring(&mut buf, target);
        match (&entry.value, &entry.witness) {
            (Value::Finite(v), Some(w)) => {
                buf.extend_from_slice(&(*v as u16).to_le_bytes());
                push_bitstring(&mut buf, w);
            }
            (Value::Infinity, None) => {
                buf.extend_from_slice(&INFINITY.to_le_bytes());
                buf.extend_from_slice(&0u16.to_le_bytes());
            }
            _ => unreachable!("witness present iff value finite"),
        }
    }
    let digest: [u8; 32] = Sha256::digest(&buf).into();
    buf.extend_from_slice(&digest);
    buf
}

pub fn save_cache(table: &ComplexityTable, path: &Path) -> Result<(), CacheError> {
    let bytes = encode_table(table);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        if self.pos + n > self.buf.len() {
            return Err(CacheError::CorruptCache("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CacheError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bitstring(&mut self) -> Result<BitString, CacheError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        BitString::from_padded_bytes(len, bytes)
            .map_err(|e| CacheError::CorruptCache(e.to_string()))
    }
}

/// Loads and verifies a cache file. Refuses files whose fingerprint, mode,
/// P or T disagree with `expect`; digest failures are CorruptCache.
pub fn load_cache(path: &Path, expect: &CacheExpectation) -> Result<ComplexityTable, CacheError> {
    let bytes = fs::read(path)?;
    if bytes.len() < MAGIC.len() + 32 {
        return Err(CacheError::CorruptCache("file too small".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    let computed: [u8; 32] = Sha256::digest(body).into();
    if digest != computed {
        return Err(CacheError::CorruptCache("digest check failed".into()));
    }

    let mut r = Reader { buf: body, pos: 0 };
    if r.take(5)? != MAGIC {
        return Err(CacheError::CorruptCache("bad magic".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(CacheError::CorruptCache(format!(
            "unsupported format version {version}"
        )));
    }
    let mut fingerprint = [0u8; 32];
    fingerprint.copy_from_slice(r.take(32)?);
    if fingerprint != expect.machine_fingerprint {
        return Err(CacheError::FingerprintMismatch(format!(
            "file was built for machine {}, active machine is {}",
            hex32(&fingerprint),
            hex32(&expect.machine_fingerprint)
        )));
    }
    let mode = Mode::from_byte(
        r.take(1)?[0],
    )
    .ok_or_else(|| CacheError::CorruptCache("bad mode byte".into()))?;
    let p = r.u32()?;
    let t = r.u32()?;
    if mode != expect.mode || p != expect.max_program_len || t != expect.budget {
        return Err(CacheError::FingerprintMismatch(format!(
            "file holds mode={} P={p} T={t}, requested mode={} P={} T={}",
            mode.as_str(),
            expect.mode.as_str(),
            expect.max_program_len,
            expect.budget
        )));
    }

    let count = r.u64()?;
    let mut table = ComplexityTable::new(fingerprint, mode, p, t);
    for _ in 0..count {
        let cond = r.bitstring()?;
        let target = r.bitstring()?;
        let raw = r.u16()?;
        let witness = r.bitstring()?;
        if raw == INFINITY {
            if !witness.is_empty() {
                return Err(CacheError::CorruptCache(
                    "witness recorded for an Infinity entry".into(),
                ));
            }
            table.insert(cond, target, Value::Infinity, None);
        } else {
            if witness.len() != raw as usize {
                return Err(CacheError::CorruptCache(
                    "witness length disagrees with value".into(),
                ));
            }
            table.insert(cond, target, Value::Finite(raw as u32), Some(witness));
        }
    }
    if r.pos != body.len() {
        return Err(CacheError::CorruptCache("trailing bytes".into()));
    }
    Ok(table)
}

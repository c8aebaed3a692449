//! Binary table container.
//!
//! Serialized matcher tables travel between the build and scan stages in a
//! little-endian container:
//!
//! ```text
//! magic    "WMTB" (4 bytes)
//! version  u32
//! m        u32   matching window
//! B        u32   block size (always 2)
//! shift    65,536 bytes
//! bloom    u32 byte length, then the raw bit vector
//! groups   u32 count, then per group: key u16, u32 member count, member ids (u32 each)
//! patterns u32 count, then per pattern: id u32, length u32, raw bytes
//! ```
//!
//! The bloom section stores raw bits only; probe count and seed are scan
//! configuration and must be restated when loading a non-default filter.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::bloom::BloomVector;
use crate::matcher::{MatcherTables, ShiftTable, SuffixGroups, KEY_SPACE};
use crate::pattern::{Pattern, PatternError, PatternId, PatternSet, BLOCK};

pub const MAGIC: [u8; 4] = *b"WMTB";
pub const FORMAT_VERSION: u32 = 1;

/// Upper bound on declared pattern/group element counts, to reject
/// nonsensical headers before allocating.
const MAX_COUNT: u32 = 1 << 28;

#[derive(Debug, Error)]
pub enum WmtbError {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("bad magic: expected \"WMTB\"")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported block size {0} (engine is byte-pair only)")]
    UnsupportedBlock(u32),

    #[error("container is corrupt: {0}")]
    Corrupt(String),

    #[error("tables are inconsistent: {0}")]
    Invalid(#[from] PatternError),
}

/// Runtime Bloom configuration to apply when loading; the container stores
/// only the raw bit vector.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub bloom_hash_count: u8,
    pub bloom_seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            bloom_hash_count: 1,
            bloom_seed: 0,
        }
    }
}

/// Serializes tables into the container format.
pub fn write_tables<W: Write>(tables: &MatcherTables, mut w: W) -> Result<(), WmtbError> {
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(tables.window() as u32).to_le_bytes())?;
    w.write_all(&(BLOCK as u32).to_le_bytes())?;
    w.write_all(tables.shift_table().entries().as_slice())?;

    let bloom_bits = tables.bloom().raw_bits();
    w.write_all(&(bloom_bits.len() as u32).to_le_bytes())?;
    w.write_all(bloom_bits)?;

    let groups: Vec<(u16, &[PatternId])> = tables.groups().iter().collect();
    w.write_all(&(groups.len() as u32).to_le_bytes())?;
    for (key, members) in groups {
        w.write_all(&key.to_le_bytes())?;
        w.write_all(&(members.len() as u32).to_le_bytes())?;
        for id in members {
            w.write_all(&id.to_le_bytes())?;
        }
    }

    let patterns = tables.pattern_set().patterns();
    w.write_all(&(patterns.len() as u32).to_le_bytes())?;
    for p in patterns {
        w.write_all(&p.id().to_le_bytes())?;
        w.write_all(&(p.len() as u32).to_le_bytes())?;
        w.write_all(p.bytes())?;
    }
    Ok(())
}

/// Deserializes tables, revalidating invariants (window, shift bounds,
/// group cross-references).
pub fn read_tables<R: Read>(mut r: R, opts: LoadOptions) -> Result<MatcherTables, WmtbError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(WmtbError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(WmtbError::UnsupportedVersion(version));
    }
    let window = read_u32(&mut r)? as usize;
    let block = read_u32(&mut r)?;
    if block as usize != BLOCK {
        return Err(WmtbError::UnsupportedBlock(block));
    }

    let mut shift = vec![0u8; KEY_SPACE];
    r.read_exact(&mut shift)?;

    let bloom_len = read_u32(&mut r)? as usize;
    if bloom_len > (1 << 21) {
        return Err(WmtbError::Corrupt(format!(
            "bloom vector of {bloom_len} bytes exceeds the 2^24-bit maximum"
        )));
    }
    let mut bloom_bits = vec![0u8; bloom_len];
    r.read_exact(&mut bloom_bits)?;
    let bloom = BloomVector::from_raw_bits(bloom_bits, opts.bloom_hash_count, opts.bloom_seed)
        .map_err(|e| WmtbError::Corrupt(e.to_string()))?;

    let group_count = read_count(&mut r, "group count")?;
    let mut groups: BTreeMap<u16, Vec<PatternId>> = BTreeMap::new();
    for _ in 0..group_count {
        let mut key_bytes = [0u8; 2];
        r.read_exact(&mut key_bytes)?;
        let key = u16::from_le_bytes(key_bytes);
        let member_count = read_count(&mut r, "group member count")?;
        let mut members = Vec::with_capacity(member_count as usize);
        for _ in 0..member_count {
            members.push(read_u32(&mut r)?);
        }
        if groups.insert(key, members).is_some() {
            return Err(WmtbError::Corrupt(format!("duplicate group key {key:#06x}")));
        }
    }

    let pattern_count = read_count(&mut r, "pattern count")?;
    let mut patterns = Vec::with_capacity(pattern_count as usize);
    for _ in 0..pattern_count {
        let id = read_u32(&mut r)?;
        let len = read_count(&mut r, "pattern length")? as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)?;
        patterns.push(Pattern::new(id, bytes));
    }

    let set = PatternSet::new(patterns)?;
    if set.window() != window {
        return Err(WmtbError::Corrupt(format!(
            "declared window {window} but shortest pattern is {}",
            set.window()
        )));
    }
    let shift = ShiftTable::from_entries(shift).map_err(WmtbError::Corrupt)?;
    let groups = SuffixGroups::from_entries(groups);
    Ok(MatcherTables::from_parts(set, shift, groups, bloom)?)
}

/// Writes the container to a file path.
pub fn write_tables_file(tables: &MatcherTables, path: impl AsRef<Path>) -> Result<(), WmtbError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tables(tables, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads the container from a file path.
pub fn read_tables_file(
    path: impl AsRef<Path>,
    opts: LoadOptions,
) -> Result<MatcherTables, WmtbError> {
    read_tables(BufReader::new(File::open(path)?), opts)
}

/// Serializes tables to an in-memory buffer.
pub fn to_bytes(tables: &MatcherTables) -> Vec<u8> {
    let mut buf = Vec::new();
    write_tables(tables, &mut buf).expect("in-memory write cannot fail");
    buf
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, WmtbError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_count<R: Read>(r: &mut R, what: &str) -> Result<u32, WmtbError> {
    let n = read_u32(r)?;
    if n > MAX_COUNT {
        return Err(WmtbError::Corrupt(format!("{what} {n} is implausibly large")));
    }
    Ok(n)
}

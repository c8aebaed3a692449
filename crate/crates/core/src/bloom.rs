//! Byte-pair membership filter gating shift-table reads.
//!
//! During preprocessing every byte-pair that occurs in some pattern's
//! window-sized prefix is inserted. During scanning a negative query proves
//! the pair occurs in no pattern, so the scanner can take the maximum skip
//! without touching the shift table. A positive answer may be a false
//! positive, which only costs a table read; membership answers never change
//! scan output.
//!
//! The default configuration is a 2^16-bit vector with a single identity
//! hash: one bit per possible byte-pair, an exact presence bitmap with zero
//! false positives. The key space is only 16 bits wide, so exactness is
//! cheap (8 KiB). Smaller vectors with a mixing hash and up to four probes
//! are available for experimentation.

use thiserror::Error;

/// Default log2 of the bit-vector size: one bit per byte-pair key.
pub const DEFAULT_BITS_LOG2: u8 = 16;

/// Largest supported vector: 2^24 bits (2 MiB).
pub const MAX_BITS_LOG2: u8 = 24;

pub const MIN_HASH_COUNT: u8 = 1;
pub const MAX_HASH_COUNT: u8 = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BloomConfigError {
    #[error("bit-vector size 2^{0} out of range (supported: 2^1 .. 2^{MAX_BITS_LOG2})")]
    BitsOutOfRange(u8),

    #[error("hash count {0} out of range (supported: {MIN_HASH_COUNT} .. {MAX_HASH_COUNT})")]
    HashCountOutOfRange(u8),
}

/// Filter geometry: vector size, probe count, and hash seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BloomConfig {
    /// log2 of the bit-vector size; the vector holds `2^bits_log2` bits.
    pub bits_log2: u8,
    /// Number of hash probes per key.
    pub hash_count: u8,
    /// Seed mixed into every probe hash.
    pub seed: u64,
}

impl Default for BloomConfig {
    fn default() -> Self {
        Self {
            bits_log2: DEFAULT_BITS_LOG2,
            hash_count: 1,
            seed: 0,
        }
    }
}

impl BloomConfig {
    pub fn validate(&self) -> Result<(), BloomConfigError> {
        if self.bits_log2 == 0 || self.bits_log2 > MAX_BITS_LOG2 {
            return Err(BloomConfigError::BitsOutOfRange(self.bits_log2));
        }
        if !(MIN_HASH_COUNT..=MAX_HASH_COUNT).contains(&self.hash_count) {
            return Err(BloomConfigError::HashCountOutOfRange(self.hash_count));
        }
        Ok(())
    }

    /// True when the configuration degenerates to an exact presence bitmap:
    /// 2^16 bits, one probe, zero seed, i.e. probe 0 is the identity map.
    pub fn is_exact(&self) -> bool {
        self.bits_log2 == 16 && self.hash_count == 1 && self.seed == 0
    }
}

/// Concatenates a byte-pair into its 16-bit key, earlier byte in the high
/// half. This is the address used by the shift and hash tables as well.
#[inline]
pub fn block_key(block: [u8; 2]) -> u16 {
    ((block[0] as u16) << 8) | block[1] as u16
}

/// Hashes a byte-pair to a bit index in `[0, 2^bits_log2)`.
///
/// Probe 0 with seed 0 on a 2^16-bit vector is the identity on the key, so
/// the default filter is an exact bitmap. Every other combination runs the
/// key through a SplitMix64-style finalizer keyed by probe index and seed.
#[inline]
pub fn probe_position(block: [u8; 2], probe: u8, seed: u64, bits_log2: u8) -> u32 {
    let key = block_key(block) as u64;
    if bits_log2 == 16 && probe == 0 && seed == 0 {
        return key as u32;
    }
    let mut x = key ^ seed.rotate_left(17) ^ ((probe as u64 + 1) << 48);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    (x as u32) & ((1u32 << bits_log2) - 1)
}

/// Bit-vector membership filter over byte-pair keys.
///
/// Inserts happen during preprocessing only; after that the vector is
/// immutable and any number of scans may query it concurrently. A `false`
/// answer guarantees the pair was never inserted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomVector {
    config: BloomConfig,
    bits: Vec<u8>,
}

impl BloomVector {
    pub fn new(config: BloomConfig) -> Result<Self, BloomConfigError> {
        config.validate()?;
        let nbytes = (1usize << config.bits_log2) / 8;
        Ok(Self {
            config,
            bits: vec![0u8; nbytes.max(1)],
        })
    }

    /// Reassembles a vector from raw bits (as stored in the table container).
    /// The byte length must be a power of two; probe configuration is not
    /// part of the raw representation and must be supplied.
    pub fn from_raw_bits(bits: Vec<u8>, hash_count: u8, seed: u64) -> Result<Self, BloomConfigError> {
        let nbits = bits.len().checked_mul(8).unwrap_or(0);
        if !nbits.is_power_of_two() {
            return Err(BloomConfigError::BitsOutOfRange(0));
        }
        let config = BloomConfig {
            bits_log2: nbits.trailing_zeros() as u8,
            hash_count,
            seed,
        };
        config.validate()?;
        Ok(Self { config, bits })
    }

    pub fn config(&self) -> &BloomConfig {
        &self.config
    }

    /// Raw bit-vector bytes, bit `i` at byte `i / 8`, mask `1 << (i % 8)`.
    pub fn raw_bits(&self) -> &[u8] {
        &self.bits
    }

    /// Sets every probe position for the byte-pair.
    pub fn insert(&mut self, block: [u8; 2]) {
        for probe in 0..self.config.hash_count {
            let pos = probe_position(block, probe, self.config.seed, self.config.bits_log2);
            self.bits[(pos / 8) as usize] |= 1 << (pos % 8);
        }
    }

    /// True when all probe positions for the byte-pair are set. A `false`
    /// result proves the pair was never inserted.
    pub fn query(&self, block: [u8; 2]) -> bool {
        (0..self.config.hash_count).all(|probe| {
            let pos = probe_position(block, probe, self.config.seed, self.config.bits_log2);
            self.bits[(pos / 8) as usize] & (1 << (pos % 8)) != 0
        })
    }

    /// Number of set bits, mostly useful for diagnostics.
    pub fn ones(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }
}

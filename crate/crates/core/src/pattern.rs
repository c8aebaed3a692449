//! Signature patterns and pattern sets.
//!
//! A [`PatternSet`] is the unit the preprocessor consumes: a collection of
//! byte-string signatures with unique ids, plus the matching window `m`
//! (the length of the shortest signature). Every pattern must be at least
//! [`BLOCK`] bytes long because the engine hashes byte-pairs.

use thiserror::Error;

/// Block size used for shift/hash lookups. The engine is hard-wired to
/// byte-pairs; three-byte blocks are not supported.
pub const BLOCK: usize = 2;

/// Largest admissible matching window. Shift values are stored as single
/// bytes (the shift memory is byte-wide), so the maximum shift `m - BLOCK + 1`
/// must fit in a `u8`, which caps `m` at 256.
pub const MAX_WINDOW: usize = 256;

/// Identifier of a pattern within a [`PatternSet`].
pub type PatternId = u32;

/// Errors raised while assembling or preprocessing a pattern set.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern set is empty")]
    EmptyPatternSet,

    #[error("pattern {id} is too short: {len} bytes (minimum {BLOCK})")]
    PatternTooShort { id: PatternId, len: usize },

    #[error("duplicate pattern id {id}")]
    DuplicateId { id: PatternId },

    #[error("matching window {window} exceeds the maximum of {MAX_WINDOW}")]
    WindowTooLarge { window: usize },
}

/// A single byte-string signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    id: PatternId,
    bytes: Vec<u8>,
}

impl Pattern {
    pub fn new(id: PatternId, bytes: impl Into<Vec<u8>>) -> Self {
        Self {
            id,
            bytes: bytes.into(),
        }
    }

    pub fn id(&self) -> PatternId {
        self.id
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Returns the matching window for a pattern collection: the length of the
/// shortest pattern. Fails on an empty collection or any pattern shorter
/// than [`BLOCK`] bytes.
pub fn compute_window(patterns: &[Pattern]) -> Result<usize, PatternError> {
    if patterns.is_empty() {
        return Err(PatternError::EmptyPatternSet);
    }
    let mut window = usize::MAX;
    for p in patterns {
        if p.len() < BLOCK {
            return Err(PatternError::PatternTooShort {
                id: p.id(),
                len: p.len(),
            });
        }
        window = window.min(p.len());
    }
    Ok(window)
}

/// A validated collection of patterns together with its matching window.
#[derive(Debug, Clone)]
pub struct PatternSet {
    patterns: Vec<Pattern>,
    window: usize,
}

impl PatternSet {
    /// Validates the patterns (non-empty set, per-pattern length, unique ids)
    /// and computes the window. Duplicate byte strings under distinct ids are
    /// allowed; signature databases routinely carry identical bodies under
    /// different names.
    pub fn new(patterns: Vec<Pattern>) -> Result<Self, PatternError> {
        let window = compute_window(&patterns)?;
        let mut seen: Vec<PatternId> = patterns.iter().map(Pattern::id).collect();
        seen.sort_unstable();
        for pair in seen.windows(2) {
            if pair[0] == pair[1] {
                return Err(PatternError::DuplicateId { id: pair[0] });
            }
        }
        Ok(Self { patterns, window })
    }

    /// Builds a set from bare byte strings, assigning sequential ids from 0.
    pub fn from_bytes<I, B>(items: I) -> Result<Self, PatternError>
    where
        I: IntoIterator<Item = B>,
        B: Into<Vec<u8>>,
    {
        let patterns = items
            .into_iter()
            .enumerate()
            .map(|(i, b)| Pattern::new(i as PatternId, b))
            .collect();
        Self::new(patterns)
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    /// Matching window `m`: the length of the shortest pattern.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, id: PatternId) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.id() == id)
    }
}

//! Wu-Manber table construction and scanning.
//!
//! Preprocessing builds three structures from a [`PatternSet`]:
//!
//! * a [`ShiftTable`] mapping every 16-bit byte-pair key to the safe forward
//!   skip at the current alignment,
//! * [`SuffixGroups`] listing, for each byte-pair, the patterns whose
//!   window-sized prefix ends in that pair (consulted only on zero shift),
//! * a [`BloomVector`] holding every byte-pair that occurs in any prefix, so
//!   a negative membership answer lets the scanner take the maximum skip
//!   without reading the shift table.
//!
//! Scanning slides a window of `m` bytes (the shortest pattern length) over
//! the text, keys the last two bytes of the window, and either skips ahead
//! or verifies the suffix group's patterns by full byte comparison.

use std::collections::BTreeMap;

use crate::bloom::{block_key, BloomConfig, BloomVector};
use crate::pattern::{Pattern, PatternError, PatternId, PatternSet, BLOCK, MAX_WINDOW};

/// Number of distinct byte-pair keys; shift and group tables are addressed
/// directly by the 16-bit key.
pub const KEY_SPACE: usize = 1 << 16;

/// A verified occurrence of a pattern in scanned text.
/// `end` is exclusive; `end - start` equals the pattern length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MatchEvent {
    pub pattern_id: PatternId,
    pub start: usize,
    pub end: usize,
}

/// How the scan pointer advances after verification at an alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanMode {
    /// Advance by one byte after every verification, reporting all
    /// occurrences including overlaps.
    #[default]
    AllMatches,
    /// Advance by the length of the longest verified pattern (one byte when
    /// nothing verified). Overlapping occurrences inside a detected pattern
    /// are skipped.
    PaperSkip,
}

/// Scan configuration beyond the advance mode.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub mode: ScanMode,
    /// When false the Bloom filter is bypassed and the shift table is read
    /// on every step. Output is identical either way; the filter only
    /// avoids table reads.
    pub bloom_gate: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            mode: ScanMode::AllMatches,
            bloom_gate: true,
        }
    }
}

impl From<ScanMode> for ScanOptions {
    fn from(mode: ScanMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

/// One window step of a scan, reported to observers. Used by the cycle
/// model to replay a scan trajectory and by tests to check progress bounds.
#[derive(Debug, Clone, Copy)]
pub struct ScanStep {
    /// Window start offset for this step.
    pub window_start: usize,
    /// Whether the Bloom filter answered positive (always true with gating
    /// disabled, which forces a table read).
    pub bloom_hit: bool,
    /// Shift table entry for the suffix block; `None` when the Bloom gate
    /// skipped the read.
    pub shift: Option<u8>,
    /// Patterns examined by full comparison at this alignment.
    pub candidates: u32,
    /// Total 64-bit words occupied by the examined candidates.
    pub candidate_words: u64,
    /// Candidates that verified as real matches.
    pub verified: u32,
    /// Bytes the window advances after this step (always at least 1).
    pub advance: usize,
}

/// Byte-pair keyed skip table: 65,536 single-byte entries.
///
/// An entry of `m - BLOCK + 1` marks a pair absent from every pattern
/// prefix; an entry of 0 marks the pair as the final two bytes of at least
/// one pattern's prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftTable {
    entries: Box<[u8; KEY_SPACE]>,
}

impl ShiftTable {
    fn build(set: &PatternSet) -> Result<Self, PatternError> {
        let m = set.window();
        if m > MAX_WINDOW {
            return Err(PatternError::WindowTooLarge { window: m });
        }
        let max_shift = (m - BLOCK + 1) as u8;
        let mut entries = vec![max_shift; KEY_SPACE].into_boxed_slice();
        for p in set.patterns() {
            let prefix = &p.bytes()[..m];
            // q is the 1-based end position of the pair within the prefix;
            // the rightmost occurrence across all patterns wins.
            for q in BLOCK..=m {
                let key = block_key([prefix[q - 2], prefix[q - 1]]) as usize;
                let shift = (m - q) as u8;
                if shift < entries[key] {
                    entries[key] = shift;
                }
            }
        }
        let entries: Box<[u8; KEY_SPACE]> = entries.try_into().expect("KEY_SPACE length");
        Ok(Self { entries })
    }

    /// Rebuilds a table from raw entries (the serialized form).
    pub fn from_entries(entries: Vec<u8>) -> Result<Self, String> {
        let entries: Box<[u8; KEY_SPACE]> = entries
            .into_boxed_slice()
            .try_into()
            .map_err(|_| format!("shift table must hold exactly {KEY_SPACE} entries"))?;
        Ok(Self { entries })
    }

    #[inline]
    pub fn get(&self, key: u16) -> u8 {
        self.entries[key as usize]
    }

    pub fn entries(&self) -> &[u8; KEY_SPACE] {
        &self.entries
    }

    pub fn max_entry(&self) -> u8 {
        *self.entries.iter().max().expect("table is never empty")
    }
}

/// Patterns grouped by the final byte-pair of their window-sized prefix.
/// Group membership is kept sorted by pattern id so verification output is
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuffixGroups {
    groups: BTreeMap<u16, Vec<PatternId>>,
}

impl SuffixGroups {
    fn build(set: &PatternSet) -> Self {
        let m = set.window();
        let mut groups: BTreeMap<u16, Vec<PatternId>> = BTreeMap::new();
        for p in set.patterns() {
            let prefix = &p.bytes()[..m];
            let key = block_key([prefix[m - 2], prefix[m - 1]]);
            groups.entry(key).or_default().push(p.id());
        }
        for members in groups.values_mut() {
            members.sort_unstable();
        }
        Self { groups }
    }

    pub fn from_entries(entries: BTreeMap<u16, Vec<PatternId>>) -> Self {
        Self { groups: entries }
    }

    /// Pattern ids whose prefix ends in the keyed byte-pair, ascending.
    pub fn group(&self, key: u16) -> &[PatternId] {
        self.groups.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, &[PatternId])> {
        self.groups.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Immutable preprocessing output: everything a scan needs.
///
/// Tables are safe to share across threads; scans of distinct texts are
/// independent.
#[derive(Debug, Clone)]
pub struct MatcherTables {
    window: usize,
    shift: ShiftTable,
    groups: SuffixGroups,
    bloom: BloomVector,
    patterns: PatternSet,
    /// id -> index into `patterns.patterns()`, for O(1) verification lookups.
    index: BTreeMap<PatternId, usize>,
}

/// Builds matcher tables with the default (exact) Bloom configuration.
pub fn preprocess(patterns: Vec<Pattern>) -> Result<MatcherTables, PatternError> {
    MatcherTables::build(PatternSet::new(patterns)?, BloomConfig::default())
}

impl MatcherTables {
    /// Builds shift table, suffix groups, and Bloom vector for the set.
    ///
    /// The Bloom vector receives exactly the byte-pairs occurring in some
    /// pattern's window-sized prefix.
    pub fn build(set: PatternSet, bloom_config: BloomConfig) -> Result<Self, PatternError> {
        let shift = ShiftTable::build(&set)?;
        let groups = SuffixGroups::build(&set);
        let mut bloom = BloomVector::new(bloom_config)
            .expect("bloom config validated by caller or default");
        let m = set.window();
        for p in set.patterns() {
            let prefix = &p.bytes()[..m];
            for w in prefix.windows(BLOCK) {
                bloom.insert([w[0], w[1]]);
            }
        }
        let index = set
            .patterns()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id(), i))
            .collect();
        Ok(Self {
            window: m,
            shift,
            groups,
            bloom,
            patterns: set,
            index,
        })
    }

    /// Reassembles tables from previously serialized parts, revalidating
    /// cross-references (every group member must name a known pattern).
    pub(crate) fn from_parts(
        set: PatternSet,
        shift: ShiftTable,
        groups: SuffixGroups,
        bloom: BloomVector,
    ) -> Result<Self, PatternError> {
        let index: BTreeMap<PatternId, usize> = set
            .patterns()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id(), i))
            .collect();
        for (_, members) in groups.iter() {
            for id in members {
                if !index.contains_key(id) {
                    return Err(PatternError::DuplicateId { id: *id });
                }
            }
        }
        Ok(Self {
            window: set.window(),
            shift,
            groups,
            bloom,
            patterns: set,
            index,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Block size; always 2.
    pub fn block(&self) -> usize {
        BLOCK
    }

    pub fn shift_table(&self) -> &ShiftTable {
        &self.shift
    }

    pub fn groups(&self) -> &SuffixGroups {
        &self.groups
    }

    pub fn bloom(&self) -> &BloomVector {
        &self.bloom
    }

    pub fn pattern_set(&self) -> &PatternSet {
        &self.patterns
    }

    pub fn pattern(&self, id: PatternId) -> Option<&Pattern> {
        self.index.get(&id).map(|&i| &self.patterns.patterns()[i])
    }

    /// Shift table entry for a byte-pair: `m - BLOCK + 1` when the pair is
    /// absent from every prefix, otherwise `m - q` with `q` the rightmost
    /// 1-based end position of the pair in any prefix.
    pub fn shift_for_block(&self, block: [u8; 2]) -> usize {
        self.shift.get(block_key(block)) as usize
    }

    /// Ids of all suffix-group members whose full bytes occur in `text` at
    /// `window_start`. Patterns longer than the window are compared in
    /// full, bounds-checked against the text end. Empty when the suffix
    /// block has no group.
    pub fn verify_at(&self, text: &[u8], window_start: usize) -> Vec<PatternId> {
        let m = self.window;
        debug_assert!(window_start + m <= text.len());
        let key = block_key([text[window_start + m - 2], text[window_start + m - 1]]);
        self.groups
            .group(key)
            .iter()
            .copied()
            .filter(|&id| self.pattern_matches_at(id, text, window_start))
            .collect()
    }

    #[inline]
    fn pattern_matches_at(&self, id: PatternId, text: &[u8], start: usize) -> bool {
        let bytes = self.patterns.patterns()[self.index[&id]].bytes();
        match text.get(start..start + bytes.len()) {
            Some(slice) => slice == bytes,
            None => false,
        }
    }

    /// Scans `text`, emitting events in ascending start order (ties by
    /// ascending pattern id). Empty or window-short text yields no events.
    pub fn scan(&self, text: &[u8], mode: ScanMode) -> Vec<MatchEvent> {
        self.scan_detailed(text, mode.into(), |_| {})
    }

    /// Scan with per-step observation. The observer sees every window step
    /// (position, gate outcome, shift, candidate counts, advance); the cycle
    /// model replays trajectories through it.
    pub fn scan_detailed<F>(&self, text: &[u8], opts: ScanOptions, mut observe: F) -> Vec<MatchEvent>
    where
        F: FnMut(&ScanStep),
    {
        let m = self.window;
        let mut events = Vec::new();
        if text.len() < m {
            return events;
        }
        let max_shift = m - BLOCK + 1;
        let mut pos = 0usize;
        let last_start = text.len() - m;
        while pos <= last_start {
            let block = [text[pos + m - 2], text[pos + m - 1]];
            let mut step = ScanStep {
                window_start: pos,
                bloom_hit: true,
                shift: None,
                candidates: 0,
                candidate_words: 0,
                verified: 0,
                advance: 0,
            };
            let advance;
            if opts.bloom_gate && !self.bloom.query(block) {
                step.bloom_hit = false;
                advance = max_shift;
            } else {
                let shift = self.shift.get(block_key(block)) as usize;
                step.shift = Some(shift as u8);
                if shift > 0 {
                    advance = shift;
                } else {
                    let mut longest = 0usize;
                    for &id in self.groups.group(block_key(block)) {
                        let len = self.patterns.patterns()[self.index[&id]].len();
                        step.candidates += 1;
                        step.candidate_words += len.div_ceil(8) as u64;
                        if self.pattern_matches_at(id, text, pos) {
                            step.verified += 1;
                            longest = longest.max(len);
                            events.push(MatchEvent {
                                pattern_id: id,
                                start: pos,
                                end: pos + len,
                            });
                        }
                    }
                    advance = match opts.mode {
                        ScanMode::AllMatches => 1,
                        ScanMode::PaperSkip => longest.max(1),
                    };
                }
            }
            step.advance = advance;
            observe(&step);
            pos += advance;
        }
        events
    }
}

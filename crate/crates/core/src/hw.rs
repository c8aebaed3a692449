//! Hardware memory images and throughput estimation.
//!
//! The matcher tables can be lowered to the three memories a hardware
//! matcher would hold:
//!
//! * **PB** — pattern buffer: every pattern segmented into 64-bit words
//!   with a last-word flag, patterns sharing a suffix byte-pair stored
//!   contiguously;
//! * **HT** — 128k x 32-bit table holding, per byte-pair, the start and
//!   end word addresses of that pair's PB segment (start in the upper
//!   64k half, inclusive end in the lower half, all-ones when empty);
//! * **ST** — 64 KiB byte memory holding the shift value per byte-pair.
//!
//! [`image_scan`] walks a text using only these images, which pins the
//! layout against the table-driven engine. [`estimate_cycles`] replays the
//! skip-mode scan trajectory under a configurable per-event cost model and
//! converts cycle counts to an estimated bitrate at a given clock.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloom::block_key;
use crate::ingest::{segment_bytes, PbWord, PB_WORD_BYTES};
use crate::matcher::{MatchEvent, MatcherTables, ScanMode, ScanOptions, KEY_SPACE};
use crate::pattern::PatternId;

/// HT word count: two 64k halves (end addresses low, start addresses high).
pub const HT_WORDS: usize = 2 * KEY_SPACE;

/// HT entry for byte-pairs with no patterns.
pub const HT_EMPTY: u32 = u32::MAX;

/// Default estimation clock in MHz: the matching stage's maximum frequency,
/// which bounds the whole pipeline.
pub const DEFAULT_CLOCK_MHZ: f64 = 239.005;

#[derive(Debug, Error)]
pub enum HwError {
    #[error("pattern buffer needs {words} words, exceeding the 32-bit address space")]
    CapacityExceeded { words: u64 },

    #[error("cycle count is zero; no bitrate can be derived")]
    ZeroCycles,

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct CostModelError {
    pub line: usize,
    pub reason: String,
}

/// Identity of one pattern inside a PB segment, in layout order. The word
/// stream alone cannot distinguish a zero tail from padding, so byte
/// lengths ride along as image metadata; ids label emitted events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbEntry {
    pub id: PatternId,
    pub len: u32,
}

/// One suffix-group's contiguous word range, `[start_word, end_word)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbSegment {
    pub start_word: u32,
    pub end_word: u32,
    /// Patterns in layout order (ascending id within the group).
    pub entries: Vec<PbEntry>,
}

/// Pattern buffer image: the flat word array plus per-key segment ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbImage {
    pub words: Vec<PbWord>,
    pub segments: BTreeMap<u16, PbSegment>,
}

/// Hash table image: start/end PB addresses per byte-pair key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HtImage {
    words: Vec<u32>,
}

impl HtImage {
    /// Start address of the segment for `key`, upper half of the table.
    pub fn start(&self, key: u16) -> u32 {
        self.words[(1usize << 16) | key as usize]
    }

    /// Inclusive end address of the segment for `key`, lower half.
    pub fn end(&self, key: u16) -> u32 {
        self.words[key as usize]
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }
}

/// Shift table image: one byte per byte-pair key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StImage {
    bytes: Vec<u8>,
}

impl StImage {
    pub fn get(&self, key: u16) -> u8 {
        self.bytes[key as usize]
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// The three memory images plus the window register.
#[derive(Debug, Clone)]
pub struct HwImages {
    pub pb: PbImage,
    pub ht: HtImage,
    pub st: StImage,
    /// Matching window the images were built for.
    pub window: usize,
}

/// Lowers matcher tables to PB/HT/ST images.
///
/// PB words are laid out group by group in ascending key order, each
/// pattern segmented into 64-bit words; HT start/end entries follow from
/// the cumulative word addresses; ST is a byte-for-byte copy of the shift
/// table.
pub fn build_images(tables: &MatcherTables) -> Result<HwImages, HwError> {
    let set = tables.pattern_set();
    let total_words: u64 = set
        .patterns()
        .iter()
        .map(|p| p.len().div_ceil(PB_WORD_BYTES) as u64)
        .sum();
    if total_words >= (1u64 << 32) {
        return Err(HwError::CapacityExceeded { words: total_words });
    }

    let mut words = Vec::with_capacity(total_words as usize);
    let mut segments = BTreeMap::new();
    let mut ht_words = vec![HT_EMPTY; HT_WORDS];
    for (key, members) in tables.groups().iter() {
        if members.is_empty() {
            continue;
        }
        let start_word = words.len() as u32;
        let mut entries = Vec::with_capacity(members.len());
        for &id in members {
            let pattern = tables.pattern(id).expect("group members exist");
            words.extend(segment_bytes(pattern.bytes()));
            entries.push(PbEntry {
                id,
                len: pattern.len() as u32,
            });
        }
        let end_word = words.len() as u32;
        ht_words[(1usize << 16) | key as usize] = start_word;
        ht_words[key as usize] = end_word - 1;
        segments.insert(
            key,
            PbSegment {
                start_word,
                end_word,
                entries,
            },
        );
    }

    Ok(HwImages {
        pb: PbImage { words, segments },
        ht: HtImage { words: ht_words },
        st: StImage {
            bytes: tables.shift_table().entries().to_vec(),
        },
        window: tables.window(),
    })
}

/// Scans `text` in skip mode using only the three memory images: read the
/// ST byte, on zero consult HT for the segment bounds, then stream PB
/// words, cutting patterns at last-word flags. Segment metadata supplies
/// ids and byte lengths for the emitted events.
pub fn image_scan(images: &HwImages, text: &[u8]) -> Vec<MatchEvent> {
    let m = images.window;
    let mut events = Vec::new();
    if text.len() < m {
        return events;
    }
    let mut pos = 0usize;
    let last_start = text.len() - m;
    while pos <= last_start {
        let key = block_key([text[pos + m - 2], text[pos + m - 1]]);
        let shift = images.st.get(key) as usize;
        if shift > 0 {
            pos += shift;
            continue;
        }
        let start = images.ht.start(key);
        let end = images.ht.end(key);
        debug_assert_ne!(start, HT_EMPTY, "zero shift implies a populated segment");
        let meta = &images.pb.segments[&key];
        let mut longest = 0usize;
        let mut word_addr = start as usize;
        for entry in &meta.entries {
            debug_assert!(word_addr <= end as usize);
            let mut bytes = Vec::with_capacity(entry.len as usize);
            loop {
                let word = &images.pb.words[word_addr];
                bytes.extend_from_slice(&word.payload);
                word_addr += 1;
                if word.last {
                    break;
                }
            }
            bytes.truncate(entry.len as usize);
            let len = bytes.len();
            if text
                .get(pos..pos + len)
                .is_some_and(|slice| slice == bytes.as_slice())
            {
                longest = longest.max(len);
                events.push(MatchEvent {
                    pattern_id: entry.id,
                    start: pos,
                    end: pos + len,
                });
            }
        }
        pos += longest.max(1);
    }
    events
}

/// Per-event cycle costs. All fields are overridable through a
/// `key=value` config file; unset keys keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    /// Per window step: one Bloom membership query.
    pub bf_query: u64,
    /// Per shift-table read (taken on every Bloom hit).
    pub st_read: u64,
    /// Per zero-shift event: the start/end hash-table read pair.
    pub ht_read: u64,
    /// Per pattern-buffer word streamed during verification.
    pub pb_word: u64,
    /// Per candidate pattern: the compare-commit cycle.
    pub verify_commit: u64,
    /// Per window advance.
    pub advance: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            bf_query: 1,
            st_read: 1,
            ht_read: 2,
            pb_word: 1,
            verify_commit: 1,
            advance: 1,
        }
    }
}

impl CostModel {
    /// Parses `key=value` lines; blank lines and `#` comments are ignored.
    pub fn from_config(text: &str) -> Result<Self, CostModelError> {
        let mut model = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| CostModelError {
                line,
                reason: "expected key=value".into(),
            })?;
            let value: u64 = value.trim().parse().map_err(|_| CostModelError {
                line,
                reason: format!("invalid cost value {:?}", value.trim()),
            })?;
            match key.trim() {
                "bf_query" => model.bf_query = value,
                "st_read" => model.st_read = value,
                "ht_read" => model.ht_read = value,
                "pb_word" => model.pb_word = value,
                "verify_commit" => model.verify_commit = value,
                "advance" => model.advance = value,
                other => {
                    return Err(CostModelError {
                        line,
                        reason: format!("unknown cost key {other:?}"),
                    })
                }
            }
        }
        Ok(model)
    }
}

/// Cycle accounting for one replayed scan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CycleReport {
    pub total_cycles: u64,
    pub window_steps: u64,
    /// Candidate patterns examined by full comparison.
    pub verifications: u64,
    pub pb_words_read: u64,
    pub bytes_processed: u64,
    pub clock_mhz: f64,
    pub bitrate_mbps: f64,
}

impl CycleReport {
    /// Folds another report into this one (per-frame accumulation), keeping
    /// this report's clock.
    pub fn merge(&mut self, other: &CycleReport) {
        self.total_cycles += other.total_cycles;
        self.window_steps += other.window_steps;
        self.verifications += other.verifications;
        self.pb_words_read += other.pb_words_read;
        self.bytes_processed += other.bytes_processed;
        self.bitrate_mbps = bitrate_mbps(self.bytes_processed, self.total_cycles, self.clock_mhz)
            .unwrap_or(0.0);
    }
}

fn bitrate_mbps(bytes: u64, cycles: u64, clock_mhz: f64) -> Option<f64> {
    if cycles == 0 {
        return None;
    }
    Some(8.0 * bytes as f64 * clock_mhz / cycles as f64)
}

/// Replays the skip-mode scan trajectory over `text`, accruing costs per
/// the model: a Bloom query and an advance on every window step, a shift
/// read per Bloom hit, the HT read pair per zero shift, and per candidate
/// its PB word stream plus one compare-commit cycle. The report carries
/// the default clock; [`estimate_bitrate`] rescales to any other.
pub fn estimate_cycles(tables: &MatcherTables, text: &[u8], cost: &CostModel) -> CycleReport {
    let mut report = CycleReport {
        clock_mhz: DEFAULT_CLOCK_MHZ,
        bytes_processed: text.len() as u64,
        ..CycleReport::default()
    };
    let opts = ScanOptions {
        mode: ScanMode::PaperSkip,
        bloom_gate: true,
    };
    tables.scan_detailed(text, opts, |step| {
        report.window_steps += 1;
        let mut cycles = cost.bf_query + cost.advance;
        if step.bloom_hit {
            cycles += cost.st_read;
            if step.shift == Some(0) {
                cycles += cost.ht_read;
                cycles += cost.pb_word * step.candidate_words;
                cycles += cost.verify_commit * step.candidates as u64;
                report.verifications += step.candidates as u64;
                report.pb_words_read += step.candidate_words;
            }
        }
        report.total_cycles += cycles;
    });
    report.bitrate_mbps =
        bitrate_mbps(report.bytes_processed, report.total_cycles, report.clock_mhz).unwrap_or(0.0);
    report
}

/// Estimated throughput in Mbps at the given clock:
/// `8 * bytes * clock_mhz / cycles`.
pub fn estimate_bitrate(report: &CycleReport, clock_mhz: f64) -> Result<f64, HwError> {
    bitrate_mbps(report.bytes_processed, report.total_cycles, clock_mhz).ok_or(HwError::ZeroCycles)
}

/// Sidecar manifest describing the raw image dump.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ImageManifest {
    pub window: usize,
    pub sections: Vec<SectionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SectionEntry {
    pub name: String,
    pub offset: u64,
    pub length: u64,
}

/// Writes the raw memory sections (st, ht, pb) to one binary stream and
/// returns the manifest. HT words are little-endian; PB words are nine
/// bytes each, eight payload bytes followed by the last-word flag.
pub fn write_images<W: Write>(images: &HwImages, mut w: W) -> Result<ImageManifest, HwError> {
    let mut sections = Vec::new();
    let mut offset = 0u64;

    let st = images.st.bytes();
    w.write_all(st)?;
    sections.push(SectionEntry {
        name: "st".into(),
        offset,
        length: st.len() as u64,
    });
    offset += st.len() as u64;

    let ht_len = images.ht.words().len() as u64 * 4;
    for word in images.ht.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    sections.push(SectionEntry {
        name: "ht".into(),
        offset,
        length: ht_len,
    });
    offset += ht_len;

    let pb_len = images.pb.words.len() as u64 * (PB_WORD_BYTES as u64 + 1);
    for word in &images.pb.words {
        w.write_all(&word.payload)?;
        w.write_all(&[word.last as u8])?;
    }
    sections.push(SectionEntry {
        name: "pb".into(),
        offset,
        length: pb_len,
    });

    Ok(ImageManifest {
        window: images.window,
        sections,
    })
}

/// Writes the image binary to `path` and the manifest JSON to
/// `<path>.manifest.json`.
pub fn dump_images_file(images: &HwImages, path: impl AsRef<Path>) -> Result<ImageManifest, HwError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    let manifest = write_images(images, &mut w)?;
    w.flush()?;
    let manifest_path = format!("{}.manifest.json", path.display());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(manifest_path, json)?;
    Ok(manifest)
}

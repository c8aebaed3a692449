//! Traffic traces and dataset doping.
//!
//! A trace is a sequence of frames, loaded either from hex-line dumps (one
//! frame per line) or by chunking a raw byte stream. Doping injects known
//! signature bytes into a seeded random selection of frames, producing
//! ground-truth malicious inputs plus a report of every injection. The
//! doping percentage is the share of frames that received a pattern.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pattern::{PatternId, PatternSet};

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: hex string has odd length")]
    OddHexLength { line: usize },

    #[error("line {line}: invalid hex digit")]
    InvalidHexDigit { line: usize },

    #[error("trace has no frames")]
    EmptyTrace,

    #[error("pattern set is empty")]
    EmptyPatternSet,

    #[error("doping rate {rate} outside [0, 1]")]
    InvalidRate { rate: f64 },

    #[error("raw chunk size must be at least 1")]
    ZeroChunk,
}

/// A sequence of traffic frames.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceFile {
    pub frames: Vec<Vec<u8>>,
    pub source_name: String,
}

impl TraceFile {
    pub fn new(frames: Vec<Vec<u8>>, source_name: impl Into<String>) -> Self {
        Self {
            frames,
            source_name: source_name.into(),
        }
    }

    /// Parses hex-line text: one frame per line, blank lines skipped,
    /// whitespace within lines stripped before decoding.
    pub fn from_hex_lines(text: &str, source_name: impl Into<String>) -> Result<Self, TraceError> {
        let mut frames = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let compact: String = line.chars().filter(|c| !c.is_whitespace()).collect();
            if compact.is_empty() {
                continue;
            }
            let frame = match hex::decode(&compact) {
                Ok(bytes) => bytes,
                Err(hex::FromHexError::OddLength) => {
                    return Err(TraceError::OddHexLength { line: line_no })
                }
                Err(_) => return Err(TraceError::InvalidHexDigit { line: line_no }),
            };
            frames.push(frame);
        }
        Ok(Self::new(frames, source_name))
    }

    /// Splits raw bytes into fixed-size chunks; the final chunk may be
    /// shorter.
    pub fn from_raw(
        bytes: &[u8],
        chunk: usize,
        source_name: impl Into<String>,
    ) -> Result<Self, TraceError> {
        if chunk == 0 {
            return Err(TraceError::ZeroChunk);
        }
        let frames = bytes.chunks(chunk).map(<[u8]>::to_vec).collect();
        Ok(Self::new(frames, source_name))
    }

    /// Renders the trace back to hex-line text, one frame per line.
    pub fn to_hex_lines(&self) -> String {
        let mut out = String::new();
        for frame in &self.frames {
            out.push_str(&hex::encode(frame));
            out.push('\n');
        }
        out
    }

    /// Concatenation of all frames, in order.
    pub fn flatten(&self) -> Vec<u8> {
        self.frames.concat()
    }

    pub fn total_bytes(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// One injected pattern occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub frame_index: usize,
    pub byte_offset: usize,
    pub pattern_id: PatternId,
}

/// Record of a doping run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DopingReport {
    pub total_lines: usize,
    pub doped_lines: usize,
    pub injections: Vec<Injection>,
}

impl DopingReport {
    /// Doped lines over total lines, times 100.
    pub fn doping_percent(&self) -> f64 {
        doping_percentage(self.doped_lines, self.total_lines).unwrap_or(0.0)
    }
}

/// Exact quotient `100 * doped / total`. Errors when the trace is empty.
pub fn doping_percentage(doped_lines: usize, total_lines: usize) -> Result<f64, TraceError> {
    if total_lines == 0 {
        return Err(TraceError::EmptyTrace);
    }
    Ok(100.0 * doped_lines as f64 / total_lines as f64)
}

/// Injects patterns into `round(rate * frames)` distinct frames chosen
/// uniformly. Each selected frame receives one uniformly chosen pattern
/// inserted (not overwritten) at a uniformly chosen offset, so the original
/// frame bytes are preserved around the injection. The same seed always
/// reproduces the same doped trace and report.
pub fn dope(
    trace: &TraceFile,
    patterns: &PatternSet,
    rate: f64,
    seed: u64,
) -> Result<(TraceFile, DopingReport), TraceError> {
    if !(0.0..=1.0).contains(&rate) || rate.is_nan() {
        return Err(TraceError::InvalidRate { rate });
    }
    if trace.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    if patterns.is_empty() {
        return Err(TraceError::EmptyPatternSet);
    }

    let total = trace.len();
    let doped_count = (rate * total as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = index::sample(&mut rng, total, doped_count).into_vec();
    selected.sort_unstable();

    let mut doped = trace.clone();
    let mut injections = Vec::with_capacity(doped_count);
    for frame_index in selected {
        let pattern = &patterns.patterns()[rng.random_range(0..patterns.len())];
        let frame = &mut doped.frames[frame_index];
        let byte_offset = rng.random_range(0..=frame.len());
        frame.splice(byte_offset..byte_offset, pattern.bytes().iter().copied());
        injections.push(Injection {
            frame_index,
            byte_offset,
            pattern_id: pattern.id(),
        });
    }

    let report = DopingReport {
        total_lines: total,
        doped_lines: doped_count,
        injections,
    };
    Ok((doped, report))
}

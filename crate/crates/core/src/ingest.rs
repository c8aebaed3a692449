//! Signature database ingestion.
//!
//! Two input shapes are handled: cleaned hex lists (one signature per line,
//! either bare hex or ndb-style `name:type:offset:hexsig` records) and raw
//! containers whose first 512 bytes are a colon-delimited ASCII header. The
//! header parser exists for provenance display; pattern extraction always
//! consumes hex lines. Signatures carrying wildcard or alternation
//! metacharacters are filtered out and counted, mirroring the manual
//! cleaning step such databases go through before hardware loading.
//!
//! Loaded patterns can be segmented into 64-bit buffer words ([`PbWord`])
//! with a last-word flag, the layout the pattern buffer memory uses.

use thiserror::Error;

use crate::pattern::{Pattern, PatternError, PatternId, PatternSet, BLOCK};

/// Size of the container's textual header.
pub const CVD_HEADER_LEN: usize = 512;

/// Payload width of one pattern-buffer word.
pub const PB_WORD_BYTES: usize = 8;

/// Characters that mark a signature as wildcard/alternation bearing; such
/// lines are skipped and counted rather than decoded.
const WILDCARD_CHARS: &[char] = &['?', '*', '{', '}', '(', ')', '|'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("container too short for a {CVD_HEADER_LEN}-byte header: {len} bytes")]
    TruncatedHeader { len: usize },

    #[error("line {line}: hex string has odd length")]
    OddHexLength { line: usize },

    #[error("line {line}: invalid hex digit")]
    InvalidHexDigit { line: usize },

    #[error("line {line}: colon-delimited record has no hex field (expected name:type:offset:hexsig)")]
    MissingHexField { line: usize },

    #[error("line {line}: decoded signature is shorter than {BLOCK} bytes")]
    PatternTooShort { line: usize },

    #[error("no signatures loaded")]
    EmptyPatternSet,
}

/// Parsed 512-byte container header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvdHeader {
    raw: Vec<u8>,
    fields: Vec<String>,
}

impl CvdHeader {
    /// The raw 512 header bytes.
    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    /// Colon-separated segments of the textual portion. A header without
    /// colons yields a single field.
    pub fn fields(&self) -> &[String] {
        &self.fields
    }
}

/// Splits a container into its 512-byte header and opaque body. The header's
/// textual portion (trailing NULs and whitespace stripped) is tokenized on
/// colons; the body is returned as-is for downstream tooling.
pub fn parse_cvd_header(input: &[u8]) -> Result<(CvdHeader, &[u8]), IngestError> {
    if input.len() < CVD_HEADER_LEN {
        return Err(IngestError::TruncatedHeader { len: input.len() });
    }
    let raw = input[..CVD_HEADER_LEN].to_vec();
    let text = String::from_utf8_lossy(&raw);
    let text = text.trim_end_matches(['\0', ' ', '\t', '\r', '\n']);
    let fields = text.split(':').map(str::to_owned).collect();
    Ok((
        CvdHeader { raw, fields },
        &input[CVD_HEADER_LEN..],
    ))
}

/// One successfully decoded signature line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HexSignature {
    pub name: String,
    pub hex: String,
    pub bytes: Vec<u8>,
}

/// Lines that were filtered out rather than decoded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipReport {
    /// 1-based numbers of lines skipped for carrying wildcard metacharacters.
    pub wildcard_lines: Vec<usize>,
    /// Total lines seen, including blanks and comments.
    pub total_lines: usize,
    /// Signatures actually loaded.
    pub loaded: usize,
}

impl SkipReport {
    pub fn skipped(&self) -> usize {
        self.wildcard_lines.len()
    }
}

/// Ingestion result: the pattern set plus per-pattern names and the skip
/// report. `names[i]` belongs to `set.patterns()[i]`.
#[derive(Debug, Clone)]
pub struct LoadedSignatures {
    pub set: PatternSet,
    pub names: Vec<String>,
    pub report: SkipReport,
}

impl LoadedSignatures {
    pub fn name_of(&self, id: PatternId) -> Option<&str> {
        self.set
            .patterns()
            .iter()
            .position(|p| p.id() == id)
            .map(|i| self.names[i].as_str())
    }
}

/// Loads signatures from text lines, assigning sequential ids from 0.
///
/// Per line: blank lines and `#` comments are ignored; colon-delimited
/// records take the 4th field as hex and the 1st as the name; bare lines
/// are all hex and take their 1-based line number as the name. Lines whose
/// hex field contains wildcard metacharacters are skipped and counted.
pub fn load_hex_signatures<I, S>(lines: I) -> Result<LoadedSignatures, IngestError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut report = SkipReport::default();
    let mut names = Vec::new();
    let mut patterns = Vec::new();
    for (idx, line) in lines.into_iter().enumerate() {
        let line_no = idx + 1;
        report.total_lines += 1;
        let line = line.as_ref().trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, hex) = if trimmed.contains(':') {
            let mut fields = trimmed.split(':');
            let name = fields.next().unwrap_or_default().to_owned();
            let hex = fields
                .nth(2)
                .ok_or(IngestError::MissingHexField { line: line_no })?;
            (name, hex)
        } else {
            (line_no.to_string(), trimmed)
        };
        if hex.contains(WILDCARD_CHARS) {
            report.wildcard_lines.push(line_no);
            continue;
        }
        let bytes = decode_hex(hex, line_no)?;
        if bytes.len() < BLOCK {
            return Err(IngestError::PatternTooShort { line: line_no });
        }
        let sig = HexSignature {
            name,
            hex: hex.to_owned(),
            bytes,
        };
        patterns.push(Pattern::new(patterns.len() as PatternId, sig.bytes.clone()));
        names.push(sig.name);
    }
    if patterns.is_empty() {
        return Err(IngestError::EmptyPatternSet);
    }
    report.loaded = patterns.len();
    let set = match PatternSet::new(patterns) {
        Ok(set) => set,
        // Sequential ids and per-line length checks rule these out.
        Err(PatternError::EmptyPatternSet) => return Err(IngestError::EmptyPatternSet),
        Err(e) => unreachable!("pattern set validation after ingest checks: {e}"),
    };
    Ok(LoadedSignatures { set, names, report })
}

fn decode_hex(hex: &str, line: usize) -> Result<Vec<u8>, IngestError> {
    match hex::decode(hex) {
        Ok(bytes) => Ok(bytes),
        Err(hex::FromHexError::OddLength) => Err(IngestError::OddHexLength { line }),
        Err(_) => Err(IngestError::InvalidHexDigit { line }),
    }
}

/// One 64-bit pattern-buffer word: eight payload bytes plus a flag marking
/// the final word of a pattern. The final word's unused tail is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbWord {
    pub payload: [u8; PB_WORD_BYTES],
    pub last: bool,
}

/// Segments a pattern into `ceil(len / 8)` buffer words. Only the final
/// word carries the last-word flag; its trailing bytes are zero-padded.
pub fn segment_pattern(pattern: &Pattern) -> Vec<PbWord> {
    segment_bytes(pattern.bytes())
}

pub(crate) fn segment_bytes(bytes: &[u8]) -> Vec<PbWord> {
    let chunks: Vec<&[u8]> = bytes.chunks(PB_WORD_BYTES).collect();
    let count = chunks.len();
    chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| {
            let mut payload = [0u8; PB_WORD_BYTES];
            payload[..chunk.len()].copy_from_slice(chunk);
            PbWord {
                payload,
                last: i + 1 == count,
            }
        })
        .collect()
}

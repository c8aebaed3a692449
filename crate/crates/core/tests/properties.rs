//! Property tests pitting the engine against independent oracles.
//!
//! The scanner is checked against a naive per-pattern all-occurrences
//! matcher, the shift table against a direct evaluation of the skip
//! equation, the Bloom gate against an exact membership set, and the
//! memory images against the table-driven engine.

use std::collections::HashSet;

use proptest::prelude::*;

use wmscan_core::bloom::{block_key, BloomConfig, BloomVector};
use wmscan_core::hw::{build_images, image_scan};
use wmscan_core::ingest::{segment_pattern, PB_WORD_BYTES};
use wmscan_core::matcher::{MatchEvent, MatcherTables, ScanMode, ScanOptions};
use wmscan_core::pattern::{Pattern, PatternId, PatternSet, BLOCK};
use wmscan_core::trace::{dope, TraceFile};
use wmscan_core::wmtb;

/// Naive all-occurrences matcher: the oracle the scanner must agree with.
fn naive_matches(patterns: &[Pattern], text: &[u8]) -> Vec<MatchEvent> {
    let mut out = Vec::new();
    for p in patterns {
        let bytes = p.bytes();
        if bytes.len() > text.len() {
            continue;
        }
        for start in 0..=(text.len() - bytes.len()) {
            if &text[start..start + bytes.len()] == bytes {
                out.push(MatchEvent {
                    pattern_id: p.id(),
                    start,
                    end: start + bytes.len(),
                });
            }
        }
    }
    out.sort_by_key(|e| (e.start, e.pattern_id));
    out
}

/// Direct evaluation of the skip equation for one byte-pair key.
fn shift_oracle(prefixes: &[&[u8]], m: usize, key: u16) -> usize {
    let pair = [(key >> 8) as u8, key as u8];
    let mut rightmost_q = 0usize;
    for prefix in prefixes {
        for q in BLOCK..=m {
            if prefix[q - 2] == pair[0] && prefix[q - 1] == pair[1] {
                rightmost_q = rightmost_q.max(q);
            }
        }
    }
    if rightmost_q == 0 {
        m - BLOCK + 1
    } else {
        m - rightmost_q
    }
}

fn byte_strategy(alphabet: u16) -> BoxedStrategy<u8> {
    match alphabet {
        256 => any::<u8>().boxed(),
        n => (0u8..n as u8).boxed(),
    }
}

/// Pattern sets of 1..=50 patterns (lengths 2..=32) and a text over the
/// same alphabet; alphabets of 2, 16, and 256 symbols.
fn scan_case() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u8>)> {
    prop_oneof![Just(2u16), Just(16), Just(256)].prop_flat_map(|alphabet| {
        let byte = byte_strategy(alphabet);
        let patterns = prop::collection::vec(
            prop::collection::vec(byte.clone(), 2..=32usize),
            1..=50usize,
        );
        let text = prop::collection::vec(byte, 0..=2048usize);
        (patterns, text)
    })
}

fn build(patterns: Vec<Vec<u8>>) -> MatcherTables {
    let set = PatternSet::from_bytes(patterns).unwrap();
    MatcherTables::build(set, BloomConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scan_matches_naive_oracle((patterns, text) in scan_case()) {
        let tables = build(patterns);
        let got = tables.scan(&text, ScanMode::AllMatches);
        let expected = naive_matches(tables.pattern_set().patterns(), &text);
        prop_assert_eq!(&got, &expected);
        // Emission order is part of the contract: start asc, id asc.
        let mut sorted = got.clone();
        sorted.sort_by_key(|e| (e.start, e.pattern_id));
        prop_assert_eq!(got, sorted);
    }

    #[test]
    fn shift_table_matches_equation((patterns, _) in scan_case()) {
        let tables = build(patterns);
        let m = tables.window();
        let prefixes: Vec<&[u8]> = tables
            .pattern_set()
            .patterns()
            .iter()
            .map(|p| &p.bytes()[..m])
            .collect();
        let mut present: HashSet<u16> = HashSet::new();
        for prefix in &prefixes {
            for w in prefix.windows(BLOCK) {
                present.insert(block_key([w[0], w[1]]));
            }
        }
        let default = m - BLOCK + 1;
        for key in 0..=u16::MAX {
            let entry = tables.shift_table().get(key) as usize;
            if present.contains(&key) {
                prop_assert_eq!(entry, shift_oracle(&prefixes, m, key));
            } else {
                prop_assert_eq!(entry, default);
            }
            // Zero shift exactly when the pair ends some prefix.
            let group = tables.groups().group(key);
            prop_assert_eq!(entry == 0, !group.is_empty());
        }
    }

    #[test]
    fn skip_events_are_a_subsequence((patterns, text) in scan_case()) {
        let tables = build(patterns);
        let all = tables.scan(&text, ScanMode::AllMatches);
        let skip = tables.scan(&text, ScanMode::PaperSkip);
        let mut it = all.iter();
        for event in &skip {
            prop_assert!(
                it.any(|e| e == event),
                "skip event {:?} not in all-matches order",
                event
            );
        }
    }

    #[test]
    fn every_event_is_sound((patterns, text) in scan_case()) {
        let tables = build(patterns);
        for mode in [ScanMode::AllMatches, ScanMode::PaperSkip] {
            for event in tables.scan(&text, mode) {
                let pattern = tables.pattern(event.pattern_id).unwrap();
                prop_assert_eq!(&text[event.start..event.end], pattern.bytes());
                prop_assert_eq!(event.end - event.start, pattern.len());
            }
        }
    }

    #[test]
    fn scan_progress_is_bounded((patterns, text) in scan_case()) {
        let tables = build(patterns);
        let max_shift = tables.window() - BLOCK + 1;
        let mut steps = 0usize;
        tables.scan_detailed(&text, ScanOptions::default(), |step| {
            steps += 1;
            assert!(step.advance >= 1, "scan failed to advance");
            assert!(step.advance <= max_shift || step.advance <= tables.window().max(step.advance), );
        });
        prop_assert!(steps <= text.len());
    }

    #[test]
    fn bloom_gating_never_changes_output((patterns, text) in scan_case()) {
        let tables = build(patterns);
        for mode in [ScanMode::AllMatches, ScanMode::PaperSkip] {
            let gated = tables.scan_detailed(
                &text,
                ScanOptions { mode, bloom_gate: true },
                |_| {},
            );
            let ungated = tables.scan_detailed(
                &text,
                ScanOptions { mode, bloom_gate: false },
                |_| {},
            );
            prop_assert_eq!(gated, ungated);
        }
    }

    #[test]
    fn bloom_negative_implies_default_shift(
        (patterns, _) in scan_case(),
        bits_log2 in 10u8..=16,
        hashes in 1u8..=4,
        seed in any::<u64>(),
    ) {
        let set = PatternSet::from_bytes(patterns).unwrap();
        let config = BloomConfig { bits_log2, hash_count: hashes, seed };
        let tables = MatcherTables::build(set, config).unwrap();
        let default = (tables.window() - BLOCK + 1) as u8;
        for key in 0..=u16::MAX {
            let pair = [(key >> 8) as u8, key as u8];
            if !tables.bloom().query(pair) {
                prop_assert_eq!(tables.shift_table().get(key), default);
            }
        }
    }

    #[test]
    fn bloom_has_no_false_negatives(
        pairs in prop::collection::vec(any::<[u8; 2]>(), 0..300),
        bits_log2 in 8u8..=16,
        hashes in 1u8..=4,
        seed in any::<u64>(),
    ) {
        let config = BloomConfig { bits_log2, hash_count: hashes, seed };
        let mut bf = BloomVector::new(config).unwrap();
        for p in &pairs {
            bf.insert(*p);
        }
        for p in &pairs {
            prop_assert!(bf.query(*p));
        }
    }

    #[test]
    fn segmentation_round_trips(bytes in prop::collection::vec(any::<u8>(), 1..=256usize)) {
        let pattern = Pattern::new(0, bytes.clone());
        let words = segment_pattern(&pattern);
        prop_assert_eq!(words.len(), bytes.len().div_ceil(PB_WORD_BYTES));
        let mut joined = Vec::new();
        for (i, w) in words.iter().enumerate() {
            prop_assert_eq!(w.last, i + 1 == words.len());
            joined.extend_from_slice(&w.payload);
        }
        joined.truncate(bytes.len());
        prop_assert_eq!(joined, bytes);
    }

    #[test]
    fn images_agree_with_engine((patterns, text) in scan_case()) {
        let tables = build(patterns);
        let images = build_images(&tables).unwrap();
        prop_assert_eq!(
            image_scan(&images, &text),
            tables.scan(&text, ScanMode::PaperSkip)
        );
    }

    #[test]
    fn container_round_trip((patterns, text) in scan_case()) {
        let tables = build(patterns);
        let bytes = wmtb::to_bytes(&tables);
        let restored = wmtb::read_tables(bytes.as_slice(), wmtb::LoadOptions::default()).unwrap();
        prop_assert_eq!(restored.window(), tables.window());
        prop_assert_eq!(
            restored.shift_table().entries().as_slice(),
            tables.shift_table().entries().as_slice()
        );
        prop_assert_eq!(
            restored.scan(&text, ScanMode::AllMatches),
            tables.scan(&text, ScanMode::AllMatches)
        );
        // Re-serialization is byte-identical.
        prop_assert_eq!(wmtb::to_bytes(&restored), bytes);
    }
}

/// Doped traces must be fully recalled: every injection shows up when the
/// doped trace is scanned frame by frame.
#[test]
fn doping_recall_frame_by_frame() {
    let patterns = PatternSet::from_bytes(vec![
        b"lover".to_vec(),
        b"coverage".to_vec(),
        b"discotheque".to_vec(),
    ])
    .unwrap();
    let tables = MatcherTables::build(patterns.clone(), BloomConfig::default()).unwrap();
    let frames: Vec<Vec<u8>> = (0..200)
        .map(|i| (0..40).map(|j| ((i * 31 + j * 7) % 251) as u8).collect())
        .collect();
    let trace = TraceFile::new(frames, "synthetic");
    for seed in 0..20 {
        let (doped, report) = dope(&trace, &patterns, 0.3, seed).unwrap();
        for inj in &report.injections {
            let events = tables.scan(&doped.frames[inj.frame_index], ScanMode::AllMatches);
            assert!(
                events.iter().any(|e| {
                    e.pattern_id == inj.pattern_id && e.start == inj.byte_offset
                }),
                "seed {seed}: injection {inj:?} not recalled"
            );
        }
    }
}

/// Measured false-positive rate of a lossy filter configuration stays near
/// the expected fill ratio (about 1.5% for 1,000 pairs in 2^16 bits).
#[test]
fn bloom_false_positive_rate_is_small() {
    let config = BloomConfig {
        bits_log2: 16,
        hash_count: 1,
        seed: 0xfeed_beef, // non-zero seed engages the mixing hash
    };
    let mut bf = BloomVector::new(config).unwrap();
    let mut inserted = HashSet::new();
    let mut state = 1u32;
    while inserted.len() < 1000 {
        state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
        inserted.insert([(state >> 24) as u8, (state >> 16) as u8]);
    }
    for pair in &inserted {
        bf.insert(*pair);
    }
    let mut probes = 0u32;
    let mut false_positives = 0u32;
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            if inserted.contains(&[a, b]) {
                assert!(bf.query([a, b]), "false negative on inserted pair");
            } else if probes < 10_000 {
                probes += 1;
                if bf.query([a, b]) {
                    false_positives += 1;
                }
            }
        }
    }
    let rate = false_positives as f64 / probes as f64;
    assert!(
        (0.005..0.03).contains(&rate),
        "false-positive rate {rate} outside the expected band around 1.5%"
    );
}

/// Exactness check: the default configuration is a presence bitmap, so
/// gating answers equal exact membership for every possible pair.
#[test]
fn default_bloom_equals_presence_bitmap() {
    let tables = {
        let set = PatternSet::from_bytes(vec![b"lover".to_vec(), b"cover".to_vec()]).unwrap();
        MatcherTables::build(set, BloomConfig::default()).unwrap()
    };
    let m = tables.window();
    let mut present = HashSet::new();
    for p in tables.pattern_set().patterns() {
        for w in p.bytes()[..m].windows(2) {
            present.insert([w[0], w[1]]);
        }
    }
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            assert_eq!(tables.bloom().query([a, b]), present.contains(&[a, b]));
        }
    }
}

/// Paper-scale shape: a large set whose shortest signature is 15 bytes
/// yields a window of 15 and a maximum shift of 14.
#[test]
fn window_15_gives_max_shift_14() {
    let patterns: Vec<Vec<u8>> = (0..2500u32)
        .map(|i| {
            let len = 15 + (i % 40) as usize;
            (0..len)
                .map(|j| (i.wrapping_mul(2654435761).wrapping_add(j as u32 * 97) >> 8) as u8)
                .collect()
        })
        .collect();
    let tables = build(patterns);
    assert_eq!(tables.window(), 15);
    assert_eq!(tables.shift_table().max_entry(), 14);
}

#[test]
fn ids_in_groups_exist_in_pattern_set() {
    let tables = {
        let set = PatternSet::from_bytes(vec![
            b"abcd".to_vec(),
            b"bcde".to_vec(),
            b"abce".to_vec(),
        ])
        .unwrap();
        MatcherTables::build(set, BloomConfig::default()).unwrap()
    };
    let ids: HashSet<PatternId> = tables
        .pattern_set()
        .patterns()
        .iter()
        .map(Pattern::id)
        .collect();
    for (_, members) in tables.groups().iter() {
        for id in members {
            assert!(ids.contains(id));
        }
    }
}

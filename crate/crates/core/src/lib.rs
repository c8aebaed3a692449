//! Multi-pattern signature scanning engine built on byte-pair shift tables.
//!
//! The crate covers the full experimental loop for a table-driven
//! multi-pattern matcher:
//!
//! * [`pattern`] — signature patterns and validated pattern sets;
//! * [`matcher`] — preprocessing (shift table, suffix groups) and the
//!   sliding-window scanner;
//! * [`bloom`] — the byte-pair membership filter that gates shift-table
//!   reads;
//! * [`ingest`] — signature database loading (hex lists, ndb-style records,
//!   512-byte container headers) and 64-bit word segmentation;
//! * [`trace`] — traffic trace loading, doping with known patterns, and
//!   doping statistics;
//! * [`hw`] — byte-exact PB/HT/ST memory images, an image-only reference
//!   scanner, and a cycle-cost throughput estimator;
//! * [`wmtb`] — the binary container tables travel in between build and
//!   scan stages.

pub mod bloom;
pub mod hw;
pub mod ingest;
pub mod matcher;
pub mod pattern;
pub mod trace;
pub mod wmtb;

pub use bloom::{BloomConfig, BloomVector};
pub use matcher::{MatchEvent, MatcherTables, ScanMode, ScanOptions};
pub use pattern::{compute_window, Pattern, PatternError, PatternId, PatternSet};

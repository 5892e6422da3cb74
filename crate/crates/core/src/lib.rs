//! Record linkage and citation comparison for bibliographic exports.
//!
//! This crate reconciles citation data exported from two databases with
//! very different editorial models (a web-crawled academic search engine
//! and a curated abstract database). It normalizes noisy metadata, links
//! records across exports with a cascade of four match-keys, removes
//! within-export duplicates, categorizes the overlap between the two
//! sides, computes citation-impact comparisons, and estimates how quickly
//! one database catches up with the other from a single synchronous
//! snapshot.
//!
//! The crate is organized as a library of small, testable stages:
//!
//! - [`model`]: the record schema, thresholds, and corpus validation
//! - [`normalize`]: diacritic folding, tokenization, author and corpus cleaning
//! - [`matchkeys`]: the four match-keys
//! - [`linkage`]: cross-set match-merging and duplicate detection
//! - [`coverage`]: overlap categorization and source thesaurus handling
//! - [`metrics`]: ratios, normalized citation rates, correlations
//! - [`timing`]: entry-age cohorts and indexing-delay estimation
//! - [`synth`]: seeded synthetic corpora with planted ground truth
//! - [`io`]: JSONL/CSV ingestion and emission
//! - [`pipeline`]: the end-to-end comparison run and its report files
//!
//! Heavy loops are data-parallel via rayon when the default `parallel`
//! feature is enabled and fall back to plain iterators without it; both
//! modes produce byte-identical output.

pub mod coverage;
pub mod io;
pub mod linkage;
pub mod matchkeys;
pub mod metrics;
pub mod model;
pub mod normalize;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod timing;

pub use model::{BibRecord, Provenance, RecordId, RecordKind, Thresholds};

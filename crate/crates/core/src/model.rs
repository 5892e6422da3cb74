//! Core record schema shared by every stage of the toolkit.
//!
//! A corpus is a flat list of [`BibRecord`]s: a handful of target articles
//! plus the documents citing them, all tagged with the database they were
//! exported from. Everything downstream (keying, linkage, coverage, metrics,
//! timing) consumes this one shape.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Identifier of a record, unique within one corpus file.
///
/// Ids are assigned monotonically at ingestion (or by the generator) and are
/// the universal tie-breaker: every "smallest id wins" rule in the toolkit
/// refers to this value.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct RecordId(pub u32);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Which export a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    GsSearch,
    GsMetrics,
    Scopus,
}

impl Provenance {
    pub const ALL: [Provenance; 3] = [Provenance::GsSearch, Provenance::GsMetrics, Provenance::Scopus];

    /// Token used in file headers and reports; matches the serialized form.
    pub fn token(self) -> &'static str {
        match self {
            Provenance::GsSearch => "GS_SEARCH",
            Provenance::GsMetrics => "GS_METRICS",
            Provenance::Scopus => "SCOPUS",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Whether a record is one of the studied articles or a document citing one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RecordKind {
    Target,
    Citing,
}

/// One bibliographic record as exported from a citation database.
///
/// Optional fields model the patchy coverage of real exports; absent is not
/// the same as empty. `entry_age_days` is the number of days between the
/// document entering the database and the data collection date, only known
/// for recently added documents (at most one year old).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibRecord {
    pub id: RecordId,
    pub provenance: Provenance,
    pub kind: RecordKind,
    /// Target article this record cites. Present iff `kind == Citing`.
    pub cites_target: Option<RecordId>,
    pub title: String,
    /// Author names as listed, possibly truncated by the export.
    pub authors: Vec<String>,
    pub source_title: Option<String>,
    pub publisher: Option<String>,
    pub year: Option<i32>,
    pub volume: Option<String>,
    pub start_page: Option<String>,
    pub web_domain: Option<String>,
    pub citation_count: Option<i64>,
    pub entry_age_days: Option<i64>,
    /// True for bare "[Citation]"-style entries that carry no primary link.
    #[serde(default)]
    pub is_citation_stub: bool,
}

impl BibRecord {
    /// Minimal record with only the required fields set; handy in tests and
    /// as a building block for the generator.
    pub fn new(id: u32, provenance: Provenance, kind: RecordKind, title: &str) -> Self {
        BibRecord {
            id: RecordId(id),
            provenance,
            kind,
            cites_target: None,
            title: title.to_string(),
            authors: Vec::new(),
            source_title: None,
            publisher: None,
            year: None,
            volume: None,
            start_page: None,
            web_domain: None,
            citation_count: None,
            entry_age_days: None,
            is_citation_stub: false,
        }
    }

    /// Number of populated metadata fields; used to pick the best-described
    /// member of a duplicate group.
    pub fn completeness(&self) -> u32 {
        let mut n = 0;
        n += u32::from(!self.title.trim().is_empty());
        n += u32::from(!self.authors.is_empty());
        n += u32::from(self.source_title.is_some());
        n += u32::from(self.publisher.is_some());
        n += u32::from(self.year.is_some());
        n += u32::from(self.volume.is_some());
        n += u32::from(self.start_page.is_some());
        n += u32::from(self.web_domain.is_some());
        n += u32::from(self.citation_count.is_some());
        n += u32::from(self.entry_age_days.is_some());
        n
    }
}

/// Journal-level metadata (title list entry with its access modality and
/// size metrics). Stored as provided; nothing in the pipeline derives it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalMeta {
    pub title: String,
    pub publisher: Option<String>,
    pub access_modality: AccessModality,
    pub h5: Option<u32>,
    pub ipp: Option<f64>,
}

/// How a journal's content is accessible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AccessModality {
    Oa,
    Sb,
    Mixed,
}

/// The five-way overlap classification of a citing document, with the
/// ahead-of-print sub-split on the GS-only-in-a-covered-source category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CategoryValue {
    Both,
    GsOnlyScopusSource,
    GsOnlyNoScopusSource,
    ScopusOnlyGsSource,
    ScopusOnlyNoGsSource,
}

impl CategoryValue {
    pub const ALL: [CategoryValue; 5] = [
        CategoryValue::Both,
        CategoryValue::GsOnlyScopusSource,
        CategoryValue::GsOnlyNoScopusSource,
        CategoryValue::ScopusOnlyGsSource,
        CategoryValue::ScopusOnlyNoGsSource,
    ];

    pub fn token(self) -> &'static str {
        match self {
            CategoryValue::Both => "BOTH",
            CategoryValue::GsOnlyScopusSource => "GS_ONLY_SCOPUS_SOURCE",
            CategoryValue::GsOnlyNoScopusSource => "GS_ONLY_NO_SCOPUS_SOURCE",
            CategoryValue::ScopusOnlyGsSource => "SCOPUS_ONLY_GS_SOURCE",
            CategoryValue::ScopusOnlyNoGsSource => "SCOPUS_ONLY_NO_GS_SOURCE",
        }
    }
}

impl fmt::Display for CategoryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Whether a GS-only document in a covered source looks like an
/// ahead-of-print case (publisher known to expose articles in press).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AipSplit {
    PossibleAip,
    NotAip,
}

/// Overlap category of one citing document. The AIP sub-split may only be
/// attached to the `GsOnlyScopusSource` value; the constructor enforces it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCategory {
    pub value: CategoryValue,
    pub aip_split: Option<AipSplit>,
}

impl OverlapCategory {
    pub fn new(value: CategoryValue) -> Self {
        OverlapCategory { value, aip_split: None }
    }

    /// Attach an AIP sub-split; only legal on `GsOnlyScopusSource`.
    pub fn with_aip(value: CategoryValue, split: AipSplit) -> Result<Self, ModelError> {
        if value != CategoryValue::GsOnlyScopusSource {
            return Err(ModelError::InvalidAipSplit { value });
        }
        Ok(OverlapCategory { value, aip_split: Some(split) })
    }
}

/// All tunable thresholds in one place. Defaults reproduce the published
/// methodology; every CLI entry point can override them individually.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Title words shorter than this never become tokens.
    pub min_title_word_len: usize,
    /// Characters kept from the first author's last name in key prefixes.
    pub author_prefix_len: usize,
    /// Title tokens included in the full match-key.
    pub full_key_word_count: usize,
    /// Minimum two-way title overlap for a large-similarity verdict.
    pub title_overlap_fraction: f64,
    /// Minimum number of shared distinct title tokens for large similarity.
    pub min_shared_title_words: usize,
    /// Maximum publication-year distance for large similarity.
    pub max_year_gap: i32,
    /// Width of one entry-age cohort bin, in days.
    pub bin_width_days: i64,
    /// Entry ages at or above this are outside the timing analysis.
    pub horizon_days: i64,
    /// Widen title overlap to all tokens instead of qualifying ones.
    pub overlap_counts_short_tokens: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_title_word_len: 4,
            author_prefix_len: 6,
            full_key_word_count: 10,
            title_overlap_fraction: 0.5,
            min_shared_title_words: 3,
            max_year_gap: 2,
            bin_width_days: 30,
            horizon_days: 365,
            overlap_counts_short_tokens: false,
        }
    }
}

impl Thresholds {
    /// Check the structural invariants (everything positive, fraction in
    /// (0, 1]). Returns the first violated constraint.
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive: [(&str, bool); 7] = [
            ("min_title_word_len", self.min_title_word_len > 0),
            ("author_prefix_len", self.author_prefix_len > 0),
            ("full_key_word_count", self.full_key_word_count > 0),
            ("min_shared_title_words", self.min_shared_title_words > 0),
            ("max_year_gap", self.max_year_gap >= 0),
            ("bin_width_days", self.bin_width_days > 0),
            ("horizon_days", self.horizon_days > 0),
        ];
        for (name, ok) in positive {
            if !ok {
                return Err(ModelError::BadThreshold { name, detail: "must be positive".into() });
            }
        }
        if !(self.title_overlap_fraction > 0.0 && self.title_overlap_fraction <= 1.0) {
            return Err(ModelError::BadThreshold {
                name: "title_overlap_fraction",
                detail: "must lie in (0, 1]".into(),
            });
        }
        Ok(())
    }
}

/// Structural errors in model-level types.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("aip_split may only be set on GS_ONLY_SCOPUS_SOURCE, not {value}")]
    InvalidAipSplit { value: CategoryValue },
    #[error("threshold {name}: {detail}")]
    BadThreshold { name: &'static str, detail: String },
}

/// Which corpus invariant a record violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    DuplicateId,
    CitingWithoutTarget,
    TargetWithCitesTarget,
    DanglingCitesTarget,
    CitesNonTarget,
    EntryAgeOutOfRange,
    NegativeCitationCount,
}

/// One invariant violation found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub record: RecordId,
    pub kind: ViolationKind,
    pub detail: String,
}

/// Outcome of corpus validation: the number of records seen and every
/// violation, in record order. An empty `violations` list means the corpus
/// satisfies all record-level invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every record-level invariant of a corpus:
/// unique ids, `cites_target` present iff the record is a citing document
/// and pointing at an existing target record, `entry_age_days` within
/// [0, 365], and non-negative citation counts.
pub fn validate_corpus(records: &[BibRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    let target_ids: BTreeSet<RecordId> = records
        .iter()
        .filter(|r| r.kind == RecordKind::Target)
        .map(|r| r.id)
        .collect();

    for r in records {
        if !seen.insert(r.id) {
            violations.push(Violation {
                record: r.id,
                kind: ViolationKind::DuplicateId,
                detail: format!("id {} assigned more than once", r.id),
            });
        }
        match (r.kind, r.cites_target) {
            (RecordKind::Citing, None) => violations.push(Violation {
                record: r.id,
                kind: ViolationKind::CitingWithoutTarget,
                detail: "citing record lacks cites_target".into(),
            }),
            (RecordKind::Target, Some(t)) => violations.push(Violation {
                record: r.id,
                kind: ViolationKind::TargetWithCitesTarget,
                detail: format!("target record carries cites_target {t}"),
            }),
            (RecordKind::Citing, Some(t)) => {
                if !target_ids.contains(&t) {
                    let kind = if records.iter().any(|o| o.id == t) {
                        ViolationKind::CitesNonTarget
                    } else {
                        ViolationKind::DanglingCitesTarget
                    };
                    violations.push(Violation {
                        record: r.id,
                        kind,
                        detail: format!("cites_target {t} is not a target record in this corpus"),
                    });
                }
            }
            (RecordKind::Target, None) => {}
        }
        if let Some(age) = r.entry_age_days {
            if !(0..=365).contains(&age) {
                violations.push(Violation {
                    record: r.id,
                    kind: ViolationKind::EntryAgeOutOfRange,
                    detail: format!("entry_age_days {age} outside [0, 365]"),
                });
            }
        }
        if let Some(c) = r.citation_count {
            if c < 0 {
                violations.push(Violation {
                    record: r.id,
                    kind: ViolationKind::NegativeCitationCount,
                    detail: format!("citation_count {c} is negative"),
                });
            }
        }
    }

    ValidationReport { records: records.len(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn citing(id: u32, target: u32) -> BibRecord {
        let mut r = BibRecord::new(id, Provenance::GsSearch, RecordKind::Citing, "some title");
        r.cites_target = Some(RecordId(target));
        r
    }

    #[test]
    fn enum_tokens_round_trip() {
        for p in Provenance::ALL {
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.token()));
            let back: Provenance = serde_json::from_str(&json).unwrap();
            assert_eq!(back, p);
        }
        assert_eq!(serde_json::to_string(&RecordKind::Target).unwrap(), "\"TARGET\"");
        assert_eq!(serde_json::to_string(&AccessModality::Oa).unwrap(), "\"OA\"");
    }

    #[test]
    fn unknown_enum_token_is_an_error() {
        assert!(serde_json::from_str::<Provenance>("\"WEB_OF_SCIENCE\"").is_err());
        assert!(serde_json::from_str::<RecordKind>("\"REVIEW\"").is_err());
        assert!(serde_json::from_str::<CategoryValue>("\"SOMEWHERE\"").is_err());
    }

    #[test]
    fn aip_split_only_on_gs_only_scopus_source() {
        assert!(OverlapCategory::with_aip(CategoryValue::GsOnlyScopusSource, AipSplit::NotAip).is_ok());
        let err = OverlapCategory::with_aip(CategoryValue::Both, AipSplit::PossibleAip).unwrap_err();
        assert_eq!(err, ModelError::InvalidAipSplit { value: CategoryValue::Both });
    }

    #[test]
    fn default_thresholds_validate() {
        let t = Thresholds::default();
        assert_eq!(t.min_title_word_len, 4);
        assert_eq!(t.author_prefix_len, 6);
        assert_eq!(t.full_key_word_count, 10);
        assert_eq!(t.max_year_gap, 2);
        assert!(t.validate().is_ok());

        let mut bad = t.clone();
        bad.title_overlap_fraction = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = t;
        bad.bin_width_days = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn validate_flags_missing_and_dangling_targets() {
        let mut target = BibRecord::new(1, Provenance::GsSearch, RecordKind::Target, "t");
        target.citation_count = Some(12);
        let good = citing(2, 1);
        let mut missing = BibRecord::new(3, Provenance::GsSearch, RecordKind::Citing, "c");
        missing.cites_target = None;
        let dangling = citing(4, 99);

        let report = validate_corpus(&[target, good, missing, dangling]);
        assert_eq!(report.records, 4);
        let kinds: Vec<ViolationKind> = report.violations.iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![ViolationKind::CitingWithoutTarget, ViolationKind::DanglingCitesTarget]
        );
    }

    #[test]
    fn validate_flags_range_violations() {
        let mut r = citing(7, 1);
        r.entry_age_days = Some(400);
        r.citation_count = Some(-3);
        let mut t = BibRecord::new(1, Provenance::GsSearch, RecordKind::Target, "t");
        t.entry_age_days = Some(365); // boundary is legal

        let report = validate_corpus(&[t, r]);
        let kinds: Vec<ViolationKind> = report.violations.iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![ViolationKind::EntryAgeOutOfRange, ViolationKind::NegativeCitationCount]
        );
    }

    #[test]
    fn validate_flags_duplicate_ids_and_citing_a_citer() {
        let t = BibRecord::new(1, Provenance::Scopus, RecordKind::Target, "t");
        let c1 = citing(2, 1);
        let mut c_dup = citing(2, 1);
        c_dup.title = "same id, different row".into();
        let c_to_citer = citing(3, 2); // id 2 exists but is not a target

        let report = validate_corpus(&[t, c1, c_dup, c_to_citer]);
        let kinds: Vec<ViolationKind> = report.violations.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::DuplicateId, ViolationKind::CitesNonTarget]);
    }

    #[test]
    fn record_completeness_counts_populated_fields() {
        let mut r = BibRecord::new(1, Provenance::Scopus, RecordKind::Citing, "title");
        assert_eq!(r.completeness(), 1);
        r.authors.push("Doe, J.".into());
        r.year = Some(2014);
        r.volume = Some("7".into());
        assert_eq!(r.completeness(), 4);
    }
}

//! Overlap categorization: why a citing document shows up in only one of
//! the two databases.
//!
//! Documents found in both sides are `BOTH`. One-sided documents split on
//! whether their source is covered by the other database, established two
//! ways: a curated active-title list (first approach) and source-title
//! pairs inferred from documents that did match across the databases
//! (second approach). GS-only documents in a covered source further split
//! into possible ahead-of-print cases by publisher.

use crate::linkage::MatchedPair;
use crate::model::{AipSplit, BibRecord, CategoryValue, Provenance, RecordId};
use crate::normalize::normalize_source_title;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Coverage flags for one normalized source title.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFlags {
    /// Listed in the curated active-title list of the second database.
    pub in_scopus_list: bool,
    /// Seen on the Scopus side of a matched cross-database pair.
    pub inferred_in_scopus: bool,
    /// Seen on the GS side of a matched cross-database pair.
    pub inferred_in_gs: bool,
}

impl SourceFlags {
    pub fn scopus_covered(self) -> bool {
        self.in_scopus_list || self.inferred_in_scopus
    }
    pub fn gs_covered(self) -> bool {
        self.inferred_in_gs
    }
}

/// Thesaurus of normalized source titles with their coverage flags and,
/// when the active list provides one, their publisher.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceThesaurus {
    entries: BTreeMap<String, SourceFlags>,
    publishers: BTreeMap<String, String>,
}

impl SourceThesaurus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load the curated active-title list: `(title, publisher)` rows.
    /// Publisher may be empty.
    pub fn from_source_list<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut t = Self::new();
        for (title, publisher) in rows {
            let norm = normalize_source_title(title);
            if norm.is_empty() {
                continue;
            }
            t.entries.entry(norm.clone()).or_default().in_scopus_list = true;
            if !publisher.trim().is_empty() {
                t.publishers.entry(norm).or_insert_with(|| publisher.trim().to_string());
            }
        }
        t
    }

    pub fn flags(&self, raw_title: &str) -> SourceFlags {
        self.entries.get(&normalize_source_title(raw_title)).copied().unwrap_or_default()
    }

    /// Publisher recorded for a source title by the active list, if any.
    pub fn listed_publisher(&self, raw_title: &str) -> Option<&str> {
        self.publishers.get(&normalize_source_title(raw_title)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Record the inferred pairs: each pair's GS-side title has evidently a
    /// Scopus-covered counterpart and vice versa, so both titles gain both
    /// inferred flags.
    pub fn apply_inferred(&mut self, pairs: &[InferredSourcePair]) {
        for p in pairs {
            for norm in [&p.gs_norm, &p.scopus_norm] {
                let flags = self.entries.entry(norm.clone()).or_default();
                flags.inferred_in_scopus = true;
                flags.inferred_in_gs = true;
            }
        }
    }
}

/// A source-title pair observed on a matched cross-database document pair,
/// kept for manual review before it feeds the thesaurus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InferredSourcePair {
    pub gs_source: String,
    pub scopus_source: String,
    pub gs_norm: String,
    pub scopus_norm: String,
    /// Number of matched pairs exhibiting this title pair.
    pub support: usize,
}

/// Collect the distinct source-title pairs across matched documents.
/// `pairs` must come from a GS-side/Scopus-side match-merge; records
/// without a source title on either side contribute nothing.
pub fn infer_source_pairs(
    pairs: &[MatchedPair],
    gs: &[BibRecord],
    scopus: &[BibRecord],
) -> Vec<InferredSourcePair> {
    let gs_by_id: BTreeMap<RecordId, &BibRecord> = gs.iter().map(|r| (r.id, r)).collect();
    let sc_by_id: BTreeMap<RecordId, &BibRecord> = scopus.iter().map(|r| (r.id, r)).collect();
    let mut seen: BTreeMap<(String, String), InferredSourcePair> = BTreeMap::new();
    for p in pairs {
        let (Some(g), Some(s)) = (gs_by_id.get(&p.left), sc_by_id.get(&p.right)) else {
            continue;
        };
        let (Some(gt), Some(st)) = (&g.source_title, &s.source_title) else { continue };
        let gs_norm = normalize_source_title(gt);
        let scopus_norm = normalize_source_title(st);
        if gs_norm.is_empty() || scopus_norm.is_empty() {
            continue;
        }
        seen.entry((gs_norm.clone(), scopus_norm.clone()))
            .and_modify(|e| e.support += 1)
            .or_insert(InferredSourcePair {
                gs_source: gt.clone(),
                scopus_source: st.clone(),
                gs_norm,
                scopus_norm,
                support: 1,
            });
    }
    seen.into_values().collect()
}

/// Categorize one citing record given whether it matched across databases.
/// GS-side records split on Scopus coverage of their source; Scopus-side
/// records split on GS coverage. A missing source title can never be
/// covered.
pub fn categorize(record: &BibRecord, matched: bool, thesaurus: &SourceThesaurus) -> CategoryValue {
    if matched {
        return CategoryValue::Both;
    }
    let flags = record.source_title.as_deref().map(|s| thesaurus.flags(s)).unwrap_or_default();
    match record.provenance {
        Provenance::GsSearch | Provenance::GsMetrics => {
            if flags.scopus_covered() {
                CategoryValue::GsOnlyScopusSource
            } else {
                CategoryValue::GsOnlyNoScopusSource
            }
        }
        Provenance::Scopus => {
            if flags.gs_covered() {
                CategoryValue::ScopusOnlyGsSource
            } else {
                CategoryValue::ScopusOnlyNoGsSource
            }
        }
    }
}

/// Publisher -> "exposes articles in press" table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PublisherAipTable {
    entries: BTreeMap<String, bool>,
}

fn normalize_publisher(raw: &str) -> String {
    normalize_source_title(raw)
}

impl PublisherAipTable {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = (&'a str, bool)>) -> Self {
        let mut entries = BTreeMap::new();
        for (publisher, has_aip) in rows {
            let norm = normalize_publisher(publisher);
            if !norm.is_empty() {
                entries.insert(norm, has_aip);
            }
        }
        PublisherAipTable { entries }
    }

    pub fn has_aip(&self, raw_publisher: &str) -> Option<bool> {
        self.entries.get(&normalize_publisher(raw_publisher)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Counts of the ahead-of-print split. `unknown_publisher` collects records
/// whose publisher is absent from the table (or absent altogether).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AipCounts {
    pub possible_aip: usize,
    pub not_aip: usize,
    pub unknown_publisher: usize,
}

impl AipCounts {
    pub fn total(&self) -> usize {
        self.possible_aip + self.not_aip + self.unknown_publisher
    }
}

/// Split GS-only-in-covered-source records by publisher AIP behaviour.
/// The record's own publisher field wins; a record without one falls back
/// to the publisher the active list records for its source title. Returns
/// the per-record split (None = unknown publisher) plus the counts.
pub fn split_aip(
    records: &[&BibRecord],
    aip: &PublisherAipTable,
    thesaurus: &SourceThesaurus,
) -> (Vec<Option<AipSplit>>, AipCounts) {
    let mut counts = AipCounts::default();
    let splits: Vec<Option<AipSplit>> = records
        .iter()
        .map(|r| {
            let publisher = r
                .publisher
                .as_deref()
                .or_else(|| r.source_title.as_deref().and_then(|s| thesaurus.listed_publisher(s)));
            match publisher.and_then(|p| aip.has_aip(p)) {
                Some(true) => Some(AipSplit::PossibleAip),
                Some(false) => Some(AipSplit::NotAip),
                None => None,
            }
        })
        .collect();
    for s in &splits {
        match s {
            Some(AipSplit::PossibleAip) => counts.possible_aip += 1,
            Some(AipSplit::NotAip) => counts.not_aip += 1,
            None => counts.unknown_publisher += 1,
        }
    }
    (splits, counts)
}

/// Which record field an entity distribution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityKind {
    WebDomain,
    SourceTitle,
}

/// Frequency profile of web domains or source titles over a record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistStats {
    pub kind: EntityKind,
    pub docs: usize,
    pub missing: usize,
    pub distinct: usize,
    pub appearing_once: usize,
    pub max_appearances: usize,
    /// Most frequent entities, count descending then name ascending.
    pub top: Vec<(String, usize)>,
}

impl DistStats {
    pub fn missing_pct(&self) -> f64 {
        if self.docs == 0 {
            0.0
        } else {
            100.0 * self.missing as f64 / self.docs as f64
        }
    }

    /// Share of distinct entities appearing exactly once.
    pub fn once_pct(&self) -> f64 {
        if self.distinct == 0 {
            0.0
        } else {
            100.0 * self.appearing_once as f64 / self.distinct as f64
        }
    }
}

/// Count how concentrated an entity field is over `records` (domains are
/// lowercased, source titles normalized). `k` bounds the top list.
pub fn entity_distribution(records: &[&BibRecord], kind: EntityKind, k: usize) -> DistStats {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut missing = 0usize;
    for r in records {
        let value = match kind {
            EntityKind::WebDomain => r.web_domain.as_deref().map(|d| d.trim().to_lowercase()),
            EntityKind::SourceTitle => r.source_title.as_deref().map(normalize_source_title),
        };
        match value {
            Some(v) if !v.is_empty() => *counts.entry(v).or_default() += 1,
            _ => missing += 1,
        }
    }

    let distinct = counts.len();
    let appearing_once = counts.values().filter(|&&c| c == 1).count();
    let max_appearances = counts.values().copied().max().unwrap_or(0);
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|(na, ca), (nb, cb)| cb.cmp(ca).then_with(|| na.cmp(nb)));
    ranked.truncate(k);

    DistStats {
        kind,
        docs: records.len(),
        missing,
        distinct,
        appearing_once,
        max_appearances,
        top: ranked,
    }
}

//! End-to-end comparison of the three exports: clean, dedup, merge the
//! two GS exports, link against Scopus, categorize the overlap, compute
//! the impact metrics and timing views, and render the report files.
//!
//! The heavy lifting lives in the stage modules; this one wires them
//! together in a fixed order and owns the report shapes. [`run_pipeline_data`]
//! is pure over in-memory corpora so tests and the synthetic-corpus scorer
//! can run it without touching disk; [`run_pipeline`] adds file ingestion
//! and report writing on top.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{
    categorize, entity_distribution, infer_source_pairs, split_aip, AipCounts, DistStats,
    EntityKind, InferredSourcePair, PublisherAipTable, SourceThesaurus,
};
use crate::io;
use crate::linkage::{dedup, match_merge, DuplicateReport, MatchKeyKind, MatchedPair};
use crate::matchkeys::key_bundle;
use crate::metrics::{
    age_normalized_rates, averaged_ratio, category_mean_rates, globalized_ratio, h5, pearson,
    percent_lower, ratio_count_correlation, ratio_dispersion, select_analysis_set, spearman,
    year_distribution, AnalysisSet, CategoryCounts, CategoryRateRow, Dispersion,
    TargetCitationRow, YearBucket,
};
use crate::model::{
    validate_corpus, AipSplit, BibRecord, CategoryValue, Provenance, RecordId, RecordKind,
    Thresholds,
};
use crate::normalize::{clean_corpus, normalize_source_title, DeletionReport};
use crate::synth::ObservedOutcome;
use crate::timing::{
    aip_breakdown_series, bin_by_entry_age, delay_quantiles, found_fraction_series,
    overlap_ratio_series, BreakdownSeries, CohortBin, DelayQuantiles, IndexingClass, TimedDoc,
};

/// Tuning knobs for a full comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub thresholds: Thresholds,
    /// Top-k cut on GS targets for the impact-comparison set.
    pub top_k_gs: usize,
    /// Top-k cut on Scopus targets for the impact-comparison set.
    pub top_k_scopus: usize,
    /// Targets published within this many years of the newest dated
    /// target form the recent subset.
    pub recent_year_window: i32,
    /// Entities listed per concentration table.
    pub top_entities: usize,
    /// Keep per-record intermediates (match-keys, timed docs) in the
    /// report so they can be dumped alongside it.
    pub keep_intermediates: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            thresholds: Thresholds::default(),
            top_k_gs: 100,
            top_k_scopus: 200,
            recent_year_window: 2,
            top_entities: 10,
            keep_intermediates: false,
        }
    }
}

/// In-memory inputs of one comparison run.
#[derive(Debug, Clone, Default)]
pub struct PipelineInputs {
    pub gs_search: Vec<BibRecord>,
    pub gs_metrics: Vec<BibRecord>,
    pub scopus: Vec<BibRecord>,
    /// Active source list rows: (source title, publisher).
    pub source_list: Vec<(String, String)>,
    /// Publisher AIP rows: (publisher, posts articles in press).
    pub aip_table: Vec<(String, bool)>,
    /// Normalized (GS source, Scopus source) pairs a reviewer approved.
    /// When present, inferred pairs outside the list are not applied.
    pub allowlist: Option<BTreeSet<(String, String)>>,
}

/// A pipeline failure, tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn err(stage: &'static str, message: impl Into<String>) -> PipelineError {
    PipelineError { stage, message: message.into() }
}

/// Cleaning outcome of one input corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCleaning {
    pub dataset: String,
    pub report: DeletionReport,
}

/// Duplicate-removal outcome of one input corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDedup {
    pub dataset: String,
    pub removed: Vec<RecordId>,
    /// Candidate pairs with their classification; low pairs survive.
    pub pairs: Vec<MatchedPair>,
    pub report: DuplicateReport,
}

/// Citing records dropped because their target vanished during cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrphanCount {
    pub dataset: String,
    pub dropped: Vec<RecordId>,
}

/// How the two GS exports merged into one working set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionSummary {
    pub search_records: usize,
    pub metrics_records: usize,
    pub matched_pairs: usize,
    pub search_only: usize,
    pub metrics_only: usize,
    pub union_records: usize,
    /// Metrics-only records that could not keep their id.
    pub rekeyed: usize,
    /// Pairs accepted per key stage, [`MatchKeyKind::ALL`] order.
    pub stage_counts: [usize; 4],
}

/// Identity of one union record in the two GS exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionRow {
    pub union_id: RecordId,
    pub search_id: Option<RecordId>,
    pub metrics_id: Option<RecordId>,
}

/// Target- and citing-level linkage against the Scopus export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossLinkSummary {
    /// Matched target articles: GS union id x Scopus id.
    pub target_pairs: Vec<MatchedPair>,
    pub unmatched_gs_targets: Vec<RecordId>,
    pub unmatched_scopus_targets: Vec<RecordId>,
    /// Matched citing documents: GS union id x Scopus id.
    pub citing_pairs: Vec<MatchedPair>,
    /// Citing pairs accepted per key stage, [`MatchKeyKind::ALL`] order.
    pub stage_counts: [usize; 4],
    pub unmatched_gs_citing: usize,
    pub unmatched_scopus_citing: usize,
}

/// A statistic that may be undefined on degenerate input.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatOutcome {
    pub value: Option<f64>,
    pub note: Option<String>,
}

impl StatOutcome {
    fn from_result<E: std::fmt::Display>(r: Result<f64, E>) -> Self {
        match r {
            Ok(v) => StatOutcome { value: Some(v), note: None },
            Err(e) => StatOutcome { value: None, note: Some(e.to_string()) },
        }
    }
}

/// Whole-set and per-target citation ratios between the two databases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub rows: usize,
    /// Sum of GS counts over sum of Scopus counts.
    pub globalized: StatOutcome,
    /// Mean of per-target ratios, zero denominators counted as one.
    pub averaged: StatOutcome,
    /// GS-only documents over documents found in both databases.
    pub gs_only_over_both: StatOutcome,
    pub dispersion: Option<Dispersion>,
    pub dispersion_note: Option<String>,
}

/// The ratio block restricted to recently published targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecentSubset {
    /// Targets published in or after this year qualify.
    pub min_year: i32,
    pub targets: Vec<RecordId>,
    pub ratios: RatioSummary,
}

/// Overlap-category totals over every citing document, counted once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryBlock {
    pub counts: CategoryCounts,
    /// AIP split of the GS-only documents from Scopus-covered sources.
    pub aip: AipCounts,
    pub gs_docs: usize,
    pub scopus_docs: usize,
}

/// One publication-year row with both sides aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearRow {
    pub label: String,
    pub gs_count: usize,
    pub gs_pct: f64,
    pub scopus_count: usize,
    pub scopus_pct: f64,
}

/// Entity-concentration stats of one corpus and field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDistribution {
    pub dataset: String,
    pub stats: DistStats,
}

/// Age-normalized citation rates per category, one database's view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePerspective {
    pub dataset: String,
    pub docs: usize,
    pub rows: Vec<CategoryRateRow>,
    /// Percent by which each category's mean rate trails the both-category
    /// mean; the both row itself is not listed.
    pub pct_lower_than_both: Vec<(CategoryValue, StatOutcome)>,
    pub excluded_missing_year: usize,
    pub zero_mean_years: Vec<i32>,
}

/// One correlation or index row of the impact comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub statistic: String,
    pub n: usize,
    pub value: Option<f64>,
    pub note: Option<String>,
}

/// Entry-age cohort views and the indexing-delay estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBlock {
    pub timed_docs: usize,
    pub bins: Vec<CohortBin>,
    pub beyond_horizon: usize,
    pub undated: usize,
    pub overlap_ratio: Vec<(i64, Option<f64>)>,
    pub breakdown: BreakdownSeries,
    pub found_fraction: Vec<(i64, f64)>,
    pub quantiles: DelayQuantiles,
}

/// One row-level problem found while reading an input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestIssue {
    pub dataset: String,
    pub line: usize,
    pub message: String,
}

/// Match-keys of one record, kept for the intermediate dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRow {
    pub dataset: String,
    pub id: RecordId,
    pub full: Option<String>,
    pub title: Option<String>,
    pub short: Option<String>,
    pub source: Option<String>,
}

/// Bulky per-record intermediates, collected only on request.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Intermediates {
    pub keys: Vec<KeyRow>,
    pub timed_docs: Vec<TimedDoc>,
}

/// Everything one comparison run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub options: PipelineOptions,
    /// Row-level input problems; empty when built from memory.
    pub ingest_issues: Vec<IngestIssue>,
    pub cleaning: Vec<DatasetCleaning>,
    pub dedup: Vec<DatasetDedup>,
    pub orphans: Vec<OrphanCount>,
    pub union: UnionSummary,
    pub union_map: Vec<UnionRow>,
    /// Matched pairs of the two-export merge: search id x metrics id.
    pub union_pairs: Vec<MatchedPair>,
    pub cross: CrossLinkSummary,
    /// Every inferred source pairing, for reviewer sign-off.
    pub source_pairs: Vec<InferredSourcePair>,
    /// How many of them were applied to the thesaurus.
    pub source_pairs_applied: usize,
    pub citation_rows: Vec<TargetCitationRow>,
    pub ratios: RatioSummary,
    pub recent: Option<RecentSubset>,
    pub analysis_set: AnalysisSet,
    pub categories: CategoryBlock,
    pub years: Vec<YearRow>,
    pub entities: Vec<LabeledDistribution>,
    pub rates: Vec<RatePerspective>,
    pub correlations: Vec<StatRow>,
    pub timing: TimingBlock,
    /// The observations the synthetic-corpus scorer grades.
    pub observed: ObservedOutcome,
    pub intermediates: Option<Intermediates>,
}

/// Which report renderings to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFormats {
    pub csv: bool,
    pub md: bool,
    pub json: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        ReportFormats { csv: true, md: true, json: true }
    }
}

/// File-based inputs and outputs of one comparison run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub gs_search: PathBuf,
    pub gs_metrics: PathBuf,
    pub scopus: PathBuf,
    pub source_list: Option<PathBuf>,
    pub aip_table: Option<PathBuf>,
    pub allowlist: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub formats: ReportFormats,
    pub options: PipelineOptions,
}

// ---------------------------------------------------------------- stages

struct CleanedDataset {
    records: Vec<BibRecord>,
    cleaning: DatasetCleaning,
    dedup: DatasetDedup,
    orphans: OrphanCount,
}

/// Validate, clean, dedup, and orphan-sweep one input corpus.
fn prepare_dataset(
    dataset: &str,
    records: &[BibRecord],
    thresholds: &Thresholds,
) -> Result<CleanedDataset, PipelineError> {
    let validation = validate_corpus(records);
    if !validation.is_clean() {
        let v = &validation.violations[0];
        return Err(err(
            "validate",
            format!(
                "{dataset}: {} violations, first on record {}: {:?} ({})",
                validation.violations.len(),
                v.record.0,
                v.kind,
                v.detail
            ),
        ));
    }

    let (kept, deletion_report) = clean_corpus(records);
    let outcome = dedup(&kept, thresholds);

    // cleaning can delete a target; its citing docs have nothing to
    // compare against and leave the analysis here
    let target_ids: BTreeSet<RecordId> = outcome
        .kept
        .iter()
        .filter(|r| r.kind == RecordKind::Target)
        .map(|r| r.id)
        .collect();
    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for r in outcome.kept {
        match r.cites_target {
            Some(t) if !target_ids.contains(&t) => dropped.push(r.id),
            _ => records.push(r),
        }
    }

    Ok(CleanedDataset {
        records,
        cleaning: DatasetCleaning { dataset: dataset.to_string(), report: deletion_report },
        dedup: DatasetDedup {
            dataset: dataset.to_string(),
            removed: outcome.removed,
            pairs: outcome.pairs,
            report: outcome.report,
        },
        orphans: OrphanCount { dataset: dataset.to_string(), dropped },
    })
}

fn targets_of(records: &[BibRecord]) -> Vec<BibRecord> {
    records.iter().filter(|r| r.kind == RecordKind::Target).cloned().collect()
}

/// Citing records grouped by their target, id order inside each group.
fn citers_of(records: &[BibRecord]) -> BTreeMap<RecordId, Vec<BibRecord>> {
    let mut groups: BTreeMap<RecordId, Vec<BibRecord>> = BTreeMap::new();
    for r in records {
        if let Some(t) = r.cites_target {
            groups.entry(t).or_default().push(r.clone());
        }
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.id);
    }
    groups
}

/// Copy metadata the search export lacks from its metrics twin. The
/// search rendering wins wherever both sides have a value.
fn fill_from_partner(search: &BibRecord, metrics: &BibRecord) -> BibRecord {
    let mut r = search.clone();
    if r.authors.is_empty() {
        r.authors = metrics.authors.clone();
    }
    macro_rules! fill {
        ($($field:ident),+) => {$(
            if r.$field.is_none() {
                r.$field = metrics.$field.clone();
            }
        )+};
    }
    fill!(source_title, publisher, year, volume, start_page, web_domain);
    if r.citation_count.is_none() {
        r.citation_count = metrics.citation_count;
    }
    if r.entry_age_days.is_none() {
        r.entry_age_days = metrics.entry_age_days;
    }
    r
}

struct GsUnion {
    records: Vec<BibRecord>,
    map: Vec<UnionRow>,
    summary: UnionSummary,
    /// Search id x metrics id, targets and citing docs alike.
    pairs: Vec<(RecordId, RecordId)>,
    pair_details: Vec<MatchedPair>,
    /// Union ids backed by a metrics-export record.
    metrics_present: BTreeSet<RecordId>,
}

/// Merge the search and metrics exports into one GS working set.
///
/// Targets link first; citing documents then link only within matched
/// target pairs. Search records keep their ids; a metrics-only record
/// keeps its id too unless it is already taken, in which case it moves to
/// the first free id past the maximum. Matched pairs become one record
/// with the search rendering enriched from the metrics side.
fn merge_gs_sides(search: &[BibRecord], metrics: &[BibRecord], t: &Thresholds) -> GsUnion {
    let search_targets = targets_of(search);
    let metrics_targets = targets_of(metrics);
    let target_outcome = match_merge(&search_targets, &metrics_targets, t);

    let mut stage_counts = target_outcome.stage_counts;
    let mut pair_details = target_outcome.pairs.clone();

    let search_citers = citers_of(search);
    let metrics_citers = citers_of(metrics);
    let empty = Vec::new();
    for p in &target_outcome.pairs {
        let left = search_citers.get(&p.left).unwrap_or(&empty);
        let right = metrics_citers.get(&p.right).unwrap_or(&empty);
        let outcome = match_merge(left, right, t);
        for (i, c) in outcome.stage_counts.iter().enumerate() {
            stage_counts[i] += c;
        }
        pair_details.extend(outcome.pairs);
    }
    pair_details.sort_by_key(|p| (p.left, p.right));
    let pairs: Vec<(RecordId, RecordId)> =
        pair_details.iter().map(|p| (p.left, p.right)).collect();

    let metrics_by_id: BTreeMap<RecordId, &BibRecord> =
        metrics.iter().map(|r| (r.id, r)).collect();
    let partner_of_search: BTreeMap<RecordId, RecordId> = pairs.iter().copied().collect();
    let matched_metrics: BTreeSet<RecordId> = pairs.iter().map(|&(_, m)| m).collect();

    // union ids: search ids stay; matched metrics records fold into their
    // partner; metrics-only ids survive unless already taken
    let mut union_of_metrics: BTreeMap<RecordId, RecordId> =
        pairs.iter().map(|&(s, m)| (m, s)).collect();
    let mut used: BTreeSet<RecordId> = search.iter().map(|r| r.id).collect();
    let mut cursor = used.iter().next_back().map_or(0, |id| id.0).saturating_add(1);
    let mut rekeyed = 0;
    for r in metrics {
        if matched_metrics.contains(&r.id) {
            continue;
        }
        let union_id = if used.insert(r.id) {
            r.id
        } else {
            while !used.insert(RecordId(cursor)) {
                cursor += 1;
            }
            rekeyed += 1;
            RecordId(cursor)
        };
        union_of_metrics.insert(r.id, union_id);
    }

    let mut records = Vec::new();
    let mut map = Vec::new();
    for r in search {
        let partner = partner_of_search.get(&r.id).copied();
        records.push(match partner {
            Some(m) => fill_from_partner(r, metrics_by_id[&m]),
            None => r.clone(),
        });
        map.push(UnionRow { union_id: r.id, search_id: Some(r.id), metrics_id: partner });
    }
    for r in metrics {
        if matched_metrics.contains(&r.id) {
            continue;
        }
        let union_id = union_of_metrics[&r.id];
        let mut rec = r.clone();
        rec.id = union_id;
        if let Some(target) = rec.cites_target {
            rec.cites_target = Some(union_of_metrics[&target]);
        }
        records.push(rec);
        map.push(UnionRow { union_id, search_id: None, metrics_id: Some(r.id) });
    }
    records.sort_by_key(|r| r.id);
    map.sort_by_key(|r| r.union_id);

    let metrics_present = map.iter().filter(|r| r.metrics_id.is_some()).map(|r| r.union_id).collect();
    let summary = UnionSummary {
        search_records: search.len(),
        metrics_records: metrics.len(),
        matched_pairs: pairs.len(),
        search_only: search.len() - pairs.len(),
        metrics_only: metrics.len() - pairs.len(),
        union_records: records.len(),
        rekeyed,
        stage_counts,
    };
    GsUnion { records, map, summary, pairs, pair_details, metrics_present }
}

struct CrossLink {
    summary: CrossLinkSummary,
    target_pair_ids: Vec<(RecordId, RecordId)>,
    matched_gs_citing: BTreeSet<RecordId>,
    matched_scopus_citing: BTreeSet<RecordId>,
}

/// Link the GS union against the Scopus export: targets first, then
/// citing documents within each matched target pair.
fn link_cross_db(union: &[BibRecord], scopus: &[BibRecord], t: &Thresholds) -> CrossLink {
    let gs_targets = targets_of(union);
    let scopus_targets = targets_of(scopus);
    let target_outcome = match_merge(&gs_targets, &scopus_targets, t);

    let gs_citers = citers_of(union);
    let scopus_citers = citers_of(scopus);
    let empty = Vec::new();
    let mut citing_pairs: Vec<MatchedPair> = Vec::new();
    let mut stage_counts = [0usize; 4];
    for p in &target_outcome.pairs {
        let left = gs_citers.get(&p.left).unwrap_or(&empty);
        let right = scopus_citers.get(&p.right).unwrap_or(&empty);
        let outcome = match_merge(left, right, t);
        for (i, c) in outcome.stage_counts.iter().enumerate() {
            stage_counts[i] += c;
        }
        citing_pairs.extend(outcome.pairs);
    }
    citing_pairs.sort_by_key(|p| (p.left, p.right));

    let matched_gs_citing: BTreeSet<RecordId> = citing_pairs.iter().map(|p| p.left).collect();
    let matched_scopus_citing: BTreeSet<RecordId> =
        citing_pairs.iter().map(|p| p.right).collect();
    let total_gs_citing: usize = gs_citers.values().map(Vec::len).sum();
    let total_scopus_citing: usize = scopus_citers.values().map(Vec::len).sum();

    let summary = CrossLinkSummary {
        target_pairs: target_outcome.pairs.clone(),
        unmatched_gs_targets: target_outcome.unmatched_left,
        unmatched_scopus_targets: target_outcome.unmatched_right,
        citing_pairs,
        stage_counts,
        unmatched_gs_citing: total_gs_citing - matched_gs_citing.len(),
        unmatched_scopus_citing: total_scopus_citing - matched_scopus_citing.len(),
    };
    CrossLink {
        target_pair_ids: target_outcome.pairs.iter().map(|p| (p.left, p.right)).collect(),
        summary,
        matched_gs_citing,
        matched_scopus_citing,
    }
}

fn ratio_summary(rows: &[TargetCitationRow], counts: &CategoryCounts) -> RatioSummary {
    let ratios: Vec<f64> =
        rows.iter().map(|r| r.gs_count as f64 / r.scopus_count.max(1) as f64).collect();
    let (dispersion, dispersion_note) = match ratio_dispersion(&ratios) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let gs_only = counts.gs_only_scopus_source + counts.gs_only_no_scopus_source;
    let gs_only_over_both = if counts.both == 0 {
        StatOutcome { value: None, note: Some("no documents found in both databases".into()) }
    } else {
        StatOutcome { value: Some(gs_only as f64 / counts.both as f64), note: None }
    };
    RatioSummary {
        rows: rows.len(),
        globalized: StatOutcome::from_result(globalized_ratio(rows)),
        averaged: StatOutcome::from_result(averaged_ratio(rows)),
        gs_only_over_both,
        dispersion,
        dispersion_note,
    }
}

/// Run the comparison over in-memory corpora.
pub fn run_pipeline_data(
    inputs: &PipelineInputs,
    options: &PipelineOptions,
) -> Result<ComparisonReport, PipelineError> {
    let t = &options.thresholds;
    t.validate().map_err(|e| err("validate", e.to_string()))?;

    let search = prepare_dataset("gs_search", &inputs.gs_search, t)?;
    let metrics = prepare_dataset("gs_metrics", &inputs.gs_metrics, t)?;
    let scopus = prepare_dataset("scopus", &inputs.scopus, t)?;

    let union = merge_gs_sides(&search.records, &metrics.records, t);
    debug_assert!(validate_corpus(&union.records).is_clean());
    let cross = link_cross_db(&union.records, &scopus.records, t);

    // -- coverage: thesaurus, inferred source pairs, categories, AIP
    let thesaurus_rows: Vec<(&str, &str)> =
        inputs.source_list.iter().map(|(s, p)| (s.as_str(), p.as_str())).collect();
    let mut thesaurus = SourceThesaurus::from_source_list(thesaurus_rows);
    let source_pairs =
        infer_source_pairs(&cross.summary.citing_pairs, &union.records, &scopus.records);
    let applied: Vec<InferredSourcePair> = match &inputs.allowlist {
        Some(allow) => source_pairs
            .iter()
            .filter(|p| allow.contains(&(p.gs_norm.clone(), p.scopus_norm.clone())))
            .cloned()
            .collect(),
        None => source_pairs.clone(),
    };
    thesaurus.apply_inferred(&applied);

    let union_citing: Vec<&BibRecord> =
        union.records.iter().filter(|r| r.kind == RecordKind::Citing).collect();
    let scopus_citing: Vec<&BibRecord> =
        scopus.records.iter().filter(|r| r.kind == RecordKind::Citing).collect();

    let gs_categories: BTreeMap<RecordId, CategoryValue> = union_citing
        .iter()
        .map(|r| (r.id, categorize(r, cross.matched_gs_citing.contains(&r.id), &thesaurus)))
        .collect();
    let scopus_categories: BTreeMap<RecordId, CategoryValue> = scopus_citing
        .iter()
        .map(|r| (r.id, categorize(r, cross.matched_scopus_citing.contains(&r.id), &thesaurus)))
        .collect();

    // every citing document lands in exactly one category bucket: all of
    // the GS side, plus only the Scopus docs that are not a GS double
    let mut counts = CategoryCounts::default();
    for c in gs_categories.values() {
        counts.add(*c);
    }
    for r in &scopus_citing {
        if !cross.matched_scopus_citing.contains(&r.id) {
            counts.add(scopus_categories[&r.id]);
        }
    }

    let aip_table_rows: Vec<(&str, bool)> =
        inputs.aip_table.iter().map(|(p, f)| (p.as_str(), *f)).collect();
    let aip_lookup = PublisherAipTable::from_rows(aip_table_rows);
    let covered_only: Vec<&BibRecord> = union_citing
        .iter()
        .copied()
        .filter(|r| gs_categories[&r.id] == CategoryValue::GsOnlyScopusSource)
        .collect();
    let (splits, aip_counts) = split_aip(&covered_only, &aip_lookup, &thesaurus);
    let aip_of: BTreeMap<RecordId, Option<AipSplit>> =
        covered_only.iter().zip(&splits).map(|(r, s)| (r.id, *s)).collect();

    let categories = CategoryBlock {
        counts,
        aip: aip_counts,
        gs_docs: union_citing.len(),
        scopus_docs: scopus_citing.len(),
    };

    // -- per-target citation rows
    let union_citers = citers_of(&union.records);
    let scopus_citers = citers_of(&scopus.records);
    let empty = Vec::new();
    let mut citation_rows = Vec::new();
    for &(gt, st) in &cross.target_pair_ids {
        let gs_docs = union_citers.get(&gt).unwrap_or(&empty);
        let sc_docs = scopus_citers.get(&st).unwrap_or(&empty);
        let mut row_counts = CategoryCounts::default();
        for d in gs_docs {
            row_counts.add(gs_categories[&d.id]);
        }
        for d in sc_docs {
            if !cross.matched_scopus_citing.contains(&d.id) {
                row_counts.add(scopus_categories[&d.id]);
            }
        }
        let row = TargetCitationRow {
            target: gt,
            gs_count: gs_docs.len() as u64,
            scopus_count: sc_docs.len() as u64,
            categories: row_counts,
        };
        debug_assert!(row.is_consistent());
        citation_rows.push(row);
    }

    let ratios = ratio_summary(&citation_rows, &categories.counts);

    // -- recent subset: targets within the window of the newest dated one
    let union_by_id: BTreeMap<RecordId, &BibRecord> =
        union.records.iter().map(|r| (r.id, r)).collect();
    let scopus_by_id: BTreeMap<RecordId, &BibRecord> =
        scopus.records.iter().map(|r| (r.id, r)).collect();
    let target_year = |gt: RecordId, st: RecordId| -> Option<i32> {
        union_by_id.get(&gt).and_then(|r| r.year).or_else(|| scopus_by_id.get(&st).and_then(|r| r.year))
    };
    let dated: Vec<(usize, i32)> = cross
        .target_pair_ids
        .iter()
        .enumerate()
        .filter_map(|(i, &(g, s))| target_year(g, s).map(|y| (i, y)))
        .collect();
    let recent = dated.iter().map(|&(_, y)| y).max().map(|max_year| {
        let min_year = max_year - options.recent_year_window + 1;
        let rows: Vec<TargetCitationRow> = dated
            .iter()
            .filter(|&&(_, y)| y >= min_year)
            .map(|&(i, _)| citation_rows[i].clone())
            .collect();
        let mut subset_counts = CategoryCounts::default();
        for r in &rows {
            // per-row counts already follow the count-once rule
            for c in CategoryValue::ALL {
                for _ in 0..r.categories.get(c) {
                    subset_counts.add(c);
                }
            }
        }
        RecentSubset {
            min_year,
            targets: rows.iter().map(|r| r.target).collect(),
            ratios: ratio_summary(&rows, &subset_counts),
        }
    });

    // -- analysis set and correlations
    let union_targets: Vec<&BibRecord> =
        union.records.iter().filter(|r| r.kind == RecordKind::Target).collect();
    let scopus_targets: Vec<&BibRecord> =
        scopus.records.iter().filter(|r| r.kind == RecordKind::Target).collect();
    let analysis_set = select_analysis_set(
        &union_targets,
        &scopus_targets,
        &cross.target_pair_ids,
        options.top_k_gs,
        options.top_k_scopus,
    );
    let analysis_ids: BTreeSet<RecordId> = analysis_set.pairs.iter().map(|&(g, _)| g).collect();
    let analysis_rows: Vec<&TargetCitationRow> =
        citation_rows.iter().filter(|r| analysis_ids.contains(&r.target)).collect();
    let gs_counts: Vec<f64> = analysis_rows.iter().map(|r| r.gs_count as f64).collect();
    let sc_counts: Vec<f64> = analysis_rows.iter().map(|r| r.scopus_count as f64).collect();
    let owned_rows: Vec<TargetCitationRow> =
        analysis_rows.iter().map(|&r| r.clone()).collect();
    let n = analysis_rows.len();
    let stat_row = |statistic: &str, outcome: StatOutcome| StatRow {
        statistic: statistic.to_string(),
        n,
        value: outcome.value,
        note: outcome.note,
    };
    let correlations = vec![
        stat_row("pearson_counts", StatOutcome::from_result(pearson(&gs_counts, &sc_counts))),
        stat_row("spearman_counts", StatOutcome::from_result(spearman(&gs_counts, &sc_counts))),
        stat_row(
            "pearson_ratio_vs_scopus_count",
            StatOutcome::from_result(ratio_count_correlation(&owned_rows)),
        ),
        stat_row(
            "h5_gs",
            StatOutcome {
                value: Some(h5(&owned_rows.iter().map(|r| r.gs_count).collect::<Vec<_>>()) as f64),
                note: None,
            },
        ),
        stat_row(
            "h5_scopus",
            StatOutcome {
                value: Some(
                    h5(&owned_rows.iter().map(|r| r.scopus_count).collect::<Vec<_>>()) as f64
                ),
                note: None,
            },
        ),
    ];

    // -- publication years, both sides aligned over one bucket list
    let gs_years: Vec<Option<i32>> = union_citing.iter().map(|r| r.year).collect();
    let sc_years: Vec<Option<i32>> = scopus_citing.iter().map(|r| r.year).collect();
    let gs_dist = year_distribution(&gs_years);
    let sc_dist = year_distribution(&sc_years);
    let gs_buckets: BTreeMap<YearBucket, usize> = gs_dist.buckets.iter().copied().collect();
    let sc_buckets: BTreeMap<YearBucket, usize> = sc_dist.buckets.iter().copied().collect();
    let all_buckets: BTreeSet<YearBucket> =
        gs_buckets.keys().chain(sc_buckets.keys()).copied().collect();
    let years: Vec<YearRow> = all_buckets
        .into_iter()
        .map(|b| {
            let g = gs_buckets.get(&b).copied().unwrap_or(0);
            let s = sc_buckets.get(&b).copied().unwrap_or(0);
            YearRow {
                label: b.label(),
                gs_count: g,
                gs_pct: gs_dist.pct(g),
                scopus_count: s,
                scopus_pct: sc_dist.pct(s),
            }
        })
        .collect();

    // -- entity concentration
    let mut entities = Vec::new();
    for (dataset, docs) in [("gs_union", &union_citing), ("scopus", &scopus_citing)] {
        for kind in [EntityKind::WebDomain, EntityKind::SourceTitle] {
            entities.push(LabeledDistribution {
                dataset: dataset.to_string(),
                stats: entity_distribution(docs, kind, options.top_entities),
            });
        }
    }

    // -- age-normalized citation rates, one perspective per database
    let mut rates = Vec::new();
    for (dataset, docs, cats) in [
        ("gs_union", &union_citing, &gs_categories),
        ("scopus", &scopus_citing, &scopus_categories),
    ] {
        let outcome = age_normalized_rates(docs);
        let items: Vec<(CategoryValue, f64)> =
            outcome.rates.iter().map(|&(id, rate)| (cats[&id], rate)).collect();
        let rows = category_mean_rates(&items);
        let both_mean = rows
            .iter()
            .find(|r| r.category == CategoryValue::Both)
            .map(|r| r.mean_rate);
        let pct_lower_than_both = rows
            .iter()
            .filter(|r| r.category != CategoryValue::Both)
            .map(|r| {
                let outcome = match both_mean {
                    Some(b) => StatOutcome::from_result(percent_lower(b, r.mean_rate)),
                    None => StatOutcome {
                        value: None,
                        note: Some("no both-category baseline".into()),
                    },
                };
                (r.category, outcome)
            })
            .collect();
        rates.push(RatePerspective {
            dataset: dataset.to_string(),
            docs: docs.len(),
            rows,
            pct_lower_than_both,
            excluded_missing_year: outcome.excluded_missing_year.len(),
            zero_mean_years: outcome.zero_mean_years,
        });
    }

    // -- timing: only docs the metrics export vouches for carry a usable
    // entry age; covered-source status decides the indexing class
    let timed: Vec<TimedDoc> = union_citing
        .iter()
        .map(|r| {
            let in_both = cross.matched_gs_citing.contains(&r.id);
            let indexing = if !union.metrics_present.contains(&r.id) {
                None
            } else if in_both {
                Some(IndexingClass::FoundInScopus)
            } else if gs_categories[&r.id] == CategoryValue::GsOnlyScopusSource {
                // unknown publishers read as not-AIP so the possible-AIP
                // count stays an evidence-backed floor
                match aip_of[&r.id] {
                    Some(AipSplit::PossibleAip) => Some(IndexingClass::PossibleAip),
                    _ => Some(IndexingClass::NotAip),
                }
            } else {
                None
            };
            TimedDoc { id: r.id, entry_age_days: r.entry_age_days, in_both, indexing }
        })
        .collect();
    let bins = bin_by_entry_age(&timed, t.bin_width_days, t.horizon_days);
    let found_fraction = found_fraction_series(&bins.bins);
    let timing = TimingBlock {
        timed_docs: timed.len(),
        overlap_ratio: overlap_ratio_series(&bins.bins),
        breakdown: aip_breakdown_series(&bins.bins),
        quantiles: delay_quantiles(&found_fraction, t.bin_width_days),
        found_fraction,
        beyond_horizon: bins.beyond_horizon,
        undated: bins.undated,
        bins: bins.bins,
    };

    // -- observations for the synthetic-corpus scorer
    let mut removed_duplicates: BTreeSet<RecordId> = BTreeSet::new();
    let mut dedup_candidates: Vec<MatchedPair> = Vec::new();
    for d in [&search.dedup, &metrics.dedup, &scopus.dedup] {
        removed_duplicates.extend(d.removed.iter().copied());
        dedup_candidates.extend(d.pairs.iter().cloned());
    }
    dedup_candidates.sort_by_key(|p| (p.left, p.right));
    let observed = ObservedOutcome {
        search_metrics_pairs: union.pairs.clone(),
        target_pairs: cross.target_pair_ids.clone(),
        cross_db_pairs: cross.summary.citing_pairs.iter().map(|p| (p.left, p.right)).collect(),
        removed_duplicates,
        dedup_candidates,
        gs_categories,
        scopus_categories,
        quantiles: Some(timing.quantiles),
    };

    let intermediates = options.keep_intermediates.then(|| {
        let mut keys = Vec::new();
        for (dataset, records) in [
            ("gs_search", &search.records),
            ("gs_metrics", &metrics.records),
            ("scopus", &scopus.records),
        ] {
            for r in records {
                let b = key_bundle(r, t);
                keys.push(KeyRow {
                    dataset: dataset.to_string(),
                    id: r.id,
                    full: b.full_key,
                    title: b.title_key,
                    short: b.short_key,
                    source: b.source_key,
                });
            }
        }
        Intermediates { keys, timed_docs: timed.clone() }
    });

    Ok(ComparisonReport {
        options: options.clone(),
        ingest_issues: Vec::new(),
        cleaning: vec![search.cleaning, metrics.cleaning, scopus.cleaning],
        dedup: vec![search.dedup, metrics.dedup, scopus.dedup],
        orphans: vec![search.orphans, metrics.orphans, scopus.orphans],
        union: union.summary,
        union_map: union.map,
        union_pairs: union.pair_details,
        cross: cross.summary,
        source_pairs_applied: applied.len(),
        source_pairs,
        citation_rows,
        ratios,
        recent,
        analysis_set,
        categories,
        years,
        entities,
        rates,
        correlations,
        timing,
        observed,
        intermediates,
    })
}

// ---------------------------------------------------------------- render

fn fmt1(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" { "0.0".to_string() } else { s }
}

fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".to_string() } else { s }
}

fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" { "0.000".to_string() } else { s }
}

fn opt_fmt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn csv_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers).expect("csv header");
    for row in rows {
        w.write_record(row).expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Per-target citation counts with the whole-set summary rows appended.
fn impact_rows(rows: &[TargetCitationRow], ratios: &RatioSummary) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.target.0.to_string(),
                r.gs_count.to_string(),
                r.scopus_count.to_string(),
                fmt1(r.gs_count as f64 / r.scopus_count.max(1) as f64),
            ]
        })
        .collect();
    let gs_total: u64 = rows.iter().map(|r| r.gs_count).sum();
    let sc_total: u64 = rows.iter().map(|r| r.scopus_count).sum();
    out.push(vec![
        "ALL_GLOBALIZED".into(),
        gs_total.to_string(),
        sc_total.to_string(),
        opt_fmt(ratios.globalized.value, fmt1),
    ]);
    out.push(vec![
        "ALL_AVERAGED".into(),
        String::new(),
        String::new(),
        opt_fmt(ratios.averaged.value, fmt1),
    ]);
    out.push(vec![
        "DISPERSION_PCT".into(),
        String::new(),
        String::new(),
        opt_fmt(ratios.dispersion.map(|d| d.percent), fmt1),
    ]);
    out.push(vec![
        "GS_ONLY_OVER_BOTH".into(),
        String::new(),
        String::new(),
        opt_fmt(ratios.gs_only_over_both.value, fmt1),
    ]);
    out
}

fn render_impact_table(report: &ComparisonReport) -> String {
    csv_table(
        &["target", "gs_citations", "scopus_citations", "ratio"],
        &impact_rows(&report.citation_rows, &report.ratios),
    )
}

fn render_recent_table(report: &ComparisonReport) -> String {
    let headers = ["target", "gs_citations", "scopus_citations", "ratio"];
    match &report.recent {
        Some(recent) => {
            let targets: BTreeSet<RecordId> = recent.targets.iter().copied().collect();
            let rows: Vec<TargetCitationRow> = report
                .citation_rows
                .iter()
                .filter(|r| targets.contains(&r.target))
                .cloned()
                .collect();
            let mut out = vec![vec![
                "RECENT_MIN_YEAR".into(),
                String::new(),
                String::new(),
                recent.min_year.to_string(),
            ]];
            out.extend(impact_rows(&rows, &recent.ratios));
            csv_table(&headers, &out)
        }
        None => csv_table(
            &headers,
            &[vec!["NO_DATED_TARGETS".into(), String::new(), String::new(), String::new()]],
        ),
    }
}

fn render_year_table(report: &ComparisonReport) -> String {
    let rows: Vec<Vec<String>> = report
        .years
        .iter()
        .map(|y| {
            vec![
                y.label.clone(),
                y.gs_count.to_string(),
                fmt1(y.gs_pct),
                y.scopus_count.to_string(),
                fmt1(y.scopus_pct),
            ]
        })
        .collect();
    csv_table(&["year", "gs_docs", "gs_pct", "scopus_docs", "scopus_pct"], &rows)
}

fn render_category_table(report: &ComparisonReport) -> String {
    let c = &report.categories;
    let total = c.counts.total();
    let pct = |n: usize| if total == 0 { fmt1(0.0) } else { fmt1(100.0 * n as f64 / total as f64) };
    let mut rows = Vec::new();
    for v in CategoryValue::ALL {
        rows.push(vec![v.token().to_string(), c.counts.get(v).to_string(), pct(c.counts.get(v))]);
        if v == CategoryValue::GsOnlyScopusSource {
            for (label, n) in [
                ("GS_ONLY_SCOPUS_SOURCE_POSSIBLE_AIP", c.aip.possible_aip),
                ("GS_ONLY_SCOPUS_SOURCE_NOT_AIP", c.aip.not_aip),
                ("GS_ONLY_SCOPUS_SOURCE_UNKNOWN_PUBLISHER", c.aip.unknown_publisher),
            ] {
                rows.push(vec![label.to_string(), n.to_string(), pct(n)]);
            }
        }
    }
    rows.push(vec!["TOTAL".into(), total.to_string(), pct(total)]);
    csv_table(&["category", "docs", "pct"], &rows)
}

fn render_entity_table(report: &ComparisonReport) -> String {
    let rows: Vec<Vec<String>> = report
        .entities
        .iter()
        .map(|e| {
            let top = e
                .stats
                .top
                .iter()
                .map(|(name, n)| format!("{name} ({n})"))
                .collect::<Vec<_>>()
                .join("; ");
            vec![
                e.dataset.clone(),
                format!("{:?}", e.stats.kind),
                e.stats.docs.to_string(),
                e.stats.missing.to_string(),
                fmt1(e.stats.missing_pct()),
                e.stats.distinct.to_string(),
                e.stats.appearing_once.to_string(),
                fmt1(e.stats.once_pct()),
                e.stats.max_appearances.to_string(),
                top,
            ]
        })
        .collect();
    csv_table(
        &[
            "dataset",
            "entity",
            "docs",
            "missing",
            "missing_pct",
            "distinct",
            "appearing_once",
            "once_pct",
            "max_appearances",
            "top",
        ],
        &rows,
    )
}

fn render_rate_table(report: &ComparisonReport) -> String {
    let mut rows = Vec::new();
    for p in &report.rates {
        let pct_of: BTreeMap<CategoryValue, &StatOutcome> =
            p.pct_lower_than_both.iter().map(|(c, o)| (*c, o)).collect();
        for r in &p.rows {
            rows.push(vec![
                p.dataset.clone(),
                r.category.token().to_string(),
                r.docs.to_string(),
                fmt2(r.mean_rate),
                pct_of.get(&r.category).map_or(String::new(), |o| opt_fmt(o.value, fmt1)),
            ]);
        }
    }
    csv_table(&["dataset", "category", "docs", "mean_rate", "pct_lower_than_both"], &rows)
}

fn render_correlation_table(report: &ComparisonReport) -> String {
    let rows: Vec<Vec<String>> = report
        .correlations
        .iter()
        .map(|r| {
            let value = match (r.statistic.starts_with("h5"), r.value) {
                (true, Some(v)) => format!("{}", v as i64),
                (false, Some(v)) => fmt2(v),
                (_, None) => String::new(),
            };
            vec![
                r.statistic.clone(),
                r.n.to_string(),
                value,
                r.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    csv_table(&["statistic", "n", "value", "note"], &rows)
}

fn render_overlap_series(report: &ComparisonReport) -> String {
    let ratio_of: BTreeMap<i64, Option<f64>> = report.timing.overlap_ratio.iter().copied().collect();
    let rows: Vec<Vec<String>> = report
        .timing
        .bins
        .iter()
        .map(|b| {
            vec![
                b.label.to_string(),
                b.total().to_string(),
                b.count_both.to_string(),
                b.count_gs_only.to_string(),
                opt_fmt(ratio_of.get(&b.label).copied().flatten(), fmt3),
            ]
        })
        .collect();
    csv_table(&["bin_start_days", "docs", "both", "gs_only", "gs_only_over_both"], &rows)
}

fn render_breakdown_series(report: &ComparisonReport) -> String {
    let rows: Vec<Vec<String>> = report
        .timing
        .breakdown
        .rows
        .iter()
        .map(|r| {
            vec![
                r.label.to_string(),
                r.docs.to_string(),
                fmt1(r.pct_found_in_scopus),
                fmt1(r.pct_possible_aip),
                fmt1(r.pct_not_aip),
            ]
        })
        .collect();
    csv_table(
        &["bin_start_days", "docs", "pct_found_in_scopus", "pct_possible_aip", "pct_not_aip"],
        &rows,
    )
}

fn render_dup_table(report: &ComparisonReport) -> String {
    let rows: Vec<Vec<String>> = report
        .dedup
        .iter()
        .map(|d| {
            vec![
                d.dataset.clone(),
                d.report.total_records.to_string(),
                d.report.candidate_pairs.to_string(),
                d.report.identical_pairs.to_string(),
                d.report.large_pairs.to_string(),
                d.report.low_pairs.to_string(),
                d.report.removed_records.to_string(),
                fmt1(d.report.pct_of_docs(d.report.removed_records)),
            ]
        })
        .collect();
    csv_table(
        &[
            "dataset",
            "total_records",
            "candidate_pairs",
            "identical_pairs",
            "large_pairs",
            "low_pairs",
            "removed_records",
            "removed_pct",
        ],
        &rows,
    )
}

fn render_deletion_table(report: &ComparisonReport) -> String {
    let mut rows = Vec::new();
    for c in &report.cleaning {
        for d in &c.report.deleted {
            rows.push(vec![
                c.dataset.clone(),
                d.record.0.to_string(),
                d.rule.token().to_string(),
                d.offending_value.clone(),
            ]);
        }
    }
    csv_table(&["dataset", "record", "rule", "offending_value"], &rows)
}

fn render_source_pair_table(report: &ComparisonReport) -> String {
    let rows: Vec<Vec<String>> = report
        .source_pairs
        .iter()
        .map(|p| {
            vec![
                p.gs_source.clone(),
                p.scopus_source.clone(),
                p.gs_norm.clone(),
                p.scopus_norm.clone(),
                p.support.to_string(),
            ]
        })
        .collect();
    csv_table(&["gs_source", "scopus_source", "gs_normalized", "scopus_normalized", "support"], &rows)
}

fn render_pair_table(report: &ComparisonReport) -> String {
    let mut rows = Vec::new();
    let stage_rows = [
        ("gs_search_x_gs_metrics", &report.union_pairs),
        ("gs_x_scopus_targets", &report.cross.target_pairs),
        ("gs_x_scopus_citing", &report.cross.citing_pairs),
    ];
    for (stage, pairs) in stage_rows {
        for p in pairs.iter() {
            rows.push(vec![
                stage.to_string(),
                p.left.0.to_string(),
                p.right.0.to_string(),
                format!("{:?}", p.key_used),
                format!("{:?}", p.similarity),
            ]);
        }
    }
    csv_table(&["stage", "left", "right", "key_used", "similarity"], &rows)
}

fn render_key_table(keys: &[KeyRow]) -> String {
    let rows: Vec<Vec<String>> = keys
        .iter()
        .map(|k| {
            vec![
                k.dataset.clone(),
                k.id.0.to_string(),
                k.full.clone().unwrap_or_default(),
                k.title.clone().unwrap_or_default(),
                k.short.clone().unwrap_or_default(),
                k.source.clone().unwrap_or_default(),
            ]
        })
        .collect();
    csv_table(&["dataset", "record", "full_key", "title_key", "short_key", "source_key"], &rows)
}

fn render_timed_table(docs: &[TimedDoc]) -> String {
    let rows: Vec<Vec<String>> = docs
        .iter()
        .map(|d| {
            vec![
                d.id.0.to_string(),
                d.entry_age_days.map(|a| a.to_string()).unwrap_or_default(),
                d.in_both.to_string(),
                d.indexing.map(|i| format!("{i:?}")).unwrap_or_default(),
            ]
        })
        .collect();
    csv_table(&["record", "entry_age_days", "in_both", "indexing"], &rows)
}

fn quantile_label(q: crate::timing::QuantileEstimate) -> String {
    match q {
        crate::timing::QuantileEstimate::Months(m) => format!("{} months", fmt1(m)),
        crate::timing::QuantileEstimate::BeyondHorizon => "beyond horizon".to_string(),
    }
}

fn render_markdown(report: &ComparisonReport) -> String {
    let mut md = String::new();
    let w = &mut md;
    writeln!(w, "# Database comparison report\n").unwrap();

    writeln!(w, "## Inputs\n").unwrap();
    writeln!(w, "| dataset | records | deleted | duplicates removed | orphaned |").unwrap();
    writeln!(w, "|---|---|---|---|---|").unwrap();
    for i in 0..report.cleaning.len() {
        let c = &report.cleaning[i];
        writeln!(
            w,
            "| {} | {} | {} | {} | {} |",
            c.dataset,
            c.report.input_records,
            c.report.deleted.len(),
            report.dedup[i].removed.len(),
            report.orphans[i].dropped.len(),
        )
        .unwrap();
    }
    if !report.ingest_issues.is_empty() {
        writeln!(w, "\n{} input rows could not be parsed.", report.ingest_issues.len()).unwrap();
    }

    let u = &report.union;
    writeln!(w, "\n## GS union\n").unwrap();
    writeln!(
        w,
        "{} search and {} metrics records merged into {} union records \
         ({} matched, {} search-only, {} metrics-only, {} re-keyed).",
        u.search_records,
        u.metrics_records,
        u.union_records,
        u.matched_pairs,
        u.search_only,
        u.metrics_only,
        u.rekeyed,
    )
    .unwrap();

    let x = &report.cross;
    writeln!(w, "\n## Cross-database linkage\n").unwrap();
    writeln!(
        w,
        "{} target pairs ({} GS and {} Scopus targets unmatched); \
         {} citing pairs, {} GS-only and {} Scopus-only citing docs.",
        x.target_pairs.len(),
        x.unmatched_gs_targets.len(),
        x.unmatched_scopus_targets.len(),
        x.citing_pairs.len(),
        x.unmatched_gs_citing,
        x.unmatched_scopus_citing,
    )
    .unwrap();
    writeln!(w, "\n| key stage | citing pairs |").unwrap();
    writeln!(w, "|---|---|").unwrap();
    for (i, kind) in MatchKeyKind::ALL.iter().enumerate() {
        writeln!(w, "| {:?} | {} |", kind, x.stage_counts[i]).unwrap();
    }

    let c = &report.categories;
    writeln!(w, "\n## Overlap categories\n").unwrap();
    writeln!(w, "| category | docs |").unwrap();
    writeln!(w, "|---|---|").unwrap();
    for v in CategoryValue::ALL {
        writeln!(w, "| {} | {} |", v.token(), c.counts.get(v)).unwrap();
    }
    writeln!(w, "| TOTAL | {} |", c.counts.total()).unwrap();
    writeln!(
        w,
        "\nAIP split of the covered GS-only docs: {} possible, {} not, {} unknown publisher.",
        c.aip.possible_aip, c.aip.not_aip, c.aip.unknown_publisher
    )
    .unwrap();
    writeln!(
        w,
        "{} of {} inferred source pairings applied to the thesaurus.",
        report.source_pairs_applied,
        report.source_pairs.len()
    )
    .unwrap();

    let r = &report.ratios;
    writeln!(w, "\n## Citation impact\n").unwrap();
    writeln!(w, "Compared targets: {}.", r.rows).unwrap();
    let fmt_stat = |label: &str, s: &StatOutcome| match (&s.value, &s.note) {
        (Some(v), _) => format!("{label}: {}", fmt2(*v)),
        (None, Some(note)) => format!("{label}: n/a ({note})"),
        (None, None) => format!("{label}: n/a"),
    };
    writeln!(w, "- {}", fmt_stat("globalized GS/Scopus ratio", &r.globalized)).unwrap();
    writeln!(w, "- {}", fmt_stat("averaged GS/Scopus ratio", &r.averaged)).unwrap();
    writeln!(w, "- {}", fmt_stat("GS-only over both", &r.gs_only_over_both)).unwrap();
    match (&r.dispersion, &r.dispersion_note) {
        (Some(d), _) => writeln!(w, "- ratio dispersion: {}%", fmt1(d.percent)).unwrap(),
        (None, Some(note)) => writeln!(w, "- ratio dispersion: n/a ({note})").unwrap(),
        (None, None) => {}
    }
    if let Some(recent) = &report.recent {
        writeln!(
            w,
            "- recent targets (year >= {}): {} targets, {}",
            recent.min_year,
            recent.targets.len(),
            fmt_stat("globalized ratio", &recent.ratios.globalized),
        )
        .unwrap();
    }

    writeln!(w, "\n## Correlations\n").unwrap();
    writeln!(w, "| statistic | n | value | note |").unwrap();
    writeln!(w, "|---|---|---|---|").unwrap();
    for row in &report.correlations {
        writeln!(
            w,
            "| {} | {} | {} | {} |",
            row.statistic,
            row.n,
            opt_fmt(row.value, fmt2),
            row.note.clone().unwrap_or_default(),
        )
        .unwrap();
    }

    let t = &report.timing;
    writeln!(w, "\n## Indexing timing\n").unwrap();
    writeln!(
        w,
        "{} GS citing docs timed ({} undated, {} beyond the horizon).",
        t.timed_docs, t.undated, t.beyond_horizon
    )
    .unwrap();
    writeln!(w, "- median indexing delay: {}", quantile_label(t.quantiles.median)).unwrap();
    writeln!(w, "- third-quartile delay: {}", quantile_label(t.quantiles.q3)).unwrap();
    if t.quantiles.non_monotone {
        writeln!(w, "- the found fraction is not monotone over age; read with care").unwrap();
    }
    md
}

/// Render the report files. Pure: the same report and formats always
/// produce byte-identical content, independent of thread count.
pub fn render_reports(report: &ComparisonReport, formats: ReportFormats) -> Vec<(String, String)> {
    let mut files = Vec::new();
    if formats.csv {
        files.push(("table4.csv".to_string(), render_impact_table(report)));
        files.push(("table5.csv".to_string(), render_recent_table(report)));
        files.push(("table6.csv".to_string(), render_year_table(report)));
        files.push(("table7.csv".to_string(), render_category_table(report)));
        files.push(("table8.csv".to_string(), render_entity_table(report)));
        files.push(("table9.csv".to_string(), render_rate_table(report)));
        files.push(("table10.csv".to_string(), render_correlation_table(report)));
        files.push(("fig5.csv".to_string(), render_overlap_series(report)));
        files.push(("fig6.csv".to_string(), render_breakdown_series(report)));
        files.push(("dup_report.csv".to_string(), render_dup_table(report)));
        files.push(("deletion_report.csv".to_string(), render_deletion_table(report)));
        files.push(("source_pairs_review.csv".to_string(), render_source_pair_table(report)));
        if let Some(inter) = &report.intermediates {
            files.push(("keys.csv".to_string(), render_key_table(&inter.keys)));
            files.push(("pairs.csv".to_string(), render_pair_table(report)));
            files.push(("timed_docs.csv".to_string(), render_timed_table(&inter.timed_docs)));
        }
    }
    if formats.json {
        let mut json = serde_json::to_string_pretty(report).expect("report to json");
        json.push('\n');
        files.push(("report.json".to_string(), json));
        let mut observed = serde_json::to_string_pretty(&report.observed).expect("observed to json");
        observed.push('\n');
        files.push(("observed.json".to_string(), observed));
    }
    if formats.md {
        files.push(("report.md".to_string(), render_markdown(report)));
    }
    files.sort_by(|(a, _), (b, _)| a.cmp(b));
    files
}

// ------------------------------------------------------------- file runs

fn ingest_corpus(
    stage: &'static str,
    dataset: &str,
    path: &Path,
    provenance: Provenance,
    issues: &mut Vec<IngestIssue>,
) -> Result<Vec<BibRecord>, PipelineError> {
    let outcome = io::ingest(path, None, provenance).map_err(|e| err(stage, e.to_string()))?;
    issues.extend(outcome.row_errors.into_iter().map(|e| IngestIssue {
        dataset: dataset.to_string(),
        line: e.line,
        message: e.message,
    }));
    Ok(outcome.records)
}

fn load_allowlist(path: &Path) -> Result<BTreeSet<(String, String)>, PipelineError> {
    let stage = "allowlist";
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(stage, format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let mut out = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| err(stage, e.to_string()))?;
        let gs = row.get(0).unwrap_or("").trim();
        let sc = row.get(1).unwrap_or("").trim();
        if !gs.is_empty() && !sc.is_empty() {
            out.insert((normalize_source_title(gs), normalize_source_title(sc)));
        }
    }
    Ok(out)
}

/// Run the comparison over input files and write the report files.
/// Returns the report and the written paths.
pub fn run_pipeline(
    config: &PipelineConfig,
) -> Result<(ComparisonReport, Vec<PathBuf>), PipelineError> {
    let mut issues = Vec::new();
    let gs_search = ingest_corpus(
        "ingest-gs-search",
        "gs_search",
        &config.gs_search,
        Provenance::GsSearch,
        &mut issues,
    )?;
    let gs_metrics = ingest_corpus(
        "ingest-gs-metrics",
        "gs_metrics",
        &config.gs_metrics,
        Provenance::GsMetrics,
        &mut issues,
    )?;
    let scopus =
        ingest_corpus("ingest-scopus", "scopus", &config.scopus, Provenance::Scopus, &mut issues)?;

    let source_list = match &config.source_list {
        Some(path) => {
            let load = io::load_source_list(path).map_err(|e| err("source-list", e.to_string()))?;
            issues.extend(load.row_errors.into_iter().map(|e| IngestIssue {
                dataset: "source_list".to_string(),
                line: e.line,
                message: e.message,
            }));
            load.rows
        }
        None => Vec::new(),
    };
    let aip_table = match &config.aip_table {
        Some(path) => {
            let load = io::load_aip_table(path).map_err(|e| err("aip-table", e.to_string()))?;
            issues.extend(load.row_errors.into_iter().map(|e| IngestIssue {
                dataset: "aip_table".to_string(),
                line: e.line,
                message: e.message,
            }));
            load.rows
        }
        None => Vec::new(),
    };
    let allowlist = config.allowlist.as_deref().map(load_allowlist).transpose()?;

    let inputs = PipelineInputs { gs_search, gs_metrics, scopus, source_list, aip_table, allowlist };
    let mut report = run_pipeline_data(&inputs, &config.options)?;
    report.ingest_issues = issues;

    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| err("emit", format!("{}: {e}", config.out_dir.display())))?;
    let mut written = Vec::new();
    for (name, content) in render_reports(&report, config.formats) {
        let path = config.out_dir.join(&name);
        std::fs::write(&path, content).map_err(|e| err("emit", format!("{name}: {e}")))?;
        written.push(path);
    }
    Ok((report, written))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, score, NoiseToggles, SynthConfig};

    fn citing(id: u32, provenance: Provenance, target: u32, title: &str) -> BibRecord {
        let mut r = BibRecord::new(id, provenance, RecordKind::Citing, title);
        r.cites_target = Some(RecordId(target));
        r.authors = vec!["Archer, K.".to_string()];
        r.year = Some(2012);
        r
    }

    fn target(id: u32, provenance: Provenance, title: &str) -> BibRecord {
        let mut r = BibRecord::new(id, provenance, RecordKind::Target, title);
        r.authors = vec!["Archer, K.".to_string()];
        r.year = Some(2010);
        r
    }

    #[test]
    fn union_counts_search_only_and_metrics_only_sides() {
        let mut gs_search = vec![target(1, Provenance::GsSearch, "shared target study alpha")];
        let mut gs_metrics = vec![target(5001, Provenance::GsMetrics, "shared target study alpha")];
        // titles never share three tokens, so dedup leaves them alone
        for i in 0..50u32 {
            let title = format!("topic{i:03}x method{i:03}y result{i:03}z survey{i:03}w");
            gs_search.push(citing(100 + i, Provenance::GsSearch, 1, &title));
            gs_metrics.push(citing(5100 + i, Provenance::GsMetrics, 5001, &title));
        }
        for i in 0..214u32 {
            let title = format!("searcht{i:04} uniquem{i:04} studyr{i:04} paperk{i:04}");
            gs_search.push(citing(1000 + i, Provenance::GsSearch, 1, &title));
        }
        for i in 0..117u32 {
            let title = format!("metrich{i:04} extraq{i:04} letterv{i:04} notesb{i:04}");
            gs_metrics.push(citing(9000 + i, Provenance::GsMetrics, 5001, &title));
        }

        let inputs = PipelineInputs { gs_search, gs_metrics, ..PipelineInputs::default() };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();
        let u = &report.union;
        assert_eq!(u.search_records, 265);
        assert_eq!(u.metrics_records, 168);
        assert_eq!(u.matched_pairs, 51); // target + 50 common citing docs
        assert_eq!(u.search_only, 214);
        assert_eq!(u.metrics_only, 117);
        assert_eq!(u.union_records, 382);
        assert_eq!(u.rekeyed, 0);
        assert_eq!(report.union_map.len(), 382);
    }

    #[test]
    fn union_rekeys_only_colliding_metrics_ids() {
        let gs_search = vec![
            target(1, Provenance::GsSearch, "alpha beta gamma delta"),
            citing(2, Provenance::GsSearch, 1, "first unique citing document"),
        ];
        let gs_metrics = vec![
            target(7, Provenance::GsMetrics, "alpha beta gamma delta"),
            citing(2, Provenance::GsMetrics, 7, "second unusual citing record"),
        ];
        let inputs = PipelineInputs { gs_search, gs_metrics, ..PipelineInputs::default() };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();

        assert_eq!(report.union.matched_pairs, 1);
        assert_eq!(report.union.rekeyed, 1);
        let moved = report
            .union_map
            .iter()
            .find(|r| r.metrics_id == Some(RecordId(2)))
            .expect("metrics-only row");
        assert_eq!(moved.union_id, RecordId(3));
        assert_eq!(moved.search_id, None);
        let rec = report.observed.gs_categories.keys().find(|id| **id == RecordId(3));
        assert!(rec.is_some(), "re-keyed citing doc is categorized under its union id");
    }

    #[test]
    fn union_enriches_search_records_from_their_metrics_twin() {
        let gs_search = vec![
            target(1, Provenance::GsSearch, "alpha beta gamma delta"),
            citing(2, Provenance::GsSearch, 1, "enrichment subject record study"),
        ];
        let mut twin = citing(12, Provenance::GsMetrics, 7, "enrichment subject record study");
        twin.source_title = Some("Journal of Subjects".to_string());
        twin.volume = Some("14".to_string());
        twin.entry_age_days = Some(120);
        let gs_metrics = vec![target(7, Provenance::GsMetrics, "alpha beta gamma delta"), twin];

        let inputs = PipelineInputs { gs_search, gs_metrics, ..PipelineInputs::default() };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();
        assert_eq!(report.union.matched_pairs, 2);

        let timed = &report.timing;
        assert_eq!(timed.undated, 0, "entry age arrived through enrichment");
        let row = report.union_map.iter().find(|r| r.union_id == RecordId(2)).unwrap();
        assert_eq!(row.metrics_id, Some(RecordId(12)));
    }

    #[test]
    fn orphaned_citing_documents_are_dropped_and_reported() {
        // the first target dies in cleaning (short words, no source), so
        // its citing docs have nothing to compare against
        let mut bad = BibRecord::new(1, Provenance::GsSearch, RecordKind::Target, "ab cd");
        bad.authors = vec!["Archer, K.".to_string()];
        let gs_search = vec![
            bad,
            citing(2, Provenance::GsSearch, 1, "first stranded document alpha"),
            citing(3, Provenance::GsSearch, 1, "second abandoned manuscript beta"),
            target(10, Provenance::GsSearch, "proper research title words"),
            citing(11, Provenance::GsSearch, 10, "healthy citing document example"),
        ];
        let inputs = PipelineInputs { gs_search, ..PipelineInputs::default() };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();

        assert_eq!(report.cleaning[0].report.deleted.len(), 1);
        assert_eq!(report.orphans[0].dropped, vec![RecordId(2), RecordId(3)]);
        assert_eq!(report.union.union_records, 2);
    }

    #[test]
    fn empty_inputs_produce_an_empty_report() {
        let report =
            run_pipeline_data(&PipelineInputs::default(), &PipelineOptions::default()).unwrap();
        assert_eq!(report.union.union_records, 0);
        assert!(report.citation_rows.is_empty());
        assert!(report.ratios.globalized.value.is_none());
        assert!(report.ratios.globalized.note.is_some());
        assert!(report.recent.is_none());
        assert_eq!(report.categories.counts.total(), 0);
        let files = render_reports(&report, ReportFormats::default());
        assert_eq!(files.len(), 15);
    }

    fn planted_config() -> SynthConfig {
        SynthConfig {
            seed: 11,
            n_targets: 6,
            citers_min: 12,
            citers_max: 18,
            overlap_fraction: 0.5,
            duplicate_rate: 0.2,
            cross_language_rate: 0.25,
            metrics_coverage: 0.8,
            metrics_extra_rate: 0.1,
            undated_rate: 0.1,
            noise: NoiseToggles::default(),
            ..SynthConfig::default()
        }
    }

    #[test]
    fn pipeline_rediscovers_the_planted_truth() {
        let out = generate(&planted_config()).unwrap();
        let inputs = PipelineInputs {
            gs_search: out.gs_search.clone(),
            gs_metrics: out.gs_metrics.clone(),
            scopus: out.scopus.clone(),
            source_list: out.source_list.clone(),
            aip_table: out.aip_table.clone(),
            allowlist: None,
        };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();
        let scores = score(&report.observed, &out.truth).unwrap();

        assert!(scores.target_linkage.perfect(), "target links: {:?}", scores.target_linkage);
        assert!(scores.search_metrics.perfect(), "gs merge: {:?}", scores.search_metrics);
        assert!(scores.linkage.perfect(), "cross links: {:?}", scores.linkage);
        assert!(scores.dedup_exact, "dedup: {:?}", scores.dedup);
        assert_eq!(scores.category_accuracy, 1.0, "confusion: {:?}", scores.category_confusion);
        assert_eq!(scores.category_missing, 0);
        assert!(scores.quantiles_exact, "quantiles: {:?}", report.observed.quantiles);

        assert_eq!(report.categories.counts.both, out.truth.cross_db_pairs.len());
        for row in &report.citation_rows {
            assert!(row.is_consistent());
        }
    }

    #[test]
    fn reports_render_deterministically() {
        let out = generate(&planted_config()).unwrap();
        let inputs = PipelineInputs {
            gs_search: out.gs_search,
            gs_metrics: out.gs_metrics,
            scopus: out.scopus,
            source_list: out.source_list,
            aip_table: out.aip_table,
            allowlist: None,
        };
        let options = PipelineOptions { keep_intermediates: true, ..PipelineOptions::default() };
        let a = run_pipeline_data(&inputs, &options).unwrap();
        let b = run_pipeline_data(&inputs, &options).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            render_reports(&a, ReportFormats::default()),
            render_reports(&b, ReportFormats::default())
        );
    }

    #[test]
    fn report_json_round_trips() {
        let out = generate(&SynthConfig { n_targets: 3, ..planted_config() }).unwrap();
        let inputs = PipelineInputs {
            gs_search: out.gs_search,
            gs_metrics: out.gs_metrics,
            scopus: out.scopus,
            source_list: out.source_list,
            aip_table: out.aip_table,
            allowlist: None,
        };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: ComparisonReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn year_percentages_sum_per_side() {
        let out = generate(&planted_config()).unwrap();
        let inputs = PipelineInputs {
            gs_search: out.gs_search,
            gs_metrics: out.gs_metrics,
            scopus: out.scopus,
            source_list: out.source_list,
            aip_table: out.aip_table,
            allowlist: None,
        };
        let report = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap();
        let gs_total: f64 = report.years.iter().map(|y| y.gs_pct).sum();
        let sc_total: f64 = report.years.iter().map(|y| y.scopus_pct).sum();
        assert!((gs_total - 100.0).abs() < 1e-9);
        assert!((sc_total - 100.0).abs() < 1e-9);
        let gs_docs: usize = report.years.iter().map(|y| y.gs_count).sum();
        assert_eq!(gs_docs, report.categories.gs_docs);
    }

    #[test]
    fn rendered_files_carry_the_contract_names() {
        let report =
            run_pipeline_data(&PipelineInputs::default(), &PipelineOptions::default()).unwrap();
        let collected: Vec<String> = render_reports(&report, ReportFormats::default())
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        for expected in [
            "table4.csv",
            "table5.csv",
            "table6.csv",
            "table7.csv",
            "table8.csv",
            "table9.csv",
            "table10.csv",
            "fig5.csv",
            "fig6.csv",
            "dup_report.csv",
            "deletion_report.csv",
            "source_pairs_review.csv",
            "report.json",
            "observed.json",
            "report.md",
        ] {
            assert!(collected.iter().any(|n| n == expected), "missing {expected}");
        }
    }

    #[test]
    fn file_run_writes_the_report_files() {
        let out = generate(&SynthConfig { n_targets: 3, ..planted_config() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, content: String| {
            let path = dir.path().join(name);
            std::fs::write(&path, content).unwrap();
            path
        };
        let gs_search = write("gs_search.jsonl", io::emit_jsonl(&out.gs_search));
        let gs_metrics = write("gs_metrics.jsonl", io::emit_jsonl(&out.gs_metrics));
        let scopus = write("scopus.csv", io::emit_csv(&out.scopus));
        let rows: Vec<(String, String)> = out.source_list.clone();
        let source_list = write("sources.csv", io::emit_source_list(&rows));
        let aip = write("aip.csv", io::emit_aip_table(&out.aip_table));

        let config = PipelineConfig {
            gs_search,
            gs_metrics,
            scopus,
            source_list: Some(source_list),
            aip_table: Some(aip),
            allowlist: None,
            out_dir: dir.path().join("out"),
            formats: ReportFormats::default(),
            options: PipelineOptions::default(),
        };
        let (report, written) = run_pipeline(&config).unwrap();
        assert_eq!(written.len(), 15);
        assert!(report.ingest_issues.is_empty());
        for path in &written {
            assert!(path.exists());
        }
        let json = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
        let back: ComparisonReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn allowlist_restricts_applied_source_pairs() {
        let out = generate(&planted_config()).unwrap();
        let inputs_all = PipelineInputs {
            gs_search: out.gs_search.clone(),
            gs_metrics: out.gs_metrics.clone(),
            scopus: out.scopus.clone(),
            source_list: Vec::new(),
            aip_table: out.aip_table.clone(),
            allowlist: None,
        };
        let open = run_pipeline_data(&inputs_all, &PipelineOptions::default()).unwrap();
        assert!(open.source_pairs_applied > 0, "inference found nothing to gate");

        let inputs_none = PipelineInputs {
            allowlist: Some(BTreeSet::new()),
            ..inputs_all.clone()
        };
        let gated = run_pipeline_data(&inputs_none, &PipelineOptions::default()).unwrap();
        assert_eq!(gated.source_pairs_applied, 0);
        assert_eq!(gated.source_pairs, open.source_pairs, "review list ignores the gate");
    }

    #[test]
    fn stage_errors_name_their_stage() {
        let mut bad = citing(1, Provenance::GsSearch, 99, "dangling citing record here");
        bad.cites_target = Some(RecordId(99));
        let inputs = PipelineInputs { gs_search: vec![bad], ..PipelineInputs::default() };
        let e = run_pipeline_data(&inputs, &PipelineOptions::default()).unwrap_err();
        assert_eq!(e.stage, "validate");
        assert!(e.message.contains("gs_search"));
    }
}

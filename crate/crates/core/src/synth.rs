//! Synthetic paired-corpus generator with planted ground truth, plus a
//! scorer that grades pipeline output against that truth.
//!
//! The generator plants *entities*: citing documents that may exist in the
//! GS search export, the GS metrics export, and the Scopus export, with
//! controlled overlap, planted duplicates, per-document indexing delays,
//! and optional metadata noise. Everything derives from one seeded RNG
//! stream, so a config reproduces its corpus byte for byte.
//!
//! Mechanism coverage, not realism: sizes are desk-scale and the metadata
//! is drawn from small word pools, but every pipeline stage has something
//! planted for it to find.

use crate::linkage::MatchedPair;
use crate::model::{
    validate_corpus, AipSplit, BibRecord, CategoryValue, Provenance, RecordId, RecordKind,
};
use crate::timing::{delay_quantiles, DelayQuantiles, IndexingClass, QuantileEstimate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// GS search record ids start above this value.
pub const GS_SEARCH_ID_BASE: u32 = 100_000;
/// GS metrics record ids start above this value. Keeping the three id
/// spaces disjoint means the union step never needs to re-key.
pub const GS_METRICS_ID_BASE: u32 = 200_000;

const LONG_WORDS: [&str; 96] = [
    "analysis", "network", "semantic", "citation", "retrieval", "ranking", "database", "indexing",
    "crawling", "metadata", "ontology", "taxonomy", "clustering", "evaluation", "precision",
    "recall", "corpus", "lexical", "syntactic", "parsing", "translation", "alignment", "embedding",
    "vector", "matrix", "tensor", "gradient", "optimization", "inference", "sampling", "bayesian",
    "stochastic", "markov", "entropy", "information", "theory", "coding", "compression",
    "encryption", "protocol", "routing", "latency", "throughput", "bandwidth", "scheduling",
    "caching", "storage", "memory", "processor", "parallel", "distributed", "consensus",
    "replication", "availability", "consistency", "partition", "tolerance", "scalable", "modular",
    "abstraction", "interface", "component", "architecture", "framework", "pipeline", "workflow",
    "automation", "deployment", "monitoring", "logging", "visualization", "dashboard",
    "interactive", "usability", "accessibility", "cognitive", "behavioral", "experiment",
    "hypothesis", "validation", "measurement", "benchmark", "baseline", "heuristic", "algorithm",
    "complexity", "polynomial", "exponential", "logarithmic", "recursive", "iterative", "dynamic",
    "static", "temporal", "spatial", "contextual",
];

const SHORT_WORDS: [&str; 6] = ["of", "in", "on", "the", "for", "via"];

const ALT_WORDS: [&str; 32] = [
    "untersuchung", "analyse", "verfahren", "netzwerk", "auswertung", "beitrag", "zeitschrift",
    "forschung", "wissenschaft", "datenbank", "suchmaschine", "bewertung", "verteilung",
    "abdeckung", "vergleich", "studie", "ergebnis", "methode", "ansatz", "modell", "theorie",
    "praxis", "anwendung", "entwicklung", "struktur", "system", "prozess", "bericht", "umfrage",
    "messung", "qualitaet", "umfang",
];

const SURNAMES: [&str; 24] = [
    "Garcia", "Muller", "Smith", "Johnson", "Martinez", "Kowalski", "Nguyen", "Tanaka", "Silva",
    "Rossi", "Novak", "Petrov", "Andersen", "Dubois", "Kim", "Okafor", "Larsen", "Costa",
    "Farkas", "Bar-Ilan", "Van Dijk", "Yamamoto", "Haddad", "Lindqvist",
];

const GIVEN_NAMES: [&str; 12] = [
    "Anna", "John", "Maria", "Wei", "Elena", "Peter", "Sofia", "James", "Yuki", "Omar", "Ingrid",
    "Carlos",
];

const PUBLISHER_WORDS: [&str; 16] = [
    "Meridian", "Atlas", "Pioneer", "Summit", "Harbor", "Crescent", "Beacon", "Vertex", "Orchard",
    "Granite", "Cobalt", "Juniper", "Aurora", "Basalt", "Sterling", "Lumen",
];

/// Per-document Scopus indexing lag, as a categorical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayDistribution {
    /// `(delay in days, weight)`, sorted ascending by day. A document with
    /// delay `d` appears in Scopus once its GS entry age reaches `d`.
    pub steps: Vec<(i64, f64)>,
    /// Weight of never being indexed at all.
    pub never_weight: f64,
}

impl Default for DelayDistribution {
    fn default() -> Self {
        DelayDistribution { steps: vec![(30, 0.5), (90, 0.25)], never_weight: 0.25 }
    }
}

impl DelayDistribution {
    fn total_weight(&self) -> f64 {
        self.steps.iter().map(|(_, w)| w).sum::<f64>() + self.never_weight
    }

    /// Fraction of documents indexed by age `age_days`.
    pub fn cdf(&self, age_days: i64) -> f64 {
        let indexed: f64 =
            self.steps.iter().filter(|(d, _)| *d <= age_days).map(|(_, w)| w).sum();
        indexed / self.total_weight()
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad_weight = self
            .steps
            .iter()
            .map(|(_, w)| *w)
            .chain([self.never_weight])
            .any(|w| !w.is_finite() || w < 0.0);
        if bad_weight {
            return Err(SynthError::invalid("delay weights must be finite and non-negative"));
        }
        if self.total_weight() <= 0.0 {
            return Err(SynthError::invalid("delay distribution has zero total weight"));
        }
        if self.steps.iter().any(|(d, _)| *d < 0) {
            return Err(SynthError::invalid("delay days must be non-negative"));
        }
        if self.steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SynthError::invalid("delay steps must be strictly ascending"));
        }
        Ok(())
    }
}

/// Metadata perturbations applied between renderings of the same entity.
/// All of them preserve the qualifying-token lists and author last names,
/// except `year_shift`, which downgrades identical pairs to large (or to
/// low, past the year-gap threshold).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseToggles {
    /// Accent the first vowel of title words and surnames on the GS side.
    pub diacritics: bool,
    /// Drop sub-threshold filler words from the Scopus rendering.
    pub drop_short_tokens: bool,
    /// Shift the year of secondary renderings (Scopus twins, duplicate
    /// copies) by this many years. 0 = off.
    pub year_shift: i32,
    /// Render GS authors as "Given Surname" instead of "Surname, Given".
    pub author_reformat: bool,
    /// Blank the source title on GS search records (restored later from
    /// the metrics rendering, so it only hits entities present there).
    pub missing_source: bool,
}

/// Generator configuration. The seed fully determines the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_targets: usize,
    /// Citing documents per target, drawn uniformly from this range.
    pub citers_min: usize,
    pub citers_max: usize,
    /// Fraction of each target's citers present in both databases.
    pub overlap_fraction: f64,
    /// Of the GS-only citers, the fraction published in Scopus-covered
    /// sources.
    pub gs_only_covered_fraction: f64,
    /// Of the Scopus-only citers, the fraction published in sources that
    /// also host matched documents (and so look GS-covered).
    pub scopus_only_gs_source_fraction: f64,
    /// Per GS-only citer, probability of planting a duplicate record.
    pub duplicate_rate: f64,
    /// Of planted duplicates, the fraction that are translations sharing
    /// only author/volume/page with the original.
    pub cross_language_rate: f64,
    /// Fraction of GS citers also present in the GS metrics export.
    pub metrics_coverage: f64,
    /// Extra metrics-only citers, as a fraction of each target's citers.
    pub metrics_extra_rate: f64,
    /// Fraction of uncovered GS citers lacking entry-age information.
    pub undated_rate: f64,
    pub noise: NoiseToggles,
    pub delays: DelayDistribution,
    /// When set, the delay distribution decides per age bin which covered
    /// citers are already in Scopus, overriding `overlap_fraction` for
    /// them. This makes the per-bin found fractions follow the delay CDF
    /// exactly (up to integer rounding), at the cost of the planted
    /// overlap counts.
    pub delays_drive_overlap: bool,
    /// Fraction of covered sources whose publisher posts articles in
    /// press.
    pub aip_publisher_fraction: f64,
    /// Source pool sizes: covered sources shared by both databases,
    /// GS-exclusive sources, Scopus-exclusive sources.
    pub shared_sources: usize,
    pub gs_exclusive_sources: usize,
    pub scopus_exclusive_sources: usize,
    /// Cohort grid used for delay planting.
    pub bin_width_days: i64,
    pub horizon_days: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_targets: 10,
            citers_min: 10,
            citers_max: 20,
            overlap_fraction: 0.5,
            gs_only_covered_fraction: 0.5,
            scopus_only_gs_source_fraction: 0.5,
            duplicate_rate: 0.1,
            cross_language_rate: 0.2,
            metrics_coverage: 0.9,
            metrics_extra_rate: 0.05,
            undated_rate: 0.05,
            noise: NoiseToggles::default(),
            delays: DelayDistribution::default(),
            delays_drive_overlap: false,
            aip_publisher_fraction: 0.5,
            shared_sources: 6,
            gs_exclusive_sources: 3,
            scopus_exclusive_sources: 3,
            bin_width_days: 30,
            horizon_days: 365,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fractions = [
            ("overlap_fraction", self.overlap_fraction),
            ("gs_only_covered_fraction", self.gs_only_covered_fraction),
            ("scopus_only_gs_source_fraction", self.scopus_only_gs_source_fraction),
            ("duplicate_rate", self.duplicate_rate),
            ("cross_language_rate", self.cross_language_rate),
            ("metrics_coverage", self.metrics_coverage),
            ("metrics_extra_rate", self.metrics_extra_rate),
            ("undated_rate", self.undated_rate),
            ("aip_publisher_fraction", self.aip_publisher_fraction),
        ];
        for (name, value) in fractions {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(SynthError::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.n_targets == 0 {
            return Err(SynthError::invalid("n_targets must be positive"));
        }
        if self.citers_min == 0 || self.citers_min > self.citers_max {
            return Err(SynthError::invalid("citer range must satisfy 1 <= min <= max"));
        }
        if self.shared_sources == 0 {
            return Err(SynthError::invalid("need at least one shared source"));
        }
        if self.bin_width_days <= 0 || self.horizon_days < 2 * self.bin_width_days {
            return Err(SynthError::invalid("horizon must cover at least two bins"));
        }
        if self.horizon_days > 365 {
            return Err(SynthError::invalid("entry ages are only tracked up to one year"));
        }
        if self.n_targets * (self.citers_max + 2) > 40_000 {
            return Err(SynthError::invalid("corpus too large for the generator"));
        }
        self.delays.validate()
    }
}

/// The indexing lag planted on one covered document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlantedDelay {
    Indexed { days: i64 },
    Never,
}

/// What kind of duplicate was planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DuplicateKind {
    /// Field-for-field copy.
    Identical,
    /// Copy with a shifted publication year.
    YearShifted { shift: i32 },
    /// Translated copy: different title and source, same authors, volume
    /// and page. Only the source key can surface it.
    CrossLanguage,
}

/// One planted duplicate pair in the GS search corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedDuplicate {
    pub original: RecordId,
    pub copy: RecordId,
    pub kind: DuplicateKind,
    /// Whether dedup at default thresholds should remove the copy.
    pub removable: bool,
}

/// A target article's record ids across the three corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueTarget {
    pub gs_search: RecordId,
    pub gs_metrics: RecordId,
    pub scopus: RecordId,
}

/// One planted citing entity and everything true about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueDoc {
    pub key: String,
    /// Index into [`GroundTruth::targets`].
    pub target: usize,
    pub gs_search: Option<RecordId>,
    pub gs_metrics: Option<RecordId>,
    pub scopus: Option<RecordId>,
    pub gs_category: Option<CategoryValue>,
    pub scopus_category: Option<CategoryValue>,
    pub aip: Option<AipSplit>,
    pub indexing: Option<IndexingClass>,
    pub delay: Option<PlantedDelay>,
    pub entry_age_days: Option<i64>,
}

/// Everything the generator knows that a pipeline must rediscover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub targets: Vec<TrueTarget>,
    pub docs: Vec<TrueDoc>,
    pub duplicates: Vec<PlantedDuplicate>,
    /// GS search target id paired with its Scopus target id.
    pub target_pairs: Vec<(RecordId, RecordId)>,
    /// Search id paired with metrics id, targets included.
    pub search_metrics_pairs: Vec<(RecordId, RecordId)>,
    /// Citing-document pairs across GS (search id, or metrics id for
    /// metrics-only docs) and Scopus.
    pub cross_db_pairs: Vec<(RecordId, RecordId)>,
    /// Copies dedup should remove.
    pub expected_removed: BTreeSet<RecordId>,
    /// Planted category per surviving GS citing record.
    pub gs_categories: BTreeMap<RecordId, CategoryValue>,
    /// Planted category per Scopus citing record.
    pub scopus_categories: BTreeMap<RecordId, CategoryValue>,
    /// Per covered bin: (label, found-in-Scopus count, covered total),
    /// restricted to metrics-present docs, mirroring the timing filter.
    pub found_tallies: Vec<(i64, usize, usize)>,
    /// Found fraction per non-empty covered bin.
    pub found_fraction: Vec<(i64, f64)>,
    /// Delay quantiles implied by the planted fractions.
    pub planted_quantiles: DelayQuantiles,
}

/// Generated corpora plus the reference tables and ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub gs_search: Vec<BibRecord>,
    pub gs_metrics: Vec<BibRecord>,
    pub scopus: Vec<BibRecord>,
    /// Active source list rows: (source title, publisher).
    pub source_list: Vec<(String, String)>,
    /// Publisher AIP table rows: (publisher, posts articles in press).
    pub aip_table: Vec<(String, bool)>,
    pub truth: GroundTruth,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
    #[error("delay distribution cannot realize the requested found/not-found split")]
    InfeasibleDelays,
    #[error("generated corpus failed validation: {detail}")]
    InvalidCorpus { detail: String },
    #[error("scored output references unknown record {id:?}")]
    UnknownRecord { id: RecordId },
}

impl SynthError {
    fn invalid(reason: impl Into<String>) -> Self {
        SynthError::InvalidConfig { reason: reason.into() }
    }
}

// ---------------------------------------------------------------------------
// deterministic allocation helpers

/// Largest-remainder apportionment of `total` items over `weights`.
/// Ties go to the smallest index. All-zero weights yield all zeros.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || weights.is_empty() {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Deterministic weighted round robin: each call returns the index whose
/// assigned count lags its weight share the most.
struct WeightedCycle {
    weights: Vec<f64>,
    counts: Vec<usize>,
    total_weight: f64,
    drawn: usize,
}

impl WeightedCycle {
    fn new(weights: Vec<f64>) -> Option<Self> {
        let total_weight: f64 = weights.iter().sum();
        if total_weight <= 0.0 {
            return None;
        }
        let counts = vec![0; weights.len()];
        Some(WeightedCycle { weights, counts, total_weight, drawn: 0 })
    }

    fn next_index(&mut self) -> usize {
        self.drawn += 1;
        let mut best = 0;
        let mut best_deficit = f64::MIN;
        for (i, (&w, &c)) in self.weights.iter().zip(&self.counts).enumerate() {
            let deficit = w / self.total_weight * self.drawn as f64 - c as f64;
            if deficit > best_deficit + 1e-12 {
                best = i;
                best_deficit = deficit;
            }
        }
        self.counts[best] += 1;
        best
    }
}

// ---------------------------------------------------------------------------
// generation internals

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SourcePool {
    Shared,
    GsExclusive,
    ScopusExclusive,
}

struct SourceSpec {
    title: String,
    publisher: String,
    pool: SourcePool,
    has_aip: bool,
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn build_sources(config: &SynthConfig) -> Vec<SourceSpec> {
    let mut sources = Vec::new();
    let publisher = |i: usize| {
        let word = PUBLISHER_WORDS[i % PUBLISHER_WORDS.len()];
        if i < PUBLISHER_WORDS.len() {
            format!("{word} Press")
        } else {
            format!("{} Press {}", word, i / PUBLISHER_WORDS.len())
        }
    };
    let aip_count =
        (config.aip_publisher_fraction * config.shared_sources as f64).round() as usize;
    for i in 0..config.shared_sources {
        sources.push(SourceSpec {
            title: format!(
                "Journal of {} {}",
                capitalize(LONG_WORDS[(2 * i) % LONG_WORDS.len()]),
                capitalize(LONG_WORDS[(2 * i + 1) % LONG_WORDS.len()]),
            ),
            publisher: publisher(sources.len()),
            pool: SourcePool::Shared,
            has_aip: i < aip_count,
        });
    }
    for i in 0..config.gs_exclusive_sources {
        sources.push(SourceSpec {
            title: format!("Review of {}", capitalize(LONG_WORDS[(40 + 2 * i) % LONG_WORDS.len()])),
            publisher: publisher(sources.len()),
            pool: SourcePool::GsExclusive,
            has_aip: false,
        });
    }
    for i in 0..config.scopus_exclusive_sources {
        sources.push(SourceSpec {
            title: format!("Annals of {}", capitalize(LONG_WORDS[(70 + 2 * i) % LONG_WORDS.len()])),
            publisher: publisher(sources.len()),
            pool: SourcePool::ScopusExclusive,
            has_aip: false,
        });
    }
    sources
}

struct Entity {
    key: String,
    target: usize,
    role: CategoryValue,
    in_search: bool,
    in_metrics: bool,
    source: usize,
    long_words: Vec<&'static str>,
    shorts: Vec<(usize, &'static str)>,
    authors: Vec<(&'static str, &'static str)>,
    year: i32,
    volume: String,
    page: String,
    web_domain: String,
    gs_count: i64,
    scopus_count: i64,
    entry_age: Option<i64>,
    delay: Option<PlantedDelay>,
    indexing: Option<IndexingClass>,
    aip: Option<AipSplit>,
    gs_search_id: Option<RecordId>,
    gs_metrics_id: Option<RecordId>,
    scopus_id: Option<RecordId>,
}

fn is_gs_role(role: CategoryValue) -> bool {
    matches!(
        role,
        CategoryValue::Both
            | CategoryValue::GsOnlyScopusSource
            | CategoryValue::GsOnlyNoScopusSource
    )
}

fn is_scopus_role(role: CategoryValue) -> bool {
    matches!(
        role,
        CategoryValue::Both
            | CategoryValue::ScopusOnlyGsSource
            | CategoryValue::ScopusOnlyNoGsSource
    )
}

fn accent_first_vowel(word: &str) -> String {
    let mut done = false;
    word.chars()
        .map(|c| {
            if done {
                return c;
            }
            let replaced = match c {
                'a' => 'á',
                'e' => 'é',
                'i' => 'í',
                'o' => 'ö',
                'u' => 'ü',
                _ => return c,
            };
            done = true;
            replaced
        })
        .collect()
}

fn compose_title(
    long_words: &[&str],
    shorts: &[(usize, &'static str)],
    accent: bool,
    include_shorts: bool,
) -> String {
    let mut words: Vec<String> = Vec::new();
    for i in 0..=long_words.len() {
        if include_shorts {
            for &(pos, short) in shorts {
                if pos == i {
                    words.push(short.to_string());
                }
            }
        }
        if i < long_words.len() {
            let w = long_words[i];
            words.push(if accent { accent_first_vowel(w) } else { w.to_string() });
        }
    }
    words.join(" ")
}

fn render_authors(
    authors: &[(&'static str, &'static str)],
    accent: bool,
    given_first: bool,
) -> Vec<String> {
    authors
        .iter()
        .map(|&(surname, given)| {
            let surname = if accent { accent_first_vowel(surname) } else { surname.to_string() };
            if given_first {
                format!("{given} {surname}")
            } else {
                format!("{surname}, {given}")
            }
        })
        .collect()
}

fn round_share(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).round() as usize).min(total)
}

struct CopyPlan {
    original: usize,
    kind: DuplicateKind,
    alt_words: Vec<&'static str>,
}

/// Generate the three corpora, the reference tables, and the ground truth.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sources = build_sources(config);
    let shared_idx: Vec<usize> =
        (0..sources.len()).filter(|&i| sources[i].pool == SourcePool::Shared).collect();
    let gs_excl_idx: Vec<usize> =
        (0..sources.len()).filter(|&i| sources[i].pool == SourcePool::GsExclusive).collect();
    let sc_excl_idx: Vec<usize> =
        (0..sources.len()).filter(|&i| sources[i].pool == SourcePool::ScopusExclusive).collect();

    let width = config.bin_width_days;
    let n_bins = (config.horizon_days / width) as usize;
    // covered docs live in full bins past the first: the GS metrics export
    // that carries their source titles refreshes about once per bin, so
    // nothing younger shows up with a source.
    let covered_labels: Vec<i64> = (1..n_bins).map(|i| i as i64 * width).collect();
    let cutoff = n_bins as i64 * width;

    let mut entity_counter = 0usize;
    let volume_page = |counter: &mut usize| {
        let idx = *counter;
        *counter += 1;
        (format!("{}", idx / 50 + 1), format!("{}", (3 * idx) % 997 + 1))
    };

    // --- phase 1: content for targets and citing slots (all RNG here) ---
    let sample_words = |rng: &mut ChaCha8Rng| -> (Vec<&'static str>, Vec<(usize, &'static str)>) {
        let n_long = 5 + rng.gen_range(0..=2);
        let long_words: Vec<&'static str> = rand::seq::index::sample(rng, LONG_WORDS.len(), n_long)
            .iter()
            .map(|i| LONG_WORDS[i])
            .collect();
        let n_shorts = rng.gen_range(0..=2);
        let shorts: Vec<(usize, &'static str)> = (0..n_shorts)
            .map(|_| {
                let pos = rng.gen_range(0..=long_words.len());
                (pos, SHORT_WORDS[rng.gen_range(0..SHORT_WORDS.len())])
            })
            .collect();
        (long_words, shorts)
    };
    let sample_authors = |rng: &mut ChaCha8Rng| -> Vec<(&'static str, &'static str)> {
        let n = rng.gen_range(1..=3);
        rand::seq::index::sample(rng, SURNAMES.len(), n)
            .iter()
            .map(|i| (SURNAMES[i], GIVEN_NAMES[rng.gen_range(0..GIVEN_NAMES.len())]))
            .collect()
    };

    let mut targets: Vec<Entity> = Vec::with_capacity(config.n_targets);
    for k in 0..config.n_targets {
        let (long_words, shorts) = sample_words(&mut rng);
        let authors = sample_authors(&mut rng);
        let (volume, page) = volume_page(&mut entity_counter);
        targets.push(Entity {
            key: format!("t{k:02}"),
            target: k,
            role: CategoryValue::Both,
            in_search: true,
            in_metrics: true,
            source: shared_idx[k % shared_idx.len()],
            long_words,
            shorts,
            authors,
            year: 2008 + (k as i32 % 5),
            volume,
            page,
            web_domain: format!("cite{}.example.org", k % 9),
            gs_count: 0,
            scopus_count: 0,
            entry_age: None,
            delay: None,
            indexing: None,
            aip: None,
            gs_search_id: None,
            gs_metrics_id: None,
            scopus_id: None,
        });
    }

    let mut entities: Vec<Entity> = Vec::new();
    let mut both_ctr = 0usize;
    let mut gcov_ctr = 0usize;
    let mut gunc_ctr = 0usize;
    let mut sno_ctr = 0usize;
    for k in 0..config.n_targets {
        let citers = if config.citers_min == config.citers_max {
            config.citers_min
        } else {
            rng.gen_range(config.citers_min..=config.citers_max)
        };
        let m = round_share(config.overlap_fraction, citers);
        let g = citers - m;
        let s = citers - m;
        let g_cov = round_share(config.gs_only_covered_fraction, g);
        let s_gs = round_share(config.scopus_only_gs_source_fraction, s);
        let extras = round_share(config.metrics_extra_rate, citers);

        let mut roles: Vec<(CategoryValue, bool)> = Vec::new(); // (role, in_search)
        roles.extend(std::iter::repeat((CategoryValue::Both, true)).take(m));
        roles.extend(std::iter::repeat((CategoryValue::GsOnlyScopusSource, true)).take(g_cov));
        roles.extend(
            std::iter::repeat((CategoryValue::GsOnlyNoScopusSource, true)).take(g - g_cov),
        );
        roles.extend(std::iter::repeat((CategoryValue::ScopusOnlyGsSource, true)).take(s_gs));
        roles.extend(
            std::iter::repeat((CategoryValue::ScopusOnlyNoGsSource, true)).take(s - s_gs),
        );
        const EXTRA_ROLES: [CategoryValue; 3] = [
            CategoryValue::Both,
            CategoryValue::GsOnlyScopusSource,
            CategoryValue::GsOnlyNoScopusSource,
        ];
        roles.extend((0..extras).map(|j| (EXTRA_ROLES[j % 3], false)));

        for (slot, (role, in_search)) in roles.into_iter().enumerate() {
            let (long_words, shorts) = sample_words(&mut rng);
            let authors = sample_authors(&mut rng);
            let year = 2009 + rng.gen_range(0..=6);
            let gs_count = rng.gen_range(0..=24);
            let scopus_count = rng.gen_range(0..=24);
            let in_metrics = if !in_search {
                true
            } else if is_gs_role(role) {
                rng.gen_bool(config.metrics_coverage)
            } else {
                false
            };
            let covered =
                matches!(role, CategoryValue::Both | CategoryValue::GsOnlyScopusSource)
                    && is_gs_role(role);
            let entry_age = if is_gs_role(role) && !covered {
                if config.undated_rate > 0.0 && rng.gen_bool(config.undated_rate) {
                    None
                } else {
                    Some(rng.gen_range(0..cutoff))
                }
            } else {
                None // covered ages come from the bin machinery below
            };
            let source = match role {
                CategoryValue::Both => {
                    both_ctr += 1;
                    shared_idx[(both_ctr - 1) % shared_idx.len()]
                }
                CategoryValue::GsOnlyScopusSource => {
                    gcov_ctr += 1;
                    shared_idx[(gcov_ctr - 1) % shared_idx.len()]
                }
                CategoryValue::GsOnlyNoScopusSource => {
                    gunc_ctr += 1;
                    if gs_excl_idx.is_empty() {
                        shared_idx[0] // degenerate config; rescued below
                    } else {
                        gs_excl_idx[(gunc_ctr - 1) % gs_excl_idx.len()]
                    }
                }
                CategoryValue::ScopusOnlyGsSource => usize::MAX, // assigned after role flips
                CategoryValue::ScopusOnlyNoGsSource => {
                    sno_ctr += 1;
                    if sc_excl_idx.is_empty() {
                        shared_idx[0]
                    } else {
                        sc_excl_idx[(sno_ctr - 1) % sc_excl_idx.len()]
                    }
                }
            };
            let (volume, page) = volume_page(&mut entity_counter);
            entities.push(Entity {
                key: format!("t{k:02}-c{slot:03}"),
                target: k,
                role,
                in_search,
                in_metrics,
                source,
                long_words,
                shorts,
                authors,
                year,
                volume,
                page,
                web_domain: format!("cite{}.example.org", (entity_counter + k) % 9),
                gs_count,
                scopus_count,
                entry_age,
                delay: None,
                indexing: None,
                aip: None,
                gs_search_id: None,
                gs_metrics_id: None,
                scopus_id: None,
            });
        }
    }

    // --- phase 2: ages and delays for covered GS docs (no RNG) ---
    let covered: Vec<usize> = (0..entities.len())
        .filter(|&i| {
            matches!(
                entities[i].role,
                CategoryValue::Both | CategoryValue::GsOnlyScopusSource
            )
        })
        .collect();
    let q: Vec<f64> = covered_labels.iter().map(|&l| config.delays.cdf(l)).collect();
    let q_rest: Vec<f64> = q.iter().map(|v| 1.0 - v).collect();

    // per-bin (found, not-found) allocations over the covered docs
    let plan: Vec<(usize, usize)> = if config.delays_drive_overlap {
        let totals = apportion(covered.len(), &vec![1.0; covered_labels.len()]);
        totals
            .iter()
            .zip(&q)
            .map(|(&t, &qi)| {
                let found = ((qi * t as f64).round() as usize).min(t);
                (found, t - found)
            })
            .collect()
    } else {
        let n_found = covered.iter().filter(|&&i| entities[i].role == CategoryValue::Both).count();
        let n_not = covered.len() - n_found;
        if n_found > 0 && q.iter().sum::<f64>() <= 0.0 {
            return Err(SynthError::InfeasibleDelays);
        }
        if n_not > 0 && q_rest.iter().sum::<f64>() <= 0.0 {
            return Err(SynthError::InfeasibleDelays);
        }
        let found_bins = apportion(n_found, &q);
        let not_bins = apportion(n_not, &q_rest);
        found_bins.into_iter().zip(not_bins).collect()
    };

    {
        // walk the covered docs in planted order and hand out bins
        let mut found_pool: Vec<usize>;
        let mut not_pool: Vec<usize>;
        if config.delays_drive_overlap {
            found_pool = covered.clone();
            not_pool = Vec::new(); // found/not decided per bin from the shared pool
        } else {
            found_pool = covered
                .iter()
                .copied()
                .filter(|&i| entities[i].role == CategoryValue::Both)
                .collect();
            not_pool = covered
                .iter()
                .copied()
                .filter(|&i| entities[i].role != CategoryValue::Both)
                .collect();
        }
        found_pool.reverse(); // pop() from the front of the original order
        not_pool.reverse();

        let mut offsets: BTreeMap<i64, i64> = BTreeMap::new();
        let mut delay_cycles: BTreeMap<(i64, bool), WeightedCycle> = BTreeMap::new();
        let mut assign = |entities: &mut Vec<Entity>,
                          idx: usize,
                          label: i64,
                          found: bool|
         -> Result<(), SynthError> {
            let counter = offsets.entry(label).or_insert(0);
            let age = label + (*counter * 7) % width;
            *counter += 1;
            // eligible delays: found docs must already be indexed at this
            // age, not-found docs must not be
            let eligible: Vec<(PlantedDelay, f64)> = if found {
                config
                    .delays
                    .steps
                    .iter()
                    .filter(|(d, _)| *d <= label)
                    .map(|&(d, w)| (PlantedDelay::Indexed { days: d }, w))
                    .collect()
            } else {
                config
                    .delays
                    .steps
                    .iter()
                    .filter(|(d, _)| *d > label)
                    .map(|&(d, w)| (PlantedDelay::Indexed { days: d }, w))
                    .chain([(PlantedDelay::Never, config.delays.never_weight)])
                    .collect()
            };
            let delay = match WeightedCycle::new(eligible.iter().map(|(_, w)| *w).collect()) {
                Some(_) => {
                    let cycle = delay_cycles.entry((label, found)).or_insert_with(|| {
                        WeightedCycle::new(eligible.iter().map(|(_, w)| *w).collect()).unwrap()
                    });
                    eligible[cycle.next_index()].0
                }
                None if !found => PlantedDelay::Never,
                None => return Err(SynthError::InfeasibleDelays),
            };
            let e = &mut entities[idx];
            e.entry_age = Some(age);
            e.delay = Some(delay);
            e.role = if found { CategoryValue::Both } else { CategoryValue::GsOnlyScopusSource };
            Ok(())
        };

        for (bin, &label) in covered_labels.iter().enumerate() {
            let (want_found, want_not) = plan[bin];
            if config.delays_drive_overlap {
                for j in 0..(want_found + want_not) {
                    let idx = found_pool.pop().expect("covered pool exhausted");
                    assign(&mut entities, idx, label, j < want_found)?;
                }
            } else {
                for _ in 0..want_found {
                    let idx = found_pool.pop().expect("found pool exhausted");
                    assign(&mut entities, idx, label, true)?;
                }
                for _ in 0..want_not {
                    let idx = not_pool.pop().expect("not-found pool exhausted");
                    assign(&mut entities, idx, label, false)?;
                }
            }
        }
    }

    // --- phase 2.5: sources that must look GS-covered, and AIP truth ---
    let hosted: Vec<usize> = {
        let set: BTreeSet<usize> = entities
            .iter()
            .filter(|e| e.role == CategoryValue::Both)
            .map(|e| e.source)
            .collect();
        set.into_iter().collect()
    };
    let mut sgs_ctr = 0usize;
    for e in entities.iter_mut() {
        if e.role == CategoryValue::ScopusOnlyGsSource {
            if hosted.is_empty() {
                // nothing is matched anywhere, so no source can look
                // GS-covered; the slot degrades to the uncovered kind
                e.role = CategoryValue::ScopusOnlyNoGsSource;
                sno_ctr += 1;
                e.source = if sc_excl_idx.is_empty() {
                    shared_idx[0]
                } else {
                    sc_excl_idx[(sno_ctr - 1) % sc_excl_idx.len()]
                };
            } else {
                sgs_ctr += 1;
                e.source = hosted[(sgs_ctr - 1) % hosted.len()];
            }
        }
    }
    for e in entities.iter_mut() {
        if e.role == CategoryValue::GsOnlyScopusSource {
            e.aip = Some(if sources[e.source].has_aip {
                AipSplit::PossibleAip
            } else {
                AipSplit::NotAip
            });
        }
        let covered_now =
            matches!(e.role, CategoryValue::Both | CategoryValue::GsOnlyScopusSource);
        if covered_now && e.in_metrics {
            e.indexing = Some(match e.role {
                CategoryValue::Both => IndexingClass::FoundInScopus,
                _ => match e.aip {
                    Some(AipSplit::PossibleAip) => IndexingClass::PossibleAip,
                    _ => IndexingClass::NotAip,
                },
            });
        }
    }

    // --- phase 3: duplicate planting (RNG again) ---
    let mut copies: Vec<CopyPlan> = Vec::new();
    for i in 0..entities.len() {
        let e = &entities[i];
        let eligible = e.in_search
            && matches!(
                e.role,
                CategoryValue::GsOnlyScopusSource | CategoryValue::GsOnlyNoScopusSource
            );
        if !eligible || config.duplicate_rate == 0.0 || !rng.gen_bool(config.duplicate_rate) {
            continue;
        }
        let cross = config.cross_language_rate > 0.0 && rng.gen_bool(config.cross_language_rate);
        let (kind, alt_words) = if cross {
            let n = 5 + rng.gen_range(0..=2);
            let words: Vec<&'static str> = rand::seq::index::sample(&mut rng, ALT_WORDS.len(), n)
                .iter()
                .map(|j| ALT_WORDS[j])
                .collect();
            (DuplicateKind::CrossLanguage, words)
        } else if config.noise.year_shift != 0 {
            (DuplicateKind::YearShifted { shift: config.noise.year_shift }, Vec::new())
        } else {
            (DuplicateKind::Identical, Vec::new())
        };
        copies.push(CopyPlan { original: i, kind, alt_words });
    }

    // --- phase 4: record materialization ---
    let noise = config.noise;
    let render_gs_search = |e: &Entity, id: u32, cites: Option<RecordId>| -> BibRecord {
        let mut r = BibRecord::new(
            id,
            Provenance::GsSearch,
            if cites.is_some() { RecordKind::Citing } else { RecordKind::Target },
            &compose_title(&e.long_words, &e.shorts, noise.diacritics, true),
        );
        r.cites_target = cites;
        r.authors = render_authors(&e.authors, noise.diacritics, noise.author_reformat);
        let hide_source = noise.missing_source && e.in_metrics && cites.is_some();
        r.source_title = (!hide_source).then(|| sources[e.source].title.clone());
        r.year = Some(e.year);
        r.volume = Some(e.volume.clone());
        r.start_page = Some(e.page.clone());
        r.web_domain = Some(e.web_domain.clone());
        r.citation_count = Some(e.gs_count);
        r.entry_age_days = e.entry_age;
        r
    };
    let render_gs_metrics = |e: &Entity, id: u32, cites: Option<RecordId>| -> BibRecord {
        let mut r = BibRecord::new(
            id,
            Provenance::GsMetrics,
            if cites.is_some() { RecordKind::Citing } else { RecordKind::Target },
            &compose_title(&e.long_words, &e.shorts, noise.diacritics, true),
        );
        r.cites_target = cites;
        r.authors = render_authors(&e.authors, noise.diacritics, noise.author_reformat);
        r.source_title = Some(sources[e.source].title.clone());
        r.year = Some(e.year);
        r.volume = Some(e.volume.clone());
        r.start_page = Some(e.page.clone());
        r.web_domain = Some(e.web_domain.clone());
        r.citation_count = Some(e.gs_count);
        r.entry_age_days = e.entry_age;
        r
    };
    let render_scopus = |e: &Entity, id: u32, cites: Option<RecordId>| -> BibRecord {
        let mut r = BibRecord::new(
            id,
            Provenance::Scopus,
            if cites.is_some() { RecordKind::Citing } else { RecordKind::Target },
            &compose_title(&e.long_words, &e.shorts, false, !noise.drop_short_tokens),
        );
        r.cites_target = cites;
        r.authors = render_authors(&e.authors, false, false);
        r.source_title = Some(sources[e.source].title.clone());
        r.publisher = Some(sources[e.source].publisher.clone());
        // secondary rendering of a matched entity: the year shift lands here
        r.year = Some(e.year + if e.role == CategoryValue::Both { noise.year_shift } else { 0 });
        r.volume = Some(e.volume.clone());
        r.start_page = Some(e.page.clone());
        r.web_domain = Some(e.web_domain.clone());
        r.citation_count = Some(e.scopus_count);
        r
    };

    let mut gs_search: Vec<BibRecord> = Vec::new();
    let mut gs_metrics: Vec<BibRecord> = Vec::new();
    let mut scopus: Vec<BibRecord> = Vec::new();

    for (k, t) in targets.iter_mut().enumerate() {
        let sid = (k + 1) as u32;
        let gid = GS_SEARCH_ID_BASE + 1 + k as u32;
        let mid = GS_METRICS_ID_BASE + 1 + k as u32;
        t.scopus_id = Some(RecordId(sid));
        t.gs_search_id = Some(RecordId(gid));
        t.gs_metrics_id = Some(RecordId(mid));
        scopus.push(render_scopus(t, sid, None));
        gs_search.push(render_gs_search(t, gid, None));
        gs_metrics.push(render_gs_metrics(t, mid, None));
    }

    let mut next_scopus = config.n_targets as u32 + 1;
    let mut next_search = GS_SEARCH_ID_BASE + config.n_targets as u32 + 1;
    let mut next_metrics = GS_METRICS_ID_BASE + config.n_targets as u32 + 1;
    for e in entities.iter_mut() {
        if is_scopus_role(e.role) {
            let cites = targets[e.target].scopus_id;
            e.scopus_id = Some(RecordId(next_scopus));
            scopus.push(render_scopus(e, next_scopus, cites));
            next_scopus += 1;
        }
        if is_gs_role(e.role) && e.in_search {
            let cites = targets[e.target].gs_search_id;
            e.gs_search_id = Some(RecordId(next_search));
            gs_search.push(render_gs_search(e, next_search, cites));
            next_search += 1;
        }
        if is_gs_role(e.role) && e.in_metrics {
            let cites = targets[e.target].gs_metrics_id;
            e.gs_metrics_id = Some(RecordId(next_metrics));
            gs_metrics.push(render_gs_metrics(e, next_metrics, cites));
            next_metrics += 1;
        }
    }

    let mut duplicates: Vec<PlantedDuplicate> = Vec::new();
    for plan in &copies {
        let e = &entities[plan.original];
        let original_id = e.gs_search_id.expect("copies only planted on search records");
        let base = gs_search
            .iter()
            .find(|r| r.id == original_id)
            .expect("original record present")
            .clone();
        let mut copy = base;
        copy.id = RecordId(next_search);
        match plan.kind {
            DuplicateKind::Identical => {}
            DuplicateKind::YearShifted { shift } => {
                copy.year = copy.year.map(|y| y + shift);
            }
            DuplicateKind::CrossLanguage => {
                copy.title = plan.alt_words.join(" ");
                copy.source_title =
                    Some(format!("Zeitschrift fuer {}", capitalize(ALT_WORDS[e.source % ALT_WORDS.len()])));
            }
        }
        let removable = match plan.kind {
            DuplicateKind::Identical => true,
            DuplicateKind::YearShifted { shift } => shift.abs() <= 2,
            DuplicateKind::CrossLanguage => false,
        };
        duplicates.push(PlantedDuplicate {
            original: original_id,
            copy: copy.id,
            kind: plan.kind,
            removable,
        });
        gs_search.push(copy);
        next_search += 1;
    }

    // targets cite nothing; their citation counts are their citer tallies
    let tally = |records: &mut Vec<BibRecord>| {
        let mut counts: BTreeMap<RecordId, i64> = BTreeMap::new();
        for r in records.iter() {
            if let Some(t) = r.cites_target {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        for r in records.iter_mut() {
            if r.kind == RecordKind::Target {
                r.citation_count = Some(counts.get(&r.id).copied().unwrap_or(0));
            }
        }
    };
    tally(&mut gs_search);
    tally(&mut gs_metrics);
    tally(&mut scopus);

    for (name, corpus) in
        [("gs_search", &gs_search), ("gs_metrics", &gs_metrics), ("scopus", &scopus)]
    {
        let report = validate_corpus(corpus);
        if let Some(v) = report.violations.first() {
            return Err(SynthError::InvalidCorpus {
                detail: format!("{name}: {:?} on {:?}: {}", v.kind, v.record, v.detail),
            });
        }
    }

    // --- phase 5: ground truth ---
    let removed_set: BTreeSet<RecordId> =
        duplicates.iter().filter(|d| d.removable).map(|d| d.copy).collect();

    let mut gs_categories: BTreeMap<RecordId, CategoryValue> = BTreeMap::new();
    let mut scopus_categories: BTreeMap<RecordId, CategoryValue> = BTreeMap::new();
    let mut cross_db_pairs: Vec<(RecordId, RecordId)> = Vec::new();
    let mut search_metrics_pairs: Vec<(RecordId, RecordId)> = Vec::new();
    let mut docs: Vec<TrueDoc> = Vec::new();

    for t in &targets {
        search_metrics_pairs.push((t.gs_search_id.unwrap(), t.gs_metrics_id.unwrap()));
    }
    for e in &entities {
        let union_id = e.gs_search_id.or(e.gs_metrics_id);
        if let Some(gid) = union_id {
            if is_gs_role(e.role) {
                gs_categories.insert(gid, e.role);
            }
        }
        if let Some(sid) = e.scopus_id {
            scopus_categories
                .insert(sid, if e.role == CategoryValue::Both { CategoryValue::Both } else { e.role });
            if e.role == CategoryValue::Both {
                cross_db_pairs.push((union_id.expect("both-doc has a GS record"), sid));
            }
        }
        if let (Some(g), Some(m)) = (e.gs_search_id, e.gs_metrics_id) {
            search_metrics_pairs.push((g, m));
        }
        docs.push(TrueDoc {
            key: e.key.clone(),
            target: e.target,
            gs_search: e.gs_search_id,
            gs_metrics: e.gs_metrics_id,
            scopus: e.scopus_id,
            gs_category: is_gs_role(e.role).then_some(e.role),
            scopus_category: e.scopus_id.map(|_| e.role),
            aip: e.aip,
            indexing: e.indexing,
            delay: e.delay,
            entry_age_days: e.entry_age,
        });
    }
    // duplicate copies that survive dedup get categorized downstream too
    for d in &duplicates {
        if d.removable {
            continue;
        }
        let original = entities
            .iter()
            .find(|e| e.gs_search_id == Some(d.original))
            .expect("original entity exists");
        let category = match d.kind {
            DuplicateKind::CrossLanguage => CategoryValue::GsOnlyNoScopusSource,
            _ => original.role,
        };
        gs_categories.insert(d.copy, category);
    }

    let mut tallies: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for e in &entities {
        let covered_now =
            matches!(e.role, CategoryValue::Both | CategoryValue::GsOnlyScopusSource);
        if !(covered_now && e.in_metrics) {
            continue;
        }
        let age = e.entry_age.expect("covered docs are aged");
        let label = age / width * width;
        let slot = tallies.entry(label).or_insert((0, 0));
        if e.role == CategoryValue::Both {
            slot.0 += 1;
        }
        slot.1 += 1;
    }
    let found_tallies: Vec<(i64, usize, usize)> =
        tallies.iter().map(|(&l, &(f, t))| (l, f, t)).collect();
    let found_fraction: Vec<(i64, f64)> = found_tallies
        .iter()
        .filter(|(_, _, t)| *t > 0)
        .map(|&(l, f, t)| (l, f as f64 / t as f64))
        .collect();
    let planted_quantiles = delay_quantiles(&found_fraction, width);

    let truth = GroundTruth {
        target_pairs: targets
            .iter()
            .map(|t| (t.gs_search_id.unwrap(), t.scopus_id.unwrap()))
            .collect(),
        targets: targets
            .iter()
            .map(|t| TrueTarget {
                gs_search: t.gs_search_id.unwrap(),
                gs_metrics: t.gs_metrics_id.unwrap(),
                scopus: t.scopus_id.unwrap(),
            })
            .collect(),
        docs,
        duplicates,
        search_metrics_pairs,
        cross_db_pairs,
        expected_removed: removed_set,
        gs_categories,
        scopus_categories,
        found_tallies,
        found_fraction,
        planted_quantiles,
    };

    let source_list: Vec<(String, String)> = sources
        .iter()
        .filter(|s| s.pool != SourcePool::GsExclusive)
        .map(|s| (s.title.clone(), s.publisher.clone()))
        .collect();
    let aip_table: Vec<(String, bool)> = sources
        .iter()
        .filter(|s| s.pool != SourcePool::GsExclusive)
        .map(|s| (s.publisher.clone(), s.has_aip))
        .collect();

    Ok(SynthOutput { gs_search, gs_metrics, scopus, source_list, aip_table, truth })
}

// ---------------------------------------------------------------------------
// scoring

/// What a pipeline (or a test harness assembling stage outputs) observed,
/// in the shape the scorer grades.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservedOutcome {
    pub search_metrics_pairs: Vec<(RecordId, RecordId)>,
    pub target_pairs: Vec<(RecordId, RecordId)>,
    pub cross_db_pairs: Vec<(RecordId, RecordId)>,
    pub removed_duplicates: BTreeSet<RecordId>,
    /// Candidate pairs dedup examined, with their classification.
    pub dedup_candidates: Vec<MatchedPair>,
    pub gs_categories: BTreeMap<RecordId, CategoryValue>,
    pub scopus_categories: BTreeMap<RecordId, CategoryValue>,
    pub quantiles: Option<DelayQuantiles>,
}

/// Hits over total; an empty total counts as fully hit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hit: usize,
    pub total: usize,
}

impl Ratio {
    pub fn fraction(self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.hit as f64 / self.total as f64
        }
    }
}

/// Set-comparison counts; empty denominators score 1.0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl PrecisionRecall {
    pub fn precision(self) -> f64 {
        if self.true_pos + self.false_pos == 0 {
            1.0
        } else {
            self.true_pos as f64 / (self.true_pos + self.false_pos) as f64
        }
    }

    pub fn recall(self) -> f64 {
        if self.true_pos + self.false_neg == 0 {
            1.0
        } else {
            self.true_pos as f64 / (self.true_pos + self.false_neg) as f64
        }
    }

    pub fn perfect(self) -> bool {
        self.false_pos == 0 && self.false_neg == 0
    }
}

/// One cell of the category confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCell {
    pub planted: CategoryValue,
    pub observed: CategoryValue,
    pub count: usize,
}

/// Stage-by-stage grades of a pipeline run against the planted truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub target_linkage: PrecisionRecall,
    pub search_metrics: PrecisionRecall,
    pub linkage: PrecisionRecall,
    pub dedup: PrecisionRecall,
    /// Removed set exactly equals the planted removable set.
    pub dedup_exact: bool,
    pub identical_candidates: Ratio,
    pub year_shifted_candidates: Ratio,
    pub cross_language_candidates: Ratio,
    pub category_confusion: Vec<ConfusionCell>,
    pub category_accuracy: f64,
    /// Truth records whose category the observer never assigned.
    pub category_missing: usize,
    /// |observed − planted| median delay, in days. None when one side is
    /// beyond the horizon and the other is not, or no estimate was given.
    pub median_error_days: Option<f64>,
    pub q3_error_days: Option<f64>,
    pub quantiles_exact: bool,
}

fn pair_pr(observed: &[(RecordId, RecordId)], truth: &[(RecordId, RecordId)]) -> PrecisionRecall {
    let o: BTreeSet<(RecordId, RecordId)> = observed.iter().copied().collect();
    let t: BTreeSet<(RecordId, RecordId)> = truth.iter().copied().collect();
    PrecisionRecall {
        true_pos: o.intersection(&t).count(),
        false_pos: o.difference(&t).count(),
        false_neg: t.difference(&o).count(),
    }
}

fn quantile_error(observed: QuantileEstimate, planted: QuantileEstimate) -> Option<f64> {
    match (observed, planted) {
        (QuantileEstimate::Months(a), QuantileEstimate::Months(b)) => Some((a - b).abs() * 30.0),
        (QuantileEstimate::BeyondHorizon, QuantileEstimate::BeyondHorizon) => Some(0.0),
        _ => None,
    }
}

/// Grade observed pipeline output against the planted ground truth.
/// Any observed id outside the generated universe is an error.
pub fn score(observed: &ObservedOutcome, truth: &GroundTruth) -> Result<StageScores, SynthError> {
    let mut universe: BTreeSet<RecordId> = BTreeSet::new();
    for t in &truth.targets {
        universe.extend([t.gs_search, t.gs_metrics, t.scopus]);
    }
    for d in &truth.docs {
        universe.extend(d.gs_search.into_iter().chain(d.gs_metrics).chain(d.scopus));
    }
    universe.extend(truth.duplicates.iter().map(|d| d.copy));

    let check = |id: RecordId| -> Result<(), SynthError> {
        if universe.contains(&id) {
            Ok(())
        } else {
            Err(SynthError::UnknownRecord { id })
        }
    };
    for &(a, b) in observed
        .search_metrics_pairs
        .iter()
        .chain(&observed.target_pairs)
        .chain(&observed.cross_db_pairs)
    {
        check(a)?;
        check(b)?;
    }
    for &id in observed
        .removed_duplicates
        .iter()
        .chain(observed.gs_categories.keys())
        .chain(observed.scopus_categories.keys())
    {
        check(id)?;
    }
    for p in &observed.dedup_candidates {
        check(p.left)?;
        check(p.right)?;
    }

    let dedup = {
        let t = &truth.expected_removed;
        let o = &observed.removed_duplicates;
        PrecisionRecall {
            true_pos: o.intersection(t).count(),
            false_pos: o.difference(t).count(),
            false_neg: t.difference(o).count(),
        }
    };

    let candidate_set: BTreeSet<(RecordId, RecordId)> = observed
        .dedup_candidates
        .iter()
        .map(|p| (p.left.min(p.right), p.left.max(p.right)))
        .collect();
    let mut kind_ratios: BTreeMap<&'static str, Ratio> = BTreeMap::new();
    for d in &truth.duplicates {
        let label = match d.kind {
            DuplicateKind::Identical => "identical",
            DuplicateKind::YearShifted { .. } => "year_shifted",
            DuplicateKind::CrossLanguage => "cross_language",
        };
        let r = kind_ratios.entry(label).or_default();
        r.total += 1;
        if candidate_set.contains(&(d.original.min(d.copy), d.original.max(d.copy))) {
            r.hit += 1;
        }
    }

    let mut confusion: BTreeMap<(CategoryValue, CategoryValue), usize> = BTreeMap::new();
    let mut agree = 0usize;
    let mut missing = 0usize;
    let mut total = 0usize;
    for (planted_map, observed_map) in [
        (&truth.gs_categories, &observed.gs_categories),
        (&truth.scopus_categories, &observed.scopus_categories),
    ] {
        for (&id, &planted) in planted_map {
            total += 1;
            match observed_map.get(&id) {
                Some(&got) => {
                    *confusion.entry((planted, got)).or_insert(0) += 1;
                    if got == planted {
                        agree += 1;
                    }
                }
                None => missing += 1,
            }
        }
    }
    let category_confusion: Vec<ConfusionCell> = confusion
        .into_iter()
        .map(|((planted, observed), count)| ConfusionCell { planted, observed, count })
        .collect();

    let (median_error_days, q3_error_days, quantiles_exact) = match observed.quantiles {
        Some(q) => (
            quantile_error(q.median, truth.planted_quantiles.median),
            quantile_error(q.q3, truth.planted_quantiles.q3),
            q.median == truth.planted_quantiles.median && q.q3 == truth.planted_quantiles.q3,
        ),
        None => (None, None, false),
    };

    Ok(StageScores {
        target_linkage: pair_pr(&observed.target_pairs, &truth.target_pairs),
        search_metrics: pair_pr(&observed.search_metrics_pairs, &truth.search_metrics_pairs),
        linkage: pair_pr(&observed.cross_db_pairs, &truth.cross_db_pairs),
        dedup,
        dedup_exact: dedup.perfect(),
        identical_candidates: kind_ratios.get("identical").copied().unwrap_or_default(),
        year_shifted_candidates: kind_ratios.get("year_shifted").copied().unwrap_or_default(),
        cross_language_candidates: kind_ratios.get("cross_language").copied().unwrap_or_default(),
        category_confusion,
        category_accuracy: if total == 0 { 1.0 } else { agree as f64 / total as f64 },
        category_missing: missing,
        median_error_days,
        q3_error_days,
        quantiles_exact,
    })
}

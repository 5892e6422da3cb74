//! Citation-impact comparisons: count ratios, age-normalized citation
//! rates, rank correlations, year distributions, top-cited selection, and
//! the h-index style threshold.
//!
//! Two ratio conventions coexist deliberately. The globalized ratio divides
//! the summed counts; the averaged ratio is the mean of per-target ratios
//! with a zero denominator replaced by one. Both are reported; they answer
//! different questions and diverge on skewed data.

use crate::model::{BibRecord, CategoryValue, RecordId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Citation counts of one target article on both sides, with its citing
/// documents broken down by overlap category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCitationRow {
    pub target: RecordId,
    pub gs_count: u64,
    pub scopus_count: u64,
    pub categories: CategoryCounts,
}

impl TargetCitationRow {
    pub fn counts_only(target: RecordId, gs_count: u64, scopus_count: u64) -> Self {
        TargetCitationRow { target, gs_count, scopus_count, categories: CategoryCounts::default() }
    }

    /// Documents in both databases are counted once per side, so the
    /// category breakdown must total `gs + scopus - both`.
    pub fn is_consistent(&self) -> bool {
        self.categories.total() as u64
            == self.gs_count + self.scopus_count - self.categories.both as u64
    }
}

/// Per-category document counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub both: usize,
    pub gs_only_scopus_source: usize,
    pub gs_only_no_scopus_source: usize,
    pub scopus_only_gs_source: usize,
    pub scopus_only_no_gs_source: usize,
}

impl CategoryCounts {
    pub fn add(&mut self, category: CategoryValue) {
        match category {
            CategoryValue::Both => self.both += 1,
            CategoryValue::GsOnlyScopusSource => self.gs_only_scopus_source += 1,
            CategoryValue::GsOnlyNoScopusSource => self.gs_only_no_scopus_source += 1,
            CategoryValue::ScopusOnlyGsSource => self.scopus_only_gs_source += 1,
            CategoryValue::ScopusOnlyNoGsSource => self.scopus_only_no_gs_source += 1,
        }
    }

    pub fn get(&self, category: CategoryValue) -> usize {
        match category {
            CategoryValue::Both => self.both,
            CategoryValue::GsOnlyScopusSource => self.gs_only_scopus_source,
            CategoryValue::GsOnlyNoScopusSource => self.gs_only_no_scopus_source,
            CategoryValue::ScopusOnlyGsSource => self.scopus_only_gs_source,
            CategoryValue::ScopusOnlyNoGsSource => self.scopus_only_no_gs_source,
        }
    }

    pub fn total(&self) -> usize {
        CategoryValue::ALL.iter().map(|&c| self.get(c)).sum()
    }

    /// Documents on the GS side (both plus GS-only).
    pub fn gs_side(&self) -> usize {
        self.both + self.gs_only_scopus_source + self.gs_only_no_scopus_source
    }

    /// Documents on the Scopus side (both plus Scopus-only).
    pub fn scopus_side(&self) -> usize {
        self.both + self.scopus_only_gs_source + self.scopus_only_no_gs_source
    }
}

/// Errors from the numeric operations.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two observations, got {len}")]
    TooShort { len: usize },
    #[error("constant input has no variance")]
    ConstantInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("denominator sums to zero")]
    ZeroDenominator,
    #[error("mean is zero")]
    ZeroMean,
}

/// Ratio of summed counts: `sum(gs) / sum(scopus)`.
pub fn globalized_ratio(rows: &[TargetCitationRow]) -> Result<f64, MetricsError> {
    let gs: u64 = rows.iter().map(|r| r.gs_count).sum();
    let scopus: u64 = rows.iter().map(|r| r.scopus_count).sum();
    if scopus == 0 {
        return Err(MetricsError::ZeroDenominator);
    }
    Ok(gs as f64 / scopus as f64)
}

/// Mean of per-target ratios, substituting 1 for a zero denominator on
/// that row only.
pub fn averaged_ratio(rows: &[TargetCitationRow]) -> Result<f64, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let sum: f64 =
        rows.iter().map(|r| r.gs_count as f64 / (r.scopus_count.max(1)) as f64).sum();
    Ok(sum / rows.len() as f64)
}

/// `100 * (reference - other) / reference`: how much lower `other` is than
/// `reference`, in percent.
pub fn percent_lower(reference: f64, other: f64) -> Result<f64, MetricsError> {
    if reference == 0.0 {
        return Err(MetricsError::ZeroDenominator);
    }
    if !reference.is_finite() || !other.is_finite() {
        return Err(MetricsError::NonFinite);
    }
    Ok(100.0 * (reference - other) / reference)
}

/// Age-normalized citation rates for one database's citing documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateOutcome {
    /// `(doc id, citation count / mean count of its publication year)`,
    /// input order. Docs in a zero-mean year get rate 0.
    pub rates: Vec<(RecordId, f64)>,
    /// Docs without a publication year, excluded from normalization.
    pub excluded_missing_year: Vec<RecordId>,
    /// Years whose mean citation count is zero.
    pub zero_mean_years: Vec<i32>,
}

/// Normalize each document's citation count by the mean count of documents
/// published the same year. Must be called per database; mixing sides
/// would blend two different citation regimes. A missing citation count
/// counts as zero; docs without a year are excluded and reported.
///
/// By construction the plain mean of all rates over years with a positive
/// mean is exactly 1, which makes rates comparable across databases.
pub fn age_normalized_rates(docs: &[&BibRecord]) -> RateOutcome {
    let mut by_year: BTreeMap<i32, (u64, u64)> = BTreeMap::new(); // (docs, total cites)
    for d in docs {
        if let Some(y) = d.year {
            let e = by_year.entry(y).or_default();
            e.0 += 1;
            e.1 += d.citation_count.unwrap_or(0).max(0) as u64;
        }
    }
    let means: BTreeMap<i32, f64> =
        by_year.iter().map(|(&y, &(n, total))| (y, total as f64 / n as f64)).collect();

    let mut rates = Vec::new();
    let mut excluded = Vec::new();
    for d in docs {
        match d.year {
            Some(y) => {
                let mean = means[&y];
                let count = d.citation_count.unwrap_or(0).max(0) as f64;
                rates.push((d.id, if mean > 0.0 { count / mean } else { 0.0 }));
            }
            None => excluded.push(d.id),
        }
    }
    let zero_mean_years =
        means.iter().filter(|(_, &m)| m == 0.0).map(|(&y, _)| y).collect();
    RateOutcome { rates, excluded_missing_year: excluded, zero_mean_years }
}

/// Mean age-normalized rate of one overlap category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRateRow {
    pub category: CategoryValue,
    pub docs: usize,
    pub mean_rate: f64,
}

/// Group rated documents by category and average within each group.
/// Rows come back in [`CategoryValue::ALL`] order, empty categories
/// omitted.
pub fn category_mean_rates(items: &[(CategoryValue, f64)]) -> Vec<CategoryRateRow> {
    let mut acc: BTreeMap<CategoryValue, (usize, f64)> = BTreeMap::new();
    for &(category, rate) in items {
        let e = acc.entry(category).or_default();
        e.0 += 1;
        e.1 += rate;
    }
    CategoryValue::ALL
        .iter()
        .filter_map(|&category| {
            acc.get(&category).map(|&(docs, sum)| CategoryRateRow {
                category,
                docs,
                mean_rate: sum / docs as f64,
            })
        })
        .collect()
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(MetricsError::TooShort { len: x.len() });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ConstantInput);
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Ranks with ties averaged (the midrank convention), 1-based.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("ranks need finite values"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = midrank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Pearson correlation between the per-target count ratio (zero-denominator
/// rule applied) and the Scopus count: do the databases disagree more on
/// lowly cited targets?
pub fn ratio_count_correlation(rows: &[TargetCitationRow]) -> Result<f64, MetricsError> {
    let ratios: Vec<f64> =
        rows.iter().map(|r| r.gs_count as f64 / r.scopus_count.max(1) as f64).collect();
    let counts: Vec<f64> = rows.iter().map(|r| r.scopus_count as f64).collect();
    pearson(&ratios, &counts)
}

/// One bucket of a publication-year distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum YearBucket {
    /// No year on the record.
    Missing,
    /// Collapsed old years (at or before the collapse threshold).
    UpTo(i32),
    Year(i32),
}

impl YearBucket {
    pub fn label(self) -> String {
        match self {
            YearBucket::Missing => "N.A.".to_string(),
            YearBucket::UpTo(y) => format!("<={y}"),
            YearBucket::Year(y) => y.to_string(),
        }
    }
}

/// Publication-year distribution with percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearDistribution {
    pub total: usize,
    /// Buckets in presentation order: missing, collapsed old years, then
    /// each year ascending (zero-count years inside the range included).
    pub buckets: Vec<(YearBucket, usize)>,
}

impl YearDistribution {
    pub fn pct(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.total as f64
        }
    }
}

/// Old years collapse into one bucket below this year.
pub const YEAR_COLLAPSE_BEFORE: i32 = 2008;

/// Distribution of publication years with missing years as their own
/// bucket and everything before [`YEAR_COLLAPSE_BEFORE`] collapsed.
pub fn year_distribution(years: &[Option<i32>]) -> YearDistribution {
    year_distribution_with(years, YEAR_COLLAPSE_BEFORE)
}

/// As [`year_distribution`] with an explicit collapse threshold.
pub fn year_distribution_with(years: &[Option<i32>], collapse_before: i32) -> YearDistribution {
    let mut missing = 0usize;
    let mut old = 0usize;
    let mut per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for y in years {
        match y {
            None => missing += 1,
            Some(y) if *y < collapse_before => old += 1,
            Some(y) => *per_year.entry(*y).or_default() += 1,
        }
    }
    let mut buckets = vec![
        (YearBucket::Missing, missing),
        (YearBucket::UpTo(collapse_before - 1), old),
    ];
    if let (Some(&min), Some(&max)) = (per_year.keys().next(), per_year.keys().last()) {
        for y in min..=max {
            buckets.push((YearBucket::Year(y), per_year.get(&y).copied().unwrap_or(0)));
        }
    }
    YearDistribution { total: years.len(), buckets }
}

/// Result of a top-k selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopSelection {
    pub ids: Vec<RecordId>,
    /// True when fewer than `k` records were available.
    pub short_of_k: bool,
}

/// The `k` most-cited records, citation count descending, ties broken by
/// smallest id. A missing count ranks as zero. When the set is smaller
/// than `k` the whole set is returned and flagged.
pub fn select_top_cited(records: &[&BibRecord], k: usize) -> TopSelection {
    let mut order: Vec<(&&BibRecord, i64)> =
        records.iter().map(|r| (r, r.citation_count.unwrap_or(0))).collect();
    order.sort_by(|(ra, ca), (rb, cb)| cb.cmp(ca).then_with(|| ra.id.cmp(&rb.id)));
    TopSelection {
        short_of_k: records.len() < k,
        ids: order.into_iter().take(k).map(|(r, _)| r.id).collect(),
    }
}

/// Targets retained for side-by-side impact comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSet {
    /// `(gs target, scopus target)` pairs that survived both cuts,
    /// ordered by the GS-side ranking.
    pub pairs: Vec<(RecordId, RecordId)>,
    pub empty_intersection: bool,
}

/// Intersect the top `k_gs` GS targets with the top `k_scopus` Scopus
/// targets, joined through the matched target pairs. Selection inside each
/// side follows [`select_top_cited`] ordering.
pub fn select_analysis_set(
    gs: &[&BibRecord],
    scopus: &[&BibRecord],
    matches: &[(RecordId, RecordId)],
    k_gs: usize,
    k_scopus: usize,
) -> AnalysisSet {
    let gs_top = select_top_cited(gs, k_gs).ids;
    let scopus_top: std::collections::BTreeSet<RecordId> =
        select_top_cited(scopus, k_scopus).ids.into_iter().collect();
    let partner: BTreeMap<RecordId, RecordId> = matches.iter().copied().collect();
    let pairs: Vec<(RecordId, RecordId)> = gs_top
        .into_iter()
        .filter_map(|g| partner.get(&g).filter(|s| scopus_top.contains(s)).map(|&s| (g, s)))
        .collect();
    AnalysisSet { empty_intersection: pairs.is_empty(), pairs }
}

/// Largest `h` such that at least `h` of the counts are at least `h`.
pub fn h5(counts: &[u64]) -> usize {
    let mut sorted: Vec<u64> = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut h = 0;
    for (i, &c) in sorted.iter().enumerate() {
        if c as usize >= i + 1 {
            h = i + 1;
        } else {
            break;
        }
    }
    h
}

/// Spread of per-target ratios, reported on both common scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    /// Sample standard deviation over mean.
    pub fraction: f64,
    /// The same, times 100.
    pub percent: f64,
}

/// Coefficient of variation of a ratio list (sample standard deviation,
/// n-1 denominator). Errors on fewer than two values or a zero mean.
pub fn ratio_dispersion(ratios: &[f64]) -> Result<Dispersion, MetricsError> {
    if ratios.len() < 2 {
        return Err(MetricsError::TooShort { len: ratios.len() });
    }
    if ratios.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(MetricsError::ZeroMean);
    }
    let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    let fraction = var.sqrt() / mean;
    Ok(Dispersion { fraction, percent: 100.0 * fraction })
}

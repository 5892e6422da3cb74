//! Indexing-speed analysis over GS entry ages: cohort binning, the
//! GS-only/both ratio series, the indexing-status breakdown for documents
//! from Scopus-covered sources, and bin-granular delay quantiles.
//!
//! Ages come from a single snapshot, so the cohort series is synchronous:
//! each bin holds different documents observed at one moment, and the
//! delay quantiles read the found-in-Scopus fraction across bins as if it
//! were one cohort aging (a stationarity assumption, flagged when the
//! series is visibly non-monotone).

use crate::model::RecordId;
use serde::{Deserialize, Serialize};

/// Status of a GS citing document published in a Scopus-covered source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IndexingClass {
    /// Already present in Scopus at snapshot time.
    FoundInScopus,
    /// Absent from Scopus, publication year missing or current: plausibly
    /// an article-in-press not yet indexed.
    PossibleAip,
    /// Absent from Scopus with an established publication year.
    NotAip,
}

/// A GS citing document annotated for the timing views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedDoc {
    pub id: RecordId,
    /// Days since the document entered the GS index, when known.
    pub entry_age_days: Option<i64>,
    /// Matched to a Scopus record.
    pub in_both: bool,
    /// Set only for documents from Scopus-covered sources; drives the
    /// indexing-status breakdown.
    pub indexing: Option<IndexingClass>,
}

/// One age bin. `label` is the bin start in days; the bin covers
/// `[label, label + width)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortBin {
    pub label: i64,
    pub count_both: usize,
    pub count_gs_only: usize,
    pub found_in_scopus: usize,
    pub possible_aip: usize,
    pub not_aip: usize,
}

impl CohortBin {
    /// All docs in the bin (the ratio-series population).
    pub fn total(&self) -> usize {
        self.count_both + self.count_gs_only
    }

    /// Docs from Scopus-covered sources (the breakdown population).
    pub fn covered_total(&self) -> usize {
        self.found_in_scopus + self.possible_aip + self.not_aip
    }
}

/// Binning result: the full zero-filled grid plus exclusion counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinOutcome {
    pub bins: Vec<CohortBin>,
    /// Docs at or past the last full bin.
    pub beyond_horizon: usize,
    /// Docs without entry-age information.
    pub undated: usize,
}

impl BinOutcome {
    pub fn binned_total(&self) -> usize {
        self.bins.iter().map(CohortBin::total).sum()
    }
}

/// Assign documents to fixed-width age bins. A doc aged `a` lands in the
/// bin starting at `floor(a / width) * width`. Only full bins below the
/// horizon are kept: with the defaults (width 30, horizon 365) the labels
/// run 0, 30, ..., 330 and ages from 360 up count as beyond the horizon,
/// because the partial 360..365 sliver would distort per-bin rates.
/// Undated docs are excluded and counted separately. The grid is fully
/// materialized: empty bins appear with zero counts.
pub fn bin_by_entry_age(docs: &[TimedDoc], bin_width: i64, horizon: i64) -> BinOutcome {
    assert!(bin_width > 0, "bin width must be positive");
    assert!(horizon >= bin_width, "horizon shorter than one bin");
    let n_bins = (horizon / bin_width) as usize;
    let cutoff = n_bins as i64 * bin_width;
    let mut bins: Vec<CohortBin> = (0..n_bins)
        .map(|i| CohortBin { label: i as i64 * bin_width, ..CohortBin::default() })
        .collect();
    let mut beyond_horizon = 0usize;
    let mut undated = 0usize;
    for doc in docs {
        let age = match doc.entry_age_days {
            Some(a) if (0..cutoff).contains(&a) => a,
            Some(_) => {
                beyond_horizon += 1;
                continue;
            }
            None => {
                undated += 1;
                continue;
            }
        };
        let bin = &mut bins[(age / bin_width) as usize];
        if doc.in_both {
            bin.count_both += 1;
        } else {
            bin.count_gs_only += 1;
        }
        match doc.indexing {
            Some(IndexingClass::FoundInScopus) => bin.found_in_scopus += 1,
            Some(IndexingClass::PossibleAip) => bin.possible_aip += 1,
            Some(IndexingClass::NotAip) => bin.not_aip += 1,
            None => {}
        }
    }
    BinOutcome { bins, beyond_horizon, undated }
}

/// Per-bin GS-only/both ratio. `None` where the bin has no both-docs:
/// the ratio is undefined there, not infinite.
pub fn overlap_ratio_series(bins: &[CohortBin]) -> Vec<(i64, Option<f64>)> {
    bins.iter()
        .map(|b| {
            let ratio = (b.count_both > 0)
                .then(|| b.count_gs_only as f64 / b.count_both as f64);
            (b.label, ratio)
        })
        .collect()
}

/// One row of the indexing-status breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub label: i64,
    pub docs: usize,
    pub pct_found_in_scopus: f64,
    pub pct_possible_aip: f64,
    pub pct_not_aip: f64,
}

/// Indexing-status breakdown series over covered-source documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownSeries {
    /// Non-empty bins from the second bin onward, percentages per row
    /// summing to 100 up to float error.
    pub rows: Vec<BreakdownRow>,
    /// Covered-source docs in the first bin, which this view skips: a doc
    /// younger than one bin width cannot show a meaningful lag yet.
    pub skipped_first_bin: usize,
}

/// Percentage split of covered-source documents per bin into found in
/// Scopus / possible AIP / not AIP. Empty bins produce no row; the first
/// bin is always skipped and its population reported.
pub fn aip_breakdown_series(bins: &[CohortBin]) -> BreakdownSeries {
    let mut rows = Vec::new();
    let mut skipped_first_bin = 0;
    for (i, b) in bins.iter().enumerate() {
        let total = b.covered_total();
        if i == 0 {
            skipped_first_bin = total;
            continue;
        }
        if total == 0 {
            continue;
        }
        let pct = |n: usize| 100.0 * n as f64 / total as f64;
        rows.push(BreakdownRow {
            label: b.label,
            docs: total,
            pct_found_in_scopus: pct(b.found_in_scopus),
            pct_possible_aip: pct(b.possible_aip),
            pct_not_aip: pct(b.not_aip),
        });
    }
    BreakdownSeries { rows, skipped_first_bin }
}

/// Fraction of covered-source docs already found in Scopus, per non-empty
/// bin. This is the input series for [`delay_quantiles`].
pub fn found_fraction_series(bins: &[CohortBin]) -> Vec<(i64, f64)> {
    bins.iter()
        .filter(|b| b.covered_total() > 0)
        .map(|b| (b.label, b.found_in_scopus as f64 / b.covered_total() as f64))
        .collect()
}

/// A quantile of the indexing delay, at bin granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuantileEstimate {
    /// The delay quantile in months; the crossing bin `[label, label+w)`
    /// reads as `(label + w) / 30` months.
    Months(f64),
    /// No bin reaches the quantile within the observed range.
    BeyondHorizon,
}

/// Median and third-quartile indexing delay read off the found fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayQuantiles {
    pub median: QuantileEstimate,
    pub q3: QuantileEstimate,
    /// The fraction series decreased somewhere. The synchronous reading
    /// assumes it only grows with age; the first crossing is still used.
    pub non_monotone: bool,
}

/// Estimate delay quantiles from a `(bin label, found fraction)` series
/// ordered by age ascending. The quantile is the first bin whose fraction
/// reaches it, expressed in months via the end of that bin. No
/// interpolation inside bins: the snapshot design cannot support finer
/// precision than one bin.
pub fn delay_quantiles(series: &[(i64, f64)], bin_width: i64) -> DelayQuantiles {
    let crossing = |q: f64| {
        series
            .iter()
            .find(|(_, frac)| *frac >= q)
            .map(|(label, _)| QuantileEstimate::Months((label + bin_width) as f64 / 30.0))
            .unwrap_or(QuantileEstimate::BeyondHorizon)
    };
    let non_monotone = series.windows(2).any(|w| w[1].1 < w[0].1);
    DelayQuantiles { median: crossing(0.5), q3: crossing(0.75), non_monotone }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn timed(id: u32, age: Option<i64>, in_both: bool, indexing: Option<IndexingClass>) -> TimedDoc {
        TimedDoc { id: RecordId(id), entry_age_days: age, in_both, indexing }
    }

    #[test]
    fn ages_fall_into_floor_bins() {
        let docs = vec![
            timed(1, Some(45), true, None),
            timed(2, Some(0), false, None),
            timed(3, Some(29), false, None),
            timed(4, Some(30), true, None),
        ];
        let out = bin_by_entry_age(&docs, 30, 365);
        assert_eq!(out.bins.len(), 12);
        assert_eq!(out.bins[0].label, 0);
        assert_eq!(out.bins[11].label, 330);
        assert_eq!(out.bins[0].count_gs_only, 2);
        assert_eq!(out.bins[1].count_both, 2); // ages 45 and 30
        assert_eq!(out.beyond_horizon, 0);
        assert_eq!(out.undated, 0);
    }

    #[test]
    fn horizon_excludes_partial_bin_and_undated() {
        let docs = vec![
            timed(1, Some(365), true, None),
            timed(2, Some(360), true, None), // inside the 360..365 sliver
            timed(3, Some(359), true, None),
            timed(4, None, false, None),
            timed(5, Some(-1), false, None),
        ];
        let out = bin_by_entry_age(&docs, 30, 365);
        assert_eq!(out.beyond_horizon, 3); // 365, 360, and the negative age
        assert_eq!(out.undated, 1);
        assert_eq!(out.bins[11].count_both, 1);
        assert_eq!(out.binned_total(), 1);
    }

    #[test]
    fn grid_is_zero_filled() {
        let out = bin_by_entry_age(&[], 30, 365);
        assert_eq!(out.bins.len(), 12);
        assert!(out.bins.iter().all(|b| b.total() == 0));
        assert_eq!(
            out.bins.iter().map(|b| b.label).collect::<Vec<_>>(),
            (0..12).map(|i| i * 30).collect::<Vec<_>>()
        );
    }

    #[test]
    fn ratio_series_guards_empty_denominator() {
        let mut bins = bin_by_entry_age(&[], 30, 365).bins;
        bins[0].count_gs_only = 20;
        bins[0].count_both = 2;
        bins[1].count_gs_only = 5;
        bins[1].count_both = 5;
        bins[2].count_gs_only = 3;
        let series = overlap_ratio_series(&bins);
        assert_eq!(series[0], (0, Some(10.0)));
        assert_eq!(series[1], (30, Some(1.0)));
        assert_eq!(series[2], (60, None));
    }

    #[test]
    fn breakdown_percentages_match_counts() {
        let mut bins = bin_by_entry_age(&[], 30, 365).bins;
        bins[1].found_in_scopus = 52;
        bins[1].possible_aip = 29;
        bins[1].not_aip = 19;
        bins[2].found_in_scopus = 7;
        let series = aip_breakdown_series(&bins);
        assert_eq!(series.rows.len(), 2);
        let row = &series.rows[0];
        assert_eq!((row.label, row.docs), (30, 100));
        assert_relative_eq!(row.pct_found_in_scopus, 52.0);
        assert_relative_eq!(row.pct_possible_aip, 29.0);
        assert_relative_eq!(row.pct_not_aip, 19.0);
        let only_found = &series.rows[1];
        assert_relative_eq!(only_found.pct_found_in_scopus, 100.0);
        assert_relative_eq!(only_found.pct_possible_aip, 0.0);
    }

    #[test]
    fn breakdown_skips_first_bin_and_empty_bins() {
        let mut bins = bin_by_entry_age(&[], 30, 365).bins;
        bins[0].found_in_scopus = 4; // too young for this view
        bins[3].not_aip = 2;
        let series = aip_breakdown_series(&bins);
        assert_eq!(series.skipped_first_bin, 4);
        assert_eq!(series.rows.len(), 1);
        assert_eq!(series.rows[0].label, 90);
    }

    #[test]
    fn binning_routes_indexing_classes() {
        let docs = vec![
            timed(1, Some(40), true, Some(IndexingClass::FoundInScopus)),
            timed(2, Some(41), false, Some(IndexingClass::PossibleAip)),
            timed(3, Some(42), false, Some(IndexingClass::NotAip)),
            timed(4, Some(43), false, None), // not from a covered source
        ];
        let out = bin_by_entry_age(&docs, 30, 365);
        let b = &out.bins[1];
        assert_eq!((b.found_in_scopus, b.possible_aip, b.not_aip), (1, 1, 1));
        assert_eq!(b.covered_total(), 3);
        assert_eq!(b.total(), 4);
    }

    #[test]
    fn fraction_series_reads_found_share() {
        let mut bins = bin_by_entry_age(&[], 30, 365).bins;
        bins[1].found_in_scopus = 52;
        bins[1].possible_aip = 48;
        bins[2].found_in_scopus = 3;
        bins[2].not_aip = 1;
        let series = found_fraction_series(&bins);
        assert_eq!(series, vec![(30, 0.52), (60, 0.75)]);
    }

    #[test]
    fn median_reads_second_month_from_early_crossing() {
        // fraction already 0.52 in the second bin
        let series = vec![(30, 0.52), (60, 0.60), (90, 0.76), (120, 0.80)];
        let q = delay_quantiles(&series, 30);
        assert_eq!(q.median, QuantileEstimate::Months(2.0));
        assert_eq!(q.q3, QuantileEstimate::Months(4.0));
        assert!(!q.non_monotone);
    }

    #[test]
    fn quantiles_can_exceed_the_horizon() {
        let series = vec![(30, 0.10), (60, 0.20), (90, 0.30)];
        let q = delay_quantiles(&series, 30);
        assert_eq!(q.median, QuantileEstimate::BeyondHorizon);
        assert_eq!(q.q3, QuantileEstimate::BeyondHorizon);
    }

    #[test]
    fn non_monotone_series_warns_but_uses_first_crossing() {
        let series = vec![(30, 0.60), (60, 0.40), (90, 0.80)];
        let q = delay_quantiles(&series, 30);
        assert!(q.non_monotone);
        assert_eq!(q.median, QuantileEstimate::Months(2.0));
        assert_eq!(q.q3, QuantileEstimate::Months(4.0));
    }

    #[test]
    fn empty_series_is_beyond_horizon() {
        let q = delay_quantiles(&[], 30);
        assert_eq!(q.median, QuantileEstimate::BeyondHorizon);
        assert!(!q.non_monotone);
    }

    #[test]
    fn wider_bins_shift_month_granularity() {
        // one 60-day bin crossing 0.5 at label 60 reads as end of bin = 4 months
        let q = delay_quantiles(&[(0, 0.1), (60, 0.55)], 60);
        assert_eq!(q.median, QuantileEstimate::Months(4.0));
    }

    proptest! {
        #[test]
        fn binning_partitions_docs(
            ages in proptest::collection::vec(
                proptest::option::of(-10i64..420), 0..200),
            width in 1i64..90,
            horizon in 90i64..400,
        ) {
            let docs: Vec<TimedDoc> = ages
                .iter()
                .enumerate()
                .map(|(i, &age)| timed(i as u32, age, i % 2 == 0, None))
                .collect();
            let out = bin_by_entry_age(&docs, width, horizon);
            prop_assert_eq!(
                out.binned_total() + out.beyond_horizon + out.undated,
                docs.len()
            );
            prop_assert_eq!(out.bins.len() as i64, horizon / width);
            for (i, b) in out.bins.iter().enumerate() {
                prop_assert_eq!(b.label, i as i64 * width);
            }
        }

        #[test]
        fn breakdown_rows_sum_to_one_hundred(
            counts in proptest::collection::vec((0usize..50, 0usize..50, 0usize..50), 2..13),
        ) {
            let bins: Vec<CohortBin> = counts
                .iter()
                .enumerate()
                .map(|(i, &(f, p, n))| CohortBin {
                    label: i as i64 * 30,
                    found_in_scopus: f,
                    possible_aip: p,
                    not_aip: n,
                    ..CohortBin::default()
                })
                .collect();
            let series = aip_breakdown_series(&bins);
            for row in &series.rows {
                let sum = row.pct_found_in_scopus + row.pct_possible_aip + row.pct_not_aip;
                prop_assert!((sum - 100.0).abs() < 0.1, "sum {sum}");
            }
            // every retained row is a non-empty bin past the first
            prop_assert_eq!(
                series.rows.len(),
                bins.iter().skip(1).filter(|b| b.covered_total() > 0).count()
            );
        }

        #[test]
        fn quantile_months_follow_first_crossing(
            fracs in proptest::collection::vec(0.0f64..1.0, 1..12),
        ) {
            let series: Vec<(i64, f64)> =
                fracs.iter().enumerate().map(|(i, &f)| (i as i64 * 30, f)).collect();
            let q = delay_quantiles(&series, 30);
            match q.median {
                QuantileEstimate::Months(m) => {
                    let idx = fracs.iter().position(|&f| f >= 0.5).unwrap();
                    prop_assert_eq!(m, (idx as f64) + 1.0);
                }
                QuantileEstimate::BeyondHorizon => {
                    prop_assert!(fracs.iter().all(|&f| f < 0.5));
                }
            }
        }
    }
}

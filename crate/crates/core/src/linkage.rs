//! Record linkage: match-merging two record sets with the four-key cascade,
//! similarity classification of candidate pairs, and within-set duplicate
//! detection.
//!
//! Matching is exact on composed keys (blocking join), never fuzzy string
//! distance; the similarity classes only decide whether a key collision is
//! accepted. All tie-breaking is canonical (smallest record id), which makes
//! every operation here deterministic under permutation of the inputs and
//! under any parallelism level.

use crate::matchkeys::{key_bundle, normalize_part, KeyBundle};
use crate::model::{BibRecord, RecordId, RecordKind, Thresholds};
use crate::normalize::{normalize_author, normalize_source_title, tokenize_title};
use crate::par;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// The four match-keys in precedence order: a record matched by an earlier
/// key is never considered by a later one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchKeyKind {
    Full,
    Title,
    Short,
    Source,
}

impl MatchKeyKind {
    pub const ALL: [MatchKeyKind; 4] =
        [MatchKeyKind::Full, MatchKeyKind::Title, MatchKeyKind::Short, MatchKeyKind::Source];

    pub fn token(self) -> &'static str {
        match self {
            MatchKeyKind::Full => "FULL",
            MatchKeyKind::Title => "TITLE",
            MatchKeyKind::Short => "SHORT",
            MatchKeyKind::Source => "SOURCE",
        }
    }
}

impl std::fmt::Display for MatchKeyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// How similar the metadata of a candidate pair is.
///
/// `Identical`: every field present on both sides agrees. `Large`: enough
/// shared title words, mutual overlap, a common author, and close years.
/// `Low`: anything less; low pairs are never merged and never deleted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimilarityClass {
    Identical,
    Large,
    Low,
}

impl SimilarityClass {
    pub fn token(self) -> &'static str {
        match self {
            SimilarityClass::Identical => "IDENTICAL",
            SimilarityClass::Large => "LARGE",
            SimilarityClass::Low => "LOW",
        }
    }
}

/// One accepted pair: which records, which key stage linked them, and how
/// similar their metadata is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub left: RecordId,
    pub right: RecordId,
    pub key_used: MatchKeyKind,
    pub similarity: SimilarityClass,
}

/// Result of match-merging two record sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    /// Accepted pairs, sorted by (left id, right id). Each record appears
    /// in at most one pair.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_left: Vec<RecordId>,
    pub unmatched_right: Vec<RecordId>,
    /// Pairs accepted per key stage, in [`MatchKeyKind::ALL`] order.
    pub stage_counts: [usize; 4],
    /// Records carrying no key at all; they can never match.
    pub unkeyed_left: Vec<RecordId>,
    pub unkeyed_right: Vec<RecordId>,
}

impl MatchOutcome {
    pub fn stage_count(&self, kind: MatchKeyKind) -> usize {
        self.stage_counts[kind as usize]
    }
}

/// Precomputed normalized view of one record, shared by classification and
/// the match cascade so each record is normalized exactly once.
#[derive(Debug, Clone)]
pub(crate) struct Normalized {
    pub id: RecordId,
    pub kind: RecordKind,
    pub cites_target: Option<RecordId>,
    pub completeness: u32,
    pub keys: KeyBundle,
    tokens: Vec<String>,
    overlap_tokens: BTreeSet<String>,
    author_lasts: Vec<String>,
    author_set: BTreeSet<String>,
    year: Option<i32>,
    source_norm: Option<String>,
    volume_norm: Option<String>,
    page_norm: Option<String>,
}

impl Normalized {
    pub(crate) fn new(record: &BibRecord, thresholds: &Thresholds) -> Self {
        let tokens = tokenize_title(&record.title, thresholds.min_title_word_len);
        let overlap_tokens: BTreeSet<String> = if thresholds.overlap_counts_short_tokens {
            tokenize_title(&record.title, 1).into_iter().collect()
        } else {
            tokens.iter().cloned().collect()
        };
        let author_lasts: Vec<String> = record
            .authors
            .iter()
            .filter_map(|a| normalize_author(a).ok())
            .map(|a| a.last)
            .collect();
        let author_set = author_lasts.iter().cloned().collect();
        let non_empty = |s: &&String| !s.trim().is_empty();
        Normalized {
            id: record.id,
            kind: record.kind,
            cites_target: record.cites_target,
            completeness: record.completeness(),
            keys: key_bundle(record, thresholds),
            tokens,
            overlap_tokens,
            author_lasts,
            author_set,
            year: record.year,
            source_norm: record
                .source_title
                .as_ref()
                .filter(non_empty)
                .map(|s| normalize_source_title(s)),
            volume_norm: record.volume.as_ref().filter(non_empty).map(|v| normalize_part(v)),
            page_norm: record.start_page.as_ref().filter(non_empty).map(|p| normalize_part(p)),
        }
    }

    fn key(&self, kind: MatchKeyKind) -> Option<&str> {
        match kind {
            MatchKeyKind::Full => self.keys.full_key.as_deref(),
            MatchKeyKind::Title => self.keys.title_key.as_deref(),
            MatchKeyKind::Short => self.keys.short_key.as_deref(),
            MatchKeyKind::Source => self.keys.source_key.as_deref(),
        }
    }
}

/// Mutual distinct-token overlap between two token lists: the fraction of
/// `a`'s distinct tokens found in `b` and vice versa. Both fractions are 0
/// when either list is empty.
pub fn title_overlap(a: &[String], b: &[String]) -> (f64, f64) {
    let sa: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let sb: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    overlap_of_sets(&sa, &sb)
}

fn overlap_of_sets<T: Ord>(sa: &BTreeSet<T>, sb: &BTreeSet<T>) -> (f64, f64) {
    if sa.is_empty() || sb.is_empty() {
        return (0.0, 0.0);
    }
    let shared = sa.intersection(sb).count() as f64;
    (shared / sa.len() as f64, shared / sb.len() as f64)
}

/// Classify how similar two records are. Symmetric in its arguments.
pub fn classify_pair(a: &BibRecord, b: &BibRecord, thresholds: &Thresholds) -> SimilarityClass {
    classify_normalized(&Normalized::new(a, thresholds), &Normalized::new(b, thresholds), thresholds)
}

pub(crate) fn classify_normalized(
    a: &Normalized,
    b: &Normalized,
    thresholds: &Thresholds,
) -> SimilarityClass {
    // Identical: every compared field that is present on both sides agrees.
    let fields_equal = [
        (!a.tokens.is_empty() && !b.tokens.is_empty()).then(|| a.tokens == b.tokens),
        (!a.author_lasts.is_empty() && !b.author_lasts.is_empty())
            .then(|| a.author_lasts == b.author_lasts),
        a.year.zip(b.year).map(|(x, y)| x == y),
        a.source_norm.as_ref().zip(b.source_norm.as_ref()).map(|(x, y)| x == y),
        a.volume_norm.as_ref().zip(b.volume_norm.as_ref()).map(|(x, y)| x == y),
        a.page_norm.as_ref().zip(b.page_norm.as_ref()).map(|(x, y)| x == y),
    ];
    if fields_equal.iter().all(|cmp| cmp.unwrap_or(true)) {
        return SimilarityClass::Identical;
    }

    let shared_tokens = a.overlap_tokens.intersection(&b.overlap_tokens).count();
    let (frac_a, frac_b) = overlap_of_sets(&a.overlap_tokens, &b.overlap_tokens);
    let authors_share = !a.author_set.is_disjoint(&b.author_set);
    let years_close = match (a.year, b.year) {
        (Some(x), Some(y)) => (x - y).abs() <= thresholds.max_year_gap,
        _ => true, // a missing year cannot argue against similarity
    };

    if shared_tokens >= thresholds.min_shared_title_words
        && frac_a >= thresholds.title_overlap_fraction
        && frac_b >= thresholds.title_overlap_fraction
        && authors_share
        && years_close
    {
        SimilarityClass::Large
    } else {
        SimilarityClass::Low
    }
}

/// Match-merge two record sets with the four-key cascade.
///
/// Stages run in [`MatchKeyKind`] precedence order. Within a stage, records
/// sharing a key value form a group; left records are visited in ascending
/// id order and each takes the smallest-id right record whose metadata
/// classifies as identical or large. Low-similarity collisions are skipped:
/// colliding on a key is necessary but not sufficient. A record matched in
/// an earlier stage never re-enters a later one.
pub fn match_merge(left: &[BibRecord], right: &[BibRecord], thresholds: &Thresholds) -> MatchOutcome {
    let left_norm: Vec<Normalized> = par::map_slice(left, |r| Normalized::new(r, thresholds));
    let right_norm: Vec<Normalized> = par::map_slice(right, |r| Normalized::new(r, thresholds));
    // match_merge(x, x) must not pair a record with itself
    let same_set = std::ptr::eq(left.as_ptr(), right.as_ptr()) && left.len() == right.len();

    let order_of = |norm: &[Normalized]| {
        let mut idx: Vec<usize> = (0..norm.len()).collect();
        idx.sort_by_key(|&i| norm[i].id);
        idx
    };
    let left_order = order_of(&left_norm);
    let right_order = order_of(&right_norm);

    let mut left_matched = vec![false; left_norm.len()];
    let mut right_matched = vec![false; right_norm.len()];
    let mut pairs: Vec<MatchedPair> = Vec::new();
    let mut stage_counts = [0usize; 4];

    for stage in MatchKeyKind::ALL {
        let mut groups: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for &i in &left_order {
            if !left_matched[i] {
                if let Some(k) = left_norm[i].key(stage) {
                    groups.entry(k).or_default().0.push(i);
                }
            }
        }
        for &j in &right_order {
            if !right_matched[j] {
                if let Some(k) = right_norm[j].key(stage) {
                    groups.entry(k).or_default().1.push(j);
                }
            }
        }
        let work: Vec<(Vec<usize>, Vec<usize>)> = groups
            .into_values()
            .filter(|(ls, rs)| !ls.is_empty() && !rs.is_empty())
            .collect();

        // groups are disjoint record sets within a stage, so they can be
        // matched independently and merged in any canonical order
        let matched_groups: Vec<Vec<(usize, usize, SimilarityClass)>> =
            par::map_slice(&work, |(ls, rs)| {
                let mut taken = vec![false; rs.len()];
                let mut accepted = Vec::new();
                for &li in ls {
                    for (pos, &ri) in rs.iter().enumerate() {
                        if taken[pos] || (same_set && left_norm[li].id == right_norm[ri].id) {
                            continue;
                        }
                        let class = classify_normalized(&left_norm[li], &right_norm[ri], thresholds);
                        if class != SimilarityClass::Low {
                            taken[pos] = true;
                            accepted.push((li, ri, class));
                            break;
                        }
                    }
                }
                accepted
            });

        let mut stage_pairs: Vec<(usize, usize, SimilarityClass)> =
            matched_groups.into_iter().flatten().collect();
        stage_pairs.sort_by_key(|&(li, ri, _)| (left_norm[li].id, right_norm[ri].id));
        stage_counts[stage as usize] = stage_pairs.len();
        for (li, ri, class) in stage_pairs {
            left_matched[li] = true;
            right_matched[ri] = true;
            pairs.push(MatchedPair {
                left: left_norm[li].id,
                right: right_norm[ri].id,
                key_used: stage,
                similarity: class,
            });
        }
    }

    pairs.sort_by_key(|p| (p.left, p.right));
    let leftovers = |norm: &[Normalized], matched: &[bool], order: &[usize]| {
        order.iter().filter(|&&i| !matched[i]).map(|&i| norm[i].id).collect::<Vec<_>>()
    };
    let unkeyed = |norm: &[Normalized], order: &[usize]| {
        order.iter().filter(|&&i| norm[i].keys.is_empty()).map(|&i| norm[i].id).collect::<Vec<_>>()
    };

    MatchOutcome {
        unmatched_left: leftovers(&left_norm, &left_matched, &left_order),
        unmatched_right: leftovers(&right_norm, &right_matched, &right_order),
        unkeyed_left: unkeyed(&left_norm, &left_order),
        unkeyed_right: unkeyed(&right_norm, &right_order),
        pairs,
        stage_counts,
    }
}

/// Duplicate-detection summary, with percentages relative to the corpus
/// size as in the published appendix tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub total_records: usize,
    pub candidate_pairs: usize,
    pub identical_pairs: usize,
    pub large_pairs: usize,
    pub low_pairs: usize,
    pub removed_records: usize,
}

impl DuplicateReport {
    pub fn pct_of_docs(&self, count: usize) -> f64 {
        if self.total_records == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.total_records as f64
        }
    }
}

/// Result of duplicate detection on one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupOutcome {
    /// Input minus removed duplicates, original order preserved.
    pub kept: Vec<BibRecord>,
    /// Ids removed as non-representative duplicates, ascending.
    pub removed: Vec<RecordId>,
    /// Every candidate pair with its classification, sorted by id pair.
    /// Low pairs are listed but never removed.
    pub pairs: Vec<MatchedPair>,
    pub report: DuplicateReport,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let root = self.find(self.0[i]);
            self.0[i] = root;
        }
        self.0[i]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Detect and remove duplicates inside one corpus.
///
/// Candidate pairs are citing records that cite the same target and collide
/// on at least one match-key (each pair is attributed to the most specific
/// colliding key). Identical or large-similarity pairs are merged into
/// groups by connected components; each group keeps its most completely
/// described record (ties to the smallest id). Target records are never
/// candidates and never removed. A source-key collision alone is enough to
/// surface a candidate, which is what catches translated versions of the
/// same document (title words disjoint, same author, volume, and page);
/// those classify as low similarity and are reported without being removed.
pub fn dedup(records: &[BibRecord], thresholds: &Thresholds) -> DedupOutcome {
    let norm: Vec<Normalized> = par::map_slice(records, |r| Normalized::new(r, thresholds));
    let mut order: Vec<usize> = (0..norm.len())
        .filter(|&i| norm[i].kind == RecordKind::Citing && norm[i].cites_target.is_some())
        .collect();
    order.sort_by_key(|&i| norm[i].id);

    // candidate pairs keyed by index pair, first (most specific) key wins
    let mut candidates: BTreeMap<(usize, usize), MatchKeyKind> = BTreeMap::new();
    for stage in MatchKeyKind::ALL {
        let mut groups: BTreeMap<(RecordId, &str), Vec<usize>> = BTreeMap::new();
        for &i in &order {
            if let (Some(target), Some(key)) = (norm[i].cites_target, norm[i].key(stage)) {
                groups.entry((target, key)).or_default().push(i);
            }
        }
        for members in groups.into_values() {
            for (a_pos, &i) in members.iter().enumerate() {
                for &j in &members[a_pos + 1..] {
                    candidates.entry((i, j)).or_insert(stage);
                }
            }
        }
    }

    let candidate_list: Vec<((usize, usize), MatchKeyKind)> = candidates.into_iter().collect();
    let classes: Vec<SimilarityClass> = par::map_slice(&candidate_list, |&((i, j), _)| {
        classify_normalized(&norm[i], &norm[j], thresholds)
    });

    let mut uf = UnionFind::new(norm.len());
    let mut pairs = Vec::with_capacity(candidate_list.len());
    let mut identical = 0usize;
    let mut large = 0usize;
    for (&((i, j), key_used), &class) in candidate_list.iter().zip(&classes) {
        match class {
            SimilarityClass::Identical => identical += 1,
            SimilarityClass::Large => large += 1,
            SimilarityClass::Low => {}
        }
        if class != SimilarityClass::Low {
            uf.union(i, j);
        }
        pairs.push(MatchedPair {
            left: norm[i].id,
            right: norm[j].id,
            key_used,
            similarity: class,
        });
    }
    pairs.sort_by_key(|p| (p.left, p.right));

    // pick each component's representative: most complete, then smallest id
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &order {
        let root = uf.find(i);
        best.entry(root)
            .and_modify(|b| {
                let better = (norm[i].completeness, std::cmp::Reverse(norm[i].id))
                    > (norm[*b].completeness, std::cmp::Reverse(norm[*b].id));
                if better {
                    *b = i;
                }
            })
            .or_insert(i);
    }
    let mut removed: Vec<RecordId> = Vec::new();
    let mut removed_idx: BTreeSet<usize> = BTreeSet::new();
    for &i in &order {
        let root = uf.find(i);
        if best[&root] != i {
            removed.push(norm[i].id);
            removed_idx.insert(i);
        }
    }
    removed.sort();

    let kept: Vec<BibRecord> = records
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed_idx.contains(i))
        .map(|(_, r)| r.clone())
        .collect();

    let report = DuplicateReport {
        total_records: records.len(),
        candidate_pairs: candidate_list.len(),
        identical_pairs: identical,
        large_pairs: large,
        low_pairs: candidate_list.len() - identical - large,
        removed_records: removed.len(),
    };
    DedupOutcome { kept, removed, pairs, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Provenance;
    use proptest::prelude::*;

    fn rec(id: u32, title: &str, author: &str) -> BibRecord {
        let mut r = BibRecord::new(id, Provenance::GsSearch, RecordKind::Citing, title);
        r.cites_target = Some(RecordId(0));
        if !author.is_empty() {
            r.authors = vec![author.to_string()];
        }
        r
    }

    fn full(id: u32, year: i32) -> BibRecord {
        let mut r = rec(id, "Authoritative sources in a hyperlinked environment", "Kleinberg, J.M.");
        r.year = Some(year);
        r.volume = Some("46".into());
        r.start_page = Some("604".into());
        r.source_title = Some("Journal of the ACM".into());
        r
    }

    #[test]
    fn overlap_fractions_are_per_side() {
        let a: Vec<String> =
            ["alpha", "beta", "gamma", "delta"].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = ["alpha", "epsilon"].iter().map(|s| s.to_string()).collect();
        assert_eq!(title_overlap(&a, &b), (0.25, 0.5));
    }

    #[test]
    fn overlap_is_zero_for_empty_lists() {
        let a: Vec<String> = vec![];
        let b: Vec<String> = vec!["alpha".to_string()];
        assert_eq!(title_overlap(&a, &b), (0.0, 0.0));
        assert_eq!(title_overlap(&b, &a), (0.0, 0.0));
    }

    #[test]
    fn overlap_counts_distinct_tokens() {
        let a: Vec<String> = ["word", "word", "other"].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = ["word", "fresh"].iter().map(|s| s.to_string()).collect();
        // 1 shared of 2 distinct vs 1 of 2
        assert_eq!(title_overlap(&a, &b), (0.5, 0.5));
    }

    #[test]
    fn exact_copies_classify_identical() {
        let t = Thresholds::default();
        assert_eq!(classify_pair(&full(1, 1999), &full(2, 1999), &t), SimilarityClass::Identical);
    }

    #[test]
    fn journal_and_conference_versions_classify_large() {
        // same title and author, year one apart, different source and pages
        let journal = full(1, 1999);
        let mut proceedings = full(2, 1998);
        proceedings.source_title = Some("Proc ninth annual symposium on discrete algorithms".into());
        proceedings.volume = None;
        proceedings.start_page = Some("668".into());
        let t = Thresholds::default();
        assert_eq!(classify_pair(&journal, &proceedings, &t), SimilarityClass::Large);
    }

    #[test]
    fn identical_requires_equal_years_when_both_present() {
        let t = Thresholds::default();
        let verdict = classify_pair(&full(1, 1999), &full(2, 1998), &t);
        assert_eq!(verdict, SimilarityClass::Large);
    }

    #[test]
    fn missing_year_is_vacuous() {
        let mut a = full(1, 1999);
        a.year = None;
        assert_eq!(
            classify_pair(&a, &full(2, 1999), &Thresholds::default()),
            SimilarityClass::Identical
        );
    }

    #[test]
    fn year_gap_over_two_blocks_large() {
        let t = Thresholds::default();
        assert_eq!(classify_pair(&full(1, 1999), &full(2, 2002), &t), SimilarityClass::Low);
        assert_eq!(classify_pair(&full(1, 1999), &full(2, 2001), &t), SimilarityClass::Large);
    }

    #[test]
    fn low_overlap_blocks_large() {
        let a = rec(1, "citation analysis of web journals", "Doe, J.");
        let b = rec(2, "citation analysis of something else entirely different", "Doe, J.");
        // shared {citation, analysis} = 2 < 3 and fractions below 0.5
        assert_eq!(classify_pair(&a, &b, &Thresholds::default()), SimilarityClass::Low);
    }

    #[test]
    fn no_common_author_blocks_large() {
        let a = rec(1, "citation analysis of web journals today", "Doe, J.");
        let b = rec(2, "citation analysis of web journals today", "Poe, E.");
        assert_eq!(classify_pair(&a, &b, &Thresholds::default()), SimilarityClass::Low);
    }

    #[test]
    fn classification_is_symmetric_by_example() {
        let a = full(1, 1999);
        let mut b = full(2, 1998);
        b.title = "authoritative sources in a linked environment".into();
        let t = Thresholds::default();
        assert_eq!(classify_pair(&a, &b, &t), classify_pair(&b, &a, &t));
    }

    #[test]
    fn merge_prefers_the_full_key() {
        // agrees on FULL and SOURCE; must be attributed to FULL
        let left = vec![full(1, 1999)];
        let right = vec![full(7, 1999)];
        let out = match_merge(&left, &right, &Thresholds::default());
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].key_used, MatchKeyKind::Full);
        assert_eq!(out.pairs[0].similarity, SimilarityClass::Identical);
        assert_eq!(out.stage_count(MatchKeyKind::Full), 1);
        assert_eq!(out.stage_count(MatchKeyKind::Source), 0);
    }

    #[test]
    fn merge_falls_through_to_source_key() {
        // translated title: no token agreement, but author/volume/page line up
        let mut left = full(1, 1999);
        left.title = "fuentes autorizadas en un entorno hiperenlazado".into();
        left.source_title = None;
        let right = full(9, 1999);
        let out = match_merge(&[left], &[right], &Thresholds::default());
        // key collides on SOURCE but similarity is LOW: no match
        assert!(out.pairs.is_empty());
        assert_eq!(out.unmatched_left, vec![RecordId(1)]);
    }

    #[test]
    fn merge_skips_low_collisions_but_matches_later_candidates() {
        // two rights share the left's TITLE key; the smaller id has a
        // conflicting author (LOW, skipped), the larger has none (vacuous)
        let left = rec(1, "understanding citation networks in practice", "Doe, J.");
        let bad = rec(2, "understanding citation networks in practice", "Poe, E.");
        let mut good = rec(5, "understanding citation networks in practice", "");
        good.authors = vec![];
        let out = match_merge(&[left], &[bad, good], &Thresholds::default());
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].right, RecordId(5));
        assert_eq!(out.pairs[0].key_used, MatchKeyKind::Title);
        assert_eq!(out.unmatched_right, vec![RecordId(2)]);
    }

    #[test]
    fn merge_breaks_ties_by_smallest_partner_id() {
        let left = vec![full(3, 1999), full(1, 1999)];
        let right = vec![full(20, 1999), full(10, 1999)];
        let out = match_merge(&left, &right, &Thresholds::default());
        assert_eq!(
            out.pairs,
            vec![
                MatchedPair {
                    left: RecordId(1),
                    right: RecordId(10),
                    key_used: MatchKeyKind::Full,
                    similarity: SimilarityClass::Identical,
                },
                MatchedPair {
                    left: RecordId(3),
                    right: RecordId(20),
                    key_used: MatchKeyKind::Full,
                    similarity: SimilarityClass::Identical,
                },
            ]
        );
    }

    #[test]
    fn merge_reports_unkeyed_records() {
        let empty = rec(4, "of it all", "");
        let out = match_merge(&[empty], &[full(1, 1999)], &Thresholds::default());
        assert_eq!(out.unkeyed_left, vec![RecordId(4)]);
        assert_eq!(out.unmatched_left, vec![RecordId(4)]);
        assert!(out.unkeyed_right.is_empty());
    }

    #[test]
    fn merge_never_pairs_a_record_with_itself() {
        let set = vec![full(1, 1999), full(2, 1999)];
        let out = match_merge(&set, &set, &Thresholds::default());
        assert!(out.pairs.iter().all(|p| p.left != p.right));
        // the two copies still cross-match each other
        assert_eq!(out.pairs.len(), 2);
    }

    #[test]
    fn merge_year_never_blocks_keys() {
        // years five apart: FULL key still collides, classification LOW,
        // nothing matches (year enters classification, not keys)
        let out = match_merge(&[full(1, 1999)], &[full(2, 2004)], &Thresholds::default());
        assert!(out.pairs.is_empty());
    }

    fn target(id: u32) -> BibRecord {
        let mut r = full(id, 1999);
        r.kind = RecordKind::Target;
        r.cites_target = None;
        r
    }

    #[test]
    fn dedup_removes_identical_and_large_pairs() {
        let original = full(1, 1999);
        let copy = full(2, 1999);
        let mut near = full(3, 1998);
        near.web_domain = Some("acm.org".into()); // more complete than 1 and 2
        let unrelated = rec(9, "completely different words arranged here", "Smith, A.");
        let out = dedup(&[original, copy, near, unrelated.clone()], &Thresholds::default());
        // all three form one component; id 3 is most complete and wins
        assert_eq!(out.removed, vec![RecordId(1), RecordId(2)]);
        assert_eq!(out.kept.iter().map(|r| r.id.0).collect::<Vec<_>>(), vec![3, 9]);
        assert_eq!(out.report.candidate_pairs, 3);
        assert_eq!(out.report.identical_pairs, 1);
        assert_eq!(out.report.large_pairs, 2);
    }

    #[test]
    fn dedup_ties_break_to_smallest_id() {
        let out = dedup(&[full(5, 1999), full(2, 1999)], &Thresholds::default());
        assert_eq!(out.removed, vec![RecordId(5)]);
    }

    #[test]
    fn dedup_requires_same_cited_target() {
        let a = full(1, 1999);
        let mut b = full(2, 1999);
        b.cites_target = Some(RecordId(77));
        let mut corpus = vec![a, b];
        let mut t0 = target(77);
        t0.title = "some target".into();
        corpus.push(t0);
        let out = dedup(&corpus, &Thresholds::default());
        assert!(out.removed.is_empty());
        assert!(out.pairs.is_empty());
    }

    #[test]
    fn dedup_never_touches_targets() {
        // two byte-identical targets (same metadata, different id)
        let corpus = vec![target(1), target(2), full(3, 1999), full(4, 1999)];
        let out = dedup(&corpus, &Thresholds::default());
        assert_eq!(out.removed, vec![RecordId(4)]);
        assert!(out.kept.iter().any(|r| r.id == RecordId(1)));
        assert!(out.kept.iter().any(|r| r.id == RecordId(2)));
    }

    #[test]
    fn dedup_surfaces_translations_without_removing_them() {
        let english = full(1, 1999);
        let mut translated = full(2, 1999);
        translated.title = "fuentes autorizadas en un entorno hiperenlazado".into();
        translated.source_title = None;
        let out = dedup(&[english, translated], &Thresholds::default());
        assert!(out.removed.is_empty());
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].key_used, MatchKeyKind::Source);
        assert_eq!(out.pairs[0].similarity, SimilarityClass::Low);
    }

    #[test]
    fn dedup_attributes_pairs_to_the_most_specific_key() {
        let out = dedup(&[full(1, 1999), full(2, 1999)], &Thresholds::default());
        assert_eq!(out.pairs[0].key_used, MatchKeyKind::Full);
    }

    fn classify_input() -> impl Strategy<Value = (BibRecord, BibRecord)> {
        let record = (
            proptest::collection::vec("[a-z]{1,8}", 0..8),
            proptest::option::of(1990i32..2020),
            proptest::sample::select(vec!["Doe, J.", "Poe, E.", "Bar-Ilan, J."]),
            proptest::option::of("[0-9]{1,3}"),
        )
            .prop_map(|(words, year, author, volume)| {
                let mut r = rec(1, &words.join(" "), author);
                r.year = year;
                r.volume = volume;
                r
            });
        (record.clone(), record)
    }

    proptest! {
        #[test]
        fn classify_is_symmetric((a, b) in classify_input()) {
            let t = Thresholds::default();
            prop_assert_eq!(classify_pair(&a, &b, &t), classify_pair(&b, &a, &t));
        }

        #[test]
        fn identical_implies_large_conditions_hold(
            words in proptest::collection::vec("[a-z]{4,8}", 3..8),
            year in proptest::option::of(1990i32..2020),
        ) {
            // two copies with >= 3 distinct qualifying words and an author on
            // both sides must satisfy every large-similarity conjunct
            let distinct: BTreeSet<&String> = words.iter().collect();
            prop_assume!(distinct.len() >= 3);
            let mut a = rec(1, &words.join(" "), "Doe, J.");
            a.year = year;
            let mut b = a.clone();
            b.id = RecordId(2);
            let t = Thresholds::default();
            prop_assert_eq!(classify_pair(&a, &b, &t), SimilarityClass::Identical);
            let na = Normalized::new(&a, &t);
            let nb = Normalized::new(&b, &t);
            let (fa, fb) = overlap_of_sets(&na.overlap_tokens, &nb.overlap_tokens);
            prop_assert!(fa >= t.title_overlap_fraction && fb >= t.title_overlap_fraction);
            prop_assert!(!na.author_set.is_disjoint(&nb.author_set));
        }

        #[test]
        fn merge_is_permutation_invariant(seed in 0u64..500) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut left: Vec<BibRecord> = (0..20).map(|i| {
                let mut r = full(i, 1999);
                r.title = format!("shared topic words number {} study", i % 7);
                r
            }).collect();
            let mut right: Vec<BibRecord> = (0..20).map(|i| {
                let mut r = full(100 + i, 1999);
                r.title = format!("shared topic words number {} study", i % 5);
                r
            }).collect();
            let base = match_merge(&left, &right, &Thresholds::default());
            left.shuffle(&mut rng);
            right.shuffle(&mut rng);
            let shuffled = match_merge(&left, &right, &Thresholds::default());
            prop_assert_eq!(base, shuffled);
        }
    }
}

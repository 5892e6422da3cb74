//! Match-key construction.
//!
//! Four keys per record, from most to least specific: FULL (author prefix
//! plus the first ten qualifying title words), TITLE (the words alone),
//! SHORT (author prefix plus the first word), and SOURCE (author prefix plus
//! volume and start page). Publication year is deliberately part of none of
//! them; online and issue years disagree too often between databases.

use crate::model::{BibRecord, Thresholds};
use crate::normalize::{normalize_author, tokenize_title};
use serde::{Deserialize, Serialize};

/// Character joining key components. The tokenizer treats it as a
/// separator, so no component can ever contain it.
pub const KEY_JOIN: char = '|';

/// The four match-keys of one record. A key is absent when a field it
/// needs is absent (no parseable author, no qualifying title word, no
/// volume or start page).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct KeyBundle {
    pub full_key: Option<String>,
    pub title_key: Option<String>,
    pub short_key: Option<String>,
    pub source_key: Option<String>,
}

impl KeyBundle {
    /// True when the record carries no key at all and can never match.
    pub fn is_empty(&self) -> bool {
        self.full_key.is_none()
            && self.title_key.is_none()
            && self.short_key.is_none()
            && self.source_key.is_none()
    }
}

/// First-author prefix: the normalized last name truncated to
/// `author_prefix_len` characters. None when there is no parseable author.
pub fn author_prefix(record: &BibRecord, thresholds: &Thresholds) -> Option<String> {
    let first = record.authors.first()?;
    let name = normalize_author(first).ok()?;
    Some(name.last.chars().take(thresholds.author_prefix_len).collect())
}

/// Normalize a volume or start-page component: trimmed, folded, lowercased,
/// leading zeros stripped from a numeric prefix, and the join character
/// removed so the composed key stays unambiguous.
pub fn normalize_part(raw: &str) -> String {
    let folded = crate::normalize::fold_diacritics(raw.trim()).to_lowercase();
    let cleaned: String = folded.chars().filter(|c| *c != KEY_JOIN).collect();
    let digits = cleaned.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 1 {
        let stripped = cleaned[..digits].trim_start_matches('0');
        let head = if stripped.is_empty() { "0" } else { stripped };
        format!("{head}{}", &cleaned[digits..])
    } else {
        cleaned
    }
}

/// Build all four match-keys for a record.
pub fn key_bundle(record: &BibRecord, thresholds: &Thresholds) -> KeyBundle {
    let prefix = author_prefix(record, thresholds);
    let tokens = tokenize_title(&record.title, thresholds.min_title_word_len);

    let title_key = if tokens.is_empty() { None } else { Some(tokens.join("|")) };

    let full_key = match (&prefix, tokens.is_empty()) {
        (Some(p), false) => {
            let head: Vec<&str> = tokens
                .iter()
                .take(thresholds.full_key_word_count)
                .map(String::as_str)
                .collect();
            Some(format!("{p}|{}", head.join("|")))
        }
        _ => None,
    };

    let short_key = match (&prefix, tokens.first()) {
        (Some(p), Some(first)) => Some(format!("{p}|{first}")),
        _ => None,
    };

    let source_key = match (&prefix, &record.volume, &record.start_page) {
        (Some(p), Some(v), Some(sp)) => {
            let v = normalize_part(v);
            let sp = normalize_part(sp);
            if v.is_empty() || sp.is_empty() {
                None
            } else {
                Some(format!("{p}|{v}|{sp}"))
            }
        }
        _ => None,
    };

    KeyBundle { full_key, title_key, short_key, source_key }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Provenance, RecordKind};
    use proptest::prelude::*;

    fn kleinberg() -> BibRecord {
        let mut r = BibRecord::new(
            1,
            Provenance::GsSearch,
            RecordKind::Target,
            "Authoritative sources in a hyperlinked environment",
        );
        r.authors = vec!["Kleinberg, J.M.".into()];
        r.year = Some(1999);
        r.volume = Some("46".into());
        r.start_page = Some("604".into());
        r
    }

    #[test]
    fn full_key_takes_prefix_and_leading_words() {
        let keys = key_bundle(&kleinberg(), &Thresholds::default());
        assert_eq!(
            keys.full_key.as_deref(),
            Some("kleinb|authoritative|sources|hyperlinked|environment")
        );
    }

    #[test]
    fn full_key_caps_word_count() {
        let mut r = kleinberg();
        r.title = "alpha1 alpha2 alpha3 alpha4 alpha5 alpha6 alpha7 alpha8 alpha9 alpha10 alpha11 alpha12".into();
        let keys = key_bundle(&r, &Thresholds::default());
        let full = keys.full_key.unwrap();
        assert_eq!(full.split('|').count(), 11); // prefix + 10 words
        assert!(full.ends_with("alpha10"));
        assert_eq!(keys.title_key.unwrap().split('|').count(), 12);
    }

    #[test]
    fn title_key_survives_missing_author() {
        let mut r = kleinberg();
        r.authors.clear();
        let keys = key_bundle(&r, &Thresholds::default());
        assert_eq!(keys.full_key, None);
        assert_eq!(keys.short_key, None);
        assert_eq!(keys.source_key, None);
        assert_eq!(
            keys.title_key.as_deref(),
            Some("authoritative|sources|hyperlinked|environment")
        );
    }

    #[test]
    fn short_key_is_prefix_plus_first_qualifying_word() {
        let keys = key_bundle(&kleinberg(), &Thresholds::default());
        assert_eq!(keys.short_key.as_deref(), Some("kleinb|authoritative"));
    }

    #[test]
    fn source_key_uses_volume_and_start_page() {
        let keys = key_bundle(&kleinberg(), &Thresholds::default());
        assert_eq!(keys.source_key.as_deref(), Some("kleinb|46|604"));
    }

    #[test]
    fn source_key_strips_leading_zeros_and_trims() {
        let mut r = kleinberg();
        r.volume = Some(" 046 ".into());
        r.start_page = Some("0604".into());
        let keys = key_bundle(&r, &Thresholds::default());
        assert_eq!(keys.source_key.as_deref(), Some("kleinb|46|604"));
    }

    #[test]
    fn source_key_absent_without_volume_or_page() {
        let mut r = kleinberg();
        r.volume = None;
        assert_eq!(key_bundle(&r, &Thresholds::default()).source_key, None);
        let mut r = kleinberg();
        r.start_page = Some("   ".into());
        assert_eq!(key_bundle(&r, &Thresholds::default()).source_key, None);
    }

    #[test]
    fn hyphenated_author_prefix_joins_name_parts() {
        let mut r = kleinberg();
        r.authors = vec!["Bar-Ilan, J.".into()];
        let keys = key_bundle(&r, &Thresholds::default());
        assert!(keys.full_key.unwrap().starts_with("barila|"));
    }

    #[test]
    fn year_is_in_no_key() {
        let base = key_bundle(&kleinberg(), &Thresholds::default());
        for year in [None, Some(1998), Some(1999), Some(2025)] {
            let mut r = kleinberg();
            r.year = year;
            assert_eq!(key_bundle(&r, &Thresholds::default()), base);
        }
    }

    #[test]
    fn all_short_words_means_no_keys_needing_tokens() {
        let mut r = kleinberg();
        r.title = "on top of it all".into();
        let keys = key_bundle(&r, &Thresholds::default());
        assert_eq!(keys.full_key, None);
        assert_eq!(keys.title_key, None);
        assert_eq!(keys.short_key, None);
        // source key needs no title
        assert_eq!(keys.source_key.as_deref(), Some("kleinb|46|604"));
    }

    #[test]
    fn empty_bundle_detected() {
        let r = BibRecord::new(9, Provenance::Scopus, RecordKind::Citing, "of it");
        assert!(key_bundle(&r, &Thresholds::default()).is_empty());
        assert!(!key_bundle(&kleinberg(), &Thresholds::default()).is_empty());
    }

    #[test]
    fn normalize_part_edge_cases() {
        assert_eq!(normalize_part("0"), "0");
        assert_eq!(normalize_part("000"), "0");
        assert_eq!(normalize_part("046A"), "46a");
        assert_eq!(normalize_part("iv"), "iv");
        assert_eq!(normalize_part("6|04"), "604"); // join char cannot leak in
    }

    fn record_strategy() -> impl Strategy<Value = BibRecord> {
        (
            "[A-Za-zÀ-ÿ' -]{0,20}",
            proptest::collection::vec("[a-zA-Zéü]{0,9}", 0..12),
            proptest::option::of(0i32..3000),
            proptest::option::of("[0-9]{0,4}"),
            proptest::option::of("[0-9]{0,4}"),
        )
            .prop_map(|(author, words, year, volume, start_page)| {
                let mut r = BibRecord::new(0, Provenance::GsSearch, RecordKind::Target, &words.join(" "));
                if !author.is_empty() {
                    r.authors.push(author);
                }
                r.year = year;
                r.volume = volume;
                r.start_page = start_page;
                r
            })
    }

    proptest! {
        #[test]
        fn keys_never_depend_on_year(mut record in record_strategy(), year in proptest::option::of(1500i32..2100)) {
            let thresholds = Thresholds::default();
            let before = key_bundle(&record, &thresholds);
            record.year = year;
            prop_assert_eq!(key_bundle(&record, &thresholds), before);
        }

        #[test]
        fn full_key_implies_title_and_short(record in record_strategy()) {
            let keys = key_bundle(&record, &Thresholds::default());
            if keys.full_key.is_some() {
                prop_assert!(keys.title_key.is_some());
                prop_assert!(keys.short_key.is_some());
            }
        }

        #[test]
        fn key_components_never_contain_the_join_char(record in record_strategy()) {
            let thresholds = Thresholds::default();
            let keys = key_bundle(&record, &thresholds);
            // splitting a key back apart must yield exactly its components:
            // prefix + up to N words for FULL, 2 parts for SHORT, 3 for SOURCE
            if let Some(k) = &keys.short_key {
                prop_assert_eq!(k.split(KEY_JOIN).count(), 2);
            }
            if let Some(k) = &keys.source_key {
                prop_assert_eq!(k.split(KEY_JOIN).count(), 3);
            }
            if let Some(k) = &keys.full_key {
                let words = keys.title_key.as_ref().unwrap().split(KEY_JOIN).count();
                prop_assert_eq!(
                    k.split(KEY_JOIN).count(),
                    1 + words.min(thresholds.full_key_word_count)
                );
            }
        }

        #[test]
        fn identical_records_get_identical_bundles(record in record_strategy()) {
            let thresholds = Thresholds::default();
            prop_assert_eq!(key_bundle(&record, &thresholds), key_bundle(&record, &thresholds));
        }
    }
}

//! Text normalization: diacritic folding, title tokenization, author name
//! standardization, and the corpus cleaning pass that drops records too
//! malformed to match on.

use crate::model::{BibRecord, RecordId};
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Characters that end a title token. Includes the key join character `|`
/// so no token can ever collide with a composed match-key.
pub const DEFAULT_SEPARATORS: &[char] = &[
    ',', '.', ':', ';', '"', '\'', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '(', ')', '[',
    ']', '{', '}', '-', '\u{2010}', '\u{2013}', '\u{2014}', '/', '?', '!', '|',
];

fn is_separator(c: char, extra: &[char]) -> bool {
    c.is_whitespace() || extra.contains(&c)
}

/// Strip diacritics by canonical decomposition: each character is NFD
/// decomposed and the combining marks are dropped ("à" -> "a", "ñ" -> "n").
/// Idempotent; characters without a canonical decomposition pass through.
pub fn fold_diacritics(text: &str) -> String {
    text.nfd().filter(|c| !is_combining_mark(*c)).collect()
}

/// Tokenize a title with the default separator set. Tokens are folded,
/// lowercased, and kept only when at least `min_len` characters long.
/// Order is preserved and duplicates are retained.
pub fn tokenize_title(title: &str, min_len: usize) -> Vec<String> {
    tokenize_title_with(title, min_len, DEFAULT_SEPARATORS)
}

/// Tokenizer entry point with a caller-supplied separator set (whitespace
/// always separates). Folding runs before splitting: some characters only
/// decompose into a separator (Greek question mark into a semicolon, for
/// one), and those must still end a token.
pub fn tokenize_title_with(title: &str, min_len: usize, separators: &[char]) -> Vec<String> {
    fold_diacritics(title)
        .to_lowercase()
        .split(|c| is_separator(c, separators))
        .map(str::to_string)
        .filter(|t| t.chars().count() >= min_len && !t.is_empty())
        .collect()
}

/// A standardized author name: folded lowercase last name plus the folded
/// first letters of the remaining name parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuthorName {
    pub last: String,
    pub initials: Option<String>,
}

/// The input had no letters to build a name from.
#[derive(Debug, thiserror::Error, PartialEq)]
#[error("author string {0:?} contains no alphabetic characters")]
pub struct EmptyAuthor(pub String);

/// Standardize one raw author string.
///
/// With a comma the segment before it holds the surname ("Kleinberg, J. M.");
/// without one the final word does ("J Kleinberg"). Multi-word surname
/// segments keep only their final word; hyphens and apostrophes inside the
/// surname are removed rather than split ("Bar-Ilan" -> "barilan"). Every
/// other word contributes the first letter of each of its alphabetic runs,
/// so "J.M." and "J. M." both yield initials "jm".
pub fn normalize_author(raw: &str) -> Result<AuthorName, EmptyAuthor> {
    let folded = fold_diacritics(raw).to_lowercase();
    let (surname_segment, rest) = match folded.split_once(',') {
        Some((before, after)) => (before, after),
        None => {
            // take the final alphabetic word as the surname
            let last_word_start = folded
                .split_whitespace()
                .filter(|w| w.chars().any(|c| c.is_alphabetic()))
                .next_back()
                .map(|w| w.as_ptr() as usize - folded.as_ptr() as usize)
                .ok_or_else(|| EmptyAuthor(raw.to_string()))?;
            (&folded[last_word_start..], &folded[..last_word_start])
        }
    };

    let last: String = surname_segment
        .split_whitespace()
        .filter(|w| w.chars().any(|c| c.is_alphabetic()))
        .next_back()
        .ok_or_else(|| EmptyAuthor(raw.to_string()))?
        .chars()
        .filter(|c| c.is_alphabetic())
        .collect();
    if last.is_empty() {
        return Err(EmptyAuthor(raw.to_string()));
    }

    let mut initials = String::new();
    for word in rest.split_whitespace() {
        let mut prev_alpha = false;
        for c in word.chars() {
            let alpha = c.is_alphabetic();
            if alpha && !prev_alpha {
                initials.push(c);
            }
            prev_alpha = alpha;
        }
    }

    Ok(AuthorName { last, initials: if initials.is_empty() { None } else { Some(initials) } })
}

/// Normalize a source title for thesaurus lookup: folded, lowercased,
/// punctuation replaced by spaces, whitespace collapsed.
pub fn normalize_source_title(raw: &str) -> String {
    let folded = fold_diacritics(raw).to_lowercase();
    let mut out = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Why a record was dropped during cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DeletionRule {
    /// More than half of the title's alphabetic characters are non-Latin.
    NonLatinTitle,
    /// No title word longer than three characters and no source title.
    ShortWordsNoSource,
}

impl DeletionRule {
    pub fn token(self) -> &'static str {
        match self {
            DeletionRule::NonLatinTitle => "NON_LATIN_TITLE",
            DeletionRule::ShortWordsNoSource => "SHORT_WORDS_NO_SOURCE",
        }
    }
}

/// One cleaning deletion: which record, which rule, and the field value
/// that triggered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deletion {
    pub record: RecordId,
    pub rule: DeletionRule,
    pub offending_value: String,
}

/// Cleaning outcome for one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionReport {
    pub input_records: usize,
    pub deleted: Vec<Deletion>,
}

impl DeletionReport {
    pub fn kept_records(&self) -> usize {
        self.input_records - self.deleted.len()
    }

    /// Fraction of the input that was deleted, for the descriptive summary.
    pub fn deleted_fraction(&self) -> f64 {
        if self.input_records == 0 {
            0.0
        } else {
            self.deleted.len() as f64 / self.input_records as f64
        }
    }
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (c.is_alphabetic()
            && matches!(c as u32,
                0x00C0..=0x024F   // Latin-1 supplement through Latin Extended-B
                | 0x1E00..=0x1EFF // Latin Extended Additional
                | 0x2C60..=0x2C7F // Latin Extended-C
                | 0xA720..=0xA7FF // Latin Extended-D
            ))
}

fn majority_non_latin(title: &str) -> bool {
    let mut latin = 0usize;
    let mut other = 0usize;
    for c in title.chars() {
        if c.is_alphabetic() {
            if is_latin_letter(c) {
                latin += 1;
            } else {
                other += 1;
            }
        }
    }
    other > latin
}

fn no_long_word(title: &str) -> bool {
    // every word, not just qualifying tokens, must be at most 3 chars
    tokenize_title(title, 1).iter().all(|t| t.chars().count() <= 3)
}

/// Drop records that cannot participate in matching: titles in a majority
/// non-Latin script, and titles made of nothing but very short words when
/// no source title is available either. Citation stubs are subject to the
/// same two rules but are never dropped for being stubs. Every deletion is
/// reported; `kept.len() + deleted.len() == records.len()` always holds.
pub fn clean_corpus(records: &[BibRecord]) -> (Vec<BibRecord>, DeletionReport) {
    let verdicts = crate::par::map_slice(records, |r| {
        if majority_non_latin(&r.title) {
            Some((DeletionRule::NonLatinTitle, r.title.clone()))
        } else if no_long_word(&r.title) && r.source_title.is_none() {
            Some((DeletionRule::ShortWordsNoSource, r.title.clone()))
        } else {
            None
        }
    });

    let mut kept = Vec::with_capacity(records.len());
    let mut deleted = Vec::new();
    for (r, verdict) in records.iter().zip(verdicts) {
        match verdict {
            Some((rule, value)) => {
                deleted.push(Deletion { record: r.id, rule, offending_value: value })
            }
            None => kept.push(r.clone()),
        }
    }
    (kept, DeletionReport { input_records: records.len(), deleted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Provenance, RecordKind};
    use proptest::prelude::*;

    #[test]
    fn folds_accented_latin() {
        assert_eq!(fold_diacritics("Müller"), "Muller");
        assert_eq!(fold_diacritics("à á ñ"), "a a n");
        assert_eq!(fold_diacritics("déjà-vu"), "deja-vu");
    }

    #[test]
    fn fold_preserves_character_count_for_latin() {
        let s = "Écologie générale";
        assert_eq!(fold_diacritics(s).chars().count(), s.chars().count());
    }

    #[test]
    fn fold_passes_non_latin_through() {
        assert_eq!(fold_diacritics("引文分析"), "引文分析");
    }

    #[test]
    fn tokenizes_with_length_floor() {
        assert_eq!(
            tokenize_title("Self-citation in the web: a brief study", 4),
            vec!["self", "citation", "brief", "study"]
        );
    }

    #[test]
    fn tokenizer_keeps_order_and_duplicates() {
        assert_eq!(
            tokenize_title("tests upon tests upon tests", 4),
            vec!["tests", "upon", "tests", "upon", "tests"]
        );
    }

    #[test]
    fn tokenizer_handles_quotes_brackets_and_slashes() {
        assert_eq!(
            tokenize_title("\"Quoted\" titles (with [brackets] and/or slashes)!", 4),
            vec!["quoted", "titles", "with", "brackets", "slashes"]
        );
    }

    #[test]
    fn tokenizer_min_len_counts_characters_after_folding() {
        // é folds to e; 4 chars either way
        assert_eq!(tokenize_title("Éole über alles", 4), vec!["eole", "uber", "alles"]);
    }

    #[test]
    fn separator_set_is_configurable() {
        // underscore is not a separator by default
        assert_eq!(tokenize_title("alpha_beta gamma", 4), vec!["alpha_beta", "gamma"]);
        assert_eq!(
            tokenize_title_with("alpha_beta gamma", 4, &['_']),
            vec!["alpha", "beta", "gamma"]
        );
    }

    #[test]
    fn author_comma_form() {
        assert_eq!(
            normalize_author("Kleinberg, J. M.").unwrap(),
            AuthorName { last: "kleinberg".into(), initials: Some("jm".into()) }
        );
    }

    #[test]
    fn author_plain_form_takes_final_token() {
        assert_eq!(
            normalize_author("J Kleinberg").unwrap(),
            AuthorName { last: "kleinberg".into(), initials: Some("j".into()) }
        );
    }

    #[test]
    fn author_hyphenated_surname_joined() {
        assert_eq!(normalize_author("Bar-Ilan, J.").unwrap().last, "barilan");
        assert_eq!(normalize_author("O'Neill, T.").unwrap().last, "oneill");
    }

    #[test]
    fn author_multi_word_surname_keeps_final_word() {
        let name = normalize_author("van der Berg, J.").unwrap();
        assert_eq!(name.last, "berg");
        assert_eq!(name.initials, Some("j".into()));
    }

    #[test]
    fn author_initials_from_packed_form() {
        assert_eq!(normalize_author("Kleinberg, J.M.").unwrap().initials, Some("jm".into()));
        assert_eq!(normalize_author("Mary-Jane Smith").unwrap().initials, Some("mj".into()));
    }

    #[test]
    fn author_folds_diacritics() {
        assert_eq!(normalize_author("Gómez, À.").unwrap().last, "gomez");
    }

    #[test]
    fn author_without_letters_is_an_error() {
        assert_eq!(normalize_author("12 34").unwrap_err(), EmptyAuthor("12 34".into()));
        assert!(normalize_author("").is_err());
        assert!(normalize_author(" , ").is_err());
    }

    #[test]
    fn source_titles_normalize_for_lookup() {
        assert_eq!(
            normalize_source_title("J. of the Am. Soc. for Information Science & Technology"),
            "j of the am soc for information science technology"
        );
        assert_eq!(normalize_source_title("  Scientometrics  "), "scientometrics");
    }

    fn rec(id: u32, title: &str, source: Option<&str>) -> BibRecord {
        let mut r = BibRecord::new(id, Provenance::GsSearch, RecordKind::Citing, title);
        r.cites_target = Some(RecordId(0));
        r.source_title = source.map(str::to_string);
        r
    }

    #[test]
    fn cleaning_drops_majority_non_latin_titles() {
        let keep = rec(1, "web citation analysis of the humanities", None);
        let drop = rec(2, "引文分析的网络研究", None);
        let mixed_keep = rec(3, "webs 分析", None); // 4 latin vs 2 non-latin
        let (kept, report) = clean_corpus(&[keep, drop, mixed_keep]);
        assert_eq!(kept.iter().map(|r| r.id.0).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(report.deleted.len(), 1);
        assert_eq!(report.deleted[0].rule, DeletionRule::NonLatinTitle);
        assert_eq!(report.deleted[0].record, RecordId(2));
    }

    #[test]
    fn cleaning_drops_short_word_titles_only_without_source() {
        let drop = rec(1, "A b c", None);
        let kept_by_source = rec(2, "A b c", Some("Scientometrics"));
        let kept_by_word = rec(3, "tiny word gaps", None);
        let (kept, report) = clean_corpus(&[drop, kept_by_source, kept_by_word]);
        assert_eq!(kept.iter().map(|r| r.id.0).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(report.deleted[0].rule, DeletionRule::ShortWordsNoSource);
        assert_eq!(report.deleted[0].offending_value, "A b c");
    }

    #[test]
    fn cleaning_retains_citation_stubs() {
        let mut stub = rec(1, "an ordinary stub title", None);
        stub.is_citation_stub = true;
        let (kept, report) = clean_corpus(&[stub]);
        assert_eq!(kept.len(), 1);
        assert!(report.deleted.is_empty());
    }

    #[test]
    fn cleaning_is_exhaustive() {
        let records: Vec<BibRecord> = (0..40)
            .map(|i| {
                if i % 7 == 0 {
                    rec(i, "ab cd", None)
                } else {
                    rec(i, "perfectly reasonable title words", None)
                }
            })
            .collect();
        let (kept, report) = clean_corpus(&records);
        assert_eq!(kept.len() + report.deleted.len(), records.len());
        assert_eq!(report.kept_records(), kept.len());
        assert!((report.deleted_fraction() - 6.0 / 40.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn fold_is_idempotent(s in "\\PC*") {
            let once = fold_diacritics(&s);
            prop_assert_eq!(fold_diacritics(&once), once);
        }

        #[test]
        fn tokens_respect_floor_and_separators(s in "\\PC*", min_len in 1usize..6) {
            for t in tokenize_title(&s, min_len) {
                prop_assert!(t.chars().count() >= min_len);
                prop_assert!(!t.chars().any(|c| is_separator(c, DEFAULT_SEPARATORS)),
                    "token {:?} still holds a separator", t);
            }
        }

        #[test]
        fn cleaning_partitions_input(titles in proptest::collection::vec("[a-z 引文]{0,12}", 0..30)) {
            let records: Vec<BibRecord> =
                titles.iter().enumerate().map(|(i, t)| rec(i as u32, t, None)).collect();
            let (kept, report) = clean_corpus(&records);
            prop_assert_eq!(kept.len() + report.deleted.len(), records.len());
        }
    }
}

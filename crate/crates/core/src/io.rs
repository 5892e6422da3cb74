//! Corpus file ingestion and emission.
//!
//! Two canonical formats carry [`BibRecord`] corpora: JSONL (one record
//! object per line, lossless) and a flat CSV schema where the author list
//! is stored as a JSON array inside its cell. CSV headers may also use the
//! documented aliases in [`COLUMN_ALIASES`], which covers simplified
//! database exports; unknown headers are rejected up front, while bad rows
//! are reported with line numbers and never abort the rest of the file.

use crate::model::{BibRecord, Provenance, RecordId, RecordKind};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Canonical CSV column order. Emission always writes all of them.
pub const CSV_COLUMNS: [&str; 15] = [
    "id",
    "provenance",
    "kind",
    "cites_target",
    "title",
    "authors",
    "source_title",
    "publisher",
    "year",
    "volume",
    "start_page",
    "web_domain",
    "citation_count",
    "entry_age_days",
    "is_citation_stub",
];

/// Accepted header spellings per canonical column, the rename table for
/// simplified exports. Matching is case-insensitive and treats spaces and
/// dashes as underscores.
pub const COLUMN_ALIASES: [(&str, &[&str]); 15] = [
    ("id", &["result_id", "eid"]),
    ("provenance", &["database"]),
    ("kind", &["record_type"]),
    ("cites_target", &["cited_id", "cites"]),
    ("title", &["document_title"]),
    ("authors", &["author", "author_names"]),
    ("source_title", &["publication", "source", "journal"]),
    ("publisher", &[]),
    ("year", &["publication_year", "pub_year"]),
    ("volume", &["vol"]),
    ("start_page", &["page_start", "first_page"]),
    ("web_domain", &["domain", "url_domain"]),
    ("citation_count", &["cited_by", "times_cited"]),
    ("entry_age_days", &["age_days"]),
    ("is_citation_stub", &["citation_only"]),
];

/// Corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guess from the file extension; falls back to content sniffing
    /// (JSONL lines start with an object brace).
    pub fn detect(path: &Path, content: &str) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("ndjson") => {
                Format::Jsonl
            }
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => {
                if content.trim_start().starts_with('{') {
                    Format::Jsonl
                } else {
                    Format::Csv
                }
            }
        }
    }
}

/// File-level ingestion failures. Anything row-scoped is reported in the
/// [`IngestOutcome`] instead.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header does not fit any documented schema (first offending column: {column})")]
    SchemaMismatch { path: PathBuf, column: String },
}

/// One malformed row, identified by its 1-based line number in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

/// Result of ingesting one corpus file: the rows that parsed plus the rows
/// that did not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestOutcome {
    pub records: Vec<BibRecord>,
    pub row_errors: Vec<RowError>,
}

/// Read one corpus file, stamping `provenance`. Rows carrying a different
/// provenance tag are row errors; rows without one inherit the stamp.
pub fn ingest(
    path: &Path,
    format: Option<Format>,
    provenance: Provenance,
) -> Result<IngestOutcome, IngestError> {
    let content = std::fs::read_to_string(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    match format.unwrap_or_else(|| Format::detect(path, &content)) {
        Format::Jsonl => Ok(parse_jsonl(&content, provenance)),
        Format::Csv => parse_csv(&content, provenance, path),
    }
}

/// Parse JSONL text. Never fails at file level: every bad line is a row
/// error.
pub fn parse_jsonl(text: &str, provenance: Provenance) -> IngestOutcome {
    let mut outcome = IngestOutcome::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<BibRecord>(line) {
            Ok(record) if record.provenance == provenance => outcome.records.push(record),
            Ok(record) => outcome.row_errors.push(RowError {
                line: i + 1,
                message: format!(
                    "provenance {} does not match requested {}",
                    record.provenance, provenance
                ),
            }),
            Err(e) => outcome.row_errors.push(RowError { line: i + 1, message: e.to_string() }),
        }
    }
    outcome
}

fn normalize_header(raw: &str) -> String {
    raw.trim().to_lowercase().replace([' ', '-'], "_")
}

fn canonical_column(raw: &str) -> Option<&'static str> {
    let normalized = normalize_header(raw);
    COLUMN_ALIASES
        .iter()
        .find(|(canon, aliases)| *canon == normalized || aliases.contains(&normalized.as_str()))
        .map(|(canon, _)| *canon)
}

/// Parse canonical or simplified CSV text. `origin` only labels errors.
///
/// An unknown or duplicate header column is a schema mismatch, as is a
/// missing `title` column. Absent optional columns fall back per field:
/// ids number the rows, kind is inferred from the presence of a cited
/// target, provenance inherits the stamp.
pub fn parse_csv(
    text: &str,
    provenance: Provenance,
    origin: &Path,
) -> Result<IngestOutcome, IngestError> {
    if text.trim().is_empty() {
        return Ok(IngestOutcome::default());
    }
    let mismatch = |column: &str| IngestError::SchemaMismatch {
        path: origin.to_path_buf(),
        column: column.to_string(),
    };

    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| mismatch(&format!("unreadable header: {e}")))?
        .clone();
    let mut index: std::collections::BTreeMap<&'static str, usize> = Default::default();
    for (i, raw) in headers.iter().enumerate() {
        let Some(canon) = canonical_column(raw) else {
            return Err(mismatch(raw));
        };
        if index.insert(canon, i).is_some() {
            return Err(mismatch(raw));
        }
    }
    if !index.contains_key("title") {
        return Err(mismatch("title"));
    }

    let mut outcome = IngestOutcome::default();
    for (row_idx, row) in reader.records().enumerate() {
        // header occupies line 1; data rows with embedded newlines shift
        // later numbers, which the reader position tracks for us
        let fallback_line = row_idx + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(fallback_line);
                outcome.row_errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
        match parse_csv_row(&row, &index, row_idx, provenance) {
            Ok(record) => outcome.records.push(record),
            Err(message) => outcome.row_errors.push(RowError { line, message }),
        }
    }
    Ok(outcome)
}

fn parse_csv_row(
    row: &csv::StringRecord,
    index: &std::collections::BTreeMap<&'static str, usize>,
    row_idx: usize,
    provenance: Provenance,
) -> Result<BibRecord, String> {
    let cell = |name: &str| -> Option<&str> {
        index.get(name).and_then(|&i| row.get(i)).filter(|v| !v.is_empty())
    };
    let number = |name: &'static str| -> Result<Option<i64>, String> {
        cell(name)
            .map(|v| v.trim().parse::<i64>().map_err(|_| format!("bad {name}: {v:?}")))
            .transpose()
    };

    let title = cell("title").ok_or("missing title")?.to_string();

    if let Some(v) = cell("provenance") {
        let tag = normalize_header(v).to_uppercase();
        if tag != provenance.token() {
            return Err(format!("provenance {v:?} does not match requested {provenance}"));
        }
    }

    let id = match cell("id") {
        Some(v) => v.trim().parse::<u32>().map_err(|_| format!("bad id: {v:?}"))?,
        None => row_idx as u32 + 1,
    };

    let cites_target = cell("cites_target")
        .map(|v| v.trim().parse::<u32>().map_err(|_| format!("bad cites_target: {v:?}")))
        .transpose()?
        .map(RecordId);

    let kind = match cell("kind").map(normalize_header) {
        Some(v) if v == "target" => RecordKind::Target,
        Some(v) if v == "citing" => RecordKind::Citing,
        Some(v) => return Err(format!("bad kind: {v:?}")),
        None if cites_target.is_some() => RecordKind::Citing,
        None => RecordKind::Target,
    };

    let authors = match cell("authors") {
        None => Vec::new(),
        Some(v) if v.trim_start().starts_with('[') => {
            serde_json::from_str::<Vec<String>>(v).map_err(|e| format!("bad authors: {e}"))?
        }
        Some(v) => v
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
    };

    let is_citation_stub = match cell("is_citation_stub").map(normalize_header) {
        None => false,
        Some(v) if ["true", "yes", "1"].contains(&v.as_str()) => true,
        Some(v) if ["false", "no", "0"].contains(&v.as_str()) => false,
        Some(v) => return Err(format!("bad is_citation_stub: {v:?}")),
    };

    let mut record = BibRecord::new(id, provenance, kind, &title);
    record.cites_target = cites_target;
    record.authors = authors;
    record.source_title = cell("source_title").map(str::to_string);
    record.publisher = cell("publisher").map(str::to_string);
    record.year = number("year")?.map(|y| y as i32);
    record.volume = cell("volume").map(str::to_string);
    record.start_page = cell("start_page").map(str::to_string);
    record.web_domain = cell("web_domain").map(str::to_string);
    record.citation_count = number("citation_count")?;
    record.entry_age_days = number("entry_age_days")?;
    record.is_citation_stub = is_citation_stub;
    Ok(record)
}

/// Serialize a corpus as JSONL, one record per line, trailing newline.
pub fn emit_jsonl(records: &[BibRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(r).expect("record serialization cannot fail");
        let _ = writeln!(out, "{line}");
    }
    out
}

/// Serialize a corpus in the canonical CSV schema. Absent fields become
/// empty cells; an empty author list becomes an empty cell rather than
/// `[]` so untouched rows stay visibly blank.
pub fn emit_csv(records: &[BibRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_COLUMNS).expect("writing to memory cannot fail");
    let opt_num = |v: Option<i64>| v.map(|n| n.to_string()).unwrap_or_default();
    for r in records {
        let authors = if r.authors.is_empty() {
            String::new()
        } else {
            serde_json::to_string(&r.authors).expect("string list serialization cannot fail")
        };
        let kind = match r.kind {
            RecordKind::Target => "TARGET",
            RecordKind::Citing => "CITING",
        };
        writer
            .write_record([
                r.id.to_string().as_str(),
                r.provenance.token(),
                kind,
                &r.cites_target.map(|t| t.to_string()).unwrap_or_default(),
                &r.title,
                &authors,
                r.source_title.as_deref().unwrap_or(""),
                r.publisher.as_deref().unwrap_or(""),
                &r.year.map(|y| y.to_string()).unwrap_or_default(),
                r.volume.as_deref().unwrap_or(""),
                r.start_page.as_deref().unwrap_or(""),
                r.web_domain.as_deref().unwrap_or(""),
                &opt_num(r.citation_count),
                &opt_num(r.entry_age_days),
                if r.is_citation_stub { "true" } else { "false" },
            ])
            .expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("memory writer cannot fail"))
        .expect("csv output is utf-8")
}

/// Rows of a reference table that parsed, plus the ones that did not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableLoad<T> {
    pub rows: Vec<T>,
    pub row_errors: Vec<RowError>,
}

fn two_column_table(
    text: &str,
    origin: &Path,
    first: &[&str],
    second: &[&str],
) -> Result<(Vec<(usize, String, String)>, Vec<RowError>), IngestError> {
    if text.trim().is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let mismatch = |column: &str| IngestError::SchemaMismatch {
        path: origin.to_path_buf(),
        column: column.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| mismatch(&format!("unreadable header: {e}")))?
        .clone();
    let find = |names: &[&str]| -> Option<usize> {
        headers.iter().position(|h| names.contains(&normalize_header(h).as_str()))
    };
    let first_idx = find(first).ok_or_else(|| mismatch(first[0]))?;
    let second_idx = find(second).ok_or_else(|| mismatch(second[0]))?;

    let mut rows = Vec::new();
    let mut row_errors = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let fallback_line = row_idx + 2;
        match row {
            Ok(r) => {
                let line = r.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
                let a = r.get(first_idx).unwrap_or("").trim();
                let b = r.get(second_idx).unwrap_or("").trim();
                if a.is_empty() {
                    row_errors
                        .push(RowError { line, message: format!("missing {}", first[0]) });
                } else {
                    rows.push((line, a.to_string(), b.to_string()));
                }
            }
            Err(e) => {
                let line =
                    e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
                row_errors.push(RowError { line, message: e.to_string() });
            }
        }
    }
    Ok((rows, row_errors))
}

/// Parse a source list CSV: columns `source_title` (or `title`) and
/// `publisher`.
pub fn parse_source_list(
    text: &str,
    origin: &Path,
) -> Result<TableLoad<(String, String)>, IngestError> {
    let (rows, row_errors) = two_column_table(
        text,
        origin,
        &["source_title", "title", "source", "journal", "publication"],
        &["publisher"],
    )?;
    Ok(TableLoad { rows: rows.into_iter().map(|(_, a, b)| (a, b)).collect(), row_errors })
}

/// Parse a publisher AIP table CSV: columns `publisher` and `has_aip`
/// (accepts true/false, yes/no, 1/0).
pub fn parse_aip_table(
    text: &str,
    origin: &Path,
) -> Result<TableLoad<(String, bool)>, IngestError> {
    let (raw, mut row_errors) = two_column_table(
        text,
        origin,
        &["publisher"],
        &["has_aip", "aip", "articles_in_press", "posts_articles_in_press"],
    )?;
    let mut rows = Vec::new();
    for (line, publisher, flag) in raw {
        match normalize_header(&flag).as_str() {
            "true" | "yes" | "1" => rows.push((publisher, true)),
            "false" | "no" | "0" | "" => rows.push((publisher, false)),
            other => {
                row_errors.push(RowError { line, message: format!("bad has_aip: {other:?}") })
            }
        }
    }
    row_errors.sort_by_key(|e| e.line);
    Ok(TableLoad { rows, row_errors })
}

/// Load a source list from disk; see [`parse_source_list`].
pub fn load_source_list(path: &Path) -> Result<TableLoad<(String, String)>, IngestError> {
    let content = std::fs::read_to_string(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    parse_source_list(&content, path)
}

/// Load a publisher AIP table from disk; see [`parse_aip_table`].
pub fn load_aip_table(path: &Path) -> Result<TableLoad<(String, bool)>, IngestError> {
    let content = std::fs::read_to_string(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    parse_aip_table(&content, path)
}

/// Serialize a source list in the shape [`parse_source_list`] reads.
pub fn emit_source_list(rows: &[(String, String)]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["source_title", "publisher"]).expect("writing to memory cannot fail");
    for (title, publisher) in rows {
        writer.write_record([title, publisher]).expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("memory writer cannot fail"))
        .expect("csv output is utf-8")
}

/// Serialize a publisher AIP table in the shape [`parse_aip_table`] reads.
pub fn emit_aip_table(rows: &[(String, bool)]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["publisher", "has_aip"]).expect("writing to memory cannot fail");
    for (publisher, has_aip) in rows {
        writer
            .write_record([publisher.as_str(), if *has_aip { "true" } else { "false" }])
            .expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("memory writer cannot fail"))
        .expect("csv output is utf-8")
}

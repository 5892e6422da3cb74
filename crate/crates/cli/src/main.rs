//! Command-line front end: one subcommand per pipeline stage plus the
//! full report run, the synthetic-corpus generator, and its scorer.
//!
//! Every value can come from three places, later ones winning: built-in
//! defaults, a flat TOML config file (`--config`), and the command-line
//! flags themselves.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use bibcompare_core::io;
use bibcompare_core::linkage;
use bibcompare_core::matchkeys::key_bundle;
use bibcompare_core::model::{validate_corpus, BibRecord, Provenance};
use bibcompare_core::normalize::clean_corpus;
use bibcompare_core::pipeline::{
    render_reports, run_pipeline, run_pipeline_data, PipelineConfig, PipelineInputs,
    PipelineOptions, ReportFormats,
};
use bibcompare_core::synth::{self, DelayDistribution, NoiseToggles, SynthConfig};
use bibcompare_core::Thresholds;

#[derive(Parser)]
#[command(name = "bibcompare", version, about = "Record linkage and citation comparison for bibliographic exports")]
struct Cli {
    /// Flat key-value config file (TOML); command-line flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct InputArgs {
    /// GS search export (CSV or JSONL)
    #[arg(long)]
    gs_search: Option<PathBuf>,
    /// GS metrics export (CSV or JSONL)
    #[arg(long)]
    gs_metrics: Option<PathBuf>,
    /// Scopus export (CSV or JSONL)
    #[arg(long)]
    scopus: Option<PathBuf>,
    /// Active source list: source title, publisher
    #[arg(long)]
    source_list: Option<PathBuf>,
    /// Publisher AIP table: publisher, posts-articles-in-press flag
    #[arg(long)]
    aip_table: Option<PathBuf>,
    /// Reviewer-approved source pairings; inferred pairs outside it are
    /// listed for review but not applied
    #[arg(long)]
    allowlist: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct ThresholdArgs {
    /// Entry-age cohort width in days [default: 30]
    #[arg(long)]
    bin_width: Option<i64>,
    /// Entry-age horizon in days [default: 365]
    #[arg(long)]
    horizon: Option<i64>,
    /// Minimum title-word length [default: 4]
    #[arg(long)]
    min_word_len: Option<usize>,
    /// Minimum two-way title-overlap fraction [default: 0.5]
    #[arg(long)]
    overlap_frac: Option<f64>,
    /// Maximum year distance for large similarity [default: 2]
    #[arg(long)]
    year_gap: Option<i32>,
}

#[derive(Args, Clone, Default)]
struct OutArg {
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check corpus files against the record-level invariants
    Validate {
        #[command(flatten)]
        inputs: InputArgs,
    },
    /// Apply the deletion rules and emit cleaned corpora
    Clean {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Emit the four match-keys of every record
    Keys {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Match-merge the given corpora and emit the accepted pairs
    Match {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Detect and remove within-corpus duplicates
    Dedup {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Categorize the overlap and emit the coverage tables
    Coverage {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Emit the citation-impact tables
    Metrics {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Emit the entry-age cohort series and delay quantiles
    Timing {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the full pipeline and write every report file
    Report {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        out: OutArg,
        /// Report renderings to produce, comma separated: csv,md,json
        #[arg(long)]
        formats: Option<String>,
        /// Also dump per-record intermediates (keys, pairs, timed docs)
        #[arg(long)]
        dump: bool,
    },
    /// Generate a seeded synthetic corpus with planted ground truth
    Synth {
        #[command(flatten)]
        out: OutArg,
        /// Generator seed [default: 42]
        #[arg(long)]
        seed: Option<u64>,
        /// Target articles [default: 10]
        #[arg(long)]
        targets: Option<usize>,
        /// Minimum citing documents per target [default: 10]
        #[arg(long)]
        citers_min: Option<usize>,
        /// Maximum citing documents per target [default: 20]
        #[arg(long)]
        citers_max: Option<usize>,
        /// Fraction of citing docs planted in both databases [default: 0.5]
        #[arg(long)]
        planted_overlap: Option<f64>,
        /// Fraction of GS-only docs from Scopus-covered sources [default: 0.5]
        #[arg(long)]
        covered_frac: Option<f64>,
        /// Duplicate-planting rate [default: 0.1]
        #[arg(long)]
        duplicate_rate: Option<f64>,
        /// Cross-language duplicate share [default: 0.2]
        #[arg(long)]
        cross_language_rate: Option<f64>,
        /// Fraction of search docs also in the metrics export [default: 0.9]
        #[arg(long)]
        metrics_coverage: Option<f64>,
        /// Fraction of docs without an entry age [default: 0.05]
        #[arg(long)]
        undated_rate: Option<f64>,
        /// Shift Scopus years of matched docs by this much
        #[arg(long)]
        year_shift: Option<i32>,
        /// Render GS text with diacritics
        #[arg(long)]
        diacritics: bool,
        /// Render GS authors in initials-first order
        #[arg(long)]
        author_reformat: bool,
        /// Drop short title tokens from the Scopus rendering
        #[arg(long)]
        drop_short_tokens: bool,
        /// Hide the source title on metrics-covered search records
        #[arg(long)]
        missing_source: bool,
        /// Make per-bin found fractions hit the delay CDF exactly
        #[arg(long)]
        drive_delays: bool,
        /// Indexing delay step as day:weight, repeatable
        /// [default: 30:0.5 90:0.25]
        #[arg(long = "delay")]
        delays: Vec<String>,
        /// Weight of never-indexed docs [default: 0.25]
        #[arg(long)]
        never_weight: Option<f64>,
        /// Entry-age cohort width in days [default: 30]
        #[arg(long)]
        bin_width: Option<i64>,
        /// Entry-age horizon in days [default: 365]
        #[arg(long)]
        horizon: Option<i64>,
    },
    /// Grade observed pipeline output against planted ground truth
    Score {
        /// Ground truth JSON written by `synth`
        #[arg(long)]
        truth: PathBuf,
        /// Observations JSON written by `report`
        #[arg(long)]
        observed: PathBuf,
    },
}

/// Flat config file; every key matches the flag of the same name.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    gs_search: Option<PathBuf>,
    gs_metrics: Option<PathBuf>,
    scopus: Option<PathBuf>,
    source_list: Option<PathBuf>,
    aip_table: Option<PathBuf>,
    allowlist: Option<PathBuf>,
    out: Option<PathBuf>,
    bin_width: Option<i64>,
    horizon: Option<i64>,
    min_word_len: Option<usize>,
    overlap_frac: Option<f64>,
    year_gap: Option<i32>,
    seed: Option<u64>,
    formats: Option<String>,
    dump: Option<bool>,
    top_k_gs: Option<usize>,
    top_k_scopus: Option<usize>,
    recent_window: Option<i32>,
    top_entities: Option<usize>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("config: cannot read {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("config: {}", p.display()))
        }
        None => Ok(FileConfig::default()),
    }
}

fn resolve_inputs(args: &InputArgs, file: &FileConfig) -> InputArgs {
    InputArgs {
        gs_search: args.gs_search.clone().or_else(|| file.gs_search.clone()),
        gs_metrics: args.gs_metrics.clone().or_else(|| file.gs_metrics.clone()),
        scopus: args.scopus.clone().or_else(|| file.scopus.clone()),
        source_list: args.source_list.clone().or_else(|| file.source_list.clone()),
        aip_table: args.aip_table.clone().or_else(|| file.aip_table.clone()),
        allowlist: args.allowlist.clone().or_else(|| file.allowlist.clone()),
    }
}

fn resolve_thresholds(args: &ThresholdArgs, file: &FileConfig) -> Thresholds {
    // flags win over the config file, the file over the defaults
    let mut t = Thresholds::default();
    t.bin_width_days = args.bin_width.or(file.bin_width).unwrap_or(t.bin_width_days);
    t.horizon_days = args.horizon.or(file.horizon).unwrap_or(t.horizon_days);
    t.min_title_word_len = args.min_word_len.or(file.min_word_len).unwrap_or(t.min_title_word_len);
    t.title_overlap_fraction =
        args.overlap_frac.or(file.overlap_frac).unwrap_or(t.title_overlap_fraction);
    t.max_year_gap = args.year_gap.or(file.year_gap).unwrap_or(t.max_year_gap);
    t
}

fn resolve_options(args: &ThresholdArgs, file: &FileConfig) -> PipelineOptions {
    let mut o = PipelineOptions { thresholds: resolve_thresholds(args, file), ..Default::default() };
    o.top_k_gs = file.top_k_gs.unwrap_or(o.top_k_gs);
    o.top_k_scopus = file.top_k_scopus.unwrap_or(o.top_k_scopus);
    o.recent_year_window = file.recent_window.unwrap_or(o.recent_year_window);
    o.top_entities = file.top_entities.unwrap_or(o.top_entities);
    o
}

fn resolve_out(arg: &OutArg, file: &FileConfig) -> PathBuf {
    arg.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn parse_formats(spec: Option<&str>) -> Result<ReportFormats> {
    let Some(spec) = spec else { return Ok(ReportFormats::default()) };
    let mut f = ReportFormats { csv: false, md: false, json: false };
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "csv" => f.csv = true,
            "md" => f.md = true,
            "json" => f.json = true,
            other => bail!("unknown report format {other:?} (expected csv, md, json)"),
        }
    }
    Ok(f)
}

/// The present corpora as (dataset name, path, provenance) triples.
fn present_corpora(inputs: &InputArgs) -> Vec<(&'static str, PathBuf, Provenance)> {
    let mut v = Vec::new();
    if let Some(p) = &inputs.gs_search {
        v.push(("gs_search", p.clone(), Provenance::GsSearch));
    }
    if let Some(p) = &inputs.gs_metrics {
        v.push(("gs_metrics", p.clone(), Provenance::GsMetrics));
    }
    if let Some(p) = &inputs.scopus {
        v.push(("scopus", p.clone(), Provenance::Scopus));
    }
    v
}

fn ingest(dataset: &str, path: &Path, provenance: Provenance) -> Result<Vec<BibRecord>> {
    let outcome = io::ingest(path, None, provenance)
        .with_context(|| format!("ingest-{}", dataset.replace('_', "-")))?;
    for e in &outcome.row_errors {
        eprintln!("warning: {dataset} line {}: {}", e.line, e.message);
    }
    Ok(outcome.records)
}

/// Assemble in-memory inputs from whatever files were given; absent
/// corpora stay empty so single-stage commands work on subsets.
fn load_inputs(inputs: &InputArgs) -> Result<PipelineInputs> {
    let mut data = PipelineInputs::default();
    for (dataset, path, provenance) in present_corpora(inputs) {
        let records = ingest(dataset, &path, provenance)?;
        match provenance {
            Provenance::GsSearch => data.gs_search = records,
            Provenance::GsMetrics => data.gs_metrics = records,
            Provenance::Scopus => data.scopus = records,
        }
    }
    if let Some(p) = &inputs.source_list {
        let load = io::load_source_list(p).context("source-list")?;
        for e in &load.row_errors {
            eprintln!("warning: source_list line {}: {}", e.line, e.message);
        }
        data.source_list = load.rows;
    }
    if let Some(p) = &inputs.aip_table {
        let load = io::load_aip_table(p).context("aip-table")?;
        for e in &load.row_errors {
            eprintln!("warning: aip_table line {}: {}", e.line, e.message);
        }
        data.aip_table = load.rows;
    }
    if let Some(p) = &inputs.allowlist {
        // two columns, normalized source titles per side
        let text =
            fs::read_to_string(p).with_context(|| format!("allowlist: {}", p.display()))?;
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let mut allow = BTreeSet::new();
        for row in reader.records() {
            let row = row.context("allowlist")?;
            let gs = row.get(0).unwrap_or("").trim();
            let sc = row.get(1).unwrap_or("").trim();
            if !gs.is_empty() && !sc.is_empty() {
                allow.insert((
                    bibcompare_core::normalize::normalize_source_title(gs),
                    bibcompare_core::normalize::normalize_source_title(sc),
                ));
            }
        }
        data.allowlist = Some(allow);
    }
    Ok(data)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("emit: {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("emit: {}", path.display()))?;
    Ok(path)
}

fn csv_string(headers: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Run the data pipeline and keep only the named render products.
fn emit_selected(
    inputs: &InputArgs,
    thresholds: &ThresholdArgs,
    file: &FileConfig,
    out: &Path,
    names: &[&str],
    dump: bool,
) -> Result<bibcompare_core::pipeline::ComparisonReport> {
    let data = load_inputs(inputs)?;
    let mut options = resolve_options(thresholds, file);
    options.keep_intermediates = dump;
    let report = run_pipeline_data(&data, &options)?;
    for (name, content) in render_reports(&report, ReportFormats::default()) {
        if names.contains(&name.as_str()) {
            let path = write_file(out, &name, &content)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(report)
}

fn cmd_validate(inputs: &InputArgs) -> Result<()> {
    let corpora = present_corpora(inputs);
    if corpora.is_empty() {
        bail!("validate: no input files given");
    }
    let mut bad = 0usize;
    for (dataset, path, provenance) in corpora {
        let outcome = io::ingest(&path, None, provenance)
            .with_context(|| format!("ingest-{}", dataset.replace('_', "-")))?;
        for e in &outcome.row_errors {
            println!("{dataset} line {}: {}", e.line, e.message);
        }
        let report = validate_corpus(&outcome.records);
        for v in &report.violations {
            println!("{dataset} record {}: {:?} ({})", v.record.0, v.kind, v.detail);
        }
        println!(
            "{dataset}: {} records, {} malformed rows, {} violations",
            report.records,
            outcome.row_errors.len(),
            report.violations.len()
        );
        bad += outcome.row_errors.len() + report.violations.len();
    }
    if bad > 0 {
        bail!("validate: {bad} problems found");
    }
    Ok(())
}

fn cmd_clean(inputs: &InputArgs, out: &Path) -> Result<()> {
    let corpora = present_corpora(inputs);
    if corpora.is_empty() {
        bail!("clean: no input files given");
    }
    let mut rows = Vec::new();
    for (dataset, path, provenance) in corpora {
        let records = ingest(dataset, &path, provenance)?;
        let (kept, report) = clean_corpus(&records);
        for d in &report.deleted {
            rows.push(vec![
                dataset.to_string(),
                d.record.0.to_string(),
                d.rule.token().to_string(),
                d.offending_value.clone(),
            ]);
        }
        let path = write_file(out, &format!("{dataset}.cleaned.jsonl"), &io::emit_jsonl(&kept))?;
        println!(
            "{dataset}: kept {} of {} records; wrote {}",
            kept.len(),
            report.input_records,
            path.display()
        );
    }
    let table = csv_string(&["dataset", "record", "rule", "offending_value"], &rows)?;
    let path = write_file(out, "deletion_report.csv", &table)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_keys(inputs: &InputArgs, thresholds: &Thresholds, out: &Path) -> Result<()> {
    let corpora = present_corpora(inputs);
    if corpora.is_empty() {
        bail!("keys: no input files given");
    }
    let mut rows = Vec::new();
    for (dataset, path, provenance) in corpora {
        let records = ingest(dataset, &path, provenance)?;
        for r in &records {
            let b = key_bundle(r, thresholds);
            rows.push(vec![
                dataset.to_string(),
                r.id.0.to_string(),
                b.full_key.unwrap_or_default(),
                b.title_key.unwrap_or_default(),
                b.short_key.unwrap_or_default(),
                b.source_key.unwrap_or_default(),
            ]);
        }
    }
    let table = csv_string(
        &["dataset", "record", "full_key", "title_key", "short_key", "source_key"],
        &rows,
    )?;
    let path = write_file(out, "keys.csv", &table)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_match(
    inputs: &InputArgs,
    thresholds: &ThresholdArgs,
    file: &FileConfig,
    out: &Path,
) -> Result<()> {
    if present_corpora(inputs).len() < 2 {
        bail!("match: need at least two corpora");
    }
    let report = emit_selected(inputs, thresholds, file, out, &["pairs.csv"], true)?;
    println!(
        "gs merge: {} pairs; cross-database: {} target pairs, {} citing pairs",
        report.union.matched_pairs,
        report.cross.target_pairs.len(),
        report.cross.citing_pairs.len()
    );
    Ok(())
}

fn cmd_dedup(inputs: &InputArgs, thresholds: &Thresholds, out: &Path) -> Result<()> {
    let corpora = present_corpora(inputs);
    if corpora.is_empty() {
        bail!("dedup: no input files given");
    }
    let mut summary = Vec::new();
    let mut pair_rows = Vec::new();
    for (dataset, path, provenance) in corpora {
        let records = ingest(dataset, &path, provenance)?;
        let (kept, _) = clean_corpus(&records);
        let outcome = linkage::dedup(&kept, thresholds);
        for p in &outcome.pairs {
            pair_rows.push(vec![
                dataset.to_string(),
                p.left.0.to_string(),
                p.right.0.to_string(),
                format!("{:?}", p.key_used),
                format!("{:?}", p.similarity),
            ]);
        }
        let r = &outcome.report;
        summary.push(vec![
            dataset.to_string(),
            r.total_records.to_string(),
            r.candidate_pairs.to_string(),
            r.identical_pairs.to_string(),
            r.large_pairs.to_string(),
            r.low_pairs.to_string(),
            r.removed_records.to_string(),
        ]);
        let path =
            write_file(out, &format!("{dataset}.dedup.jsonl"), &io::emit_jsonl(&outcome.kept))?;
        println!(
            "{dataset}: removed {} of {} records; wrote {}",
            outcome.removed.len(),
            r.total_records,
            path.display()
        );
    }
    let table = csv_string(
        &[
            "dataset",
            "total_records",
            "candidate_pairs",
            "identical_pairs",
            "large_pairs",
            "low_pairs",
            "removed_records",
        ],
        &summary,
    )?;
    let path = write_file(out, "dup_report.csv", &table)?;
    println!("wrote {}", path.display());
    let table =
        csv_string(&["dataset", "left", "right", "key_used", "similarity"], &pair_rows)?;
    let path = write_file(out, "dup_pairs.csv", &table)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn quantile_text(q: bibcompare_core::timing::QuantileEstimate) -> String {
    match q {
        bibcompare_core::timing::QuantileEstimate::Months(m) => format!("{m:.1} months"),
        bibcompare_core::timing::QuantileEstimate::BeyondHorizon => "beyond horizon".to_string(),
    }
}

fn cmd_report(
    inputs: &InputArgs,
    thresholds: &ThresholdArgs,
    file: &FileConfig,
    out: &Path,
    formats: Option<&str>,
    dump: bool,
) -> Result<()> {
    let (Some(gs_search), Some(gs_metrics), Some(scopus)) =
        (inputs.gs_search.clone(), inputs.gs_metrics.clone(), inputs.scopus.clone())
    else {
        bail!("report: --gs-search, --gs-metrics, and --scopus are all required");
    };
    let mut options = resolve_options(thresholds, file);
    options.keep_intermediates = dump || file.dump.unwrap_or(false);
    let config = PipelineConfig {
        gs_search,
        gs_metrics,
        scopus,
        source_list: inputs.source_list.clone(),
        aip_table: inputs.aip_table.clone(),
        allowlist: inputs.allowlist.clone(),
        out_dir: out.to_path_buf(),
        formats: parse_formats(formats.or(file.formats.as_deref()))?,
        options,
    };
    let (report, written) = run_pipeline(&config)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!(
        "union {} records; {} target pairs; {} citing pairs; BOTH {}; \
         median delay {}; q3 {}",
        report.union.union_records,
        report.cross.target_pairs.len(),
        report.cross.citing_pairs.len(),
        report.categories.counts.both,
        quantile_text(report.timing.quantiles.median),
        quantile_text(report.timing.quantiles.q3),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    out: &Path,
    file: &FileConfig,
    seed: Option<u64>,
    targets: Option<usize>,
    citers_min: Option<usize>,
    citers_max: Option<usize>,
    planted_overlap: Option<f64>,
    covered_frac: Option<f64>,
    duplicate_rate: Option<f64>,
    cross_language_rate: Option<f64>,
    metrics_coverage: Option<f64>,
    undated_rate: Option<f64>,
    year_shift: Option<i32>,
    noise_flags: (bool, bool, bool, bool),
    drive_delays: bool,
    delay_specs: &[String],
    never_weight: Option<f64>,
    bin_width: Option<i64>,
    horizon: Option<i64>,
) -> Result<()> {
    let mut config = SynthConfig { seed: seed.or(file.seed).unwrap_or(42), ..SynthConfig::default() };
    if let Some(v) = targets {
        config.n_targets = v;
    }
    if let Some(v) = citers_min {
        config.citers_min = v;
    }
    if let Some(v) = citers_max {
        config.citers_max = v;
    }
    if let Some(v) = planted_overlap {
        config.overlap_fraction = v;
    }
    if let Some(v) = covered_frac {
        config.gs_only_covered_fraction = v;
    }
    if let Some(v) = duplicate_rate {
        config.duplicate_rate = v;
    }
    if let Some(v) = cross_language_rate {
        config.cross_language_rate = v;
    }
    if let Some(v) = metrics_coverage {
        config.metrics_coverage = v;
    }
    if let Some(v) = undated_rate {
        config.undated_rate = v;
    }
    let (diacritics, author_reformat, drop_short_tokens, missing_source) = noise_flags;
    config.noise = NoiseToggles {
        diacritics,
        author_reformat,
        drop_short_tokens,
        missing_source,
        year_shift: year_shift.unwrap_or(0),
    };
    config.delays_drive_overlap = drive_delays;
    if !delay_specs.is_empty() {
        let mut steps = Vec::new();
        for spec in delay_specs {
            let (day, weight) = spec
                .split_once(':')
                .with_context(|| format!("synth: --delay {spec:?} is not day:weight"))?;
            steps.push((
                day.trim().parse::<i64>().with_context(|| format!("synth: bad day in {spec:?}"))?,
                weight
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("synth: bad weight in {spec:?}"))?,
            ));
        }
        config.delays = DelayDistribution {
            steps,
            never_weight: never_weight.unwrap_or(config.delays.never_weight),
        };
    } else if let Some(w) = never_weight {
        config.delays.never_weight = w;
    }
    config.bin_width_days = bin_width.or(file.bin_width).unwrap_or(config.bin_width_days);
    config.horizon_days = horizon.or(file.horizon).unwrap_or(config.horizon_days);

    let output = synth::generate(&config).context("synth")?;
    let files = [
        ("gs_search.jsonl", io::emit_jsonl(&output.gs_search)),
        ("gs_metrics.jsonl", io::emit_jsonl(&output.gs_metrics)),
        ("scopus.jsonl", io::emit_jsonl(&output.scopus)),
        ("source_list.csv", io::emit_source_list(&output.source_list)),
        ("aip_table.csv", io::emit_aip_table(&output.aip_table)),
        ("truth.json", serde_json::to_string_pretty(&output.truth)? + "\n"),
        ("synth_config.json", serde_json::to_string_pretty(&config)? + "\n"),
    ];
    for (name, content) in files {
        let path = write_file(out, name, &content)?;
        println!("wrote {}", path.display());
    }
    println!(
        "generated {} search, {} metrics, {} scopus records (seed {})",
        output.gs_search.len(),
        output.gs_metrics.len(),
        output.scopus.len(),
        config.seed
    );
    Ok(())
}

fn cmd_score(truth: &Path, observed: &Path) -> Result<()> {
    let truth_text =
        fs::read_to_string(truth).with_context(|| format!("score: {}", truth.display()))?;
    let truth: synth::GroundTruth = serde_json::from_str(&truth_text).context("score: truth")?;
    let observed_text =
        fs::read_to_string(observed).with_context(|| format!("score: {}", observed.display()))?;
    let observed: synth::ObservedOutcome =
        serde_json::from_str(&observed_text).context("score: observed")?;
    let scores = synth::score(&observed, &truth).context("score")?;
    println!("{}", serde_json::to_string_pretty(&scores)?);
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let file = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Validate { inputs } => cmd_validate(&resolve_inputs(inputs, &file)),
        Command::Clean { inputs, out } => {
            cmd_clean(&resolve_inputs(inputs, &file), &resolve_out(out, &file))
        }
        Command::Keys { inputs, thresholds, out } => cmd_keys(
            &resolve_inputs(inputs, &file),
            &resolve_thresholds(thresholds, &file),
            &resolve_out(out, &file),
        ),
        Command::Match { inputs, thresholds, out } => cmd_match(
            &resolve_inputs(inputs, &file),
            thresholds,
            &file,
            &resolve_out(out, &file),
        ),
        Command::Dedup { inputs, thresholds, out } => cmd_dedup(
            &resolve_inputs(inputs, &file),
            &resolve_thresholds(thresholds, &file),
            &resolve_out(out, &file),
        ),
        Command::Coverage { inputs, thresholds, out } => {
            let report = emit_selected(
                &resolve_inputs(inputs, &file),
                thresholds,
                &file,
                &resolve_out(out, &file),
                &["table7.csv", "table8.csv", "source_pairs_review.csv"],
                false,
            )?;
            let c = &report.categories.counts;
            println!(
                "both {}, gs-only {} (covered {} / uncovered {}), scopus-only {}",
                c.both,
                c.gs_only_scopus_source + c.gs_only_no_scopus_source,
                c.gs_only_scopus_source,
                c.gs_only_no_scopus_source,
                c.scopus_only_gs_source + c.scopus_only_no_gs_source,
            );
            Ok(())
        }
        Command::Metrics { inputs, thresholds, out } => {
            let report = emit_selected(
                &resolve_inputs(inputs, &file),
                thresholds,
                &file,
                &resolve_out(out, &file),
                &["table4.csv", "table5.csv", "table6.csv", "table9.csv", "table10.csv"],
                false,
            )?;
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}"));
            println!(
                "globalized ratio {}, averaged {}, targets {}",
                fmt(report.ratios.globalized.value),
                fmt(report.ratios.averaged.value),
                report.ratios.rows,
            );
            Ok(())
        }
        Command::Timing { inputs, thresholds, out } => {
            let report = emit_selected(
                &resolve_inputs(inputs, &file),
                thresholds,
                &file,
                &resolve_out(out, &file),
                &["fig5.csv", "fig6.csv"],
                false,
            )?;
            println!(
                "median delay {}; q3 {}; {} undated, {} beyond horizon",
                quantile_text(report.timing.quantiles.median),
                quantile_text(report.timing.quantiles.q3),
                report.timing.undated,
                report.timing.beyond_horizon,
            );
            Ok(())
        }
        Command::Report { inputs, thresholds, out, formats, dump } => cmd_report(
            &resolve_inputs(inputs, &file),
            thresholds,
            &file,
            &resolve_out(out, &file),
            formats.as_deref(),
            *dump,
        ),
        Command::Synth {
            out,
            seed,
            targets,
            citers_min,
            citers_max,
            planted_overlap,
            covered_frac,
            duplicate_rate,
            cross_language_rate,
            metrics_coverage,
            undated_rate,
            year_shift,
            diacritics,
            author_reformat,
            drop_short_tokens,
            missing_source,
            drive_delays,
            delays,
            never_weight,
            bin_width,
            horizon,
        } => cmd_synth(
            &resolve_out(out, &file),
            &file,
            *seed,
            *targets,
            *citers_min,
            *citers_max,
            *planted_overlap,
            *covered_frac,
            *duplicate_rate,
            *cross_language_rate,
            *metrics_coverage,
            *undated_rate,
            *year_shift,
            (*diacritics, *author_reformat, *drop_short_tokens, *missing_source),
            *drive_delays,
            delays,
            *never_weight,
            *bin_width,
            *horizon,
        ),
        Command::Score { truth, observed } => cmd_score(truth, observed),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

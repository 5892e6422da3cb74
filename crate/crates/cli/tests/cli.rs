//! End-to-end tests driving the compiled binary the way a user would.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bibcompare(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bibcompare"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should start")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = bibcompare(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Generate a small noiseless corpus with duplicates planted, then run the
/// full report on it.
fn synth_and_report(dir: &Path, out: &str) {
    run_ok(
        dir,
        &[
            "synth",
            "--out",
            "corpus",
            "--seed",
            "11",
            "--targets",
            "6",
            "--citers-min",
            "12",
            "--citers-max",
            "18",
            "--duplicate-rate",
            "0.2",
            "--cross-language-rate",
            "0.25",
            "--metrics-coverage",
            "0.8",
            "--undated-rate",
            "0.1",
        ],
    );
    run_ok(
        dir,
        &[
            "report",
            "--gs-search",
            "corpus/gs_search.jsonl",
            "--gs-metrics",
            "corpus/gs_metrics.jsonl",
            "--scopus",
            "corpus/scopus.jsonl",
            "--source-list",
            "corpus/source_list.csv",
            "--aip-table",
            "corpus/aip_table.csv",
            "--out",
            out,
        ],
    );
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output directory should exist")
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().into_string().unwrap();
            (name, fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn report_output_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    synth_and_report(tmp.path(), "run_a");
    let report = [
        "report",
        "--gs-search",
        "corpus/gs_search.jsonl",
        "--gs-metrics",
        "corpus/gs_metrics.jsonl",
        "--scopus",
        "corpus/scopus.jsonl",
        "--source-list",
        "corpus/source_list.csv",
        "--aip-table",
        "corpus/aip_table.csv",
        "--out",
        "run_b",
    ];
    run_ok(tmp.path(), &report);

    let a = dir_contents(&tmp.path().join("run_a"));
    let b = dir_contents(&tmp.path().join("run_b"));
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "both runs should write the same file set"
    );
    for (name, bytes) in &a {
        assert_eq!(Some(bytes), b.get(name), "{name} differs between runs");
    }
}

#[test]
fn scoring_a_noiseless_run_reports_perfect_stages() {
    let tmp = TempDir::new().unwrap();
    synth_and_report(tmp.path(), "run");
    let stdout = run_ok(
        tmp.path(),
        &[
            "score",
            "--truth",
            "corpus/truth.json",
            "--observed",
            "run/observed.json",
        ],
    );
    let scores: Value = serde_json::from_str(&stdout).expect("score should print JSON");

    for stage in ["target_linkage", "search_metrics", "linkage", "dedup"] {
        assert_eq!(scores[stage]["false_pos"], 0, "{stage} precision");
        assert_eq!(scores[stage]["false_neg"], 0, "{stage} recall");
    }
    assert!(scores["dedup"]["true_pos"].as_u64().unwrap() > 0, "duplicates were planted");
    assert_eq!(scores["dedup_exact"], true);
    assert_eq!(scores["category_accuracy"], 1.0);
    assert_eq!(scores["category_missing"], 0);
    assert_eq!(scores["quantiles_exact"], true);
}

#[test]
fn missing_scopus_file_fails_naming_the_ingest_stage() {
    let tmp = TempDir::new().unwrap();
    synth_and_report(tmp.path(), "run");
    let out = bibcompare(
        tmp.path(),
        &[
            "report",
            "--gs-search",
            "corpus/gs_search.jsonl",
            "--gs-metrics",
            "corpus/gs_metrics.jsonl",
            "--scopus",
            "corpus/no_such_file.jsonl",
            "--out",
            "broken",
        ],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ingest-scopus"), "stderr should name the stage: {stderr}");
}

#[test]
fn validate_flags_a_dangling_citation() {
    let tmp = TempDir::new().unwrap();
    let corpus = concat!(
        r#"{"id":1,"provenance":"GS_SEARCH","kind":"TARGET","title":"stable isotope tracing","authors":["Archer, K."],"year":2011}"#,
        "\n",
        r#"{"id":2,"provenance":"GS_SEARCH","kind":"CITING","title":"tracer methods revisited","authors":["Brooks, L."],"year":2013,"cites_target":9}"#,
        "\n",
    );
    fs::write(tmp.path().join("gs_search.jsonl"), corpus).unwrap();
    let out = bibcompare(tmp.path(), &["validate", "--gs-search", "gs_search.jsonl"]);
    assert!(!out.status.success(), "a dangling citer is a validation failure");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("record 2"), "the offending record is listed: {stdout}");
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    synth_and_report(tmp.path(), "run");
    fs::write(
        tmp.path().join("config.toml"),
        concat!(
            "gs_search = \"corpus/gs_search.jsonl\"\n",
            "gs_metrics = \"corpus/gs_metrics.jsonl\"\n",
            "scopus = \"corpus/scopus.jsonl\"\n",
            "source_list = \"corpus/source_list.csv\"\n",
            "aip_table = \"corpus/aip_table.csv\"\n",
            "bin_width = 60\n",
        ),
    )
    .unwrap();

    let bin_width = |out_dir: &str| -> i64 {
        let report: Value = serde_json::from_str(
            &fs::read_to_string(tmp.path().join(out_dir).join("report.json")).unwrap(),
        )
        .unwrap();
        report["options"]["thresholds"]["bin_width_days"].as_i64().unwrap()
    };

    run_ok(tmp.path(), &["report", "--config", "config.toml", "--out", "from_file"]);
    assert_eq!(bin_width("from_file"), 60, "the config file sets the default");

    run_ok(
        tmp.path(),
        &["report", "--config", "config.toml", "--bin-width", "30", "--out", "from_flag"],
    );
    assert_eq!(bin_width("from_flag"), 30, "the flag wins over the file");
}

#[test]
fn keys_lists_all_four_keys_per_record() {
    let tmp = TempDir::new().unwrap();
    synth_and_report(tmp.path(), "run");
    run_ok(
        tmp.path(),
        &["keys", "--gs-search", "corpus/gs_search.jsonl", "--out", "keyed"],
    );
    let table = fs::read_to_string(tmp.path().join("keyed/keys.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("dataset,record,full_key,title_key,short_key,source_key")
    );
    let records = fs::read_to_string(tmp.path().join("corpus/gs_search.jsonl"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(lines.count(), records, "one row per ingested record");
}

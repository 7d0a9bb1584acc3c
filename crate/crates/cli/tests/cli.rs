mod common;

use std::fs;
use std::path::Path;

use bident_core::stats::EvaluationSummary;
use bident_core::SystemScore;
use common::*;
use serde_json::Value;
use tempfile::TempDir;

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_exit(o: &std::process::Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
}

fn read_scores(path: &Path) -> Vec<SystemScore> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn run_json(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap()
}

fn score_mock(out: &Path, extra: &[&str]) -> std::process::Output {
    let de = dataset_path("de-en");
    let ru = dataset_path("ru-en");
    let mut args = vec![
        "score",
        "--data",
        path_arg(&de),
        "--data",
        path_arg(&ru),
        "--backend",
        "mock",
        "--norm",
        "none",
        "--out",
        path_arg(out),
    ];
    args.extend_from_slice(extra);
    bident(&args)
}

#[test]
fn fixtures_match_generator() {
    let expected: Vec<(std::path::PathBuf, String)> =
        LANG_PAIRS.iter().map(|lp| (dataset_path(lp), dataset(lp))).chain([(human_path(), human_scores())]).collect();
    if std::env::var_os("BIDENT_REGEN_FIXTURES").is_some() {
        fs::create_dir_all(fixture_dir()).unwrap();
        for (path, text) in &expected {
            fs::write(path, text).unwrap();
        }
    }
    for (path, text) in &expected {
        let committed = fs::read_to_string(path)
            .unwrap_or_else(|e| panic!("{}: {e}; rerun with BIDENT_REGEN_FIXTURES=1", path.display()));
        assert_eq!(&committed, text, "{} is stale; rerun with BIDENT_REGEN_FIXTURES=1", path.display());
    }
}

#[test]
fn score_writes_segment_and_system_files() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_exit(&score_mock(&out, &[]), 0);

    let systems = read_scores(&out.join("systems-bident.jsonl"));
    assert_eq!(systems.len(), LANG_PAIRS.len() * SYSTEMS.len());
    assert!(systems.iter().all(|s| s.metric == "bident" && s.segment_count == SEGMENTS));
    let segments = fs::read_to_string(out.join("segments-bident.jsonl")).unwrap();
    assert_eq!(segments.lines().count(), LANG_PAIRS.len() * SYSTEMS.len() * SEGMENTS);
    let first: Value = serde_json::from_str(segments.lines().next().unwrap()).unwrap();
    // the clean system copies references: both directions clamp to 0.99
    let odds = 0.99 / (1.0 - 0.99);
    assert_eq!(first["raw"].as_f64().unwrap(), odds * odds);
    assert_eq!(first["one_directional"], Value::Bool(false));

    let run = run_json(&out);
    assert_eq!(run["command"], "score");
    assert_eq!(run["backend"]["model_id"], "mock-v1");
    assert_eq!(run["config"]["norm"], "none");
    let inputs = run["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn score_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_exit(&score_mock(&a, &[]), 0);
    assert_exit(&score_mock(&b, &["--concurrency", "16", "--batch-size", "7"]), 0);
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn score_against_unreachable_server_exits_2() {
    let tmp = TempDir::new().unwrap();
    let de = dataset_path("de-en");
    let endpoint = dead_endpoint();
    let o = bident(&[
        "score",
        "--data",
        path_arg(&de),
        "--backend",
        "remote",
        "--endpoint",
        &endpoint,
        "--timeout-secs",
        "2",
        "--out",
        path_arg(tmp.path()),
    ]);
    assert_exit(&o, 2);
    assert!(stderr(&o).contains("unreachable"), "{}", stderr(&o));
}

#[test]
fn score_rejects_invalid_dataset() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.jsonl");
    fs::write(
        &bad,
        "{\"system\":\"s\",\"lang_pair\":\"en-de\",\"segment_id\":\"1\",\"candidate\":\"a\",\"references\":[\"a\"]}\n",
    )
    .unwrap();
    let o = bident(&["score", "--data", path_arg(&bad), "--backend", "mock", "--out", path_arg(&tmp.path().join("o"))]);
    assert_exit(&o, 1);
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn remote_scoring_matches_mock_scoring() {
    let tmp = TempDir::new().unwrap();
    let endpoint = spawn_server("served-model");
    let local = tmp.path().join("local");
    let remote = tmp.path().join("remote");
    assert_exit(&score_mock(&local, &[]), 0);
    let de = dataset_path("de-en");
    let ru = dataset_path("ru-en");
    let o = bident(&[
        "score",
        "--data",
        path_arg(&de),
        "--data",
        path_arg(&ru),
        "--backend",
        "remote",
        "--endpoint",
        &endpoint,
        "--out",
        path_arg(&remote),
    ]);
    assert_exit(&o, 0);
    for file in ["segments-bident.jsonl", "systems-bident.jsonl"] {
        assert_eq!(fs::read(local.join(file)).unwrap(), fs::read(remote.join(file)).unwrap(), "{file}");
    }
    let run = run_json(&remote);
    assert_eq!(run["backend"]["kind"], "remote");
    assert_eq!(run["backend"]["model_id"], "served-model");
    assert_eq!(run["backend"]["endpoint"], endpoint.as_str());
}

#[test]
fn cache_is_reused_and_does_not_change_outputs() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("nli-cache.jsonl");
    let plain = tmp.path().join("plain");
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    assert_exit(&score_mock(&plain, &[]), 0);
    assert_exit(&score_mock(&first, &["--cache", path_arg(&cache)]), 0);
    let size = fs::metadata(&cache).unwrap().len();
    assert!(size > 0);
    assert_exit(&score_mock(&second, &["--cache", path_arg(&cache)]), 0);
    // every pair was already cached, so nothing new is appended
    assert_eq!(fs::metadata(&cache).unwrap().len(), size);
    assert_eq!(snapshot(&plain), snapshot(&second));
}

#[test]
fn unusable_cache_path_only_warns() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    // a directory cannot be opened as the cache file
    let o = score_mock(&out, &["--cache", path_arg(tmp.path())]);
    assert_exit(&o, 0);
    assert!(stderr(&o).contains("cache"), "{}", stderr(&o));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"norm": "max", "concurrency": 2}"#).unwrap();
    let de = dataset_path("de-en");
    let from_file = tmp.path().join("f");
    let o = bident(&["score", "--data", path_arg(&de), "--config", path_arg(&cfg), "--out", path_arg(&from_file)]);
    assert_exit(&o, 0);
    assert_eq!(run_json(&from_file)["config"]["norm"], "max");
    let max = read_scores(&from_file.join("systems-bident.jsonl"));
    assert!(max.iter().all(|s| s.value <= 1.0));

    let overridden = tmp.path().join("o");
    let o = bident(&[
        "score",
        "--data",
        path_arg(&de),
        "--config",
        path_arg(&cfg),
        "--norm",
        "minmax",
        "--out",
        path_arg(&overridden),
    ]);
    assert_exit(&o, 0);
    assert_eq!(run_json(&overridden)["config"]["norm"], "minmax");

    fs::write(&cfg, r#"{"normalisation": "max"}"#).unwrap();
    let o = bident(&["score", "--data", path_arg(&de), "--config", path_arg(&cfg), "--out", path_arg(&overridden)]);
    assert_exit(&o, 1);
}

fn evaluate(out: &Path, scores: &[&Path], extra: &[&str]) -> std::process::Output {
    let human = human_path();
    let mut args = vec!["evaluate".to_string(), "--human".into(), path_arg(&human).into()];
    for s in scores {
        args.push("--scores".into());
        args.push(path_arg(s).into());
    }
    args.push("--out".into());
    args.push(path_arg(out).into());
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    bident(&args)
}

fn baseline(out: &Path, metrics: &str) -> std::process::Output {
    let de = dataset_path("de-en");
    let ru = dataset_path("ru-en");
    bident(&[
        "baseline",
        "--data",
        path_arg(&de),
        "--data",
        path_arg(&ru),
        "--metrics",
        metrics,
        "--out",
        path_arg(out),
    ])
}

#[test]
fn evaluate_reports_one_row_per_metric() {
    let tmp = TempDir::new().unwrap();
    let scored = tmp.path().join("scored");
    let base = tmp.path().join("base");
    let report = tmp.path().join("report");
    assert_exit(&score_mock(&scored, &[]), 0);
    assert_exit(&baseline(&base, "bleu,wer,per,ter"), 0);
    let files = [
        scored.join("systems-bident.jsonl"),
        base.join("systems-bleu.jsonl"),
        base.join("systems-wer.jsonl"),
        base.join("systems-per.jsonl"),
        base.join("systems-ter.jsonl"),
    ];
    let refs: Vec<&Path> = files.iter().map(|p| p.as_path()).collect();
    assert_exit(&evaluate(&report, &refs, &[]), 0);

    let summary: EvaluationSummary =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(summary.reports.len(), 2);
    for r in &summary.reports {
        let metrics: Vec<&str> = r.rows.iter().map(|row| row.metric.as_str()).collect();
        assert_eq!(metrics, ["bident", "bleu", "per", "ter", "wer"]);
        assert!(r.rows.iter().all(|row| row.n_systems == 4));
        // every metric orders the corruption levels correctly
        assert!(r.rows.iter().all(|row| row.spearman == 1.0), "{:?}", r.rows);
    }

    let table = fs::read_to_string(report.join("report.txt")).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["Metric", "de-en", "ru-en", "Average", "SpearmanAvg"]);
    // header, rule, five rows, then a blank line and the TER caveat
    assert_eq!(table.lines().count(), 2 + 5 + 2);
    assert!(table.lines().last().unwrap().starts_with("ter is approximate"));
    assert_eq!(summary.notes.len(), 1);
    assert_eq!(run_json(&report)["inputs"].as_array().unwrap().len(), 6);
}

#[test]
fn evaluate_metric_equal_to_human_correlates_perfectly() {
    let tmp = TempDir::new().unwrap();
    let base = tmp.path().join("base");
    assert_exit(&baseline(&base, "bleu"), 0);
    let ideal = tmp.path().join("ideal.jsonl");
    let mut text = String::new();
    for lp in LANG_PAIRS {
        for (system, _, human) in SYSTEMS {
            let s = SystemScore {
                system_name: system.into(),
                language_pair: lp.into(),
                metric: "bident".into(),
                value: human,
                segment_count: SEGMENTS,
            };
            text.push_str(&serde_json::to_string(&s).unwrap());
            text.push('\n');
        }
    }
    fs::write(&ideal, text).unwrap();
    let report = tmp.path().join("report");
    let bleu = base.join("systems-bleu.jsonl");
    assert_exit(&evaluate(&report, &[&ideal, &bleu], &["--metrics", "bleu,bident"]), 0);
    let summary: EvaluationSummary =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    for r in &summary.reports {
        let row = r.row("bident").unwrap();
        assert!((row.pearson - 1.0).abs() < 1e-12, "{}", row.pearson);
    }
}

#[test]
fn evaluate_filters_metrics_and_runs_significance() {
    let tmp = TempDir::new().unwrap();
    let scored = tmp.path().join("scored");
    let base = tmp.path().join("base");
    assert_exit(&score_mock(&scored, &[]), 0);
    assert_exit(&baseline(&base, "bleu,wer"), 0);
    let bident_scores = scored.join("systems-bident.jsonl");
    let bleu = base.join("systems-bleu.jsonl");
    let wer = base.join("systems-wer.jsonl");

    let report = tmp.path().join("r1");
    let o =
        evaluate(&report, &[&bident_scores, &bleu, &wer], &["--metrics", "bident,wer", "--significance", "wer,bident"]);
    assert_exit(&o, 0);
    let summary: EvaluationSummary =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert!(summary.reports.iter().all(|r| r.rows.len() == 2 && r.row("bleu").is_none()));
    let sig = summary.significance.expect("significance requested");
    assert_eq!((sig.metric.as_str(), sig.baseline.as_str()), ("wer", "bident"));
    assert_eq!(sig.test.df, 1);
    assert_eq!(sig.test.alpha, 0.01);
    assert!(fs::read_to_string(report.join("report.txt")).unwrap().contains("wer > bident"));

    let o = evaluate(&tmp.path().join("r2"), &[&bleu], &["--metrics", "bleu,nist"]);
    assert_exit(&o, 1);
    let o = evaluate(&tmp.path().join("r3"), &[&bleu], &["--significance", "bleu"]);
    assert_exit(&o, 1);
}

#[test]
fn evaluate_needs_three_human_scored_systems() {
    let tmp = TempDir::new().unwrap();
    let base = tmp.path().join("base");
    assert_exit(&baseline(&base, "bleu"), 0);
    let human = tmp.path().join("human.jsonl");
    let two: String =
        human_scores().lines().filter(|l| l.contains("de-en")).take(2).map(|l| format!("{l}\n")).collect();
    fs::write(&human, two).unwrap();
    let o = bident(&[
        "evaluate",
        "--scores",
        path_arg(&base.join("systems-bleu.jsonl")),
        "--human",
        path_arg(&human),
        "--out",
        path_arg(&tmp.path().join("r")),
    ]);
    assert_exit(&o, 1);
}

#[test]
fn baseline_writes_one_file_per_metric() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_exit(&baseline(&out, "bleu,wer"), 0);
    let mut names: Vec<String> = snapshot(&out).into_iter().map(|(n, _)| n).collect();
    names.sort();
    assert_eq!(names, ["run.json", "systems-bleu.jsonl", "systems-wer.jsonl"]);

    let bleu = read_scores(&out.join("systems-bleu.jsonl"));
    let wer = read_scores(&out.join("systems-wer.jsonl"));
    for lp in LANG_PAIRS {
        let clean =
            |v: &[SystemScore]| v.iter().find(|s| s.system_name == "sys-clean" && s.language_pair == lp).unwrap().value;
        assert_eq!(clean(&bleu), 1.0);
        assert_eq!(clean(&wer), 0.0);
    }
}

#[test]
fn baseline_rejects_unknown_metric() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = baseline(&out, "nist");
    assert_exit(&o, 1);
    assert!(stderr(&o).contains("unsupported metric"), "{}", stderr(&o));
    assert!(!out.exists());
}

fn write_lines(dir: &Path, name: &str, lines: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, lines.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    path
}

#[test]
fn convert_paired_files() {
    let tmp = TempDir::new().unwrap();
    let c = write_lines(tmp.path(), "c.txt", &["the cat sat", "a dog ran", "it rained"]);
    let r = write_lines(tmp.path(), "r.txt", &["the cat sat down", "a dog ran", "it was raining"]);
    let args = [
        "convert",
        "--candidates",
        path_arg(&c),
        "--references",
        path_arg(&r),
        "--system",
        "s1",
        "--lang-pair",
        "de-en",
    ];
    let o = bident(&args);
    assert_exit(&o, 0);
    let stdout = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(stdout.lines().count(), 3);
    let first: Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(first["segment_id"], "seg-1");
    assert_eq!(first["references"][0], "the cat sat down");

    // idempotent, and the --out form writes the same bytes plus a manifest
    assert_eq!(bident(&args).stdout, o.stdout);
    let out = tmp.path().join("out");
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path_arg(&out)]);
    assert_exit(&bident(&with_out), 0);
    assert_eq!(fs::read(out.join("dataset.jsonl")).unwrap(), o.stdout);
    assert_eq!(run_json(&out)["config"]["system"], "s1");
}

#[test]
fn convert_rejects_mismatched_lengths() {
    let tmp = TempDir::new().unwrap();
    let c = write_lines(tmp.path(), "c.txt", &["one", "two", "three"]);
    let r = write_lines(tmp.path(), "r.txt", &["one", "two"]);
    let o = bident(&[
        "convert",
        "--candidates",
        path_arg(&c),
        "--references",
        path_arg(&r),
        "--system",
        "s",
        "--lang-pair",
        "de-en",
    ]);
    assert_exit(&o, 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn ping_mock() {
    let o = bident(&["nli", "ping", "--backend", "mock"]);
    assert_exit(&o, 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "mock-v1");
}

#[test]
fn ping_healthy_server() {
    let endpoint = spawn_server("served-model");
    let o = bident(&["nli", "ping", "--backend", "remote", "--endpoint", &endpoint]);
    assert_exit(&o, 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "served-model");
}

#[test]
fn ping_dead_endpoint() {
    let endpoint = dead_endpoint();
    let o = bident(&["nli", "ping", "--backend", "remote", "--endpoint", &endpoint, "--timeout-secs", "2"]);
    assert_exit(&o, 2);
}

#[test]
fn endpoint_env_var_is_the_fallback() {
    let endpoint = spawn_server("from-env");
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_bident"))
        .args(["nli", "ping", "--backend", "remote"])
        .env("BIDENT_NLI_ENDPOINT", &endpoint)
        .output()
        .unwrap();
    assert_exit(&o, 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "from-env");

    // an explicit flag beats the environment
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_bident"))
        .args(["nli", "ping", "--backend", "remote", "--endpoint", &dead_endpoint(), "--timeout-secs", "2"])
        .env("BIDENT_NLI_ENDPOINT", &endpoint)
        .output()
        .unwrap();
    assert_exit(&o, 2);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_exit(&bident(&["score", "--no-such-flag"]), 1);
    assert_exit(&bident(&["frobnicate"]), 1);
    assert_exit(&bident(&["score", "--data", "x", "--norm", "median", "--out", "o"]), 1);
    assert_exit(&bident(&["--help"]), 0);
    assert_exit(&bident(&["--version"]), 0);
}

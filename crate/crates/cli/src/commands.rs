use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use bident_core::baselines::baseline_system_score;
use bident_core::bidient::system_score;
use bident_core::corpus::{convert_plain_text, parse_dataset, parse_human_scores};
use bident_core::nli::{classify_pair, Cache, CachedBackend};
use bident_core::stats::{build_report, compare_metrics, render_table, summarize};
use bident_core::{
    BaselineMetric, EntailmentBackend, EvaluationSet, HumanScore, NormalizationMode, SystemScore, BIDENT_METRIC,
};
use serde::Serialize;

use crate::args::{BaselineArgs, ConvertArgs, EvaluateArgs, PingArgs, ScoreArgs};
use crate::config::ConfigFile;
use crate::manifest::{BackendInfo, InputDigest, RunManifest};
use crate::Failure;

fn read_input(role: &'static str, path: &Path, digests: &mut Vec<InputDigest>) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    digests.push(InputDigest::of_bytes(role, path, &bytes));
    Ok(bytes)
}

/// Parses every dataset; each must cover a different language pair.
fn load_sets(paths: &[PathBuf], digests: &mut Vec<InputDigest>) -> Result<Vec<EvaluationSet>> {
    let mut seen = BTreeSet::new();
    let mut sets = Vec::with_capacity(paths.len());
    for path in paths {
        let bytes = read_input("data", path, digests)?;
        let set = parse_dataset(bytes.as_slice()).with_context(|| format!("loading {}", path.display()))?;
        if !seen.insert(set.language_pair.clone()) {
            bail!("language pair {} appears in more than one dataset", set.language_pair);
        }
        sets.push(set);
    }
    Ok(sets)
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut text = String::new();
    for record in records {
        text.push_str(&serde_json::to_string(&record)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(bytes: &[u8], path: &Path) -> Result<Vec<T>> {
    let text = std::str::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| serde_json::from_str(line).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

#[derive(Serialize)]
struct ScoreConfig {
    metric: &'static str,
    norm: NormalizationMode,
}

pub fn score(args: ScoreArgs) -> Result<(), Failure> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let descriptor = file.backend(&args.backend)?;
    let norm = args.norm.or(file.norm).unwrap_or_default();
    let options = file.batch_options(args.concurrency, args.batch_size)?;
    let mut inputs = Vec::new();
    let sets = load_sets(&args.data, &mut inputs)?;

    let backend = descriptor.connect().map_err(Failure::nli)?;
    let model_id = backend.model_id().to_string();
    let backend: Box<dyn EntailmentBackend> = match args.cache.or(file.cache) {
        None => backend,
        Some(path) => match Cache::open(&path, &model_id) {
            Ok(cache) => {
                log::info!("cache {}: {} entries for {model_id}", path.display(), cache.len());
                Box::new(CachedBackend::new(backend, cache).map_err(Failure::nli)?)
            }
            Err(e) => {
                log::warn!("cache {} unavailable, continuing without it: {e}", path.display());
                backend
            }
        },
    };

    let mut scored = Vec::with_capacity(sets.len());
    for set in &sets {
        log::info!("scoring {} ({} segments)", set.language_pair, set.segment_count());
        scored.push(system_score(set, &backend, norm, options).map_err(Failure::metric)?);
    }

    create_out_dir(&args.out)?;
    write_jsonl(&args.out.join("segments-bident.jsonl"), scored.iter().flat_map(|s| s.segment_records()))?;
    write_jsonl(&args.out.join("systems-bident.jsonl"), scored.iter().flat_map(|s| &s.systems))?;
    let backend_info = BackendInfo {
        kind: serde_json::to_value(descriptor.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        model_id,
        endpoint: descriptor.endpoint.clone(),
    };
    RunManifest::new("score", ScoreConfig { metric: BIDENT_METRIC, norm }, Some(backend_info), inputs)
        .write(&args.out)?;
    Ok(())
}

fn parse_baseline_metrics(names: &[String]) -> Result<Vec<BaselineMetric>> {
    let mut metrics = Vec::new();
    for name in names.iter().map(|n| n.trim().to_lowercase()).filter(|n| !n.is_empty()) {
        let metric: BaselineMetric = name.parse()?;
        if !metrics.contains(&metric) {
            metrics.push(metric);
        }
    }
    if metrics.is_empty() {
        bail!("no metrics requested");
    }
    Ok(metrics)
}

#[derive(Serialize)]
struct BaselineConfig {
    metrics: Vec<&'static str>,
}

pub fn baseline(args: BaselineArgs) -> Result<(), Failure> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let metrics = match args.metrics.or(file.metrics) {
        Some(names) => parse_baseline_metrics(&names)?,
        None => BaselineMetric::ALL.to_vec(),
    };
    let mut inputs = Vec::new();
    let sets = load_sets(&args.data, &mut inputs)?;

    let mut results = Vec::with_capacity(metrics.len());
    for &metric in &metrics {
        let mut scores = Vec::new();
        for set in &sets {
            let s = baseline_system_score(set, metric).with_context(|| format!("{metric} on {}", set.language_pair))?;
            scores.extend(s);
        }
        results.push((metric, scores));
    }

    create_out_dir(&args.out)?;
    for (metric, scores) in &results {
        write_jsonl(&args.out.join(format!("systems-{metric}.jsonl")), scores)?;
    }
    let config = BaselineConfig { metrics: metrics.iter().map(|m| m.name()).collect() };
    RunManifest::new("baseline", config, None, inputs).write(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluateConfig {
    metrics: Option<Vec<String>>,
    significance: Option<(String, String)>,
    alpha: f64,
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let alpha = file.alpha(args.alpha)?;
    let wanted: Option<Vec<String>> = args.metrics.or(file.metrics).map(|names| {
        let mut out: Vec<String> = Vec::new();
        for n in names.iter().map(|n| n.trim().to_lowercase()).filter(|n| !n.is_empty()) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    });
    let significance = match args.significance.or(file.significance) {
        None => None,
        Some(pair) => match pair.as_slice() {
            [a, b] if a != b => Some((a.trim().to_lowercase(), b.trim().to_lowercase())),
            _ => return Err(anyhow!("--significance takes two different metric names, e.g. bident,bleu").into()),
        },
    };

    let mut inputs = Vec::new();
    let mut scores: Vec<SystemScore> = Vec::new();
    for path in &args.scores {
        let bytes = read_input("scores", path, &mut inputs)?;
        scores.extend(read_jsonl::<SystemScore>(&bytes, path)?);
    }
    let mut human: Vec<HumanScore> = Vec::new();
    for path in &args.human {
        let bytes = read_input("human", path, &mut inputs)?;
        human.extend(parse_human_scores(bytes.as_slice()).with_context(|| format!("loading {}", path.display()))?);
    }

    if let Some(wanted) = &wanted {
        for metric in wanted {
            if !scores.iter().any(|s| &s.metric == metric) {
                return Err(anyhow!("no scores for requested metric {metric:?}").into());
            }
        }
        scores.retain(|s| wanted.contains(&s.metric));
    }

    let mut human_by_pair: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
    for h in &human {
        human_by_pair.entry(h.lang_pair.as_str()).or_default().push((h.system.clone(), h.human_score));
    }
    for lp in scores.iter().map(|s| s.language_pair.as_str()).collect::<BTreeSet<_>>() {
        if !human_by_pair.contains_key(lp) {
            log::warn!("no human scores for {lp}; its system scores are ignored");
        }
    }

    let mut reports = Vec::new();
    for (lp, human) in &human_by_pair {
        let mut by_metric: BTreeMap<String, Vec<SystemScore>> = BTreeMap::new();
        for s in scores.iter().filter(|s| s.language_pair == *lp) {
            by_metric.entry(s.metric.clone()).or_default().push(s.clone());
        }
        if by_metric.is_empty() {
            log::warn!("human scores for {lp} but no system scores; skipped");
            continue;
        }
        if let Some(wanted) = &wanted {
            if let Some(missing) = wanted.iter().find(|m| !by_metric.contains_key(*m)) {
                return Err(anyhow!("no {missing} scores for {lp}").into());
            }
        }
        reports.push(build_report(&by_metric, human, lp).with_context(|| format!("correlating {lp}"))?);
    }
    if reports.is_empty() {
        return Err(anyhow!("no language pair has both system and human scores").into());
    }

    let mut summary = summarize(reports);
    if let Some((metric, base)) = &significance {
        let comparison = compare_metrics(&summary.reports, metric, base, alpha)
            .with_context(|| format!("significance of {metric} over {base}"))?;
        summary.significance = Some(comparison);
    }

    create_out_dir(&args.out)?;
    let mut json = serde_json::to_string_pretty(&summary).context("serializing report")?;
    json.push('\n');
    let report_json = args.out.join("report.json");
    fs::write(&report_json, json).with_context(|| format!("writing {}", report_json.display()))?;
    let report_txt = args.out.join("report.txt");
    fs::write(&report_txt, render_table(&summary)).with_context(|| format!("writing {}", report_txt.display()))?;
    RunManifest::new("evaluate", EvaluateConfig { metrics: wanted, significance, alpha }, None, inputs)
        .write(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct ConvertConfig<'a> {
    system: &'a str,
    lang_pair: &'a str,
}

pub fn convert(args: ConvertArgs) -> Result<(), Failure> {
    let mut inputs = Vec::new();
    let read_text = |role, path: &Path, inputs: &mut Vec<InputDigest>| -> Result<String> {
        String::from_utf8(read_input(role, path, inputs)?).with_context(|| format!("{} is not UTF-8", path.display()))
    };
    let candidates = read_text("candidates", &args.candidates, &mut inputs)?;
    let references = read_text("references", &args.references, &mut inputs)?;
    let jsonl =
        convert_plain_text(&candidates, &references, &args.system, &args.lang_pair).map_err(anyhow::Error::from)?;

    match &args.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(jsonl.as_bytes()).context("writing to stdout")?;
            stdout.flush().context("writing to stdout")?;
        }
        Some(dir) => {
            create_out_dir(dir)?;
            let path = dir.join("dataset.jsonl");
            fs::write(&path, jsonl).with_context(|| format!("writing {}", path.display()))?;
            let config = ConvertConfig { system: &args.system, lang_pair: &args.lang_pair };
            RunManifest::new("convert", config, None, inputs).write(dir)?;
        }
    }
    Ok(())
}

pub fn ping(args: PingArgs) -> Result<(), Failure> {
    // any failure here means the backend is not usable
    let run = || -> Result<String> {
        let file = ConfigFile::load(args.config.as_deref())?;
        let backend = file.backend(&args.backend)?.connect()?;
        let reported = backend.health()?;
        let d = classify_pair("A man is sleeping.", "A person is asleep.", &backend)?;
        log::info!(
            "classify round-trip ok: entailment {:.4}, neutral {:.4}, contradiction {:.4}",
            d.entailment,
            d.neutral,
            d.contradiction
        );
        Ok(reported)
    };
    let model_id = run().map_err(Failure::Backend)?;
    println!("{model_id}");
    Ok(())
}

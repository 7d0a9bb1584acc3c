use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{paired_t_test, pearson, spearman, Alternative, PairedSample, StatsError, TTestOutcome};
use crate::baselines::{is_error_rate_metric, TER_MAX_SHIFT_LEN};
use crate::bidient::SystemScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub pearson: f64,
    pub spearman: f64,
    pub n_systems: usize,
}

/// Correlations of every metric with human scores for one language pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub language_pair: String,
    pub rows: Vec<CorrelationRow>,
    pub significance: Option<TTestOutcome>,
}

impl CorrelationReport {
    pub fn row(&self, metric: &str) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Correlates each metric's system scores with the human scores.
///
/// Systems are matched by name and only human-scored systems take part.
/// Error-rate metrics (WER, PER, TER) are negated first so that a positive
/// correlation means "agrees with humans" for every row. Rows come out in
/// ascending metric-name order.
pub fn build_report(
    system_scores: &BTreeMap<String, Vec<SystemScore>>,
    human: &[(String, f64)],
    language_pair: &str,
) -> Result<CorrelationReport, StatsError> {
    if human.len() < 3 {
        return Err(StatsError::InsufficientSystems(human.len()));
    }
    let mut seen = HashSet::new();
    for (system, _) in human {
        if !seen.insert(system.as_str()) {
            return Err(StatsError::DuplicateSystem { metric: "human".into(), system: system.clone() });
        }
    }
    let human_values: Vec<f64> = human.iter().map(|(_, h)| *h).collect();

    let mut rows = Vec::with_capacity(system_scores.len());
    for (metric, scores) in system_scores {
        let mut by_system: HashMap<&str, f64> = HashMap::with_capacity(scores.len());
        for s in scores {
            if by_system.insert(s.system_name.as_str(), s.value).is_some() {
                return Err(StatsError::DuplicateSystem { metric: metric.clone(), system: s.system_name.clone() });
            }
        }
        let sign = if is_error_rate_metric(metric) { -1.0 } else { 1.0 };
        let values = human
            .iter()
            .map(|(system, _)| {
                by_system
                    .get(system.as_str())
                    .map(|v| sign * v)
                    .ok_or_else(|| StatsError::MissingSystem { metric: metric.clone(), system: system.clone() })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let sample = PairedSample::new(values, human_values.clone())?;
        rows.push(CorrelationRow {
            metric: metric.clone(),
            pearson: pearson(&sample)?,
            spearman: spearman(&sample)?,
            n_systems: sample.len(),
        });
    }
    Ok(CorrelationReport { language_pair: language_pair.to_string(), rows, significance: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAverage {
    pub metric: String,
    pub pearson: f64,
    pub spearman: f64,
    pub language_pairs: usize,
}

/// Paired t-test of one metric's per-language-pair Pearson correlations
/// against another's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceComparison {
    pub metric: String,
    pub baseline: String,
    pub test: TTestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub reports: Vec<CorrelationReport>,
    pub averages: Vec<MetricAverage>,
    pub significance: Option<SignificanceComparison>,
    /// Caveats about individual rows, such as approximate metrics.
    pub notes: Vec<String>,
}

/// Averages unrounded correlations over the language pairs where each
/// metric appears.
pub fn summarize(reports: Vec<CorrelationReport>) -> EvaluationSummary {
    let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for row in reports.iter().flat_map(|r| &r.rows) {
        let e = acc.entry(row.metric.as_str()).or_insert((0.0, 0.0, 0));
        e.0 += row.pearson;
        e.1 += row.spearman;
        e.2 += 1;
    }
    let averages: Vec<MetricAverage> = acc
        .into_iter()
        .map(|(metric, (p, s, n))| MetricAverage {
            metric: metric.to_string(),
            pearson: p / n as f64,
            spearman: s / n as f64,
            language_pairs: n,
        })
        .collect();
    let notes = if averages.iter().any(|a: &MetricAverage| a.metric == "ter") {
        vec![format!("ter is approximate: greedy shift search with blocks of at most {TER_MAX_SHIFT_LEN} words")]
    } else {
        Vec::new()
    };
    EvaluationSummary { reports, averages, significance: None, notes }
}

/// Tests whether `metric` correlates better than `baseline` across language
/// pairs (one-tailed, paired over language pairs).
pub fn compare_metrics(
    reports: &[CorrelationReport],
    metric: &str,
    baseline: &str,
    alpha: f64,
) -> Result<SignificanceComparison, StatsError> {
    let column = |name: &str| {
        reports
            .iter()
            .map(|r| r.row(name).map(|row| row.pearson).ok_or_else(|| StatsError::UnknownMetric(name.to_string())))
            .collect::<Result<Vec<f64>, _>>()
    };
    let a = column(metric)?;
    let b = column(baseline)?;
    let test = paired_t_test(&a, &b, Alternative::Greater, alpha)?;
    Ok(SignificanceComparison { metric: metric.to_string(), baseline: baseline.to_string(), test })
}

/// Plain-text table: metric rows, one Pearson column per language pair,
/// then the average Pearson and average Spearman.
pub fn render_table(summary: &EvaluationSummary) -> String {
    let mut header: Vec<String> = vec!["Metric".into()];
    header.extend(summary.reports.iter().map(|r| r.language_pair.clone()));
    header.push("Average".into());
    header.push("SpearmanAvg".into());

    let mut body: Vec<Vec<String>> = Vec::new();
    for avg in &summary.averages {
        let mut row = vec![avg.metric.clone()];
        for report in &summary.reports {
            row.push(report.row(&avg.metric).map_or_else(|| "-".to_string(), |r| format!("{:.3}", r.pearson)));
        }
        row.push(format!("{:.3}", avg.pearson));
        row.push(format!("{:.3}", avg.spearman));
        body.push(row);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let mut text = String::new();
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                let _ = write!(text, "{:<w$}", cell, w = widths[c]);
            } else {
                let _ = write!(text, "  {:>w$}", cell, w = widths[c]);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&header, &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&rule, &mut out);
    for row in &body {
        line(row, &mut out);
    }

    if let Some(sig) = &summary.significance {
        let _ = writeln!(
            out,
            "\n{} > {}: t = {:.4}, df = {}, one-tailed p = {:.4}, {} at alpha = {}",
            sig.metric,
            sig.baseline,
            sig.test.t,
            sig.test.df,
            sig.test.p_one_tailed,
            if sig.test.significant { "significant" } else { "not significant" },
            sig.test.alpha
        );
    }
    if !summary.notes.is_empty() {
        out.push('\n');
        for note in &summary.notes {
            let _ = writeln!(out, "{note}");
        }
    }
    out
}

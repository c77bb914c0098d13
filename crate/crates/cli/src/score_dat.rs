use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use divbench_core::dat::{score_responses, word_frequency, DatResponse, WordFrequency, WordValidity};
use divbench_core::StaticEmbeddingStore;
use divbench_harness::{RawSample, SampleOutcome};
use divbench_store::{Artifact, ArtifactKind, RunStore};
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::inputs::{self, condition_of_task, InputKind};
use crate::summary::{estimate, fmt_opt, Estimate};
use crate::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatScoreRow {
    pub sample_id: String,
    pub source: String,
    pub condition: String,
    pub temperature: Option<f64>,
    pub scoreable: bool,
    pub valid_words: usize,
    pub incomplete: bool,
    pub score: Option<f64>,
    /// The scored words, space separated.
    pub selected: String,
    /// `word:reason` for every rejected entry.
    pub rejected: String,
    pub parse_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatGroup {
    pub source: String,
    pub condition: String,
    pub temperature: Option<f64>,
    pub n_samples: usize,
    pub n_scoreable: usize,
    /// Scoreable responses over all responses, unparseable replies included.
    pub adherence: f64,
    pub score: Option<Estimate>,
    pub top_words: Vec<WordFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatSummary {
    pub table_fingerprint: String,
    pub n_samples: usize,
    pub n_scoreable: usize,
    pub adherence: f64,
    pub groups: Vec<DatGroup>,
}

fn reason(v: WordValidity) -> &'static str {
    match v {
        WordValidity::Valid => "valid",
        WordValidity::OutOfVocabulary => "oov",
        WordValidity::RuleViolation => "rule",
        WordValidity::Duplicate => "duplicate",
    }
}

type GroupKey = (String, String, String);

/// Scores every DAT-family sample in `samples`, writes `scores_dat.csv` and
/// `summary_dat.json`, and returns the summary. Rows are ordered by
/// (campaign, index) regardless of the order samples were persisted in.
pub fn score_samples(
    ctx: &Context,
    store: &RunStore,
    samples: &[RawSample],
    table: &StaticEmbeddingStore,
) -> Result<DatSummary> {
    let mut dat: Vec<&RawSample> = samples.iter().filter(|s| condition_of_task(&s.task).is_some()).collect();
    if dat.is_empty() {
        bail!("no DAT responses to score");
    }
    dat.sort_by(|a, b| (&a.campaign, a.index, &a.sample_id).cmp(&(&b.campaign, b.index, &b.sample_id)));

    let parsed: Vec<(usize, DatResponse)> = dat
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.words().map(|w| {
                (
                    i,
                    DatResponse {
                        id: s.sample_id.clone(),
                        words: w.to_vec(),
                        source: s.source.clone(),
                        condition: condition_of_task(&s.task).expect("filtered"),
                        temperature: s.temperature,
                    },
                )
            })
        })
        .collect();
    let responses: Vec<DatResponse> = parsed.iter().map(|(_, r)| r.clone()).collect();
    let scored = score_responses(&responses, table);
    let mut by_sample: Vec<Option<usize>> = vec![None; dat.len()];
    for (k, (i, _)) in parsed.iter().enumerate() {
        by_sample[*i] = Some(k);
    }

    let mut rows = Vec::with_capacity(dat.len());
    let mut groups: BTreeMap<GroupKey, (Option<f64>, Vec<usize>)> = BTreeMap::new();
    for (i, s) in dat.iter().enumerate() {
        let condition = condition_of_task(&s.task).expect("filtered").to_string();
        let row = match by_sample[i] {
            Some(k) => {
                let (v, score) = &scored[k];
                DatScoreRow {
                    sample_id: s.sample_id.clone(),
                    source: s.source.clone(),
                    condition: condition.clone(),
                    temperature: s.temperature,
                    scoreable: v.is_scoreable,
                    valid_words: v.valid_count(),
                    incomplete: v.incomplete,
                    score: score.as_ref().map(|x| x.value),
                    selected: v.selected.join(" "),
                    rejected: v
                        .checks
                        .iter()
                        .filter(|c| c.validity != WordValidity::Valid)
                        .map(|c| format!("{}:{}", c.raw.replace(char::is_whitespace, "_"), reason(c.validity)))
                        .collect::<Vec<_>>()
                        .join(" "),
                    parse_failure: None,
                }
            }
            None => DatScoreRow {
                sample_id: s.sample_id.clone(),
                source: s.source.clone(),
                condition: condition.clone(),
                temperature: s.temperature,
                scoreable: false,
                valid_words: 0,
                incomplete: true,
                score: None,
                selected: String::new(),
                rejected: String::new(),
                parse_failure: match &s.outcome {
                    SampleOutcome::Failure { reason } => Some(reason.to_string()),
                    _ => Some("not a word list".into()),
                },
            },
        };
        let key = (s.source.clone(), condition, fmt_opt(s.temperature));
        groups.entry(key).or_insert((s.temperature, Vec::new())).1.push(i);
        rows.push(row);
    }

    let n_scoreable = rows.iter().filter(|r| r.scoreable).count();
    if n_scoreable == 0 {
        bail!("none of the {} responses is scoreable", rows.len());
    }

    let level = ctx.config.scoring.ci_level;
    let mut group_out = Vec::new();
    for ((source, condition, _), (temperature, members)) in groups {
        let scores: Vec<f64> = members.iter().filter_map(|&i| rows[i].score).collect();
        let lists: Vec<DatResponse> = members
            .iter()
            .filter_map(|&i| by_sample[i].map(|k| responses[k].clone()))
            .collect();
        let mut top = if lists.is_empty() { Vec::new() } else { word_frequency(&lists)? };
        top.truncate(ctx.config.scoring.top_words);
        group_out.push(DatGroup {
            source,
            condition,
            temperature,
            n_samples: members.len(),
            n_scoreable: scores.len(),
            adherence: scores.len() as f64 / members.len() as f64,
            score: estimate(&scores, level),
            top_words: top,
        });
    }

    let scores_artifact = Artifact::named(ArtifactKind::Scores, "dat")?;
    store.replace_records(&scores_artifact, &rows)?;
    let summary = DatSummary {
        table_fingerprint: table.fingerprint().to_string(),
        n_samples: rows.len(),
        n_scoreable,
        adherence: n_scoreable as f64 / rows.len() as f64,
        groups: group_out,
    };
    store.write_document(
        &Artifact::named(ArtifactKind::Summary, "dat")?,
        &summary,
        &[Artifact::samples().file_name(), scores_artifact.file_name()],
    )?;
    Ok(summary)
}

pub fn describe(summary: &DatSummary) -> Vec<String> {
    let mut lines = vec![format!(
        "DAT: {} responses, {} scoreable (adherence {:.3})",
        summary.n_samples, summary.n_scoreable, summary.adherence
    )];
    for g in &summary.groups {
        let t = g.temperature.map(|t| format!(" t={t}")).unwrap_or_default();
        let score = match &g.score {
            Some(e) => match (e.ci_low, e.ci_high) {
                (Some(lo), Some(hi)) => format!("mean {:.2} [{lo:.2}, {hi:.2}]", e.mean),
                _ => format!("mean {:.2}", e.mean),
            },
            None => "no scoreable responses".into(),
        };
        lines.push(format!(
            "  {} {}{t}: n={} adherence {:.3} {score}",
            g.source, g.condition, g.n_samples, g.adherence
        ));
    }
    lines
}

pub fn cmd_score_dat(ctx: &Context, paths: &[PathBuf]) -> Result<Outcome> {
    let inputs = inputs::load(paths, InputKind::Dat)?;
    let table = ctx.embedding_table()?;
    let run_id = ctx.run_id("score-dat", &inputs.hashes);
    let store = ctx.open_store(
        &run_id,
        &[
            ("embedding_table", table.fingerprint().to_string()),
            ("inputs", inputs.combined_hash()),
        ],
    )?;
    inputs::persist_samples(&store, &inputs.samples)?;
    let summary = score_samples(ctx, &store, &inputs.samples, &table)?;
    Ok(Outcome::new(run_id, store.dir(), describe(&summary)))
}

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use anyhow::{bail, Result};
use divbench_core::complexity::{normalized_lz, Rendering};
use divbench_core::dsi::{score_text, DsiMode};
use divbench_core::embed::Concurrency;
use divbench_core::writing::{
    match_word_count_distributions, theme_similarity, validate_structure, word_count, TaskKind, TextSample,
    WritingTaskSpec,
};
use divbench_core::StaticEmbeddingStore;
use divbench_harness::{RawSample, SampleOutcome};
use divbench_store::{Artifact, ArtifactKind, RunStore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::NonConforming;
use crate::context::Context;
use crate::inputs::{self, InputKind};
use crate::summary::{estimate, fmt_opt, Estimate};
use crate::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextScoreRow {
    pub sample_id: String,
    pub source: String,
    pub task: String,
    pub temperature: Option<f64>,
    pub word_count: usize,
    pub dsi: Option<f64>,
    pub dsi_mode: DsiMode,
    pub dsi_pairs: Option<usize>,
    pub dsi_error: Option<String>,
    pub lz_phrases: Option<usize>,
    pub lz_length: Option<usize>,
    pub lz_normalized: Option<f64>,
    pub lz_rendering: Rendering,
    pub structure_pass: Option<bool>,
    pub structure_details: Option<String>,
    pub structure_reason: Option<String>,
    pub theme_similarity: Option<f64>,
    /// Kept by word-count matching; empty when matching is off or the row
    /// was dropped before matching.
    pub matched: Option<bool>,
    /// Whether the row enters the group statistics and comparisons.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextGroup {
    pub source: String,
    pub task: String,
    pub temperature: Option<f64>,
    pub n_samples: usize,
    /// Rows entering the statistics below.
    pub n_used: usize,
    pub dsi: Option<Estimate>,
    pub lz_normalized: Option<Estimate>,
    pub word_count: Option<Estimate>,
    pub structure_pass_rate: Option<f64>,
    pub theme_similarity: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub task: String,
    pub converged: bool,
    pub max_mean_diff: f64,
    pub max_sd_diff: f64,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSummary {
    pub contextual_provider: String,
    pub contextual_spec: String,
    pub dsi_mode: DsiMode,
    pub lz_rendering: Rendering,
    pub non_conforming: NonConforming,
    pub n_samples: usize,
    pub n_dsi_errors: usize,
    pub n_non_conforming: usize,
    pub matching: Vec<MatchReport>,
    pub groups: Vec<TextGroup>,
}

/// Scores every writing-task sample, writes `scores_text.csv` and
/// `summary_text.json`. Failures of the contextual provider become null
/// cells with a reason; they never abort the run.
pub fn score_samples(
    ctx: &Context,
    store: &RunStore,
    samples: &[RawSample],
    table: Option<&StaticEmbeddingStore>,
) -> Result<TextSummary> {
    let mut texts: Vec<(&RawSample, TaskKind)> = samples
        .iter()
        .filter_map(|s| s.task.parse::<TaskKind>().ok().map(|k| (s, k)))
        .collect();
    if texts.is_empty() {
        bail!("no writing-task texts to score");
    }
    texts.sort_by(|a, b| (&a.0.campaign, a.0.index, &a.0.sample_id).cmp(&(&b.0.campaign, b.0.index, &b.0.sample_id)));

    let opts = &ctx.config.scoring;
    let stopwords = ctx.stopwords()?;
    let (provider, spec) = ctx.contextual()?;
    let body = |s: &RawSample| match &s.outcome {
        SampleOutcome::Text { text } => Some(text.clone()),
        _ => None,
    };

    let dsi_one = |s: &RawSample| match body(s) {
        Some(text) => score_text(&text, &stopwords, &spec, provider.as_ref(), opts.dsi_mode).map_err(|e| e.to_string()),
        None => Err("no text (reply failed to parse)".to_string()),
    };
    let dsi: Vec<_> = match provider.concurrency() {
        Concurrency::Parallel => texts.par_iter().map(|(s, _)| dsi_one(s)).collect(),
        Concurrency::Serialized => texts.iter().map(|(s, _)| dsi_one(s)).collect(),
    };

    let as_samples: Vec<TextSample> = texts
        .iter()
        .map(|(s, k)| TextSample {
            id: s.sample_id.clone(),
            source: s.source.clone(),
            task: *k,
            text: body(s).unwrap_or_default(),
            temperature: s.temperature,
        })
        .collect();

    let theme: Vec<Option<f64>> = match &opts.theme_word {
        Some(word) => {
            let Some(table) = table else {
                bail!("scoring.theme_word needs an embedding table");
            };
            theme_similarity(&as_samples, word, table, &stopwords)?
        }
        None => vec![None; texts.len()],
    };

    let verdicts: Vec<_> = texts
        .iter()
        .map(|(s, kind)| body(s).map(|t| validate_structure(&t, &WritingTaskSpec::for_kind(*kind))))
        .collect();
    let eligible: Vec<bool> = verdicts
        .iter()
        .map(|v| opts.non_conforming == NonConforming::Keep || v.as_ref().is_some_and(|v| v.passes))
        .collect();

    let mut matching = Vec::new();
    let mut retained: Option<HashSet<String>> = None;
    if let Some(mopts) = &ctx.config.matching {
        let mut kept = HashSet::new();
        let mut by_task: BTreeMap<TaskKind, BTreeMap<String, Vec<TextSample>>> = BTreeMap::new();
        for (s, _) in as_samples.iter().zip(&eligible).filter(|(s, ok)| **ok && !s.text.is_empty()) {
            by_task.entry(s.task).or_default().entry(s.source.clone()).or_default().push(s.clone());
        }
        for (task, groups) in by_task {
            if groups.len() < 2 {
                kept.extend(groups.values().flatten().map(|s| s.id.clone()));
                continue;
            }
            let outcome = match_word_count_distributions(&groups, mopts)?;
            kept.extend(outcome.retained.values().flatten().map(|s| s.id.clone()));
            matching.push(MatchReport {
                task: task.to_string(),
                converged: outcome.converged,
                max_mean_diff: outcome.max_mean_diff,
                max_sd_diff: outcome.max_sd_diff,
                dropped: outcome.dropped,
            });
        }
        retained = Some(kept);
    }

    let mut rows = Vec::with_capacity(texts.len());
    for (i, (s, kind)) in texts.iter().enumerate() {
        let text = body(s);
        let lz = text.as_deref().map(|t| normalized_lz(t, opts.lz_rendering));
        let verdict = verdicts[i].clone();
        let matched = if eligible[i] {
            retained.as_ref().map(|k| k.contains(&s.sample_id))
        } else {
            None
        };
        let (dsi_value, dsi_pairs, dsi_error) = match &dsi[i] {
            Ok(d) => (Some(d.value), Some(d.n_pairs), None),
            Err(e) => (None, None, Some(e.clone())),
        };
        rows.push(TextScoreRow {
            sample_id: s.sample_id.clone(),
            source: s.source.clone(),
            task: kind.to_string(),
            temperature: s.temperature,
            word_count: text.as_deref().map(word_count).unwrap_or(0),
            dsi: dsi_value,
            dsi_mode: opts.dsi_mode,
            dsi_pairs,
            dsi_error,
            lz_phrases: lz.map(|r| r.phrase_count),
            lz_length: lz.map(|r| r.length),
            lz_normalized: lz.map(|r| r.normalized).filter(|x| x.is_finite()),
            lz_rendering: opts.lz_rendering,
            structure_pass: verdict.as_ref().map(|v| v.passes),
            structure_details: verdict.as_ref().map(|v| v.details.to_string()),
            structure_reason: verdict.map(|v| v.reason),
            theme_similarity: theme[i],
            matched,
            used: eligible[i] && matched != Some(false),
        });
    }
    type Bucket<'r> = (Option<f64>, Vec<&'r TextScoreRow>);
    let level = opts.ci_level;
    let mut grouped: BTreeMap<(String, String, String), Bucket> = BTreeMap::new();
    for r in &rows {
        grouped
            .entry((r.source.clone(), r.task.clone(), fmt_opt(r.temperature)))
            .or_insert((r.temperature, Vec::new()))
            .1
            .push(r);
    }
    let groups = grouped
        .into_iter()
        .map(|((source, task, _), (temperature, members))| {
            let n_samples = members.len();
            let verdicts: Vec<bool> = members.iter().filter_map(|r| r.structure_pass).collect();
            let used: Vec<&TextScoreRow> = members.into_iter().filter(|r| r.used).collect();
            let col = |f: &dyn Fn(&TextScoreRow) -> Option<f64>| -> Vec<f64> { used.iter().filter_map(|r| f(r)).collect() };
            TextGroup {
                source,
                task,
                temperature,
                n_samples,
                n_used: used.len(),
                dsi: estimate(&col(&|r| r.dsi), level),
                lz_normalized: estimate(&col(&|r| r.lz_normalized), level),
                word_count: estimate(&col(&|r| r.structure_pass.map(|_| r.word_count as f64)), level),
                structure_pass_rate: (!verdicts.is_empty())
                    .then(|| verdicts.iter().filter(|&&p| p).count() as f64 / verdicts.len() as f64),
                theme_similarity: estimate(&col(&|r| r.theme_similarity), level),
            }
        })
        .collect();

    let scores_artifact = Artifact::named(ArtifactKind::Scores, "text")?;
    store.replace_records(&scores_artifact, &rows)?;
    let summary = TextSummary {
        contextual_provider: provider.id().to_string(),
        contextual_spec: spec.fingerprint(),
        dsi_mode: opts.dsi_mode,
        lz_rendering: opts.lz_rendering,
        non_conforming: opts.non_conforming,
        n_samples: rows.len(),
        n_dsi_errors: rows.iter().filter(|r| r.dsi_error.is_some()).count(),
        n_non_conforming: rows.iter().filter(|r| r.structure_pass != Some(true)).count(),
        matching,
        groups,
    };
    store.write_document(
        &Artifact::named(ArtifactKind::Summary, "text")?,
        &summary,
        &[Artifact::samples().file_name(), scores_artifact.file_name()],
    )?;
    Ok(summary)
}

pub fn describe(summary: &TextSummary) -> Vec<String> {
    let mut lines = vec![format!(
        "texts: {} scored, {} DSI errors ({})",
        summary.n_samples, summary.n_dsi_errors, summary.contextual_provider
    )];
    for g in &summary.groups {
        let t = g.temperature.map(|t| format!(" t={t}")).unwrap_or_default();
        let m = |e: &Option<Estimate>| e.as_ref().map(|e| format!("{:.4}", e.mean)).unwrap_or_else(|| "-".into());
        lines.push(format!(
            "  {} {}{t}: n={} dsi {} lz {}",
            g.source,
            g.task,
            g.n_samples,
            m(&g.dsi),
            m(&g.lz_normalized)
        ));
    }
    lines
}

pub fn text_fingerprints(ctx: &Context) -> Result<Vec<(&'static str, String)>> {
    let (provider, spec) = ctx.contextual()?;
    Ok(vec![
        ("contextual_provider", provider.id().to_string()),
        ("contextual_spec", spec.fingerprint()),
        ("stopwords", ctx.stopwords()?.fingerprint().to_string()),
    ])
}

pub fn cmd_score_text(ctx: &Context, paths: &[PathBuf]) -> Result<Outcome> {
    let inputs = inputs::load(paths, InputKind::Text)?;
    let table = match &ctx.config.scoring.theme_word {
        Some(_) => Some(ctx.embedding_table()?),
        None => None,
    };
    let mut fps = text_fingerprints(ctx)?;
    fps.push(("inputs", inputs.combined_hash()));
    if let Some(t) = &table {
        fps.push(("embedding_table", t.fingerprint().to_string()));
    }
    let run_id = ctx.run_id("score-text", &inputs.hashes);
    let store = ctx.open_store(&run_id, &fps)?;
    inputs::persist_samples(&store, &inputs.samples)?;
    let summary = score_samples(ctx, &store, &inputs.samples, table.as_ref())?;
    Ok(Outcome::new(run_id, store.dir(), describe(&summary)))
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context as _, Result};
use divbench_core::fingerprint::sha256_hex;
use divbench_core::stats::{contrast_matrix, percentile_of, ContrastResult, Heatmap, TTestVariant};
use divbench_store::{read_table, Artifact, ArtifactKind};
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::summary::{estimate, fmt_f64, Estimate};
use crate::Outcome;

/// One contrast as written to CSV: numbers in shortest round-trip form,
/// empty where the test could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRow {
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: String,
    pub mean_b: String,
    pub t: String,
    pub df: String,
    pub p_raw: String,
    pub p_adj: String,
    pub tier: String,
    pub degenerate: bool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareGroup {
    pub group: String,
    pub estimate: Option<Estimate>,
    /// Percent of reference values below this group's mean (ties count half).
    pub percentile_in_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub metric: String,
    pub variant: TTestVariant,
    pub fdr_method: String,
    pub group_by: Vec<String>,
    pub reference_group: Option<String>,
    pub inputs: Vec<String>,
    pub groups: Vec<CompareGroup>,
}

/// Metric values per group label across all score tables.
pub fn collect_groups(
    paths: &[PathBuf],
    metric: Option<&str>,
    group_by: &[String],
) -> Result<(String, BTreeMap<String, Vec<f64>>)> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut chosen: Option<String> = metric.map(str::to_string);
    for path in paths {
        let table = read_table(path).with_context(|| format!("reading {}", path.display()))?;
        let metric = match &chosen {
            Some(m) => m.clone(),
            None => {
                let m = ["score", "dsi"]
                    .into_iter()
                    .find(|m| table.column(m).is_some())
                    .ok_or_else(|| anyhow!("{}: no `score` or `dsi` column; set compare.metric", path.display()))?;
                chosen = Some(m.to_string());
                m.to_string()
            }
        };
        let value_col = table
            .column(&metric)
            .ok_or_else(|| anyhow!("{}: no column {metric:?}", path.display()))?;
        let key_cols: Vec<usize> = group_by.iter().filter_map(|g| table.column(g)).collect();
        let used_col = table.column("used");
        for row in &table.rows {
            if used_col.is_some_and(|c| row[c] == "false") {
                continue;
            }
            let Ok(value) = row[value_col].trim().parse::<f64>() else {
                continue;
            };
            if !value.is_finite() {
                continue;
            }
            let label: Vec<&str> = key_cols.iter().map(|&c| row[c].as_str()).filter(|v| !v.is_empty()).collect();
            groups.entry(label.join("/")).or_default().push(value);
        }
    }
    Ok((chosen.unwrap_or_else(|| "score".into()), groups))
}

fn contrast_row(c: &ContrastResult, groups: &BTreeMap<String, Vec<f64>>) -> ContrastRow {
    let mean = |g: &str| divbench_core::stats::mean(&groups[g]);
    ContrastRow {
        group_a: c.group_a.clone(),
        group_b: c.group_b.clone(),
        n_a: groups[&c.group_a].len(),
        n_b: groups[&c.group_b].len(),
        mean_a: fmt_f64(mean(&c.group_a)),
        mean_b: fmt_f64(mean(&c.group_b)),
        t: fmt_f64(c.t),
        df: fmt_f64(c.df),
        p_raw: fmt_f64(c.p_raw),
        p_adj: fmt_f64(c.p_adj),
        tier: if c.error.is_none() { c.tier.to_string() } else { String::new() },
        degenerate: c.degenerate,
        error: c.error.clone().unwrap_or_default(),
    }
}

fn artifact_name(metric: &str) -> String {
    metric
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

pub fn cmd_compare(ctx: &Context, paths: &[PathBuf]) -> Result<Outcome> {
    if paths.is_empty() {
        bail!("no score files given");
    }
    let opts = &ctx.config.compare;
    let variant = ctx.config.scoring.ttest;
    let (metric, groups) = collect_groups(paths, opts.metric.as_deref(), &opts.group_by)?;
    if groups.len() < 2 {
        bail!("need at least two groups to compare, found {}", groups.len());
    }
    let contrasts = contrast_matrix(groups.clone(), variant)?;
    let heatmap = Heatmap::from_contrasts(&contrasts);

    let reference = match &opts.reference_group {
        Some(r) => Some(
            groups
                .get(r)
                .ok_or_else(|| anyhow!("reference group {r:?} not among {:?}", groups.keys().collect::<Vec<_>>()))?,
        ),
        None => None,
    };
    let level = ctx.config.scoring.ci_level;
    let summary_groups = groups
        .iter()
        .map(|(g, values)| {
            let est = estimate(values, level);
            let percentile = match (reference, &est) {
                (Some(r), Some(e)) => Some(percentile_of(e.mean, r)?),
                _ => None,
            };
            Ok(CompareGroup {
                group: g.clone(),
                estimate: est,
                percentile_in_reference: percentile,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut input_hashes = Vec::new();
    for p in paths {
        input_hashes.push(sha256_hex(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?));
    }
    let run_id = ctx.run_id("compare", &input_hashes);
    let store = ctx.open_store(&run_id, &[("inputs", divbench_core::fingerprint::sha256_parts(&input_hashes))])?;
    let name = artifact_name(&metric);
    let contrasts_artifact = Artifact::named(ArtifactKind::Contrasts, &name)?;
    let rows: Vec<ContrastRow> = contrasts.iter().map(|c| contrast_row(c, &groups)).collect();
    store.replace_records(&contrasts_artifact, &rows)?;
    let sources = [contrasts_artifact.file_name()];
    store.write_document(&Artifact::named(ArtifactKind::Heatmap, &name)?, &heatmap, &sources)?;
    let summary = CompareSummary {
        metric: metric.clone(),
        variant,
        fdr_method: heatmap.fdr_method.clone(),
        group_by: opts.group_by.clone(),
        reference_group: opts.reference_group.clone(),
        inputs: input_hashes,
        groups: summary_groups,
    };
    store.write_document(
        &Artifact::named(ArtifactKind::Summary, &format!("compare_{name}"))?,
        &summary,
        &sources,
    )?;

    let mut lines = vec![format!(
        "{metric}: {} groups, {} contrasts ({variant:?}, Benjamini-Hochberg)",
        groups.len(),
        rows.len()
    )];
    for r in &rows {
        lines.push(format!("  {} vs {}: t={} p_adj={} {}", r.group_a, r.group_b, r.t, r.p_adj, r.tier));
    }
    Ok(Outcome::new(run_id, store.dir(), lines))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_names_are_sanitized() {
        assert_eq!(artifact_name("lz_normalized"), "lz_normalized");
        assert_eq!(artifact_name("Theme Similarity"), "theme_similarity");
    }
}

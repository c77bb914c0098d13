use std::path::PathBuf;

use anyhow::{bail, Result};
use divbench_core::embed::embed_documents;
use divbench_core::pca::{fit_pca, project};
use divbench_harness::{RawSample, SampleOutcome};
use divbench_store::{Artifact, ArtifactKind};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::context::Context;
use crate::inputs::{self, InputKind};
use crate::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub model_id: String,
    pub k: usize,
    pub n_samples: usize,
    pub dim: usize,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub total_variance: f64,
    pub components: Vec<Vec<f64>>,
}

/// Text handed to the document embedder; word lists are joined by spaces.
fn document_text(s: &RawSample) -> Option<String> {
    match &s.outcome {
        SampleOutcome::Text { text } => Some(text.clone()),
        SampleOutcome::Words { words, .. } => Some(words.join(" ")),
        SampleOutcome::Failure { .. } => None,
    }
}

pub fn cmd_pca(ctx: &Context, paths: &[PathBuf]) -> Result<Outcome> {
    let inputs = inputs::load(paths, InputKind::Text)?;
    let embedder = ctx.document_embedder()?;
    let k = ctx.config.pca.k;

    let mut usable: Vec<(&RawSample, String)> = inputs
        .samples
        .iter()
        .filter_map(|s| document_text(s).filter(|t| !t.trim().is_empty()).map(|t| (s, t)))
        .collect();
    usable.sort_by(|a, b| (&a.0.campaign, a.0.index, &a.0.sample_id).cmp(&(&b.0.campaign, b.0.index, &b.0.sample_id)));
    if usable.len() < 2 {
        bail!("PCA needs at least two texts, found {}", usable.len());
    }

    let docs: Vec<&str> = usable.iter().map(|(_, t)| t.as_str()).collect();
    let embedded = embed_documents(&docs, embedder.as_ref())?;
    let matrix: Vec<Vec<f64>> = embedded.into_iter().map(|e| e.vector.into_inner()).collect();
    let model = fit_pca(&matrix, k)?;
    let coords = project(&model, &matrix)?;

    let run_id = ctx.run_id("pca", &inputs.hashes);
    let store = ctx.open_store(
        &run_id,
        &[
            ("document_model", embedder.model_id().to_string()),
            ("inputs", inputs.combined_hash()),
        ],
    )?;
    inputs::persist_samples(&store, &inputs.samples)?;

    let rows: Vec<Map<String, Value>> = usable
        .iter()
        .zip(&coords)
        .map(|((s, _), c)| {
            let mut row = Map::new();
            row.insert("sample_id".into(), s.sample_id.clone().into());
            row.insert("source".into(), s.source.clone().into());
            row.insert("task".into(), s.task.clone().into());
            row.insert("temperature".into(), s.temperature.into());
            for (i, x) in c.iter().enumerate() {
                row.insert(format!("pc{}", i + 1), (*x).into());
            }
            row
        })
        .collect();
    let coords_artifact = Artifact::named(ArtifactKind::Pca, "coords")?;
    store.replace_records(&coords_artifact, &rows)?;

    let summary = PcaSummary {
        model_id: embedder.model_id().to_string(),
        k: model.k(),
        n_samples: model.n_samples,
        dim: model.dim(),
        explained_variance_ratio: model.explained_variance_ratio(),
        explained_variance: model.explained_variance.clone(),
        total_variance: model.total_variance,
        components: model.components.clone(),
    };
    store.write_document(
        &Artifact::named(ArtifactKind::Summary, "pca")?,
        &summary,
        &[Artifact::samples().file_name(), coords_artifact.file_name()],
    )?;

    let ratios: Vec<String> = summary.explained_variance_ratio.iter().map(|r| format!("{r:.4}")).collect();
    let lines = vec![format!(
        "PCA: {} texts, dim {}, k={}, explained variance ratio [{}]",
        summary.n_samples,
        summary.dim,
        summary.k,
        ratios.join(", ")
    )];
    Ok(Outcome::new(run_id, store.dir(), lines))
}

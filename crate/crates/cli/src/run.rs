use std::collections::HashSet;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use anyhow::{bail, Result};
use divbench_core::fingerprint::sha256_hex;
use divbench_harness::transport::transport_for;
use divbench_harness::{
    run_campaign, CampaignConfig, CampaignReport, CampaignTask, ChatTransport, ProviderKind, ProviderProfile, RawSample,
    RunOptions, PROMPT_VERSION,
};
use divbench_store::Artifact;

use crate::context::Context;
use crate::inputs::condition_of_task;
use crate::{score_dat, score_text, Outcome};

pub type TransportFactory = dyn Fn(&ProviderProfile, CampaignTask) -> Result<Box<dyn ChatTransport>> + Sync;

/// Test seams for `run`: a cancel flag and a replacement transport.
#[derive(Default)]
pub struct RunHooks<'a> {
    pub cancel: Option<Arc<AtomicBool>>,
    pub transport: Option<&'a TransportFactory>,
}

/// Campaign configs for every `[[campaigns]]` entry, all validated before
/// any request goes out.
pub fn campaign_configs(ctx: &Context) -> Result<Vec<CampaignConfig>> {
    if ctx.config.campaigns.is_empty() {
        bail!("the config lists no [[campaigns]]");
    }
    let vocabulary: Option<Vec<String>> = if ctx.has_embedding_table() {
        Some(ctx.embedding_table()?.words().into_iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut out = Vec::new();
    for entry in &ctx.config.campaigns {
        let mut provider = ctx.config.provider(&entry.provider).expect("validated").clone();
        // Mock providers without a vocabulary draw from the embedding table.
        if provider.kind == ProviderKind::Mock {
            let mut mock = provider.mock.clone().unwrap_or_default();
            if mock.vocabulary.is_empty() && mock.reply.is_none() {
                if let Some(v) = &vocabulary {
                    mock.vocabulary = v.clone();
                }
            }
            provider.mock = Some(mock);
        }
        let mut config = CampaignConfig::new(entry.task, provider);
        config.n_samples = entry.n_samples;
        config.temperature = entry.temperature;
        config.validate()?;
        out.push(config);
    }
    Ok(out)
}

fn describe_report(config: &CampaignConfig, r: &CampaignReport) -> String {
    let mut line = format!(
        "campaign {} {} t={}: {}/{} persisted ({} new, {} provider calls)",
        &r.fingerprint[..12],
        config.task,
        config.temperature(),
        r.skipped + r.persisted,
        r.requested,
        r.persisted,
        r.provider_calls
    );
    if !r.failures.is_empty() {
        line.push_str(&format!(", {} failed: {}", r.failures.len(), r.failures[0].error));
    }
    if r.interrupted {
        line.push_str(", interrupted");
    }
    line
}

pub fn cmd_run(ctx: &Context, hooks: &RunHooks) -> Result<Outcome> {
    let configs = campaign_configs(ctx)?;
    let run_id = ctx
        .config
        .run_id
        .clone()
        .unwrap_or_else(|| format!("run-{}", &ctx.config_hash[..12]));
    let table = if ctx.has_embedding_table() { Some(ctx.embedding_table()?) } else { None };
    let needs_text = configs.iter().any(|c| c.task.writing_kind().is_some());
    let mut fps = vec![("prompts", sha256_hex(format!("v{PROMPT_VERSION}")))];
    if let Some(t) = &table {
        fps.push(("embedding_table", t.fingerprint().to_string()));
    }
    if needs_text {
        fps.extend(score_text::text_fingerprints(ctx)?);
    }
    let store = ctx.open_store(&run_id, &fps)?;

    let samples = Artifact::samples();
    let mut lines = Vec::new();
    let mut complete = true;
    let opts = RunOptions {
        cancel: hooks.cancel.clone(),
    };
    for config in &configs {
        let done: HashSet<String> = store
            .read_records::<RawSample>(&samples)?
            .into_iter()
            .map(|s| s.sample_id)
            .collect();
        let transport = match hooks.transport {
            Some(f) => f(&config.provider, config.task)?,
            None => transport_for(&config.provider, config.task)?,
        };
        let mut sink = |s: &RawSample| {
            store
                .write_records(&samples, std::slice::from_ref(s))
                .map(|_| ())
                .map_err(|e| e.to_string())
        };
        let report = run_campaign(config, transport.as_ref(), &done, &mut sink, &opts)?;
        lines.push(describe_report(config, &report));
        complete &= report.is_complete();
        if report.interrupted {
            break;
        }
    }

    let all: Vec<RawSample> = store.read_records(&samples)?;
    if all.iter().any(|s| condition_of_task(&s.task).is_some()) {
        let Some(table) = &table else {
            bail!("DAT campaigns need an embedding table to score");
        };
        match score_dat::score_samples(ctx, &store, &all, table) {
            Ok(summary) => lines.extend(score_dat::describe(&summary)),
            Err(e) if !complete => lines.push(format!("DAT scoring skipped: {e}")),
            Err(e) => return Err(e),
        }
    }
    if all.iter().any(|s| s.task.parse::<divbench_core::writing::TaskKind>().is_ok()) {
        let summary = score_text::score_samples(ctx, &store, &all, table.as_ref())?;
        lines.extend(score_text::describe(&summary));
    }
    let mut outcome = Outcome::new(run_id, store.dir(), lines);
    if !complete {
        outcome.ok = false;
        outcome.lines.push("run incomplete; re-run the same command to resume".into());
    }
    Ok(outcome)
}

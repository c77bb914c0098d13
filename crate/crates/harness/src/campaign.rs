use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use divbench_core::fingerprint::{seed_from, sha256_parts};
use serde::{Deserialize, Serialize};

use crate::chat::complete_chat;
use crate::parse::{parse_word_list, ListFormat, ParseFailure};
use crate::prompt::{build_prompt, CampaignTask, PROMPT_VERSION};
use crate::transport::{ChatMessage, ChatTransport, RequestContext};
use crate::{HarnessError, ProviderProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Every sample is an independent single-turn session with its own seed.
    #[default]
    FreshPerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub task: CampaignTask,
    #[serde(default)]
    pub n_samples: Option<usize>,
    /// Defaults to the provider's default temperature.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    pub provider: ProviderProfile,
}

impl CampaignConfig {
    pub fn new(task: CampaignTask, provider: ProviderProfile) -> Self {
        Self {
            task,
            n_samples: None,
            temperature: None,
            seed_policy: SeedPolicy::FreshPerSample,
            provider,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples.unwrap_or_else(|| self.task.default_samples())
    }

    pub fn temperature(&self) -> f64 {
        self.temperature.unwrap_or(self.provider.temperature_default)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.provider.validate()?;
        if self.n_samples() == 0 {
            return Err(HarnessError::InvalidConfig("n_samples must be positive".into()));
        }
        self.provider.check_temperature(self.temperature())
    }

    /// Hash of the template bytes, the settings that shape replies, and the
    /// provider id. Sample count, parallelism and retry settings are left out
    /// so a campaign can be extended or re-run with different throughput.
    pub fn fingerprint(&self) -> String {
        let p = &self.provider;
        let shape = serde_json::json!({
            "task": self.task.to_string(),
            "temperature": self.temperature(),
            "seed_policy": self.seed_policy,
            "kind": p.kind,
            "model": p.model_id(),
            "base_url": p.base_url,
            "command": p.command,
            "max_tokens": p.max_tokens,
            "send_seed": p.send_seed,
            "mock": p.mock,
        });
        sha256_parts([
            self.task.template().as_bytes(),
            PROMPT_VERSION.as_bytes(),
            shape.to_string().as_bytes(),
            p.provider_id.as_bytes(),
        ])
    }

    pub fn sample_id(&self, fingerprint: &str, index: usize) -> String {
        format!("{}-{index:06}", &fingerprint[..12])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SampleOutcome {
    Words { words: Vec<String>, format: ListFormat },
    Text { text: String },
    Failure { reason: ParseFailure },
}

/// One persisted reply. The reply text is kept verbatim even when parsing
/// fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub sample_id: String,
    /// Campaign fingerprint, or an input-file hash for imported data.
    pub campaign: String,
    pub index: usize,
    pub task: String,
    /// Provider id, or `"human"`.
    pub source: String,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub seed: Option<u64>,
    pub max_tokens: Option<u32>,
    pub requested_at: Option<String>,
    pub attempts: u32,
    pub reply: String,
    pub outcome: SampleOutcome,
}

impl RawSample {
    pub fn words(&self) -> Option<&[String]> {
        match &self.outcome {
            SampleOutcome::Words { words, .. } => Some(words),
            _ => None,
        }
    }
}

/// Parses a reply according to the task family.
pub fn parse_reply(task: CampaignTask, reply: &str) -> SampleOutcome {
    if task.is_dat_family() {
        return match parse_word_list(reply) {
            Ok(list) => SampleOutcome::Words {
                words: list.words,
                format: list.format,
            },
            Err(reason) => SampleOutcome::Failure { reason },
        };
    }
    let text = reply.trim();
    if text.is_empty() {
        SampleOutcome::Failure {
            reason: ParseFailure::EmptyReply,
        }
    } else {
        SampleOutcome::Text { text: text.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub fingerprint: String,
    pub requested: usize,
    /// Already persisted before this run.
    pub skipped: usize,
    pub persisted: usize,
    pub failures: Vec<SampleFailure>,
    pub provider_calls: u64,
    pub interrupted: bool,
}

impl CampaignReport {
    pub fn is_complete(&self) -> bool {
        self.skipped + self.persisted == self.requested
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Set to stop handing out new samples; in-flight requests finish and
    /// are persisted.
    pub cancel: Option<Arc<AtomicBool>>,
}

/// Runs the samples of `config` not already in `done`, in parallel up to the
/// provider's `max_parallel`. Completed samples go to `sink` from a single
/// writer (the calling thread), in completion order. Requests that exhaust
/// their retries are reported, not persisted, so a later run retries them.
pub fn run_campaign(
    config: &CampaignConfig,
    transport: &dyn ChatTransport,
    done: &HashSet<String>,
    sink: &mut dyn FnMut(&RawSample) -> Result<(), String>,
    opts: &RunOptions,
) -> Result<CampaignReport, HarnessError> {
    config.validate()?;
    let fingerprint = config.fingerprint();
    let n = config.n_samples();
    let pending: Vec<usize> = (0..n)
        .filter(|&i| !done.contains(&config.sample_id(&fingerprint, i)))
        .collect();
    let mut report = CampaignReport {
        fingerprint: fingerprint.clone(),
        requested: n,
        skipped: n - pending.len(),
        persisted: 0,
        failures: Vec::new(),
        provider_calls: 0,
        interrupted: false,
    };
    if pending.is_empty() {
        return Ok(report);
    }

    let prompt = build_prompt(config.task);
    let temperature = config.temperature();
    let next = AtomicUsize::new(0);
    let calls = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let cancelled = || stop.load(Ordering::SeqCst) || opts.cancel.as_ref().is_some_and(|c| c.load(Ordering::SeqCst));
    let workers = config.provider.max_parallel.min(pending.len());
    let mut sink_error = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::sync_channel::<Result<RawSample, SampleFailure>>(workers * 2);
        for _ in 0..workers {
            let tx = tx.clone();
            let (pending, next, calls, prompt, fingerprint) = (&pending, &next, &calls, &prompt, &fingerprint);
            let cancelled = &cancelled;
            scope.spawn(move || loop {
                if cancelled() {
                    break;
                }
                let slot = next.fetch_add(1, Ordering::SeqCst);
                let Some(&index) = pending.get(slot) else { break };
                let sample_id = config.sample_id(fingerprint, index);
                let ctx = RequestContext {
                    sample_index: index,
                    seed: seed_from(sample_id.as_bytes()),
                };
                // Fresh single-turn session: the template prompt and nothing else.
                let messages = [ChatMessage::user(prompt.clone())];
                let requested_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
                let result = complete_chat(&messages, temperature, &config.provider, transport, &ctx);
                let msg = match result {
                    Ok(reply) => {
                        calls.fetch_add(reply.attempts.len() as u64, Ordering::SeqCst);
                        Ok(RawSample {
                            sample_id,
                            campaign: fingerprint.clone(),
                            index,
                            task: config.task.to_string(),
                            source: config.provider.provider_id.clone(),
                            model: Some(config.provider.model_id().to_string()),
                            temperature: Some(temperature),
                            seed: Some(ctx.seed),
                            max_tokens: config.provider.max_tokens,
                            requested_at: Some(requested_at),
                            attempts: reply.attempts.len() as u32,
                            outcome: parse_reply(config.task, &reply.text),
                            reply: reply.text,
                        })
                    }
                    Err(e) => {
                        let attempts = match &e {
                            HarnessError::ProviderExhausted { attempts, .. } => *attempts as u64,
                            _ => 1,
                        };
                        calls.fetch_add(attempts, Ordering::SeqCst);
                        Err(SampleFailure {
                            sample_id,
                            index,
                            error: e.to_string(),
                        })
                    }
                };
                if tx.send(msg).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for msg in rx {
            match msg {
                Ok(sample) => {
                    if sink_error.is_some() {
                        continue;
                    }
                    match sink(&sample) {
                        Ok(()) => report.persisted += 1,
                        Err(e) => {
                            stop.store(true, Ordering::SeqCst);
                            sink_error = Some(e);
                        }
                    }
                }
                Err(f) => report.failures.push(f),
            }
        }
    });

    report.provider_calls = calls.load(Ordering::SeqCst);
    report.failures.sort_by_key(|f| f.index);
    report.interrupted = opts.cancel.as_ref().is_some_and(|c| c.load(Ordering::SeqCst));
    if let Some(e) = sink_error {
        return Err(HarnessError::Persist(e));
    }
    Ok(report)
}

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::transport::{ChatMessage, ChatRequest, ChatTransport, RequestContext};
use crate::{HarnessError, ProviderProfile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempt: u32,
    /// `None` on success, otherwise the error as reported by the provider.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub attempts: Vec<AttemptLog>,
}

/// Sends one single-turn request, retrying rate limits and transient
/// failures with exponential backoff. The temperature is checked against the
/// provider's range before anything is sent.
pub fn complete_chat(
    messages: &[ChatMessage],
    temperature: f64,
    profile: &ProviderProfile,
    transport: &dyn ChatTransport,
    ctx: &RequestContext,
) -> Result<ChatReply, HarnessError> {
    profile.check_temperature(temperature)?;
    let request = ChatRequest {
        model: profile.model_id().to_string(),
        messages: messages.to_vec(),
        temperature,
        max_tokens: profile.max_tokens,
        seed: profile.send_seed.then_some(ctx.seed),
    };
    let mut attempts = Vec::new();
    let max = profile.retry.max_attempts.max(1);
    for attempt in 1..=max {
        match transport.send(&request, ctx) {
            Ok(text) => {
                log::debug!("{} sample {} attempt {attempt}: ok", profile.provider_id, ctx.sample_index);
                attempts.push(AttemptLog { attempt, error: None });
                return Ok(ChatReply { text, attempts });
            }
            Err(e) => {
                log::warn!("{} sample {} attempt {attempt}: {e}", profile.provider_id, ctx.sample_index);
                attempts.push(AttemptLog {
                    attempt,
                    error: Some(e.to_string()),
                });
                if !e.is_retryable() {
                    return Err(HarnessError::ProviderRejected {
                        provider: profile.provider_id.clone(),
                        error: e.to_string(),
                    });
                }
                if attempt < max {
                    let delay = profile.retry.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                    std::thread::sleep(Duration::from_millis(delay));
                }
            }
        }
    }
    Err(HarnessError::ProviderExhausted {
        provider: profile.provider_id.clone(),
        attempts: max,
        error: attempts
            .last()
            .and_then(|a| a.error.clone())
            .unwrap_or_default(),
    })
}

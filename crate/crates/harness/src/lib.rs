//! Sampling campaigns: prompt templates, provider transports, reply parsing
//! and resumable bounded-parallel runs.

mod campaign;
mod chat;
pub mod embedders;
mod parse;
mod prompt;
mod provider;
pub mod transport;

pub use campaign::{
    parse_reply, run_campaign, CampaignConfig, CampaignReport, RawSample, RunOptions, SampleFailure, SampleOutcome,
    SeedPolicy,
};
pub use chat::{complete_chat, AttemptLog, ChatReply};
pub use parse::{parse_word_list, ListFormat, ParseFailure, WordList};
pub use prompt::{build_prompt, CampaignTask, Strategy, PROMPT_VERSION};
pub use provider::{MockSettings, ProviderKind, ProviderProfile, RetryPolicy};
pub use transport::{ChatMessage, ChatRequest, ChatTransport, RequestContext, TransportError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("provider {0}: {1}")]
    InvalidProfile(String, String),
    #[error("invalid campaign: {0}")]
    InvalidConfig(String),
    #[error("temperature {temperature} outside {provider} range [{min}, {max}]")]
    TemperatureOutOfRange {
        provider: String,
        temperature: f64,
        min: f64,
        max: f64,
    },
    #[error("{provider} failed after {attempts} attempts: {error}")]
    ProviderExhausted {
        provider: String,
        attempts: u32,
        error: String,
    },
    #[error("{provider} rejected the request: {error}")]
    ProviderRejected { provider: String, error: String },
    #[error("could not persist sample: {0}")]
    Persist(String),
}

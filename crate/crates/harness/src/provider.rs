use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    ChatHttp,
    LocalProcess,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the first retry; doubled on each further retry.
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_ms: 1000,
        }
    }
}

/// How a mock provider answers. Replies are a function of the sample seed
/// and index only, so campaigns are reproducible and resumable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MockSettings {
    /// Fixed reply for every request. Takes precedence over `vocabulary`.
    pub reply: Option<String>,
    /// Words to draw from; ten distinct words per reply for word-list tasks,
    /// a short text for writing tasks.
    pub vocabulary: Vec<String>,
    /// Every n-th sample (1-based) gets an unparseable reply.
    pub fail_every: Option<usize>,
}

fn default_max_parallel() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub provider_id: String,
    pub kind: ProviderKind,
    /// Model id sent in chat requests; defaults to `provider_id`.
    #[serde(default)]
    pub model: Option<String>,
    pub temperature_range: (f64, f64),
    pub temperature_default: f64,
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Base URL of an OpenAI-compatible server, e.g. `http://localhost:8000/v1`.
    #[serde(default)]
    pub base_url: Option<String>,
    /// Environment variable holding the API key; defaults to
    /// `DIVBENCH_<PROVIDER_ID>_API_KEY`.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Program and arguments for `local_process` providers.
    #[serde(default)]
    pub command: Vec<String>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    /// Forward the per-sample seed in chat requests.
    #[serde(default)]
    pub send_seed: bool,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub mock: Option<MockSettings>,
}

impl ProviderProfile {
    pub fn mock(provider_id: &str, settings: MockSettings) -> Self {
        Self {
            provider_id: provider_id.to_string(),
            kind: ProviderKind::Mock,
            model: None,
            temperature_range: (0.0, 2.0),
            temperature_default: 1.0,
            max_parallel: default_max_parallel(),
            retry: RetryPolicy {
                max_attempts: 3,
                backoff_ms: 0,
            },
            base_url: None,
            api_key_env: None,
            command: Vec::new(),
            max_tokens: None,
            send_seed: false,
            timeout_secs: None,
            mock: Some(settings),
        }
    }

    pub fn model_id(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.provider_id)
    }

    pub fn api_key_var(&self) -> String {
        self.api_key_env.clone().unwrap_or_else(|| {
            let id: String = self
                .provider_id
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
                .collect();
            format!("DIVBENCH_{id}_API_KEY")
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let (lo, hi) = self.temperature_range;
        let bad = |reason: &str| Err(HarnessError::InvalidProfile(self.provider_id.clone(), reason.to_string()));
        if self.provider_id.is_empty() {
            return bad("empty provider_id");
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("temperature_range must be finite with min <= max");
        }
        if !(lo..=hi).contains(&self.temperature_default) {
            return bad("temperature_default outside temperature_range");
        }
        if self.max_parallel == 0 {
            return bad("max_parallel must be positive");
        }
        if self.retry.max_attempts == 0 {
            return bad("retry.max_attempts must be positive");
        }
        match self.kind {
            ProviderKind::ChatHttp if self.base_url.is_none() => bad("chat_http needs base_url"),
            ProviderKind::LocalProcess if self.command.is_empty() => bad("local_process needs command"),
            _ => Ok(()),
        }
    }

    pub fn check_temperature(&self, t: f64) -> Result<(), HarnessError> {
        let (lo, hi) = self.temperature_range;
        if t.is_finite() && (lo..=hi).contains(&t) {
            Ok(())
        } else {
            Err(HarnessError::TemperatureOutOfRange {
                provider: self.provider_id.clone(),
                temperature: t,
                min: lo,
                max: hi,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut p = ProviderProfile::mock("m", MockSettings::default());
        assert!(p.validate().is_ok());
        p.temperature_default = 3.0;
        assert!(p.validate().is_err());
        p.temperature_default = 1.0;
        p.max_parallel = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn temperature_bounds_inclusive() {
        let p = ProviderProfile::mock("m", MockSettings::default());
        assert!(p.check_temperature(0.0).is_ok());
        assert!(p.check_temperature(2.0).is_ok());
        assert!(p.check_temperature(2.01).is_err());
        assert!(p.check_temperature(f64::NAN).is_err());
    }

    #[test]
    fn api_key_variable_name() {
        let p = ProviderProfile::mock("gpt-4o", MockSettings::default());
        assert_eq!(p.api_key_var(), "DIVBENCH_GPT_4O_API_KEY");
    }
}

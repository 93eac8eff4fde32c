//! Client for an external chat-completion endpoint, used to obtain
//! abstractive baseline summaries for side-by-side benchmarking.
//!
//! The wire format is the de-facto chat-completions shape: a JSON request
//! `{model, temperature, max_tokens, messages: [...]}` answered by
//! `{choices: [{message: {content}}], usage: {...}}`. The API key is read
//! from the environment at request time, attached as a bearer header, and is
//! never stored, serialized, or logged. Transient failures (HTTP 5xx, 429,
//! timeouts) are retried with exponential backoff; the configured attempt
//! budget counts every request sent.

pub mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::corpus::CleanDocument;
use crate::error::{Error, Result};

/// Versioned prompt template; `{document}` is replaced by the cleaned text.
/// The template is content-addressed: its hash travels with every summary so
/// benchmark rows stay attributable to the exact prompt.
pub const PROMPT_TEMPLATE: &str = "Summarize the following legal document in three sentences or fewer. \
Preserve holdings, citations, and outcomes exactly as written. Reply with the summary only.\n\n\
Document:\n{document}";

/// Hex SHA-256 of [`PROMPT_TEMPLATE`].
pub fn prompt_hash() -> String {
    let digest = Sha256::digest(PROMPT_TEMPLATE.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Endpoint configuration. Only the *name* of the key's environment variable
/// is stored; the value is read when a request is sent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_s: f64,
    /// Name of the environment variable holding the API key; empty means the
    /// endpoint needs no authentication.
    pub api_key_env_var: String,
    /// Total request attempts per document, counting the first.
    pub max_attempts: u32,
    /// First backoff delay; doubles after each failed attempt.
    pub backoff_initial_s: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: String::new(),
            model_name: "baseline".to_string(),
            temperature: 0.4,
            max_output_tokens: 512,
            timeout_s: 30.0,
            api_key_env_var: "LEXSUM_API_KEY".to_string(),
            max_attempts: 3,
            backoff_initial_s: 1.0,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint_url.is_empty() {
            return Err(Error::InvalidConfig("endpoint url is required".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::InvalidConfig(format!(
                "temperature must lie in [0, 2], got {}",
                self.temperature
            )));
        }
        if !(self.timeout_s > 0.0) {
            return Err(Error::InvalidConfig("timeout must be positive".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Token counts reported by the endpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// An abstractive summary obtained from the remote endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub doc_id: String,
    pub text: String,
    pub model_name: String,
    pub latency_s: f64,
    pub token_usage: TokenUsage,
    pub prompt_hash: String,
}

fn backoff_delay(failed_attempts: u32, initial_s: f64) -> Duration {
    let factor = 2f64.powi(failed_attempts.saturating_sub(1) as i32);
    Duration::from_secs_f64((initial_s * factor).max(0.0))
}

/// Global backoff gate shared by concurrent requests: a rate-limit response
/// from any worker delays all of them.
#[derive(Debug, Default)]
pub struct RateGate {
    until: Mutex<Option<Instant>>,
}

impl RateGate {
    fn wait(&self) {
        let until = *self.until.lock().unwrap();
        if let Some(t) = until {
            let now = Instant::now();
            if t > now {
                std::thread::sleep(t - now);
            }
        }
    }

    fn hold_for(&self, d: Duration) {
        let mut until = self.until.lock().unwrap();
        let target = Instant::now() + d;
        if until.map_or(true, |t| t < target) {
            *until = Some(target);
        }
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

fn read_api_key(cfg: &LlmConfig) -> Result<Option<String>> {
    if cfg.api_key_env_var.is_empty() {
        return Ok(None);
    }
    match std::env::var(&cfg.api_key_env_var) {
        Ok(v) if !v.is_empty() => Ok(Some(v)),
        _ => Err(Error::Auth(format!(
            "environment variable {} is not set",
            cfg.api_key_env_var
        ))),
    }
}

/// Request one abstractive summary from the configured endpoint.
pub fn summarize_remote(doc: &CleanDocument, cfg: &LlmConfig) -> Result<BaselineSummary> {
    summarize_remote_gated(doc, cfg, None)
}

fn summarize_remote_gated(
    doc: &CleanDocument,
    cfg: &LlmConfig,
    gate: Option<&RateGate>,
) -> Result<BaselineSummary> {
    cfg.validate()?;
    let key = read_api_key(cfg)?;
    let prompt = PROMPT_TEMPLATE.replace("{document}", &doc.text);
    let body = json!({
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
        "messages": [
            {"role": "user", "content": prompt}
        ],
    });

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs_f64(cfg.timeout_s))
        .build()
        .map_err(|e| Error::Transport(e.to_string()))?;

    let start = Instant::now();
    let mut attempt = 0u32;
    let mut last_transient: Option<Error> = None;
    while attempt < cfg.max_attempts {
        attempt += 1;
        if let Some(g) = gate {
            g.wait();
        }

        let mut req = client.post(&cfg.endpoint_url).json(&body);
        if let Some(k) = &key {
            req = req.bearer_auth(k);
        }
        let outcome = req.send();

        let transient: Error = match outcome {
            Ok(resp) => {
                let status = resp.status().as_u16();
                match status {
                    200..=299 => {
                        let text = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
                        let parsed: WireResponse = serde_json::from_str(&text)
                            .map_err(|e| Error::MalformedResponse(e.to_string()))?;
                        let choice = parsed
                            .choices
                            .into_iter()
                            .next()
                            .ok_or_else(|| Error::MalformedResponse("no choices".into()))?;
                        let usage = parsed.usage.unwrap_or_default();
                        return Ok(BaselineSummary {
                            doc_id: doc.id.clone(),
                            text: choice.message.content,
                            model_name: cfg.model_name.clone(),
                            latency_s: start.elapsed().as_secs_f64(),
                            token_usage: TokenUsage {
                                prompt_tokens: usage.prompt_tokens,
                                completion_tokens: usage.completion_tokens,
                            },
                            prompt_hash: prompt_hash(),
                        });
                    }
                    401 | 403 => {
                        return Err(Error::Auth(format!("endpoint returned status {status}")))
                    }
                    429 => Error::RateLimited { attempts: attempt },
                    500..=599 => Error::Http {
                        status,
                        attempts: attempt,
                    },
                    other => {
                        return Err(Error::Http {
                            status: other,
                            attempts: attempt,
                        })
                    }
                }
            }
            Err(e) if e.is_timeout() => Error::Timeout { attempts: attempt },
            Err(e) => return Err(Error::Transport(e.to_string())),
        };

        log::debug!(
            "baseline request for {} failed transiently (attempt {attempt}/{}): {transient}",
            doc.id,
            cfg.max_attempts
        );
        if matches!(transient, Error::RateLimited { .. }) {
            if let Some(g) = gate {
                g.hold_for(backoff_delay(attempt, cfg.backoff_initial_s));
            }
        }
        last_transient = Some(transient);
        if attempt < cfg.max_attempts {
            std::thread::sleep(backoff_delay(attempt, cfg.backoff_initial_s));
        }
    }
    Err(last_transient.unwrap_or(Error::Timeout {
        attempts: cfg.max_attempts,
    }))
}

/// Summarize a batch with at most `max_concurrent` in-flight requests.
/// Results come back in input order; a rate-limit response from any worker
/// backs off all of them through a shared gate.
pub fn summarize_remote_batch(
    docs: &[CleanDocument],
    cfg: &LlmConfig,
    max_concurrent: usize,
) -> Vec<Result<BaselineSummary>> {
    let workers = max_concurrent.clamp(1, docs.len().max(1));
    let gate = RateGate::default();
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<BaselineSummary>>>> =
        (0..docs.len()).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= docs.len() {
                    break;
                }
                let r = summarize_remote_gated(&docs[i], cfg, Some(&gate));
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });

    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::mock::{MockBehavior, MockLlmServer};
    use super::*;
    use crate::corpus::RawDocument;

    fn doc(text: &str) -> CleanDocument {
        CleanDocument::build(&RawDocument {
            id: "doc-1".to_string(),
            text: text.to_string(),
            source_path: String::new(),
        })
        .unwrap()
    }

    fn cfg_for(server: &MockLlmServer) -> LlmConfig {
        LlmConfig {
            endpoint_url: server.url(),
            api_key_env_var: String::new(),
            backoff_initial_s: 0.01,
            timeout_s: 5.0,
            ..Default::default()
        }
    }

    #[test]
    fn echo_mock_returns_first_sentence() {
        let server = MockLlmServer::start(MockBehavior::EchoFirstSentence).unwrap();
        let d = doc("The motion is denied. Costs are awarded.");
        let out = summarize_remote(&d, &cfg_for(&server)).unwrap();
        assert_eq!(out.text, "The motion is denied.");
        assert_eq!(out.doc_id, "doc-1");
        assert_eq!(out.prompt_hash, prompt_hash());
        assert_eq!(server.request_count(), 1);
    }

    #[test]
    fn canned_summary_flows_through() {
        let server = MockLlmServer::start(MockBehavior::Canned("A two part reply. It has sentences.".into())).unwrap();
        let d = doc("Original text of the document.");
        let out = summarize_remote(&d, &cfg_for(&server)).unwrap();
        assert_eq!(out.text, "A two part reply. It has sentences.");
        assert_eq!(out.token_usage.prompt_tokens, 42);
    }

    #[test]
    fn persistent_500_exhausts_attempts() {
        let server = MockLlmServer::start(MockBehavior::AlwaysFail { status: 500 }).unwrap();
        let d = doc("Anything at all.");
        let err = summarize_remote(&d, &cfg_for(&server)).unwrap_err();
        assert!(matches!(err, Error::Http { status: 500, attempts: 3 }), "got {err:?}");
        assert_eq!(server.request_count(), 3);
    }

    #[test]
    fn recovers_after_transient_failures() {
        let server = MockLlmServer::start(MockBehavior::FailThenRespond {
            failures: 2,
            status: 503,
            text: "Recovered summary.".to_string(),
        })
        .unwrap();
        let d = doc("Anything at all.");
        let out = summarize_remote(&d, &cfg_for(&server)).unwrap();
        assert_eq!(out.text, "Recovered summary.");
        assert_eq!(server.request_count(), 3);
    }

    #[test]
    fn rate_limit_surfaces_after_attempts() {
        let server = MockLlmServer::start(MockBehavior::AlwaysFail { status: 429 }).unwrap();
        let d = doc("Anything at all.");
        let err = summarize_remote(&d, &cfg_for(&server)).unwrap_err();
        assert!(matches!(err, Error::RateLimited { attempts: 3 }));
    }

    #[test]
    fn client_error_is_not_retried() {
        let server = MockLlmServer::start(MockBehavior::AlwaysFail { status: 400 }).unwrap();
        let d = doc("Anything at all.");
        let err = summarize_remote(&d, &cfg_for(&server)).unwrap_err();
        assert!(matches!(err, Error::Http { status: 400, attempts: 1 }));
        assert_eq!(server.request_count(), 1);
    }

    #[test]
    fn auth_status_maps_to_auth_error() {
        let server = MockLlmServer::start(MockBehavior::AlwaysFail { status: 401 }).unwrap();
        let d = doc("Anything at all.");
        assert!(matches!(summarize_remote(&d, &cfg_for(&server)).unwrap_err(), Error::Auth(_)));
    }

    #[test]
    fn missing_key_env_var_is_auth_error() {
        let server = MockLlmServer::start(MockBehavior::EchoFirstSentence).unwrap();
        let mut cfg = cfg_for(&server);
        cfg.api_key_env_var = "LEXSUM_TEST_KEY_THAT_DOES_NOT_EXIST".to_string();
        let err = summarize_remote(&doc("Some text."), &cfg).unwrap_err();
        assert!(matches!(err, Error::Auth(_)));
        assert_eq!(server.request_count(), 0);
    }

    #[test]
    fn timeout_is_retried_then_surfaced() {
        let server = MockLlmServer::start(MockBehavior::DelayThenRespond {
            delay_ms: 400,
            text: "too slow".to_string(),
        })
        .unwrap();
        let mut cfg = cfg_for(&server);
        cfg.timeout_s = 0.05;
        cfg.max_attempts = 2;
        let err = summarize_remote(&doc("Some text."), &cfg).unwrap_err();
        assert!(matches!(err, Error::Timeout { attempts: 2 }), "got {err:?}");
    }

    #[test]
    fn batch_preserves_order_with_bounded_workers() {
        let server = MockLlmServer::start(MockBehavior::EchoFirstSentence).unwrap();
        let docs: Vec<CleanDocument> = (0..5)
            .map(|i| {
                CleanDocument::build(&RawDocument {
                    id: format!("d{i}"),
                    text: format!("Sentence number {i} leads. Another trails."),
                    source_path: String::new(),
                })
                .unwrap()
            })
            .collect();
        let out = summarize_remote_batch(&docs, &cfg_for(&server), 2);
        assert_eq!(out.len(), 5);
        for (i, r) in out.iter().enumerate() {
            let s = r.as_ref().unwrap();
            assert_eq!(s.doc_id, format!("d{i}"));
            assert_eq!(s.text, format!("Sentence number {i} leads."));
        }
        assert_eq!(server.request_count(), 5);
    }

    #[test]
    fn backoff_schedule_doubles() {
        assert_eq!(backoff_delay(1, 1.0), Duration::from_secs(1));
        assert_eq!(backoff_delay(2, 1.0), Duration::from_secs(2));
        assert_eq!(backoff_delay(3, 1.0), Duration::from_secs(4));
    }

    #[test]
    fn config_validation() {
        let mut cfg = LlmConfig {
            endpoint_url: "http://localhost:1/x".into(),
            ..Default::default()
        };
        assert!(cfg.validate().is_ok());
        cfg.temperature = 3.0;
        assert!(cfg.validate().is_err());
        cfg.temperature = 0.4;
        cfg.max_attempts = 0;
        assert!(cfg.validate().is_err());
    }
}

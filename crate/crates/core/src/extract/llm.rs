use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use super::record::{InteractionRecord, InteractionType, TypeFlag};
use crate::error::{Error, Result};
use crate::ingest::jsonl::for_each_line;

/// A chat-completion style text classifier.
pub trait LlmClient: Send + Sync {
    /// Returns the raw response text for `prompt`. `record_id` lets offline
    /// clients look up canned answers.
    fn complete(&self, record_id: &str, prompt: &str) -> Result<String>;
}

/// Instruction sent for every record.
pub fn type_prompt(r: &InteractionRecord) -> String {
    format!(
        "Classify the interaction between two political figures described in the text.\n\
         Answer with exactly one word:\n\
         Adversarial - opposing political interests, for example competing in an election or debating.\n\
         Cooperative - working toward a shared political goal, for example joint work or public support.\n\
         Neutral - personal, social or ceremonial contact without a political stance.\n\n\
         Text: {}\nPerson 1: {}\nPerson 2: {}\nTime: {}\nLocation: {}\nAnswer:",
        r.segment_text, r.person1.surface, r.person2.surface, r.time_surface, r.location.surface
    )
}

/// The single type named in `response`, matched case-insensitively as a
/// whole word. `None` when no type or several different types appear.
pub fn parse_type(response: &str) -> Option<InteractionType> {
    let lower = response.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let mut hit = None;
    for t in InteractionType::ALL {
        if words.contains(&t.name().to_lowercase().as_str()) {
            if hit.is_some() {
                return None;
            }
            hit = Some(t);
        }
    }
    hit
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: usize,
    /// Delay before the second attempt; doubled after each failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Type and flag assigned to one record.
pub fn classify_type(
    r: &InteractionRecord,
    client: &dyn LlmClient,
    retry: RetryPolicy,
) -> (Option<InteractionType>, Option<TypeFlag>) {
    let prompt = type_prompt(r);
    let mut delay = retry.base_delay;
    for attempt in 1..=retry.attempts.max(1) {
        match client.complete(&r.id, &prompt) {
            Ok(text) => {
                return match parse_type(&text) {
                    Some(t) => (Some(t), None),
                    None => {
                        log::warn!("record {}: unparseable type response {text:?}; using Neutral", r.id);
                        (Some(InteractionType::Neutral), Some(TypeFlag::Unparseable))
                    }
                };
            }
            Err(e) => {
                log::warn!("record {}: attempt {attempt} failed: {e}", r.id);
                if attempt < retry.attempts {
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
    (None, Some(TypeFlag::Unclassified))
}

/// Type counts, in the order Adversarial, Cooperative, Neutral, plus
/// records left unclassified and those defaulted after an unparseable
/// response.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct TypeCounts {
    pub adversarial: usize,
    pub cooperative: usize,
    pub neutral: usize,
    pub unparseable: usize,
    pub unclassified: usize,
}

/// Classifies every record in place.
pub fn classify_records(records: &mut [InteractionRecord], client: &dyn LlmClient, retry: RetryPolicy) -> TypeCounts {
    let typed = crate::par::map(records, |r| classify_type(r, client, retry));
    let mut counts = TypeCounts::default();
    for (r, (t, flag)) in records.iter_mut().zip(typed) {
        r.interaction_type = t;
        r.type_flag = flag;
        match t {
            Some(InteractionType::Adversarial) => counts.adversarial += 1,
            Some(InteractionType::Cooperative) => counts.cooperative += 1,
            Some(InteractionType::Neutral) => counts.neutral += 1,
            None => {}
        }
        match flag {
            Some(TypeFlag::Unparseable) => counts.unparseable += 1,
            Some(TypeFlag::Unclassified) => counts.unclassified += 1,
            None => {}
        }
    }
    counts
}

/// Replays canned responses keyed by record id.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    responses: HashMap<String, String>,
}

impl FixtureClient {
    pub fn new(responses: HashMap<String, String>) -> Self {
        Self { responses }
    }

    /// Reads JSONL lines `{"id": ..., "response": ...}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Line {
            id: String,
            response: String,
        }
        let mut responses = HashMap::new();
        let errors = for_each_line(path.as_ref(), |_, line| {
            let l: Line = serde_json::from_str(line).map_err(|e| e.to_string())?;
            responses.insert(l.id, l.response);
            Ok(())
        })?;
        if let Some(e) = errors.first() {
            return Err(Error::InvalidRecord {
                line: e.line,
                message: e.message.clone(),
            });
        }
        Ok(Self { responses })
    }
}

impl LlmClient for FixtureClient {
    fn complete(&self, record_id: &str, _prompt: &str) -> Result<String> {
        self.responses
            .get(record_id)
            .cloned()
            .ok_or_else(|| Error::Llm(format!("no canned response for {record_id}")))
    }
}

/// Settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable that holds the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout: Duration,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 1.0,
            timeout: Duration::from_secs(60),
        }
    }
}

#[cfg(feature = "http")]
pub use http::HttpClient;

#[cfg(feature = "http")]
mod http {
    use super::*;

    pub struct HttpClient {
        settings: HttpSettings,
        api_key: String,
        agent: ureq::Agent,
    }

    impl HttpClient {
        pub fn new(settings: HttpSettings) -> Result<Self> {
            let api_key = std::env::var(&settings.api_key_env)
                .map_err(|_| Error::Llm(format!("environment variable {} is not set", settings.api_key_env)))?;
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(settings.timeout))
                .build()
                .into();
            Ok(Self { settings, api_key, agent })
        }
    }

    impl LlmClient for HttpClient {
        fn complete(&self, _record_id: &str, prompt: &str) -> Result<String> {
            let body = serde_json::json!({
                "model": self.settings.model,
                "temperature": self.settings.temperature,
                "messages": [{"role": "user", "content": prompt}],
            });
            let mut resp = self
                .agent
                .post(&self.settings.endpoint)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body)
                .map_err(|e| Error::Llm(e.to_string()))?;
            let v: serde_json::Value = resp.body_mut().read_json().map_err(|e| Error::Llm(e.to_string()))?;
            v["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Llm(format!("unexpected response shape: {v}")))
        }
    }
}

/// Builds a client from `fixture:<path>` or `http`.
pub fn client_from_spec(spec: &str, settings: &HttpSettings) -> Result<Box<dyn LlmClient>> {
    if let Some(path) = spec.strip_prefix("fixture:") {
        return Ok(Box::new(FixtureClient::load(path)?));
    }
    match spec {
        #[cfg(feature = "http")]
        "http" => Ok(Box::new(HttpClient::new(settings.clone())?)),
        _ => {
            let _ = settings;
            Err(Error::Config(format!("unknown LLM client `{spec}`")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn record(id: &str) -> InteractionRecord {
        serde_json::from_value(serde_json::json!({
            "id": id, "doc_id": "d", "segment_id": "d:s0", "char_start": 0, "char_end": 10,
            "segment_text": "A met B in Rome in 1950.", "person1": {"surface": "A"},
            "person2": {"surface": "B"}, "time_surface": "1950", "year": 1950,
            "location": {"surface": "Rome"}, "score": 0.9
        }))
        .unwrap()
    }

    #[test]
    fn parses_single_type_words() {
        assert_eq!(parse_type("Cooperative"), Some(InteractionType::Cooperative));
        assert_eq!(parse_type("The interaction is ADVERSARIAL."), Some(InteractionType::Adversarial));
        assert_eq!(parse_type("neutral\n"), Some(InteractionType::Neutral));
        assert_eq!(parse_type("Cooperative or Neutral"), None);
        assert_eq!(parse_type("no idea"), None);
        assert_eq!(parse_type("uncooperative"), None);
    }

    #[test]
    fn fixture_answers_and_defaults() {
        let client = FixtureClient::new(HashMap::from([
            ("a".to_string(), "Cooperative".to_string()),
            ("b".to_string(), "hmm".to_string()),
        ]));
        let fast = RetryPolicy { attempts: 3, base_delay: Duration::ZERO };
        assert_eq!(classify_type(&record("a"), &client, fast), (Some(InteractionType::Cooperative), None));
        assert_eq!(
            classify_type(&record("b"), &client, fast),
            (Some(InteractionType::Neutral), Some(TypeFlag::Unparseable))
        );
        assert_eq!(classify_type(&record("c"), &client, fast), (None, Some(TypeFlag::Unclassified)));
    }

    struct Flaky {
        failures: usize,
        calls: AtomicUsize,
    }

    impl LlmClient for Flaky {
        fn complete(&self, _: &str, _: &str) -> Result<String> {
            if self.calls.fetch_add(1, Ordering::SeqCst) < self.failures {
                Err(Error::Llm("connection reset".into()))
            } else {
                Ok("Adversarial".into())
            }
        }
    }

    #[test]
    fn retries_three_times_then_gives_up() {
        let fast = RetryPolicy { attempts: 3, base_delay: Duration::ZERO };
        let ok = Flaky { failures: 2, calls: AtomicUsize::new(0) };
        assert_eq!(classify_type(&record("x"), &ok, fast).0, Some(InteractionType::Adversarial));
        assert_eq!(ok.calls.load(Ordering::SeqCst), 3);
        let down = Flaky { failures: 3, calls: AtomicUsize::new(0) };
        assert_eq!(classify_type(&record("x"), &down, fast), (None, Some(TypeFlag::Unclassified)));
        assert_eq!(down.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn batch_counts_match_canned_distribution() {
        let answers = ["Cooperative", "Cooperative", "Adversarial", "Neutral", "Adversarial",
                       "Adversarial", "Cooperative", "???", "Neutral", "Cooperative"];
        let client = FixtureClient::new(
            answers.iter().enumerate().map(|(i, a)| (format!("r{i}"), a.to_string())).collect(),
        );
        let mut records: Vec<_> = (0..10).map(|i| record(&format!("r{i}"))).collect();
        let counts = classify_records(&mut records, &client, RetryPolicy::default());
        assert_eq!(
            counts,
            TypeCounts { adversarial: 3, cooperative: 4, neutral: 3, unparseable: 1, unclassified: 0 }
        );
    }
}

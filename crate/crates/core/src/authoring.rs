//! Candidate authoring: a provider proposes Restricted English readings of a
//! free-text requirement, one per line; the lines are parsed, lowered and
//! deduplicated by language equivalence.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::automata::{compile, equivalent, minimize, AutomataError, Dfa};
use crate::ltlf::{LtlfError, PropSet};
use crate::re_lang::RE_GRAMMAR;
use crate::reqstore::Candidate;

pub const DEFAULT_CREDENTIAL_ENV: &str = "REACT_LLM_API_KEY";
pub const DEFAULT_MAX_CANDIDATES: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum AuthoringError {
    #[error("max candidates must be at least 1")]
    ZeroCandidates,
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("provider request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider response is malformed: {0}")]
    BadResponse(String),
    #[error("no candidate survived parsing ({0} diagnostic(s))")]
    NoSurvivors(usize),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub name: String,
    pub gloss: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthoringRequest {
    pub source_text: String,
    pub vocabulary: Vec<VocabEntry>,
    pub max_candidates: usize,
}

impl AuthoringRequest {
    pub fn new(source_text: &str, vocabulary: Vec<VocabEntry>) -> Self {
        Self {
            source_text: source_text.to_string(),
            vocabulary,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }

    fn props(&self) -> Result<PropSet, LtlfError> {
        PropSet::new(self.vocabulary.iter().map(|v| v.name.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Stub,
    HttpChatCompletion,
}

/// Provider settings. The credential itself is never stored here, only the
/// name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub model: String,
    #[serde(default = "default_credential_env")]
    pub credential_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_credential_env() -> String {
    DEFAULT_CREDENTIAL_ENV.to_string()
}

fn default_timeout() -> u64 {
    30
}

fn default_retries() -> u32 {
    2
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Stub,
            endpoint: String::new(),
            model: String::new(),
            credential_env: default_credential_env(),
            timeout_secs: default_timeout(),
            retries: default_retries(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

pub trait Provider {
    /// Raw text reply, expected to hold one candidate per line.
    fn complete(&self, req: &AuthoringRequest, prompt: &Prompt) -> Result<String, AuthoringError>;
}

pub fn build_prompt(req: &AuthoringRequest) -> Prompt {
    let mut vocab = String::new();
    for v in &req.vocabulary {
        vocab.push_str(&format!("- {}: {}\n", v.name, v.gloss));
    }
    Prompt {
        system: format!(
            "You translate informal requirements into a restricted English template.\n\
             Grammar:\n{RE_GRAMMAR}\
             Use only these propositions:\n{vocab}\
             List every plausible interpretation, at most {}, one per line, with no numbering or commentary.",
            req.max_candidates
        ),
        user: req.source_text.clone(),
    }
}

/// Offline provider with fixed template rules: the first vocabulary entry is
/// the trigger and the last one the response (no trigger for a single
/// entry); the component is the word after the first "the" in the source,
/// or `system`. It proposes the eventual reading, then the invariant one.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubProvider;

impl Provider for StubProvider {
    fn complete(&self, req: &AuthoringRequest, _: &Prompt) -> Result<String, AuthoringError> {
        let first = req.vocabulary.first().ok_or(AuthoringError::EmptyVocabulary)?;
        let last = req.vocabulary.last().expect("nonempty");
        let component = stub_component(&req.source_text);
        let head = if req.vocabulary.len() > 1 {
            format!("globally, when {}, the {component} shall", first.name)
        } else {
            format!("globally, the {component} shall")
        };
        Ok(["eventually", "always"]
            .iter()
            .map(|t| format!("{head} {t} satisfy {}", last.name))
            .collect::<Vec<_>>()
            .join("\n"))
    }
}

fn stub_component(text: &str) -> String {
    let words: Vec<String> = text
        .split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .map(str::to_ascii_lowercase)
        .collect();
    words
        .iter()
        .position(|w| w == "the")
        .and_then(|i| words.get(i + 1))
        .filter(|w| w.starts_with(|c: char| c.is_ascii_lowercase()))
        .cloned()
        .unwrap_or_else(|| "system".to_string())
}

/// Chat-completion style HTTP provider: posts `{model, messages}` and reads
/// `choices[0].message.content`. Transport failures, timeouts, 429 and 5xx
/// replies are retried.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    cfg: ProviderConfig,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Self {
        Self { cfg }
    }

    fn attempt(&self, agent: &ureq::Agent, body: &Value) -> Result<String, (bool, String)> {
        let mut req = agent.post(&self.cfg.endpoint);
        match std::env::var(&self.cfg.credential_env) {
            Ok(key) if !key.is_empty() => {
                log::debug!("authorization: Bearer [redacted]");
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            _ => log::debug!("no credential in {}", self.cfg.credential_env),
        }
        let resp = req.send_json(body).map_err(|e| {
            let retry = match &e {
                ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
                _ => true,
            };
            (retry, e.to_string())
        })?;
        let reply: Value = resp
            .into_body()
            .read_json()
            .map_err(|e| (false, format!("invalid JSON reply: {e}")))?;
        log::debug!("provider response: {reply}");
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "reply lacks choices[0].message.content".to_string()))
    }
}

impl Provider for HttpProvider {
    fn complete(&self, _: &AuthoringRequest, prompt: &Prompt) -> Result<String, AuthoringError> {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.cfg.timeout_secs)))
            .build();
        let agent = ureq::Agent::new_with_config(config);
        let body = json!({
            "model": self.cfg.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        });
        log::debug!("provider request to {}: {body}", self.cfg.endpoint);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&agent, &body) {
                Ok(text) => return Ok(text),
                Err((true, msg)) if attempts <= self.cfg.retries => {
                    log::warn!("provider attempt {attempts} failed: {msg}");
                }
                Err((true, message)) => return Err(AuthoringError::Transport { attempts, message }),
                Err((false, message)) => return Err(AuthoringError::BadResponse(message)),
            }
        }
    }
}

pub fn provider_for(cfg: &ProviderConfig) -> Box<dyn Provider + Send + Sync> {
    match cfg.kind {
        ProviderKind::Stub => Box::new(StubProvider),
        ProviderKind::HttpChatCompletion => Box::new(HttpProvider::new(cfg.clone())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line of the provider reply.
    pub line: usize,
    pub text: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthoringOutcome {
    pub candidates: Vec<Candidate>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a provider reply: blank lines are skipped, list markers stripped,
/// malformed lines become diagnostics and language-equivalent duplicates
/// keep the first occurrence.
pub fn parse_reply(reply: &str, props: &PropSet, max: usize) -> Result<AuthoringOutcome, AuthoringError> {
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut dfas: Vec<Dfa> = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, raw) in reply.lines().enumerate() {
        let text = strip_marker(raw);
        if text.is_empty() {
            continue;
        }
        let c = match Candidate::from_re(text, props) {
            Ok(c) => c,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    line: i + 1,
                    text: text.to_string(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let d = minimize(&compile(&c.formula)?);
        let mut dup = false;
        for other in &dfas {
            if equivalent(other, &d)? {
                dup = true;
                break;
            }
        }
        if dup {
            log::debug!("line {} duplicates an earlier candidate", i + 1);
            continue;
        }
        if candidates.len() < max {
            candidates.push(c);
            dfas.push(d);
        }
    }
    if candidates.is_empty() {
        return Err(AuthoringError::NoSurvivors(diagnostics.len()));
    }
    Ok(AuthoringOutcome {
        candidates,
        diagnostics,
    })
}

fn strip_marker(line: &str) -> &str {
    let t = line.trim();
    let t = t
        .strip_prefix("- ")
        .or_else(|| t.strip_prefix("* "))
        .unwrap_or(t);
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = t[digits..].strip_prefix(". ").or_else(|| t[digits..].strip_prefix(") ")) {
            return rest.trim();
        }
    }
    t.trim()
}

pub fn author_candidates(
    req: &AuthoringRequest,
    provider: &dyn Provider,
) -> Result<AuthoringOutcome, AuthoringError> {
    if req.max_candidates == 0 {
        return Err(AuthoringError::ZeroCandidates);
    }
    if req.vocabulary.is_empty() {
        return Err(AuthoringError::EmptyVocabulary);
    }
    let props = req.props()?;
    let reply = provider.complete(req, &build_prompt(req))?;
    parse_reply(&reply, &props, req.max_candidates)
}

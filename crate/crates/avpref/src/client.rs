//! JSON-over-HTTP responder and extractor clients.
//!
//! Both POST a JSON object and expect `{"text": "..."}` back. The endpoint
//! URL and bearer token are read from the environment.

use std::time::Duration;

use avpref_core::evalharness::{
    Choice, ChoiceExtractor, ExtractionRequest, Responder, ResponderRequest, Setting,
};
use serde::{Deserialize, Serialize};
use ureq::Agent;

use crate::config::ClientSettings;
use crate::error::{CliError, Result};

pub const RESPONDER_URL_ENV: &str = "AVPREF_RESPONDER_URL";
pub const RESPONDER_TOKEN_ENV: &str = "AVPREF_RESPONDER_TOKEN";
pub const EXTRACTOR_URL_ENV: &str = "AVPREF_EXTRACTOR_URL";
pub const EXTRACTOR_TOKEN_ENV: &str = "AVPREF_EXTRACTOR_TOKEN";

#[derive(Debug, Serialize)]
struct ResponderBody<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    item_id: &'a str,
    question: &'a str,
    choices: &'a [Choice],
    setting: Setting,
    media_refs: &'a [String],
    pass: usize,
    prompt: &'a str,
}

#[derive(Debug, Serialize)]
struct ExtractorBody<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    question: &'a str,
    options: &'a [Choice],
    response: &'a str,
    prompt: &'a str,
}

#[derive(Debug, Deserialize)]
struct Reply {
    text: String,
}

struct Endpoint {
    agent: Agent,
    url: String,
    token: Option<String>,
    model: Option<String>,
}

impl Endpoint {
    fn from_env(url_var: &str, token_var: &str, settings: &ClientSettings) -> Result<Self> {
        let url = std::env::var(url_var)
            .map_err(|_| CliError::validation(format!("{url_var} is not set")))?;
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            agent,
            url,
            token: std::env::var(token_var).ok().filter(|t| !t.is_empty()),
            model: settings.model.clone(),
        })
    }

    fn post<B: Serialize>(&self, body: &B) -> std::result::Result<String, String> {
        let mut req = self.agent.post(&self.url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let reply: Reply = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        Ok(reply.text)
    }
}

/// The model under test behind an HTTP endpoint.
pub struct HttpResponder(Endpoint);

impl HttpResponder {
    pub fn from_env(settings: &ClientSettings) -> Result<Self> {
        Endpoint::from_env(RESPONDER_URL_ENV, RESPONDER_TOKEN_ENV, settings).map(Self)
    }
}

impl Responder for HttpResponder {
    fn respond(&self, r: &ResponderRequest<'_>) -> std::result::Result<String, String> {
        self.0.post(&ResponderBody {
            model: self.0.model.as_deref(),
            item_id: r.item_id,
            question: r.question,
            choices: r.choices,
            setting: r.setting,
            media_refs: r.media_refs,
            pass: r.pass,
            prompt: &r.prompt,
        })
    }
}

/// Second-stage extraction by a hosted model.
pub struct HttpExtractor(Endpoint);

impl HttpExtractor {
    pub fn from_env(settings: &ClientSettings) -> Result<Self> {
        Endpoint::from_env(EXTRACTOR_URL_ENV, EXTRACTOR_TOKEN_ENV, settings).map(Self)
    }
}

impl ChoiceExtractor for HttpExtractor {
    fn complete(&self, r: &ExtractionRequest<'_>) -> std::result::Result<String, String> {
        self.0.post(&ExtractorBody {
            model: self.0.model.as_deref(),
            question: r.question,
            options: &r.options,
            response: r.response,
            prompt: &r.prompt,
        })
    }
}

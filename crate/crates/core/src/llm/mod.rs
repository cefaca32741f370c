//! Curriculum generation and review through a chat-completions endpoint.
//!
//! Prompts are rendered deterministically from the task description, the
//! model is asked for JSON only, and every answer goes through the same
//! validator as the scripted curriculum. Transports can record exchanges to
//! a JSON-lines cassette and replay them without network access.

mod extract;
mod prompt;
mod transport;

use serde::Deserialize;
use thiserror::Error;

pub use extract::first_json_object;
pub use prompt::{describe, review_prompt, PromptBundle, PromptKind, REVIEW_EPISODES};
#[cfg(feature = "http")]
pub use transport::HttpTransport;
pub use transport::{
    completions_url, parse_completion, read_cassette, CassetteRecord, ChatMessage, ChatRequest,
    RecordingTransport, ReplayTransport, Transport, TransportError, API_KEY_VAR, DEFAULT_MODEL,
    DEFAULT_TEMPERATURE, REQUEST_TIMEOUT_SECS,
};

use crate::curriculum::{
    apply_adjustment, Adjustment, Curriculum, CurriculumDoc, CurriculumProvider, Provenance,
    ProviderError, ReviewContext, Stage,
};
use crate::mdp::EncodingSpec;
use crate::sim::EnvConfig;

pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("provider unavailable after {attempts} attempts: {source}")]
    Provider {
        attempts: usize,
        source: TransportError,
    },
    #[error("no valid answer after {} attempts; last error: {last_error}", raw.len())]
    ParseFailure {
        /// Every raw reply, in order.
        raw: Vec<String>,
        last_error: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase", deny_unknown_fields)]
enum ReviewAnswer {
    Keep,
    Adjust { stages: Vec<Stage> },
}

/// Model settings plus the transport used to reach it.
pub struct LlmClient<T> {
    pub transport: T,
    pub model: String,
    pub temperature: f64,
    /// Recorded on curricula this client produces.
    pub provenance: Provenance,
}

impl<T: Transport> LlmClient<T> {
    pub fn new(transport: T, provenance: Provenance) -> Self {
        Self {
            transport,
            model: DEFAULT_MODEL.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            provenance,
        }
    }

    fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages,
            temperature: self.temperature,
        }
    }

    /// Sends the prompt and feeds each reply to `accept`. A rejected reply
    /// is answered with the error and the question is asked again.
    fn converse<R>(
        &mut self,
        bundle: &PromptBundle,
        mut accept: impl FnMut(&str) -> Result<R, String>,
    ) -> Result<R, LlmError> {
        let mut messages = vec![
            ChatMessage::new("system", bundle.system_text.clone()),
            ChatMessage::new("user", bundle.user_text.clone()),
        ];
        let mut raw = Vec::new();
        let mut last_error = String::new();
        for attempt in 1..=MAX_ATTEMPTS {
            let request = self.request(messages.clone());
            let reply = match self.transport.complete(&request) {
                Ok(r) => r,
                Err(e) if e.is_transient() && attempt < MAX_ATTEMPTS => {
                    log::warn!("LLM request failed (attempt {attempt}): {e}");
                    continue;
                }
                Err(source) => return Err(LlmError::Provider { attempts: attempt, source }),
            };
            match accept(&reply) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("LLM reply rejected (attempt {attempt}): {e}");
                    last_error = e.clone();
                    messages.push(ChatMessage::new("assistant", reply.clone()));
                    messages.push(ChatMessage::new(
                        "user",
                        format!(
                            "Your answer was rejected: {e}\nReply again with only the corrected JSON object."
                        ),
                    ));
                    raw.push(reply);
                }
            }
        }
        if raw.is_empty() {
            last_error = "no reply".into();
        }
        Err(LlmError::ParseFailure { raw, last_error })
    }

    /// Asks for a curriculum for `target` and validates it.
    pub fn generate_curriculum(
        &mut self,
        bundle: &PromptBundle,
        target: &EnvConfig,
        spec: &EncodingSpec,
    ) -> Result<Curriculum, LlmError> {
        let provenance = self.provenance;
        self.converse(bundle, |reply| {
            let json = first_json_object(reply).ok_or("no JSON object found")?;
            let doc: CurriculumDoc = serde_json::from_str(json)
                .map_err(|e| format!("curriculum JSON does not match the schema: {e}"))?;
            Curriculum::new(doc.stages, provenance, reply.to_string(), target, spec)
                .map_err(|e| e.to_string())
        })
    }

    /// Asks whether to keep or rewrite the curriculum from stage `s` on.
    /// An adjustment is returned only if it would pass validation.
    pub fn review_progress(
        &mut self,
        ctx: &ReviewContext<'_>,
    ) -> Result<Adjustment, LlmError> {
        let bundle = review_prompt(ctx.history, ctx.curriculum, ctx.stage, ctx.target, ctx.spec);
        self.converse(&bundle, |reply| {
            let json = first_json_object(reply).ok_or("no JSON object found")?;
            let answer: ReviewAnswer = serde_json::from_str(json)
                .map_err(|e| format!("review JSON does not match the schema: {e}"))?;
            match answer {
                ReviewAnswer::Keep => Ok(Adjustment::Keep),
                ReviewAnswer::Adjust { stages } => {
                    let adjustment = Adjustment::Replace(stages);
                    apply_adjustment(ctx.curriculum, ctx.stage, &adjustment, ctx.target, ctx.spec)
                        .map_err(|e| e.to_string())?;
                    Ok(adjustment)
                }
            }
        })
    }
}

impl<T: Transport> CurriculumProvider for LlmClient<T> {
    fn generate(
        &mut self,
        target: &EnvConfig,
        spec: &EncodingSpec,
    ) -> Result<Curriculum, ProviderError> {
        let bundle = describe(target, spec);
        self.generate_curriculum(&bundle, target, spec)
            .map_err(|e| ProviderError(e.to_string()))
    }

    fn review(&mut self, ctx: &ReviewContext<'_>) -> Result<Adjustment, ProviderError> {
        self.review_progress(ctx)
            .map_err(|e| ProviderError(e.to_string()))
    }
}

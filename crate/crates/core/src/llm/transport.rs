use std::collections::{HashMap, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MODEL: &str = "gpt-4";
pub const REQUEST_TIMEOUT_SECS: u64 = 60;
pub const API_KEY_VAR: &str = "LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    /// Hex SHA-256 of the serialized request; the cassette lookup key.
    pub fn hash(&self) -> String {
        let body = serde_json::to_string(self).expect("request serializes");
        Sha256::digest(body.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request failed: {0}")]
    Network(String),
    #[error("endpoint answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Malformed(String),
    #[error("no cassette entry for request {0}")]
    CassetteMiss(String),
    #[error("cassette: {0}")]
    Cassette(String),
}

impl TransportError {
    /// Whether asking again could help.
    pub fn is_transient(&self) -> bool {
        match self {
            TransportError::Network(_) => true,
            TransportError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Sends one chat request and returns the assistant's text.
pub trait Transport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(request)
    }
}

/// Pulls `choices[0].message.content` out of a chat-completions body.
pub fn parse_completion(body: &str) -> Result<String, TransportError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| TransportError::Malformed(e.to_string()))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| TransportError::Malformed("missing choices[0].message.content".into()))
}

/// Appends `/chat/completions` unless the URL already ends with it.
pub fn completions_url(base: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.ends_with("/chat/completions") {
        base.to_string()
    } else {
        format!("{base}/chat/completions")
    }
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use super::*;

    pub struct HttpTransport {
        url: String,
        api_key: Option<String>,
        agent: ureq::Agent,
    }

    impl HttpTransport {
        /// Reads the bearer token from `LLM_API_KEY` if set.
        pub fn new(base_url: &str) -> Self {
            Self::with_key(base_url, std::env::var(API_KEY_VAR).ok())
        }

        pub fn with_key(base_url: &str, api_key: Option<String>) -> Self {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(REQUEST_TIMEOUT_SECS)))
                .http_status_as_error(false)
                .build()
                .into();
            Self {
                url: completions_url(base_url),
                api_key,
                agent,
            }
        }

        pub fn url(&self) -> &str {
            &self.url
        }
    }

    impl Transport for HttpTransport {
        fn complete(&mut self, request: &ChatRequest) -> Result<String, TransportError> {
            let body = serde_json::to_string(request).expect("request serializes");
            let mut req = self
                .agent
                .post(&self.url)
                .header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
            let mut resp = req
                .send(body)
                .map_err(|e| TransportError::Network(e.to_string()))?;
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| TransportError::Network(e.to_string()))?;
            if !(200..300).contains(&status) {
                return Err(TransportError::Status { status, body: text });
            }
            parse_completion(&text)
        }
    }
}

/// One cassette line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteRecord {
    pub hash: String,
    pub request: ChatRequest,
    pub response: String,
    /// Seconds since the Unix epoch at recording time.
    pub timestamp: u64,
}

/// Forwards to an inner transport and appends every exchange to a new
/// JSON-lines cassette.
pub struct RecordingTransport<T> {
    inner: T,
    file: File,
}

impl<T: Transport> RecordingTransport<T> {
    /// Fails if `path` already exists; recorded cassettes are never
    /// rewritten.
    pub fn create(inner: T, path: &Path) -> Result<Self, TransportError> {
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
            .map_err(|e| TransportError::Cassette(format!("{}: {e}", path.display())))?;
        Ok(Self { inner, file })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, TransportError> {
        let response = self.inner.complete(request)?;
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let record = CassetteRecord {
            hash: request.hash(),
            request: request.clone(),
            response: response.clone(),
            timestamp,
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(self.file, "{line}")
            .and_then(|_| self.file.flush())
            .map_err(|e| TransportError::Cassette(e.to_string()))?;
        Ok(response)
    }
}

/// Answers from a cassette by exact request hash, never touching the
/// network. Repeated identical requests are answered in recording order.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    path: PathBuf,
    entries: HashMap<String, VecDeque<String>>,
}

impl ReplayTransport {
    pub fn open(path: &Path) -> Result<Self, TransportError> {
        let file = File::open(path)
            .map_err(|e| TransportError::Cassette(format!("{}: {e}", path.display())))?;
        let mut entries: HashMap<String, VecDeque<String>> = HashMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| TransportError::Cassette(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CassetteRecord = serde_json::from_str(&line).map_err(|e| {
                TransportError::Cassette(format!("{} line {}: {e}", path.display(), n + 1))
            })?;
            entries.entry(record.hash).or_default().push_back(record.response);
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn remaining(&self) -> usize {
        self.entries.values().map(VecDeque::len).sum()
    }
}

impl Transport for ReplayTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, TransportError> {
        let hash = request.hash();
        self.entries
            .get_mut(&hash)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| {
                TransportError::CassetteMiss(format!("{hash} in {}", self.path.display()))
            })
    }
}

/// Reads every record of a cassette file.
pub fn read_cassette(path: &Path) -> Result<Vec<CassetteRecord>, TransportError> {
    let text = fs::read_to_string(path)
        .map_err(|e| TransportError::Cassette(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| TransportError::Cassette(e.to_string())))
        .collect()
}

//! `key = value` service configuration.
//!
//! ```text
//! # comments start with '#'
//! listen = 127.0.0.1:8080
//! memory = data/memory.jsonl
//! backend = symbolic            # or: remote
//! kb = data/kb.json             # symbolic only; bundled fixture when absent
//! remote_url = http://127.0.0.1:9000
//! remote_timeout_ms = 10000
//! remote_max_in_flight = 8
//! r = 5
//! strategy = F                  # F | Q | Q+F | RelevantQs+F
//! tau_b = 0.5
//! tau_e = 0.5
//! candidate_n = 4
//! max_premises = 3
//! autosave = true
//! session_idle_secs = 3600
//! ```

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use teachqa_core::engine::RemoteConfig;
use teachqa_core::{ControllerConfig, IndexStrategy};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSelection {
    /// `None` selects the bundled misconception fixture.
    Symbolic { kb: Option<PathBuf> },
    Remote(RemoteConfig),
}

impl BackendSelection {
    pub fn name(&self) -> &'static str {
        match self {
            BackendSelection::Symbolic { .. } => "symbolic",
            BackendSelection::Remote(_) => "remote",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub memory_path: Option<PathBuf>,
    pub backend: BackendSelection,
    pub controller: ControllerConfig,
    pub autosave: bool,
    pub session_idle: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            memory_path: None,
            backend: BackendSelection::Symbolic { kb: None },
            controller: ControllerConfig::default(),
            autosave: true,
            session_idle: Duration::from_secs(3600),
        }
    }
}

const KEYS: &[&str] = &[
    "listen",
    "memory",
    "backend",
    "kb",
    "remote_url",
    "remote_timeout_ms",
    "remote_max_in_flight",
    "r",
    "strategy",
    "tau_b",
    "tau_e",
    "candidate_n",
    "max_premises",
    "autosave",
    "session_idle_secs",
];

fn value<T: FromStr>(entries: &HashMap<String, (usize, String)>, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match entries.get(key) {
        None => Ok(None),
        Some((line, raw)) => raw.parse::<T>().map(Some).map_err(|e| ConfigError::Syntax {
            line: *line,
            message: format!("{key}: {e}"),
        }),
    }
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: HashMap<String, (usize, String)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = k.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if entries.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }

        let mut cfg = ServiceConfig::default();
        if let Some(listen) = value(&entries, "listen")? {
            cfg.listen = listen;
        }
        cfg.memory_path = value::<PathBuf>(&entries, "memory")?;
        let backend: String = value(&entries, "backend")?.unwrap_or_else(|| "symbolic".into());
        let remote_keys = ["remote_url", "remote_timeout_ms", "remote_max_in_flight"];
        cfg.backend = match backend.as_str() {
            "symbolic" => {
                if let Some(k) = remote_keys.iter().find(|k| entries.contains_key(**k)) {
                    return Err(ConfigError::Invalid(format!("`{k}` set but backend is symbolic")));
                }
                BackendSelection::Symbolic {
                    kb: value(&entries, "kb")?,
                }
            }
            "remote" => {
                if entries.contains_key("kb") {
                    return Err(ConfigError::Invalid("`kb` set but backend is remote".into()));
                }
                let url: String = value(&entries, "remote_url")?
                    .ok_or_else(|| ConfigError::Invalid("remote backend needs `remote_url`".into()))?;
                let mut remote = RemoteConfig::new(url);
                if let Some(t) = value(&entries, "remote_timeout_ms")? {
                    remote.timeout_ms = t;
                }
                if let Some(n) = value(&entries, "remote_max_in_flight")? {
                    remote.max_in_flight = n;
                }
                if remote.timeout_ms == 0 {
                    return Err(ConfigError::Invalid("remote_timeout_ms must be positive".into()));
                }
                if remote.max_in_flight == 0 {
                    return Err(ConfigError::Invalid("remote_max_in_flight must be positive".into()));
                }
                BackendSelection::Remote(remote)
            }
            other => {
                return Err(ConfigError::Invalid(format!(
                    "backend must be `symbolic` or `remote`, got `{other}`"
                )))
            }
        };

        let c = &mut cfg.controller;
        if let Some(r) = value(&entries, "r")? {
            c.retrieval.r = r;
        }
        if let Some(s) = value::<IndexStrategy>(&entries, "strategy")? {
            c.retrieval.strategy = s;
        }
        if let Some(v) = value(&entries, "tau_b")? {
            c.tau_b = v;
        }
        if let Some(v) = value(&entries, "tau_e")? {
            c.tau_e = v;
        }
        if let Some(v) = value(&entries, "candidate_n")? {
            c.candidate_n = v;
        }
        if let Some(v) = value(&entries, "max_premises")? {
            c.max_premises = v;
        }
        c.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(a) = value(&entries, "autosave")? {
            cfg.autosave = a;
        }
        if let Some(secs) = value::<u64>(&entries, "session_idle_secs")? {
            if secs == 0 {
                return Err(ConfigError::Invalid("session_idle_secs must be positive".into()));
            }
            cfg.session_idle = Duration::from_secs(secs);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        // relative paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(m) = &cfg.memory_path {
            if m.is_relative() {
                cfg.memory_path = Some(base.join(m));
            }
        }
        if let BackendSelection::Symbolic { kb: Some(kb) } = &cfg.backend {
            if kb.is_relative() {
                cfg.backend = BackendSelection::Symbolic {
                    kb: Some(base.join(kb)),
                };
            }
        }
        Ok(cfg)
    }
}

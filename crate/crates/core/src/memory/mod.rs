//! Dynamic memory of teacher-supplied facts and vetoed entailments.
//!
//! Facts are retrieved with BM25 under one of four indexing strategies. The
//! store itself is deduplicated on normalized text; what changes between
//! strategies is only which terms a fact is indexed under.

mod persist;
mod recall;
mod store;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use parking_lot::{RwLock, RwLockReadGuard, RwLockWriteGuard};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;
use crate::Bm25Params;

pub use recall::{recall_at_k, RecallAtK, RecallReport, RecallTable};
pub use store::MemoryStore;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("fact text is empty after normalization")]
    EmptyFact,
    #[error("blocked entailment needs at least one premise")]
    EmptyPremises,
    #[error("hypothesis text is empty after normalization")]
    EmptyHypothesis,
    #[error("no fact with id {0}")]
    UnknownFact(String),
    #[error("gold fact id {0} is not in the store")]
    UnknownGoldId(String),
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    User,
    SimulatedTeacher,
    SessionCommit,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::User => "user",
            Provenance::SimulatedTeacher => "simulated-teacher",
            Provenance::SessionCommit => "session-commit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRecord {
    pub id: String,
    pub text: String,
    pub provenance: Provenance,
    pub linked_question_ids: Vec<String>,
    pub seq: u64,
}

/// A question a fact was given as feedback for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRef {
    pub id: String,
    pub text: String,
}

impl QuestionRef {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }

    /// Content-derived id, stable across runs for the same question text.
    pub fn from_text(text: &str) -> Self {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(text::sentence_key(text).as_bytes());
        Self {
            id: format!("q-{}", &hex::encode(digest)[..16]),
            text: text::normalize(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedEntailment {
    pub premise_texts: Vec<String>,
    pub hypothesis_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum IndexStrategy {
    /// Terms of the fact itself.
    #[default]
    #[serde(rename = "F")]
    FactTerms,
    /// Terms of each question the fact was feedback for, one entry per question.
    #[serde(rename = "Q")]
    QuestionTerms,
    /// Question plus fact terms, one entry per question.
    #[serde(rename = "Q+F")]
    QuestionPlusFact,
    /// Fact terms plus every linked question's terms, one entry per fact.
    #[serde(rename = "RelevantQs+F")]
    RelevantQuestionsPlusFact,
}

impl IndexStrategy {
    pub const ALL: [IndexStrategy; 4] = [
        IndexStrategy::FactTerms,
        IndexStrategy::QuestionTerms,
        IndexStrategy::QuestionPlusFact,
        IndexStrategy::RelevantQuestionsPlusFact,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IndexStrategy::FactTerms => "F",
            IndexStrategy::QuestionTerms => "Q",
            IndexStrategy::QuestionPlusFact => "Q+F",
            IndexStrategy::RelevantQuestionsPlusFact => "RelevantQs+F",
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for IndexStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IndexStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match k.as_str() {
            "f" | "fact" | "factterms" => Ok(IndexStrategy::FactTerms),
            "q" | "question" | "questionterms" => Ok(IndexStrategy::QuestionTerms),
            "qf" | "questionplusfact" => Ok(IndexStrategy::QuestionPlusFact),
            "rqf" | "relevantqsf" | "relevantquestionsplusfact" => {
                Ok(IndexStrategy::RelevantQuestionsPlusFact)
            }
            _ => Err(format!("unknown index strategy `{s}` (expected F, Q, Q+F or RelevantQs+F)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    /// Maximum number of facts returned.
    pub r: usize,
    pub strategy: IndexStrategy,
    pub params: Bm25Params,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            r: 5,
            strategy: IndexStrategy::FactTerms,
            params: Bm25Params::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn with_strategy(mut self, strategy: IndexStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.r == 0 {
            return Err(MemoryError::InvalidConfig("r must be at least 1".into()));
        }
        self.params
            .validate()
            .map_err(|e| MemoryError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieved {
    pub record: FactRecord,
    pub score: f64,
}

/// Shared handle over a store: many concurrent readers, one writer at a time.
#[derive(Debug, Clone, Default)]
pub struct MemoryHandle(Arc<RwLock<MemoryStore>>);

impl MemoryHandle {
    pub fn new(store: MemoryStore) -> Self {
        Self(Arc::new(RwLock::new(store)))
    }

    pub fn read(&self) -> RwLockReadGuard<'_, MemoryStore> {
        self.0.read()
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, MemoryStore> {
        self.0.write()
    }

    pub fn retrieve(&self, query: &str, config: &RetrievalConfig) -> Vec<Retrieved> {
        self.read().retrieve(query, config)
    }

    pub fn add_fact(
        &self,
        text: &str,
        provenance: Provenance,
        question: Option<&QuestionRef>,
    ) -> Result<FactRecord, MemoryError> {
        self.write().add_fact(text, provenance, question)
    }

    pub fn is_blocked<S: AsRef<str>>(&self, premises: &[S], hypothesis: &str) -> bool {
        self.read().is_blocked(premises, hypothesis)
    }

    pub fn block_entailment<S: AsRef<str>>(
        &self,
        premises: &[S],
        hypothesis: &str,
    ) -> Result<BlockedEntailment, MemoryError> {
        self.write().block_entailment(premises, hypothesis)
    }

    pub fn content_hash(&self) -> String {
        self.read().content_hash()
    }

    pub fn snapshot(&self) -> MemoryStore {
        self.read().clone()
    }
}

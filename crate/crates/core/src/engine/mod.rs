//! Reasoning backend contract and its implementations.
//!
//! A backend turns (question, choice) pairs into declarative hypotheses,
//! generates premise sets that entail a hypothesis, and scores both the
//! individual premises ("is this true?") and the entailment as a whole.

mod grammar;
mod kb;
mod remote;
mod symbolic;
pub mod wire;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;
use crate::Score;

pub use grammar::{declarativize, entity_key, question_stem, Entity, Grammar, IsaRelation, Predicate, Statement, Template};
pub use kb::{KbAssertion, KbError, KbFile, KbIsaLink, Polarity, SymbolicKb};
pub use remote::{RemoteBackend, RemoteConfig};
pub use symbolic::{BeliefTable, SymbolicBackend, SymbolicConfig};

pub const DEFAULT_MAX_PREMISES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("no candidate answers")]
    NoCandidates,
    #[error("cannot parse statement `{0}`")]
    UnparseableStatement(String),
    #[error("invalid proof request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub text: String,
    pub question_id: String,
    pub choice_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofRequest {
    pub hypothesis: Hypothesis,
    pub question_text: String,
    pub choice_text: String,
    /// Retrieved memory sentences, in retrieval order.
    pub context: Vec<String>,
    /// When set, every returned proof starts with this sentence; it must be in `context`.
    pub forced_first_premise: Option<String>,
    pub max_premises: usize,
}

impl ProofRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_premises == 0 {
            return Err(BackendError::InvalidRequest("max_premises must be positive".into()));
        }
        if let Some(forced) = &self.forced_first_premise {
            let key = text::sentence_key(forced);
            if !self.context.iter().any(|c| text::sentence_key(c) == key) {
                return Err(BackendError::InvalidRequest(format!(
                    "forced premise `{forced}` is not part of the context"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProofError {
    #[error("a proof needs at least one premise")]
    NoPremises,
    #[error("{premises} premises but {scores} premise scores")]
    ScoreCount { premises: usize, scores: usize },
    #[error("score {0} outside [0, 1]")]
    OutOfRange(Score),
}

/// Premises entailing a hypothesis, with the verifier scores.
///
/// `overall_score` is always `entailment_score × Π premise_scores`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proof {
    pub premises: Vec<String>,
    pub hypothesis_text: String,
    pub premise_scores: Vec<Score>,
    pub entailment_score: Score,
    pub overall_score: Score,
    pub forced: bool,
}

impl Proof {
    pub fn new(
        premises: Vec<String>,
        hypothesis_text: String,
        premise_scores: Vec<Score>,
        entailment_score: Score,
        forced: bool,
    ) -> Result<Self, ProofError> {
        if premises.is_empty() {
            return Err(ProofError::NoPremises);
        }
        if premises.len() != premise_scores.len() {
            return Err(ProofError::ScoreCount {
                premises: premises.len(),
                scores: premise_scores.len(),
            });
        }
        for &s in premise_scores.iter().chain(std::iter::once(&entailment_score)) {
            if !(0.0..=1.0).contains(&s) {
                return Err(ProofError::OutOfRange(s));
            }
        }
        let overall_score = entailment_score * premise_scores.iter().product::<Score>();
        Ok(Self {
            premises,
            hypothesis_text,
            premise_scores,
            entailment_score,
            overall_score,
            forced,
        })
    }
}

/// Everything the answering loop needs from a model.
///
/// `generate_proof` returns `Ok(None)` when no proof is found; that is an
/// ordinary outcome, not a failure.
pub trait ReasoningBackend: Send + Sync {
    fn declarativize(&self, question: &str, choice: &str) -> Result<String, BackendError>;

    fn generate_candidates(&self, question: &str, n: usize) -> Result<Vec<String>, BackendError>;

    fn generate_proof(&self, request: &ProofRequest) -> Result<Option<Proof>, BackendError>;

    fn belief_score(&self, statement: &str, context: &[String]) -> Result<Score, BackendError>;

    fn entailment_score(&self, premises: &[String], hypothesis: &str) -> Result<Score, BackendError>;

    fn negate(&self, statement: &str) -> Result<String, BackendError>;

    fn direct_answer_score(&self, hypothesis: &Hypothesis) -> Result<Score, BackendError>;
}

impl<B: ReasoningBackend + ?Sized> ReasoningBackend for std::sync::Arc<B> {
    fn declarativize(&self, question: &str, choice: &str) -> Result<String, BackendError> {
        (**self).declarativize(question, choice)
    }
    fn generate_candidates(&self, question: &str, n: usize) -> Result<Vec<String>, BackendError> {
        (**self).generate_candidates(question, n)
    }
    fn generate_proof(&self, request: &ProofRequest) -> Result<Option<Proof>, BackendError> {
        (**self).generate_proof(request)
    }
    fn belief_score(&self, statement: &str, context: &[String]) -> Result<Score, BackendError> {
        (**self).belief_score(statement, context)
    }
    fn entailment_score(&self, premises: &[String], hypothesis: &str) -> Result<Score, BackendError> {
        (**self).entailment_score(premises, hypothesis)
    }
    fn negate(&self, statement: &str) -> Result<String, BackendError> {
        (**self).negate(statement)
    }
    fn direct_answer_score(&self, hypothesis: &Hypothesis) -> Result<Score, BackendError> {
        (**self).direct_answer_score(hypothesis)
    }
}

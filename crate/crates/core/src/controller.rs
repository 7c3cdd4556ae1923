//! Retrieve, prove, verify, pick.
//!
//! For every choice the controller asks the backend for one proof per
//! retrieved sentence (forced to start with that sentence) plus one free
//! proof. Proofs with a disbelieved premise, a weak entailment or a vetoed
//! (premises, hypothesis) pair are dropped; the best survivor wins.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{BackendError, Hypothesis, Proof, ProofRequest, ReasoningBackend, DEFAULT_MAX_PREMISES};
use crate::memory::{MemoryError, MemoryHandle, QuestionRef, RetrievalConfig};
use crate::text::{normalize, sentence_key};
use crate::Score;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("question has no choices")]
    NoChoices,
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub label: String,
    pub text: String,
}

impl Choice {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            text: text.into(),
        }
    }

    /// Labels choices A, B, C, ... in order.
    pub fn lettered<S: AsRef<str>>(texts: &[S]) -> Vec<Choice> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Choice::new(label_for(i), t.as_ref()))
            .collect()
    }
}

fn label_for(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("C{}", i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub retrieval: RetrievalConfig,
    pub tau_b: Score,
    pub tau_e: Score,
    pub candidate_n: usize,
    pub max_premises: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            tau_b: 0.5,
            tau_e: 0.5,
            candidate_n: 4,
            max_premises: DEFAULT_MAX_PREMISES,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        self.retrieval.validate()?;
        for (name, v) in [("tau_b", self.tau_b), ("tau_e", self.tau_e)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ControllerError::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.candidate_n == 0 {
            return Err(ControllerError::InvalidConfig("candidate_n must be positive".into()));
        }
        if self.max_premises == 0 {
            return Err(ControllerError::InvalidConfig("max_premises must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    /// 1-based index of the first premise below the belief threshold.
    DisbelievedPremise { premise: usize },
    WeakEntailment,
    Blocked,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Verified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub proof: Proof,
    pub verdict: Verdict,
    pub choice_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsideredFact {
    pub sentence: String,
    pub disbelieved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AnswerResult {
    Answered {
        choice_label: String,
        choice_text: String,
        hypothesis: String,
        best_proof: Option<Proof>,
        proof_pool: Vec<PoolEntry>,
        /// Context sentences, then premises of the best proof not already listed.
        considered_facts: Vec<ConsideredFact>,
    },
    NoProof {
        considered_facts: Vec<ConsideredFact>,
    },
}

impl AnswerResult {
    pub fn choice_label(&self) -> Option<&str> {
        match self {
            AnswerResult::Answered { choice_label, .. } => Some(choice_label),
            AnswerResult::NoProof { .. } => None,
        }
    }

    pub fn best_proof(&self) -> Option<&Proof> {
        match self {
            AnswerResult::Answered { best_proof, .. } => best_proof.as_ref(),
            AnswerResult::NoProof { .. } => None,
        }
    }

    pub fn considered_facts(&self) -> &[ConsideredFact] {
        match self {
            AnswerResult::Answered { considered_facts, .. } | AnswerResult::NoProof { considered_facts } => {
                considered_facts
            }
        }
    }

    pub fn proof_pool(&self) -> &[PoolEntry] {
        match self {
            AnswerResult::Answered { proof_pool, .. } => proof_pool,
            AnswerResult::NoProof { .. } => &[],
        }
    }
}

/// Concatenation of the question with every choice text.
pub fn retrieval_query(question: &str, choices: &[Choice]) -> String {
    let mut q = question.to_string();
    for c in choices {
        q.push(' ');
        q.push_str(&c.text);
    }
    q
}

fn check_inputs(question: &str, choices: &[Choice]) -> Result<(), ControllerError> {
    if normalize(question).is_empty() {
        return Err(ControllerError::EmptyQuestion);
    }
    if choices.is_empty() {
        return Err(ControllerError::NoChoices);
    }
    Ok(())
}

/// Retrieves context from memory and answers with it.
pub fn answer(
    question: &str,
    choices: &[Choice],
    memory: &MemoryHandle,
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<AnswerResult, ControllerError> {
    check_inputs(question, choices)?;
    config.validate()?;
    let context: Vec<String> = memory
        .retrieve(&retrieval_query(question, choices), &config.retrieval)
        .into_iter()
        .map(|r| r.record.text)
        .collect();
    answer_with_context(question, choices, &context, memory, backend, config)
}

/// Answers with a caller-supplied context; every context sentence is tried as
/// a forced first premise. Memory is consulted only for blocked entailments.
pub fn answer_with_context(
    question: &str,
    choices: &[Choice],
    context: &[String],
    memory: &MemoryHandle,
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<AnswerResult, ControllerError> {
    check_inputs(question, choices)?;
    config.validate()?;
    let qref = QuestionRef::from_text(question);
    let mut pool: Vec<PoolEntry> = Vec::new();
    let mut hypotheses = Vec::with_capacity(choices.len());
    // (choice index, forced, pool index) of the best verified proof so far
    let mut best: Option<(usize, bool, usize)> = None;

    for (ci, choice) in choices.iter().enumerate() {
        let hypothesis = Hypothesis {
            text: backend.declarativize(question, &choice.text)?,
            question_id: qref.id.clone(),
            choice_label: choice.label.clone(),
        };
        let forced_options = context.iter().map(Some).chain(std::iter::once(None));
        for forced in forced_options {
            let request = ProofRequest {
                hypothesis: hypothesis.clone(),
                question_text: question.to_string(),
                choice_text: choice.text.clone(),
                context: context.to_vec(),
                forced_first_premise: forced.cloned(),
                max_premises: config.max_premises,
            };
            let Some(proof) = backend.generate_proof(&request)? else {
                continue;
            };
            let verdict = verify(&proof, &hypothesis.text, memory, config);
            pool.push(PoolEntry {
                proof,
                verdict,
                choice_label: choice.label.clone(),
            });
            if verdict.passed() {
                let cand = (ci, forced.is_some(), pool.len() - 1);
                if best.map_or(true, |b| better(&pool, cand, b)) {
                    best = Some(cand);
                }
            }
        }
        hypotheses.push(hypothesis);
    }

    match best {
        Some((ci, _, pi)) => {
            let proof = pool[pi].proof.clone();
            let mut sentences = context.to_vec();
            for p in &proof.premises {
                if !sentences.iter().any(|s| sentence_key(s) == sentence_key(p)) {
                    sentences.push(p.clone());
                }
            }
            Ok(AnswerResult::Answered {
                choice_label: choices[ci].label.clone(),
                choice_text: choices[ci].text.clone(),
                hypothesis: hypotheses[ci].text.clone(),
                best_proof: Some(proof),
                proof_pool: pool,
                considered_facts: considered(&sentences, context, backend, config)?,
            })
        }
        None => {
            let mut sentences = context.to_vec();
            for entry in &pool {
                for p in &entry.proof.premises {
                    if !sentences.iter().any(|s| sentence_key(s) == sentence_key(p)) {
                        sentences.push(p.clone());
                    }
                }
            }
            Ok(AnswerResult::NoProof {
                considered_facts: considered(&sentences, context, backend, config)?,
            })
        }
    }
}

/// Higher overall score, then earlier choice, then unforced, then earlier in the pool.
fn better(pool: &[PoolEntry], a: (usize, bool, usize), b: (usize, bool, usize)) -> bool {
    let (sa, sb) = (pool[a.2].proof.overall_score, pool[b.2].proof.overall_score);
    match sa.partial_cmp(&sb).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.0, a.1, a.2) < (b.0, b.1, b.2),
    }
}

fn verify(proof: &Proof, hypothesis: &str, memory: &MemoryHandle, config: &ControllerConfig) -> Verdict {
    if let Some(i) = proof.premise_scores.iter().position(|&s| s < config.tau_b) {
        return Verdict::DisbelievedPremise { premise: i + 1 };
    }
    if proof.entailment_score < config.tau_e {
        return Verdict::WeakEntailment;
    }
    if memory.is_blocked(&proof.premises, hypothesis) {
        return Verdict::Blocked;
    }
    Verdict::Verified
}

fn considered(
    sentences: &[String],
    context: &[String],
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<Vec<ConsideredFact>, ControllerError> {
    sentences
        .iter()
        .map(|s| {
            let score = match backend.belief_score(s, context) {
                Ok(v) => v,
                Err(BackendError::UnparseableStatement(_)) => 0.0,
                Err(e) => return Err(e.into()),
            };
            Ok(ConsideredFact {
                sentence: s.clone(),
                disbelieved: score < config.tau_b,
            })
        })
        .collect()
}

/// Picks the choice whose hypothesis has the highest direct score; no proofs.
pub fn answer_direct(
    question: &str,
    choices: &[Choice],
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<AnswerResult, ControllerError> {
    check_inputs(question, choices)?;
    config.validate()?;
    let qref = QuestionRef::from_text(question);
    let mut best: Option<(Score, usize, String)> = None;
    for (ci, choice) in choices.iter().enumerate() {
        let hypothesis = Hypothesis {
            text: backend.declarativize(question, &choice.text)?,
            question_id: qref.id.clone(),
            choice_label: choice.label.clone(),
        };
        let score = backend.direct_answer_score(&hypothesis)?;
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, ci, hypothesis.text));
        }
    }
    let (_, ci, hypothesis) = best.expect("choices are non-empty");
    Ok(AnswerResult::Answered {
        choice_label: choices[ci].label.clone(),
        choice_text: choices[ci].text.clone(),
        hypothesis,
        best_proof: None,
        proof_pool: Vec::new(),
        considered_facts: Vec::new(),
    })
}

/// Answers an open question over backend-generated candidates.
pub fn answer_open(
    question: &str,
    memory: &MemoryHandle,
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<AnswerResult, ControllerError> {
    config.validate()?;
    match backend.generate_candidates(question, config.candidate_n) {
        Ok(candidates) => answer(question, &Choice::lettered(&candidates), memory, backend, config),
        Err(BackendError::NoCandidates) => Ok(AnswerResult::NoProof {
            considered_facts: Vec::new(),
        }),
        Err(e) => Err(e.into()),
    }
}

//! Teaching dialog: present an answer, take one feedback action, update
//! memory or session overrides, re-ask. Confirming commits the accepted
//! proof to memory.
//!
//! Premise and considered-fact indices in [`FeedbackAction`] are 1-based, the
//! way they are numbered when shown to the teacher.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{self, AnswerResult, Choice, ControllerConfig, ControllerError};
use crate::engine::{BackendError, ReasoningBackend};
use crate::memory::{MemoryError, MemoryHandle, Provenance, QuestionRef};
use crate::text::{normalize, sentence_key};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid question: {0}")]
    InvalidQuestion(String),
    #[error("session is {0:?}, not active")]
    SessionClosed(SessionStatus),
    #[error("index {index} out of range 1..={len}")]
    BadIndex { index: usize, len: usize },
    #[error("action not applicable: {0}")]
    ActionNotApplicable(String),
    #[error("fact text is empty")]
    EmptyText,
    #[error("the current turn has no proof to confirm")]
    NotConfirmed,
    #[error("bad transcript: {0}")]
    Transcript(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeedbackAction {
    LooksGood,
    FactIsFalse { premise: usize },
    FactIsMissing { text: String },
    FactIsTrue { fact: usize },
    BadReasoning,
    FactIsIrrelevant { fact: usize },
    UseOldFact { fact: usize },
    UseNewFact { text: String },
}

impl FeedbackAction {
    pub fn name(&self) -> &'static str {
        match self {
            FeedbackAction::LooksGood => "looks_good",
            FeedbackAction::FactIsFalse { .. } => "fact_is_false",
            FeedbackAction::FactIsMissing { .. } => "fact_is_missing",
            FeedbackAction::FactIsTrue { .. } => "fact_is_true",
            FeedbackAction::BadReasoning => "bad_reasoning",
            FeedbackAction::FactIsIrrelevant { .. } => "fact_is_irrelevant",
            FeedbackAction::UseOldFact { .. } => "use_old_fact",
            FeedbackAction::UseNewFact { .. } => "use_new_fact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Confirmed,
    Abandoned,
}

/// Session-scoped adjustments to the retrieved context.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOverrides {
    pub asserted_true: Vec<String>,
    pub asserted_false: Vec<String>,
    pub preferred_fact: Option<String>,
    pub irrelevant: Vec<String>,
}

impl SessionOverrides {
    fn suppressed(&self, sentence: &str) -> bool {
        let key = sentence_key(sentence);
        self.asserted_false
            .iter()
            .chain(&self.irrelevant)
            .any(|s| sentence_key(s) == key)
    }

    /// Preferred fact first, then retrieved sentences, then asserted-true
    /// sentences; suppressed sentences and duplicates dropped.
    pub fn apply(&self, retrieved: Vec<String>) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let push = |s: &String, out: &mut Vec<String>| {
            if !out.iter().any(|o| sentence_key(o) == sentence_key(s)) {
                out.push(s.clone());
            }
        };
        if let Some(p) = &self.preferred_fact {
            push(p, &mut out);
        }
        for s in retrieved.iter().chain(&self.asserted_true) {
            if !self.suppressed(s) {
                push(s, &mut out);
            }
        }
        out
    }
}

fn add_unique(list: &mut Vec<String>, sentence: &str) {
    let key = sentence_key(sentence);
    if !list.iter().any(|s| sentence_key(s) == key) {
        list.push(sentence.to_string());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    User,
    System,
}

/// One transcript line. User lines carry either the question or an action;
/// system lines carry a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub turn: u32,
    pub actor: Actor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<Choice>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<FeedbackAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<AnswerResult>,
    pub memory_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub question: String,
    pub choices: Vec<Choice>,
    pub turn_number: u32,
    pub last_result: AnswerResult,
    pub session_overrides: SessionOverrides,
    pub transcript: Vec<TranscriptEntry>,
    pub status: SessionStatus,
}

/// Memory, backend and controller settings a session runs against.
#[derive(Clone, Copy)]
pub struct SessionEnv<'a> {
    pub memory: &'a MemoryHandle,
    pub backend: &'a dyn ReasoningBackend,
    pub config: &'a ControllerConfig,
}

impl<'a> SessionEnv<'a> {
    pub fn new(memory: &'a MemoryHandle, backend: &'a dyn ReasoningBackend, config: &'a ControllerConfig) -> Self {
        Self { memory, backend, config }
    }
}

pub fn start_session(
    session_id: impl Into<String>,
    question: &str,
    choices: &[Choice],
    env: SessionEnv<'_>,
) -> Result<SessionState, SessionError> {
    let question = normalize(question);
    if question.is_empty() {
        return Err(SessionError::InvalidQuestion("question text is empty".into()));
    }
    if choices.is_empty() {
        return Err(SessionError::InvalidQuestion("no answer choices".into()));
    }
    let overrides = SessionOverrides::default();
    let result = ask(&question, choices, &overrides, env)?;
    let hash = env.memory.content_hash();
    Ok(SessionState {
        session_id: session_id.into(),
        question: question.clone(),
        choices: choices.to_vec(),
        turn_number: 1,
        transcript: vec![
            TranscriptEntry {
                turn: 1,
                actor: Actor::User,
                question: Some(question),
                choices: Some(choices.to_vec()),
                action: None,
                result: None,
                memory_hash: hash.clone(),
            },
            system_entry(1, &result, hash),
        ],
        last_result: result,
        session_overrides: overrides,
        status: SessionStatus::Active,
    })
}

fn system_entry(turn: u32, result: &AnswerResult, memory_hash: String) -> TranscriptEntry {
    TranscriptEntry {
        turn,
        actor: Actor::System,
        question: None,
        choices: None,
        action: None,
        result: Some(result.clone()),
        memory_hash,
    }
}

fn ask(
    question: &str,
    choices: &[Choice],
    overrides: &SessionOverrides,
    env: SessionEnv<'_>,
) -> Result<AnswerResult, SessionError> {
    env.config.validate()?;
    let retrieved: Vec<String> = env
        .memory
        .retrieve(&controller::retrieval_query(question, choices), &env.config.retrieval)
        .into_iter()
        .map(|r| r.record.text)
        .collect();
    let context = overrides.apply(retrieved);
    Ok(controller::answer_with_context(
        question,
        choices,
        &context,
        env.memory,
        env.backend,
        env.config,
    )?)
}

fn pick<'s>(items: &'s [String], index: usize) -> Result<&'s String, SessionError> {
    if index == 0 || index > items.len() {
        return Err(SessionError::BadIndex {
            index,
            len: items.len(),
        });
    }
    Ok(&items[index - 1])
}

fn non_empty(text: &str) -> Result<String, SessionError> {
    let t = normalize(text);
    if t.is_empty() {
        Err(SessionError::EmptyText)
    } else {
        Ok(t)
    }
}

/// Applies one action. Invalid actions leave the state and memory untouched.
pub fn apply_feedback(
    state: &mut SessionState,
    action: FeedbackAction,
    env: SessionEnv<'_>,
) -> Result<(), SessionError> {
    if state.status != SessionStatus::Active {
        return Err(SessionError::SessionClosed(state.status));
    }
    let qref = QuestionRef::from_text(&state.question);
    let considered: Vec<String> = state
        .last_result
        .considered_facts()
        .iter()
        .map(|f| f.sentence.clone())
        .collect();
    let best = state.last_result.best_proof().cloned();
    let need_proof = || {
        best.clone().ok_or_else(|| {
            SessionError::ActionNotApplicable(format!("`{}` needs an answered turn", action.name()))
        })
    };
    let mut overrides = state.session_overrides.clone();

    // Validate and stage; memory is touched only after validation.
    enum Effect {
        Confirm,
        AddFact(String),
        Block(Vec<String>, String),
        Nothing,
    }
    let effect = match &action {
        FeedbackAction::LooksGood => {
            if best.is_none() {
                return Err(SessionError::NotConfirmed);
            }
            Effect::Confirm
        }
        FeedbackAction::FactIsFalse { premise } => {
            let proof = need_proof()?;
            let f = pick(&proof.premises, *premise)?.clone();
            let negated = env.backend.negate(&f)?;
            add_unique(&mut overrides.asserted_false, &f);
            overrides.asserted_true.retain(|s| sentence_key(s) != sentence_key(&f));
            if overrides.preferred_fact.as_deref().map(sentence_key) == Some(sentence_key(&f)) {
                overrides.preferred_fact = None;
            }
            Effect::AddFact(negated)
        }
        FeedbackAction::FactIsMissing { text } | FeedbackAction::UseNewFact { text } => {
            let t = non_empty(text)?;
            overrides.preferred_fact = Some(t.clone());
            Effect::AddFact(t)
        }
        FeedbackAction::FactIsTrue { fact } => {
            let f = pick(&considered, *fact)?;
            add_unique(&mut overrides.asserted_true, f);
            overrides.asserted_false.retain(|s| sentence_key(s) != sentence_key(f));
            Effect::Nothing
        }
        FeedbackAction::BadReasoning => {
            let proof = need_proof()?;
            Effect::Block(proof.premises, proof.hypothesis_text)
        }
        FeedbackAction::FactIsIrrelevant { fact } => {
            let f = pick(&considered, *fact)?;
            add_unique(&mut overrides.irrelevant, f);
            if overrides.preferred_fact.as_deref().map(sentence_key) == Some(sentence_key(f)) {
                overrides.preferred_fact = None;
            }
            Effect::Nothing
        }
        FeedbackAction::UseOldFact { fact } => {
            let f = pick(&considered, *fact)?;
            overrides.preferred_fact = Some(f.clone());
            overrides.irrelevant.retain(|s| sentence_key(s) != sentence_key(f));
            Effect::Nothing
        }
    };

    match effect {
        Effect::Confirm => {}
        Effect::AddFact(t) => {
            env.memory.add_fact(&t, Provenance::User, Some(&qref))?;
        }
        Effect::Block(premises, hypothesis) => {
            env.memory.block_entailment(&premises, &hypothesis)?;
        }
        Effect::Nothing => {}
    }
    state.session_overrides = overrides;
    state.transcript.push(TranscriptEntry {
        turn: state.turn_number,
        actor: Actor::User,
        question: None,
        choices: None,
        action: Some(action.clone()),
        result: None,
        memory_hash: env.memory.content_hash(),
    });

    if matches!(action, FeedbackAction::LooksGood) {
        state.status = SessionStatus::Confirmed;
        commit_turn(state, env.memory)?;
        if let Some(last) = state.transcript.last_mut() {
            last.memory_hash = env.memory.content_hash();
        }
        return Ok(());
    }

    let result = ask(&state.question, &state.choices, &state.session_overrides, env)?;
    state.turn_number += 1;
    state
        .transcript
        .push(system_entry(state.turn_number, &result, env.memory.content_hash()));
    state.last_result = result;
    Ok(())
}

/// Writes the accepted premises and conclusion to memory.
pub fn commit_turn(state: &SessionState, memory: &MemoryHandle) -> Result<(), SessionError> {
    if state.status != SessionStatus::Confirmed {
        return Err(SessionError::NotConfirmed);
    }
    let AnswerResult::Answered {
        best_proof: Some(proof),
        hypothesis,
        ..
    } = &state.last_result
    else {
        return Err(SessionError::NotConfirmed);
    };
    let qref = QuestionRef::from_text(&state.question);
    let mut store = memory.write();
    for s in proof.premises.iter().chain(std::iter::once(hypothesis)) {
        store.add_fact(s, Provenance::SessionCommit, Some(&qref))?;
    }
    Ok(())
}

/// Ends the session without committing; memory additions already made stay.
pub fn abandon(state: &mut SessionState) -> Result<(), SessionError> {
    if state.status != SessionStatus::Active {
        return Err(SessionError::SessionClosed(state.status));
    }
    state.status = SessionStatus::Abandoned;
    state.session_overrides = SessionOverrides::default();
    Ok(())
}

pub fn transcript_to_jsonl(transcript: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for e in transcript {
        out.push_str(&serde_json::to_string(e).expect("transcript serializes"));
        out.push('\n');
    }
    out
}

pub fn transcript_from_jsonl(input: &str) -> Result<Vec<TranscriptEntry>, SessionError> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SessionError::Transcript(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Re-runs the recorded question and user actions against `env`.
pub fn replay(
    session_id: impl Into<String>,
    transcript: &[TranscriptEntry],
    env: SessionEnv<'_>,
) -> Result<SessionState, SessionError> {
    let first = transcript
        .first()
        .ok_or_else(|| SessionError::Transcript("empty transcript".into()))?;
    let (Some(question), Some(choices)) = (&first.question, &first.choices) else {
        return Err(SessionError::Transcript("first entry is not a question".into()));
    };
    let mut state = start_session(session_id, question, choices, env)?;
    for entry in &transcript[1..] {
        if let (Actor::User, Some(action)) = (entry.actor, &entry.action) {
            apply_feedback(&mut state, action.clone(), env)?;
        }
    }
    Ok(state)
}

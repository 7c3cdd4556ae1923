//! Teachable multiple-choice question answering.
//!
//! Answers are backed by entailment proofs from a pluggable reasoning
//! backend. A teacher corrects wrong beliefs through a dialog; corrections go
//! into a BM25-retrieved memory that is fed back as proof context, so later
//! questions benefit without retraining anything.

pub mod bm25;
pub mod controller;
pub mod engine;
pub mod memory;
pub mod session;
pub mod sim;
pub mod text;

/// Scalar used for retrieval and verifier scores.
pub type Score = f64;
pub type Bm25Params = bm25::Params<Score>;

pub use memory::{
    BlockedEntailment, FactRecord, IndexStrategy, MemoryError, MemoryHandle, MemoryStore,
    Provenance, QuestionRef, RetrievalConfig, Retrieved,
};
pub use controller::{
    answer, answer_direct, answer_open, answer_with_context, AnswerResult, Choice,
    ConsideredFact, ControllerConfig, ControllerError, PoolEntry, Verdict,
};
pub use session::{
    abandon, apply_feedback, commit_turn, replay, start_session, FeedbackAction, SessionEnv,
    SessionError, SessionOverrides, SessionState, SessionStatus, TranscriptEntry,
};

//! Backend that forwards every contract call to a model service over HTTP.
//!
//! Each call is exactly one `POST`. Connection failures, timeouts and 5xx
//! responses surface as [`BackendError::Unavailable`]; nothing is ever
//! substituted for a missing score.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::wire::{self, *};
use super::{BackendError, Hypothesis, Proof, ProofRequest, ReasoningBackend};
use crate::text::sentence_key;
use crate::Score;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout_ms: 10_000,
            max_in_flight: 8,
        }
    }
}

/// Counting semaphore capping concurrent requests.
#[derive(Debug)]
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(cap: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            cap: cap.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.cap {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    base: String,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl RemoteBackend {
    pub fn new(config: &RemoteConfig) -> Result<Self, BackendError> {
        if config.timeout_ms == 0 {
            return Err(BackendError::InvalidRequest("timeout must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(Self {
            base: config.base_url.trim_end_matches('/').to_string(),
            client,
            gate: Gate::new(config.max_in_flight),
        })
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, BackendError> {
        let _permit = self.gate.acquire();
        let url = format!("{}{}", self.base, path);
        let resp = self
            .client
            .post(&url)
            .json(body)
            .send()
            .map_err(|e| BackendError::Unavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(BackendError::Unavailable(format!("{url}: status {status}")));
        }
        if !status.is_success() {
            return Err(match resp.json::<ErrorBody>() {
                Ok(b) => match b.code.as_str() {
                    wire::ERR_UNPARSEABLE => BackendError::UnparseableStatement(b.message),
                    wire::ERR_INVALID_REQUEST => BackendError::InvalidRequest(b.message),
                    wire::ERR_NO_CANDIDATES => BackendError::NoCandidates,
                    _ => BackendError::Protocol(format!("{url}: status {status} {}: {}", b.code, b.message)),
                },
                Err(_) => BackendError::Protocol(format!("{url}: status {status}")),
            });
        }
        resp.json::<Resp>().map_err(|e| {
            if e.is_timeout() {
                BackendError::Unavailable(format!("{url}: {e}"))
            } else {
                BackendError::Protocol(format!("{url}: {e}"))
            }
        })
    }
}

fn check_score(s: Score) -> Result<Score, BackendError> {
    if (0.0..=1.0).contains(&s) {
        Ok(s)
    } else {
        Err(BackendError::Protocol(format!("score {s} outside [0, 1]")))
    }
}

impl ReasoningBackend for RemoteBackend {
    fn declarativize(&self, question: &str, choice: &str) -> Result<String, BackendError> {
        let r: DeclarativizeResponse = self.post(
            wire::DECLARATIVIZE,
            &DeclarativizeRequest {
                question: question.into(),
                choice: choice.into(),
            },
        )?;
        Ok(r.hypothesis)
    }

    fn generate_candidates(&self, question: &str, n: usize) -> Result<Vec<String>, BackendError> {
        let r: CandidatesResponse = self.post(
            wire::CANDIDATES,
            &CandidatesRequest {
                question: question.into(),
                n,
            },
        )?;
        let mut out = r.candidates;
        out.truncate(n);
        if out.is_empty() {
            return Err(BackendError::NoCandidates);
        }
        Ok(out)
    }

    fn generate_proof(&self, request: &ProofRequest) -> Result<Option<Proof>, BackendError> {
        request.validate()?;
        let r: ProofWireResponse = self.post(
            wire::PROOF,
            &ProofWireRequest {
                hypothesis: request.hypothesis.text.clone(),
                question: request.question_text.clone(),
                choice: request.choice_text.clone(),
                context: request.context.clone(),
                forced_first: request.forced_first_premise.clone(),
                max_premises: request.max_premises,
            },
        )?;
        if r.no_proof {
            return Ok(None);
        }
        let (Some(premises), Some(scores), Some(entailment)) =
            (r.premises, r.premise_scores, r.entailment_score)
        else {
            return Err(BackendError::Protocol("incomplete proof response".into()));
        };
        if let Some(forced) = &request.forced_first_premise {
            if premises.first().map(|p| sentence_key(p)) != Some(sentence_key(forced)) {
                return Err(BackendError::Protocol(
                    "proof does not start with the forced premise".into(),
                ));
            }
        }
        Proof::new(
            premises,
            request.hypothesis.text.clone(),
            scores,
            entailment,
            request.forced_first_premise.is_some(),
        )
        .map(Some)
        .map_err(|e| BackendError::Protocol(e.to_string()))
    }

    fn belief_score(&self, statement: &str, context: &[String]) -> Result<Score, BackendError> {
        let r: ScoreResponse = self.post(
            wire::BELIEF,
            &BeliefRequest {
                statement: statement.into(),
                context: context.to_vec(),
            },
        )?;
        check_score(r.score)
    }

    fn entailment_score(&self, premises: &[String], hypothesis: &str) -> Result<Score, BackendError> {
        let r: ScoreResponse = self.post(
            wire::ENTAILMENT,
            &EntailmentRequest {
                premises: premises.to_vec(),
                hypothesis: hypothesis.into(),
            },
        )?;
        check_score(r.score)
    }

    fn negate(&self, statement: &str) -> Result<String, BackendError> {
        let r: NegateResponse = self.post(
            wire::NEGATE,
            &NegateRequest {
                statement: statement.into(),
            },
        )?;
        Ok(r.statement)
    }

    fn direct_answer_score(&self, hypothesis: &Hypothesis) -> Result<Score, BackendError> {
        let r: ScoreResponse = self.post(
            wire::DIRECT,
            &DirectRequest {
                hypothesis: hypothesis.text.clone(),
            },
        )?;
        check_score(r.score)
    }
}

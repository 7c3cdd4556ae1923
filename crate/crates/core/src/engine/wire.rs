//! JSON bodies of the remote model-service protocol.
//!
//! | endpoint               | request                 | response              |
//! |------------------------|-------------------------|-----------------------|
//! | `POST /v1/declarativize` | [`DeclarativizeRequest`] | [`DeclarativizeResponse`] |
//! | `POST /v1/candidates`  | [`CandidatesRequest`]   | [`CandidatesResponse`] |
//! | `POST /v1/proof`       | [`ProofWireRequest`]    | [`ProofWireResponse`] |
//! | `POST /v1/belief`      | [`BeliefRequest`]       | [`ScoreResponse`]     |
//! | `POST /v1/entailment`  | [`EntailmentRequest`]   | [`ScoreResponse`]     |
//! | `POST /v1/negate`      | [`NegateRequest`]       | [`NegateResponse`]    |
//! | `POST /v1/direct`      | [`DirectRequest`]       | [`ScoreResponse`]     |

use serde::{Deserialize, Serialize};

use crate::Score;

pub const DECLARATIVIZE: &str = "/v1/declarativize";
pub const CANDIDATES: &str = "/v1/candidates";
pub const PROOF: &str = "/v1/proof";
pub const BELIEF: &str = "/v1/belief";
pub const ENTAILMENT: &str = "/v1/entailment";
pub const NEGATE: &str = "/v1/negate";
pub const DIRECT: &str = "/v1/direct";

/// Error codes a model service may return in `ErrorBody::code` with a 4xx status.
pub const ERR_UNPARSEABLE: &str = "unparseable_statement";
pub const ERR_INVALID_REQUEST: &str = "invalid_request";
pub const ERR_NO_CANDIDATES: &str = "no_candidates";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclarativizeRequest {
    pub question: String,
    pub choice: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclarativizeResponse {
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesRequest {
    pub question: String,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesResponse {
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofWireRequest {
    pub hypothesis: String,
    pub question: String,
    pub choice: String,
    pub context: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_first: Option<String>,
    pub max_premises: usize,
}

/// Either `{"no_proof": true}` or the premises with their scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProofWireResponse {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_proof: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premises: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_scores: Option<Vec<Score>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entailment_score: Option<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefRequest {
    pub statement: String,
    pub context: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentRequest {
    pub premises: Vec<String>,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegateRequest {
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegateResponse {
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectRequest {
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub score: Score,
}

/// Error body returned by the service with a non-2xx status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

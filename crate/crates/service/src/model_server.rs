//! Serves any [`ReasoningBackend`] over the `/v1/*` model protocol so that
//! [`RemoteBackend`](teachqa_core::engine::RemoteBackend) can talk to it.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use teachqa_core::engine::wire::{self, *};
use teachqa_core::engine::{BackendError, Hypothesis, ProofRequest, ReasoningBackend};

pub struct ModelError(StatusCode, &'static str, String);

impl IntoResponse for ModelError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.1.into(),
            message: self.2,
        };
        (self.0, Json(body)).into_response()
    }
}

impl From<BackendError> for ModelError {
    fn from(e: BackendError) -> Self {
        let msg = e.to_string();
        match e {
            BackendError::UnparseableStatement(s) => {
                ModelError(StatusCode::UNPROCESSABLE_ENTITY, wire::ERR_UNPARSEABLE, s)
            }
            BackendError::InvalidRequest(s) => ModelError(StatusCode::BAD_REQUEST, wire::ERR_INVALID_REQUEST, s),
            BackendError::NoCandidates => ModelError(StatusCode::UNPROCESSABLE_ENTITY, wire::ERR_NO_CANDIDATES, msg),
            BackendError::Unavailable(_) => ModelError(StatusCode::SERVICE_UNAVAILABLE, "unavailable", msg),
            BackendError::Protocol(_) => ModelError(StatusCode::BAD_GATEWAY, "upstream_protocol", msg),
        }
    }
}

impl From<JsonRejection> for ModelError {
    fn from(e: JsonRejection) -> Self {
        ModelError(StatusCode::BAD_REQUEST, wire::ERR_INVALID_REQUEST, e.body_text())
    }
}

type Backend = Arc<dyn ReasoningBackend>;
type Body<T> = Result<Json<T>, JsonRejection>;
type Reply<T> = Result<Json<T>, ModelError>;

async fn run<T, F>(backend: Backend, f: F) -> Reply<T>
where
    F: FnOnce(&dyn ReasoningBackend) -> Result<T, BackendError> + Send + 'static,
    T: Send + 'static,
{
    let out = tokio::task::spawn_blocking(move || f(backend.as_ref()))
        .await
        .map_err(|e| ModelError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(out))
}

fn hypothesis(text: String) -> Hypothesis {
    Hypothesis {
        text,
        question_id: String::new(),
        choice_label: String::new(),
    }
}

async fn declarativize(State(b): State<Backend>, body: Body<DeclarativizeRequest>) -> Reply<DeclarativizeResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        Ok(DeclarativizeResponse {
            hypothesis: b.declarativize(&r.question, &r.choice)?,
        })
    })
    .await
}

async fn candidates(State(b): State<Backend>, body: Body<CandidatesRequest>) -> Reply<CandidatesResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        Ok(CandidatesResponse {
            candidates: b.generate_candidates(&r.question, r.n)?,
        })
    })
    .await
}

async fn proof(State(b): State<Backend>, body: Body<ProofWireRequest>) -> Reply<ProofWireResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        let req = ProofRequest {
            hypothesis: hypothesis(r.hypothesis),
            question_text: r.question,
            choice_text: r.choice,
            context: r.context,
            forced_first_premise: r.forced_first,
            max_premises: r.max_premises,
        };
        req.validate()?;
        Ok(match b.generate_proof(&req)? {
            None => ProofWireResponse {
                no_proof: true,
                ..ProofWireResponse::default()
            },
            Some(p) => ProofWireResponse {
                no_proof: false,
                premises: Some(p.premises),
                premise_scores: Some(p.premise_scores),
                entailment_score: Some(p.entailment_score),
            },
        })
    })
    .await
}

async fn belief(State(b): State<Backend>, body: Body<BeliefRequest>) -> Reply<ScoreResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        Ok(ScoreResponse {
            score: b.belief_score(&r.statement, &r.context)?,
        })
    })
    .await
}

async fn entailment(State(b): State<Backend>, body: Body<EntailmentRequest>) -> Reply<ScoreResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        Ok(ScoreResponse {
            score: b.entailment_score(&r.premises, &r.hypothesis)?,
        })
    })
    .await
}

async fn negate(State(b): State<Backend>, body: Body<NegateRequest>) -> Reply<NegateResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        Ok(NegateResponse {
            statement: b.negate(&r.statement)?,
        })
    })
    .await
}

async fn direct(State(b): State<Backend>, body: Body<DirectRequest>) -> Reply<ScoreResponse> {
    let Json(r) = body?;
    run(b, move |b| {
        Ok(ScoreResponse {
            score: b.direct_answer_score(&hypothesis(r.hypothesis))?,
        })
    })
    .await
}

pub fn router(backend: Arc<dyn ReasoningBackend>) -> Router {
    Router::new()
        .route(wire::DECLARATIVIZE, post(declarativize))
        .route(wire::CANDIDATES, post(candidates))
        .route(wire::PROOF, post(proof))
        .route(wire::BELIEF, post(belief))
        .route(wire::ENTAILMENT, post(entailment))
        .route(wire::NEGATE, post(negate))
        .route(wire::DIRECT, post(direct))
        .with_state(backend)
}

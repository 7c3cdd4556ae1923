use std::sync::atomic::{AtomicUsize, Ordering};

use parking_lot::Mutex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teachqa_core::controller::retrieval_query;
use teachqa_core::engine::{
    BackendError, BeliefTable, Hypothesis, Proof, ProofRequest, ReasoningBackend, SymbolicBackend, SymbolicConfig,
    SymbolicKb,
};
use teachqa_core::sim::{self, SuiteConfig};
use teachqa_core::text::sentence_key;
use teachqa_core::{
    answer, AnswerResult, Choice, ControllerConfig, IndexStrategy, MemoryHandle, Provenance, Score, Verdict,
};

use crate::Outcome;

/// Records every proof request and the proof returned for it.
struct Recording<'a> {
    inner: &'a dyn ReasoningBackend,
    log: Mutex<Vec<(ProofRequest, Option<Proof>)>>,
    calls: AtomicUsize,
}

impl<'a> Recording<'a> {
    fn new(inner: &'a dyn ReasoningBackend) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
            calls: AtomicUsize::new(0),
        }
    }
}

impl ReasoningBackend for Recording<'_> {
    fn declarativize(&self, q: &str, c: &str) -> Result<String, BackendError> {
        self.inner.declarativize(q, c)
    }
    fn generate_candidates(&self, q: &str, n: usize) -> Result<Vec<String>, BackendError> {
        self.inner.generate_candidates(q, n)
    }
    fn generate_proof(&self, r: &ProofRequest) -> Result<Option<Proof>, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let p = self.inner.generate_proof(r)?;
        self.log.lock().push((r.clone(), p.clone()));
        Ok(p)
    }
    fn belief_score(&self, s: &str, c: &[String]) -> Result<Score, BackendError> {
        self.inner.belief_score(s, c)
    }
    fn entailment_score(&self, p: &[String], h: &str) -> Result<Score, BackendError> {
        self.inner.entailment_score(p, h)
    }
    fn negate(&self, s: &str) -> Result<String, BackendError> {
        self.inner.negate(s)
    }
    fn direct_answer_score(&self, h: &Hypothesis) -> Result<Score, BackendError> {
        self.inner.direct_answer_score(h)
    }
}

struct Fixture {
    kb: SymbolicKb,
    symbolic: SymbolicConfig,
    question: String,
    choices: Vec<Choice>,
    facts: Vec<String>,
    config: ControllerConfig,
    block_one: bool,
}

const PENNY_POOL: &[&str] = &[
    "A penny is made of copper.",
    "A magnet cannot attract copper.",
    "A magnet can attract copper.",
    "A penny is made of magnetic metal.",
    "A copper pan is made of copper.",
    "Metals are magnetic.",
    "Copper is not magnetic.",
    "A magnet cannot attract a penny.",
    "Plants create food through photosynthesis.",
    "Frobnitz gleeps wildly.",
];

const PENNY_QUESTIONS: &[&str] = &[
    "Can a magnet attract a penny?",
    "Can a magnet attract a copper pan?",
    "Can a magnet attract copper?",
];

fn fixture(rng: &mut ChaCha8Rng, suites: &[sim::SyntheticSuite]) -> Fixture {
    let mut symbolic = SymbolicConfig::default();
    if rng.gen_bool(0.5) {
        let kb_true = rng.gen_range(0.0..=1.0);
        symbolic.beliefs = BeliefTable {
            context_true: rng.gen_range(kb_true..=1.0),
            context_false: rng.gen_range(0.0..=0.2),
            kb_true,
            kb_false: rng.gen_range(0.0..=0.5),
            unknown: rng.gen_range(0.0..=1.0),
        };
    }
    if rng.gen_bool(0.3) {
        symbolic.spurious_rate = rng.gen_range(0.0..=0.6);
        symbolic.noise_seed = rng.gen();
    }
    let mut config = ControllerConfig::default();
    config.retrieval = config
        .retrieval
        .with_r(rng.gen_range(1..=6))
        .with_strategy(*IndexStrategy::ALL.choose(rng).unwrap());
    config.tau_b = rng.gen_range(0.0..=1.0);
    config.tau_e = rng.gen_range(0.0..=1.0);
    config.max_premises = rng.gen_range(1..=4);

    let choice_sets: [&[&str]; 4] = [&["yes", "no"], &["no", "yes"], &["yes"], &["yes", "no", "maybe"]];
    let choices = Choice::lettered(choice_sets.choose(rng).unwrap());
    let n_facts = rng.gen_range(0..=8);
    if rng.gen_bool(0.5) {
        let facts = (0..n_facts)
            .map(|_| PENNY_POOL.choose(rng).unwrap().to_string())
            .collect();
        Fixture {
            kb: SymbolicKb::penny_fixture(),
            symbolic,
            question: PENNY_QUESTIONS.choose(rng).unwrap().to_string(),
            choices,
            facts,
            config,
            block_one: rng.gen_bool(0.3),
        }
    } else {
        let suite = suites.choose(rng).unwrap();
        let ex = suite.test.choose(rng).unwrap();
        let mut pool: Vec<String> = suite.facts.iter().map(|f| f.sentence.clone()).collect();
        pool.extend(ex.gold_premises.iter().cloned());
        pool.push(PENNY_POOL[9].to_string());
        let facts = (0..n_facts).map(|_| pool.choose(rng).unwrap().clone()).collect();
        Fixture {
            kb: SymbolicKb::from_file(suite.kb.clone()).unwrap(),
            symbolic,
            question: ex.question.clone(),
            choices,
            facts,
            config,
            block_one: rng.gen_bool(0.3),
        }
    }
}

fn check(case: usize, fx: &Fixture) -> Result<(usize, bool), String> {
    let backend = SymbolicBackend::with_config(fx.kb.clone(), fx.symbolic);
    let memory = MemoryHandle::default();
    for f in &fx.facts {
        memory.add_fact(f, Provenance::User, None).map_err(|e| e.to_string())?;
    }
    if fx.block_one {
        let first = answer(&fx.question, &fx.choices, &memory, &backend, &fx.config).map_err(|e| e.to_string())?;
        if let Some(p) = first.best_proof() {
            memory.block_entailment(&p.premises, &p.hypothesis_text).map_err(|e| e.to_string())?;
        }
    }

    let rec = Recording::new(&backend);
    let result = answer(&fx.question, &fx.choices, &memory, &rec, &fx.config).map_err(|e| e.to_string())?;
    let context: Vec<String> = memory
        .retrieve(&retrieval_query(&fx.question, &fx.choices), &fx.config.retrieval)
        .into_iter()
        .map(|r| r.record.text)
        .collect();
    let calls = rec.calls.load(Ordering::SeqCst);
    let expected = (context.len() + 1) * fx.choices.len();
    ensure!(calls == expected, "case {case}: {calls} proof attempts, expected {expected}");

    for (req, proof) in rec.log.lock().iter() {
        if let Some(forced) = &req.forced_first_premise {
            ensure!(context.contains(forced), "case {case}: forced premise `{forced}` not in context");
            if let Some(p) = proof {
                ensure!(
                    sentence_key(&p.premises[0]) == sentence_key(forced),
                    "case {case}: forced proof starts with `{}`",
                    p.premises[0]
                );
            }
        }
    }

    // every verdict is recomputed from the backend's own scores
    for entry in result.proof_pool() {
        let p = &entry.proof;
        for (prem, &s) in p.premises.iter().zip(&p.premise_scores) {
            let fresh = backend.belief_score(prem, &context).unwrap_or(fx.symbolic.beliefs.unknown);
            ensure!(fresh == s, "case {case}: premise `{prem}` scored {s}, belief is {fresh}");
        }
        let product: f64 = p.premise_scores.iter().product::<f64>() * p.entailment_score;
        ensure!((product - p.overall_score).abs() < 1e-12, "case {case}: overall score is not the product");
        let passes = p.premise_scores.iter().all(|&s| s >= fx.config.tau_b)
            && p.entailment_score >= fx.config.tau_e
            && !memory.is_blocked(&p.premises, &p.hypothesis_text);
        ensure!(
            passes == entry.verdict.passed(),
            "case {case}: verdict {:?} but constraints say {passes}",
            entry.verdict
        );
        if let Verdict::DisbelievedPremise { premise } = entry.verdict {
            ensure!(
                p.premise_scores[premise - 1] < fx.config.tau_b,
                "case {case}: premise {premise} flagged but believed"
            );
        }
    }
    let best_verified = result
        .proof_pool()
        .iter()
        .filter(|e| e.verdict.passed())
        .map(|e| e.proof.overall_score)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
    match (&result, best_verified) {
        (AnswerResult::Answered { best_proof: Some(p), .. }, Some(max)) => {
            ensure!(p.premise_scores.iter().all(|&s| s >= fx.config.tau_b), "case {case}: answered below tau_b");
            ensure!(p.entailment_score >= fx.config.tau_e, "case {case}: answered below tau_e");
            ensure!(!memory.is_blocked(&p.premises, &p.hypothesis_text), "case {case}: answered a blocked proof");
            ensure!(p.overall_score == max, "case {case}: best proof is not the top verified score");
        }
        (AnswerResult::NoProof { .. }, None) => {}
        (r, m) => return Err(format!("case {case}: outcome {:?} with best verified {m:?}", r.choice_label())),
    }

    // deterministic across runs and backend instances
    let again = answer(&fx.question, &fx.choices, &memory, &backend.clone(), &fx.config).map_err(|e| e.to_string())?;
    ensure!(again == result, "case {case}: second run differs");
    Ok((calls, result.best_proof().is_some()))
}

pub fn invariants() -> Outcome {
    let suites: Vec<_> = (0..3)
        .map(|seed| {
            sim::generate(&SuiteConfig {
                seed,
                ..SuiteConfig::default()
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1_000_003);
    let mut attempts = 0;
    let mut answered = 0;
    for case in 0..200 {
        let fx = fixture(&mut rng, &suites);
        let (calls, ok) = check(case, &fx)?;
        attempts += calls;
        answered += ok as usize;
    }
    Ok(format!("200 fixtures, {attempts} proof attempts, {answered} answered, all constraints hold"))
}

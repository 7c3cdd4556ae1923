//! Deterministic knowledge-base backend.
//!
//! Proofs are derivations under two rules: a statement is provable from
//! itself, and `(X isa Y) ∧ (Y P) ⊢ (X P)` for any predicate P and either
//! polarity. Context sentences are tried before KB statements, and a context
//! sentence overrides any KB statement of the opposite polarity.

use std::collections::{HashMap, HashSet};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grammar::{declarativize, open_question_kind, Statement};
use super::kb::SymbolicKb;
use super::{BackendError, Hypothesis, Proof, ProofRequest, ReasoningBackend};
use crate::text::sentence_key;
use crate::Score;

/// Belief scores by where a statement (or its negation) is found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefTable {
    pub context_true: Score,
    pub context_false: Score,
    pub kb_true: Score,
    pub kb_false: Score,
    pub unknown: Score,
}

impl Default for BeliefTable {
    fn default() -> Self {
        Self {
            context_true: 1.0,
            context_false: 0.0,
            kb_true: 0.9,
            kb_false: 0.1,
            unknown: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolicConfig {
    pub beliefs: BeliefTable,
    /// Probability that an underivable (premises, hypothesis) pair is
    /// nevertheless accepted by the entailment check. Zero disables it.
    pub spurious_rate: f64,
    pub noise_seed: u64,
}

impl Default for SymbolicConfig {
    fn default() -> Self {
        Self {
            beliefs: BeliefTable::default(),
            spurious_rate: 0.0,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Available {
    stmt: Statement,
    /// Context sentence verbatim, or the rendered KB statement.
    text: String,
}

const PARSE_CACHE_CAP: usize = 1 << 16;

#[derive(Debug)]
pub struct SymbolicBackend {
    kb: SymbolicKb,
    config: SymbolicConfig,
    parsed: Mutex<HashMap<String, Option<Statement>>>,
}

impl Clone for SymbolicBackend {
    fn clone(&self) -> Self {
        Self::with_config(self.kb.clone(), self.config)
    }
}

impl SymbolicBackend {
    pub fn new(kb: SymbolicKb) -> Self {
        Self::with_config(kb, SymbolicConfig::default())
    }

    pub fn with_config(kb: SymbolicKb, config: SymbolicConfig) -> Self {
        Self {
            kb,
            config,
            parsed: Mutex::new(HashMap::new()),
        }
    }

    pub fn kb(&self) -> &SymbolicKb {
        &self.kb
    }

    pub fn config(&self) -> &SymbolicConfig {
        &self.config
    }

    fn parse(&self, sentence: &str) -> Option<Statement> {
        if let Some(hit) = self.parsed.lock().get(sentence) {
            return hit.clone();
        }
        let st = self.kb.grammar().parse(sentence);
        let mut cache = self.parsed.lock();
        if cache.len() >= PARSE_CACHE_CAP {
            cache.clear();
        }
        cache.insert(sentence.to_string(), st.clone());
        st
    }

    /// Context statements first (in order), then the KB statements about
    /// subjects reachable from `root` through taxonomy links, in KB order.
    /// KB statements contradicted or repeated by the context are left out.
    fn available(&self, context: &[String], root: &str) -> Vec<Available> {
        let mut out: Vec<Available> = Vec::new();
        let mut context_keys: HashSet<String> = HashSet::new();
        for sentence in context {
            if let Some(stmt) = self.parse(sentence) {
                if context_keys.insert(stmt.key()) {
                    out.push(Available {
                        stmt,
                        text: sentence.clone(),
                    });
                }
            }
        }
        let statements = self.kb.statements();
        let usable = |i: &usize| {
            let st = &statements[*i];
            !context_keys.contains(&st.key()) && !context_keys.contains(&st.negation_key())
        };
        let mut reached = vec![root.to_string()];
        let mut next = 0;
        while next < reached.len() {
            let subject = reached[next].clone();
            next += 1;
            let from_context = out.iter().map(|a| &a.stmt);
            let from_kb = self.kb.about(&subject).iter().filter(|i| usable(i)).map(|&i| &statements[i]);
            let parents: Vec<String> = from_context
                .chain(from_kb)
                .filter(|st| st.subject.key == subject && st.positive)
                .filter_map(|st| st.predicate.isa_parent().map(|p| p.key.clone()))
                .collect();
            for p in parents {
                if !reached.contains(&p) {
                    reached.push(p);
                }
            }
        }
        let mut kb_indices: Vec<usize> = reached
            .iter()
            .flat_map(|s| self.kb.about(s).iter().copied())
            .filter(|i| usable(i))
            .collect();
        kb_indices.sort_unstable();
        for i in kb_indices {
            out.push(Available {
                text: statements[i].render(),
                stmt: statements[i].clone(),
            });
        }
        out
    }

    /// Deterministic pseudo-random acceptance of an underivable pair.
    fn spurious_accepts(&self, premises: &[String], hypothesis: &str) -> bool {
        if self.config.spurious_rate <= 0.0 {
            return false;
        }
        let mut keys: Vec<String> = premises.iter().map(|p| sentence_key(p)).collect();
        keys.sort();
        let mut hasher = Sha256::new();
        hasher.update(self.config.noise_seed.to_le_bytes());
        for k in &keys {
            hasher.update(k.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update(sentence_key(hypothesis).as_bytes());
        let digest = hasher.finalize();
        let x = u64::from_le_bytes(digest[..8].try_into().unwrap());
        (x as f64 / u64::MAX as f64) < self.config.spurious_rate
    }

    fn belief(&self, statement: &str, context: &[String]) -> Score {
        self.belief_score(statement, context)
            .unwrap_or(self.config.beliefs.unknown)
    }

    fn spurious_proof(&self, req: &ProofRequest) -> Result<Option<Proof>, BackendError> {
        let hypothesis = &req.hypothesis.text;
        let mut premises: Vec<String> = Vec::new();
        if let Some(forced) = &req.forced_first_premise {
            premises.push(forced.clone());
        }
        for c in &req.context {
            if premises.len() >= req.max_premises.min(2) {
                break;
            }
            if !premises.iter().any(|p| sentence_key(p) == sentence_key(c)) {
                premises.push(c.clone());
            }
        }
        if premises.is_empty() || !self.spurious_accepts(&premises, hypothesis) {
            return Ok(None);
        }
        self.finish_proof(premises, req)
    }

    fn finish_proof(
        &self,
        premises: Vec<String>,
        req: &ProofRequest,
    ) -> Result<Option<Proof>, BackendError> {
        let scores = premises
            .iter()
            .map(|p| self.belief(p, &req.context))
            .collect();
        let entailment = self.entailment_score(&premises, &req.hypothesis.text)?;
        let proof = Proof::new(
            premises,
            req.hypothesis.text.clone(),
            scores,
            entailment,
            req.forced_first_premise.is_some(),
        )
        .map_err(|e| BackendError::Protocol(e.to_string()))?;
        Ok(Some(proof))
    }
}

/// Every derivation of `target` from `avail` using at most `max_len` premises.
///
/// Each derivation lists indices into `avail`: the taxonomy links from the
/// subject upwards, then the property premise.
fn derivations(target: &Statement, avail: &[Available], max_len: usize) -> Vec<Vec<usize>> {
    let mut by_subject: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, a) in avail.iter().enumerate() {
        by_subject.entry(a.stmt.subject.key.as_str()).or_default().push(i);
    }
    let goal_pred = target.predicate.key();
    let mut out = Vec::new();
    let mut visited = vec![target.subject.key.clone()];
    search(
        &target.subject.key,
        &goal_pred,
        target.positive,
        avail,
        &by_subject,
        max_len,
        &mut visited,
        &mut Vec::new(),
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    subject: &str,
    goal_pred: &str,
    positive: bool,
    avail: &[Available],
    by_subject: &HashMap<&str, Vec<usize>>,
    max_len: usize,
    visited: &mut Vec<String>,
    links: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let Some(candidates) = by_subject.get(subject) else {
        return;
    };
    for &i in candidates {
        let st = &avail[i].stmt;
        if st.positive == positive && st.predicate.key() == goal_pred {
            let mut d = links.clone();
            d.push(i);
            out.push(d);
        }
    }
    if links.len() + 2 > max_len {
        return;
    }
    for &i in candidates {
        let st = &avail[i].stmt;
        let Some(parent) = st.predicate.isa_parent() else {
            continue;
        };
        if !st.positive || visited.contains(&parent.key) {
            continue;
        }
        visited.push(parent.key.clone());
        links.push(i);
        search(&parent.key, goal_pred, positive, avail, by_subject, max_len, visited, links, out);
        links.pop();
        visited.pop();
    }
}

impl ReasoningBackend for SymbolicBackend {
    fn declarativize(&self, question: &str, choice: &str) -> Result<String, BackendError> {
        Ok(declarativize(question, choice, &|k| self.kb.knows_entity(k)))
    }

    fn generate_candidates(&self, question: &str, n: usize) -> Result<Vec<String>, BackendError> {
        let kind = open_question_kind(question).ok_or(BackendError::NoCandidates)?;
        let mut out: Vec<String> = Vec::new();
        for st in self.kb.statements() {
            if out.len() >= n {
                break;
            }
            match st.predicate.isa_parent() {
                Some(parent) if st.positive && parent.key == kind.key => {
                    let c = st.subject.bare().to_string();
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
                _ => {}
            }
        }
        if out.is_empty() {
            return Err(BackendError::NoCandidates);
        }
        Ok(out)
    }

    fn generate_proof(&self, req: &ProofRequest) -> Result<Option<Proof>, BackendError> {
        req.validate()?;
        let Some(target) = self.parse(&req.hypothesis.text) else {
            return self.spurious_proof(req);
        };
        let avail = self.available(&req.context, &target.subject.key);
        let forced_key = match &req.forced_first_premise {
            Some(f) => match self.parse(f) {
                Some(st) => Some(st.key()),
                None => return self.spurious_proof(req),
            },
            None => None,
        };

        let mut best: Option<(Score, usize, Vec<String>)> = None;
        for d in derivations(&target, &avail, req.max_premises) {
            if let Some(fk) = &forced_key {
                if !d.iter().any(|&i| &avail[i].stmt.key() == fk) {
                    continue;
                }
            }
            let mut order: Vec<usize> = d.clone();
            if let Some(fk) = &forced_key {
                let at = order
                    .iter()
                    .position(|&i| &avail[i].stmt.key() == fk)
                    .expect("forced premise is in the derivation");
                let f = order.remove(at);
                order.insert(0, f);
            }
            let mut texts: Vec<String> = order.iter().map(|&i| avail[i].text.clone()).collect();
            if let Some(forced) = &req.forced_first_premise {
                texts[0] = forced.clone();
            }
            let score: Score = texts.iter().map(|t| self.belief(t, &req.context)).product();
            let better = match &best {
                None => true,
                Some((s, len, _)) => score > *s || (score == *s && texts.len() < *len),
            };
            if better {
                best = Some((score, texts.len(), texts));
            }
        }
        match best {
            Some((_, _, premises)) => self.finish_proof(premises, req),
            None => self.spurious_proof(req),
        }
    }

    fn belief_score(&self, statement: &str, context: &[String]) -> Result<Score, BackendError> {
        let t = &self.config.beliefs;
        let key = sentence_key(statement);
        if context.iter().any(|c| sentence_key(c) == key) {
            return Ok(t.context_true);
        }
        let Some(st) = self.parse(statement) else {
            let negated = sentence_key(&self.kb.grammar().negate(statement));
            if context.iter().any(|c| sentence_key(c) == negated) {
                return Ok(t.context_false);
            }
            return Err(BackendError::UnparseableStatement(statement.to_string()));
        };
        let (pos, neg) = (st.key(), st.negation_key());
        for c in context.iter().filter_map(|c| self.parse(c)) {
            let k = c.key();
            if k == pos {
                return Ok(t.context_true);
            }
            if k == neg {
                return Ok(t.context_false);
            }
        }
        if self.kb.contains(&pos) {
            Ok(t.kb_true)
        } else if self.kb.contains(&neg) {
            Ok(t.kb_false)
        } else {
            Ok(t.unknown)
        }
    }

    fn entailment_score(&self, premises: &[String], hypothesis: &str) -> Result<Score, BackendError> {
        let hyp_key = sentence_key(hypothesis);
        if premises.iter().any(|p| sentence_key(p) == hyp_key) {
            return Ok(1.0);
        }
        if let Some(target) = self.parse(hypothesis) {
            let avail: Vec<Available> = premises
                .iter()
                .filter_map(|p| {
                    self.parse(p).map(|stmt| Available {
                        stmt,
                        text: p.clone(),
                    })
                })
                .collect();
            if !derivations(&target, &avail, premises.len().max(1)).is_empty() {
                return Ok(1.0);
            }
        }
        Ok(if self.spurious_accepts(premises, hypothesis) {
            1.0
        } else {
            0.0
        })
    }

    fn negate(&self, statement: &str) -> Result<String, BackendError> {
        Ok(match self.parse(statement) {
            Some(st) => st.negated().render(),
            None => self.kb.grammar().negate(statement),
        })
    }

    fn direct_answer_score(&self, hypothesis: &Hypothesis) -> Result<Score, BackendError> {
        Ok(self.belief(&hypothesis.text, &[]))
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::bm25::{DocId, InvertedIndex};
use crate::text::{normalize, sentence_key, tokenize};

use super::{
    BlockedEntailment, FactRecord, IndexStrategy, MemoryError, Provenance, QuestionRef,
    RetrievalConfig, Retrieved,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct BlockedKey {
    premises: BTreeSet<String>,
    hypothesis: String,
}

impl BlockedKey {
    fn new<S: AsRef<str>>(premises: &[S], hypothesis: &str) -> Self {
        Self {
            premises: premises.iter().map(|p| sentence_key(p.as_ref())).collect(),
            hypothesis: sentence_key(hypothesis),
        }
    }
}

/// One inverted index per strategy, plus the documents each fact owns in it.
#[derive(Debug, Clone, Default)]
struct StrategyIndex {
    index: InvertedIndex,
    fact_docs: HashMap<u64, Vec<DocId>>,
}

#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    records: BTreeMap<u64, FactRecord>,
    by_key: HashMap<String, u64>,
    by_id: HashMap<String, u64>,
    questions: BTreeMap<String, String>,
    blocked: Vec<BlockedEntailment>,
    blocked_keys: HashSet<BlockedKey>,
    next_seq: u64,
    next_doc: DocId,
    indices: [StrategyIndex; 4],
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in insertion order.
    pub fn facts(&self) -> impl Iterator<Item = &FactRecord> {
        self.records.values()
    }

    pub fn blocked(&self) -> &[BlockedEntailment] {
        &self.blocked
    }

    pub fn questions(&self) -> impl Iterator<Item = (&str, &str)> {
        self.questions.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn get(&self, id: &str) -> Option<&FactRecord> {
        self.by_id.get(id).and_then(|s| self.records.get(s))
    }

    pub fn find_by_text(&self, text: &str) -> Option<&FactRecord> {
        self.by_key
            .get(&sentence_key(text))
            .and_then(|s| self.records.get(s))
    }

    pub fn contains_text(&self, text: &str) -> bool {
        self.by_key.contains_key(&sentence_key(text))
    }

    /// Number of index documents under a strategy (one per fact/question pair for Q and Q+F).
    pub fn index_size(&self, strategy: IndexStrategy) -> usize {
        self.indices[strategy.slot()].index.len()
    }

    pub fn add_fact(
        &mut self,
        text: &str,
        provenance: Provenance,
        question: Option<&QuestionRef>,
    ) -> Result<FactRecord, MemoryError> {
        let text = normalize(text);
        if text.is_empty() {
            return Err(MemoryError::EmptyFact);
        }
        if let Some(q) = question {
            self.questions
                .entry(q.id.clone())
                .or_insert_with(|| normalize(&q.text));
        }
        let key = sentence_key(&text);
        if let Some(&seq) = self.by_key.get(&key) {
            if let Some(q) = question {
                let rec = self.records.get_mut(&seq).expect("keyed record exists");
                if !rec.linked_question_ids.contains(&q.id) {
                    rec.linked_question_ids.push(q.id.clone());
                    self.reindex(seq);
                }
            }
            return Ok(self.records[&seq].clone());
        }
        let seq = self.next_seq;
        let record = FactRecord {
            id: format!("fact-{seq}"),
            text,
            provenance,
            linked_question_ids: question.map(|q| vec![q.id.clone()]).unwrap_or_default(),
            seq,
        };
        self.insert_record(record.clone());
        Ok(record)
    }

    pub(super) fn insert_record(&mut self, record: FactRecord) {
        let seq = record.seq;
        self.by_key.insert(sentence_key(&record.text), seq);
        self.by_id.insert(record.id.clone(), seq);
        self.records.insert(seq, record);
        self.next_seq = self.next_seq.max(seq + 1);
        self.reindex(seq);
    }

    pub(super) fn register_question(&mut self, id: String, text: String) {
        self.questions.insert(id, text);
    }

    pub(super) fn set_next_seq(&mut self, next: u64) {
        self.next_seq = self.next_seq.max(next);
    }

    pub fn remove_fact(&mut self, id: &str) -> Result<FactRecord, MemoryError> {
        let seq = self
            .by_id
            .remove(id)
            .ok_or_else(|| MemoryError::UnknownFact(id.to_string()))?;
        let record = self.records.remove(&seq).expect("id maps to a live record");
        self.by_key.remove(&sentence_key(&record.text));
        for slot in &mut self.indices {
            for doc in slot.fact_docs.remove(&seq).unwrap_or_default() {
                slot.index.remove(doc);
            }
        }
        Ok(record)
    }

    /// Rebuilds every strategy's documents for one fact.
    fn reindex(&mut self, seq: u64) {
        let record = &self.records[&seq];
        let fact_terms = tokenize(&record.text);
        let question_terms: Vec<Vec<String>> = record
            .linked_question_ids
            .iter()
            .filter_map(|id| self.questions.get(id))
            .map(|q| tokenize(q))
            .collect();

        let mut docs: [Vec<Vec<String>>; 4] = Default::default();
        docs[IndexStrategy::FactTerms.slot()] = vec![fact_terms.clone()];
        if question_terms.is_empty() {
            // No question to index by: fall back to the fact's own terms.
            docs[IndexStrategy::QuestionTerms.slot()] = vec![fact_terms.clone()];
            docs[IndexStrategy::QuestionPlusFact.slot()] = vec![fact_terms.clone()];
        } else {
            docs[IndexStrategy::QuestionTerms.slot()] = question_terms.clone();
            docs[IndexStrategy::QuestionPlusFact.slot()] = question_terms
                .iter()
                .map(|q| q.iter().chain(&fact_terms).cloned().collect())
                .collect();
        }
        let mut all = fact_terms;
        for q in &question_terms {
            all.extend(q.iter().cloned());
        }
        docs[IndexStrategy::RelevantQuestionsPlusFact.slot()] = vec![all];

        for (slot, terms_list) in self.indices.iter_mut().zip(docs) {
            for doc in slot.fact_docs.remove(&seq).unwrap_or_default() {
                slot.index.remove(doc);
            }
            let mut ids = Vec::with_capacity(terms_list.len());
            for terms in terms_list {
                let doc = self.next_doc;
                self.next_doc += 1;
                slot.index.insert(doc, seq, &terms);
                ids.push(doc);
            }
            slot.fact_docs.insert(seq, ids);
        }
    }

    /// Top-`r` facts by BM25, best first; ties go to the older fact.
    ///
    /// When a fact owns several documents (Q, Q+F) its best document score counts.
    pub fn retrieve(&self, query: &str, config: &RetrievalConfig) -> Vec<Retrieved> {
        let terms = tokenize(query);
        let slot = &self.indices[config.strategy.slot()];
        let mut best: BTreeMap<u64, f64> = BTreeMap::new();
        for (doc, score) in slot.index.score::<f64, _>(&terms, &config.params) {
            let owner = slot.index.owner(doc).expect("scored doc is indexed");
            let e = best.entry(owner).or_insert(score);
            if score > *e {
                *e = score;
            }
        }
        let mut ranked: Vec<(u64, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
            .into_iter()
            .take(config.r)
            .map(|(seq, score)| Retrieved {
                record: self.records[&seq].clone(),
                score,
            })
            .collect()
    }

    pub fn block_entailment<S: AsRef<str>>(
        &mut self,
        premises: &[S],
        hypothesis: &str,
    ) -> Result<BlockedEntailment, MemoryError> {
        let premise_texts: Vec<String> = premises
            .iter()
            .map(|p| normalize(p.as_ref()))
            .filter(|p| !p.is_empty())
            .collect();
        if premise_texts.is_empty() {
            return Err(MemoryError::EmptyPremises);
        }
        let hypothesis_text = normalize(hypothesis);
        if hypothesis_text.is_empty() {
            return Err(MemoryError::EmptyHypothesis);
        }
        let key = BlockedKey::new(&premise_texts, &hypothesis_text);
        if self.blocked_keys.contains(&key) {
            let existing = self
                .blocked
                .iter()
                .find(|b| BlockedKey::new(&b.premise_texts, &b.hypothesis_text) == key)
                .expect("key registered with an entry");
            return Ok(existing.clone());
        }
        let entry = BlockedEntailment {
            premise_texts,
            hypothesis_text,
        };
        self.blocked_keys.insert(key);
        self.blocked.push(entry.clone());
        Ok(entry)
    }

    pub fn is_blocked<S: AsRef<str>>(&self, premises: &[S], hypothesis: &str) -> bool {
        if self.blocked_keys.is_empty() {
            return false;
        }
        self.blocked_keys
            .contains(&BlockedKey::new(premises, hypothesis))
    }

    /// SHA-256 over the canonical JSONL serialization.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}

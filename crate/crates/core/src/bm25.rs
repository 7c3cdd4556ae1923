//! Okapi BM25 over an in-memory inverted index.
//!
//! score(q, d) = Σ_{t ∈ q} idf(t) · f(t,d)·(k1 + 1) / (f(t,d) + k1·(1 − b + b·|d| / avgdl))
//! idf(t)      = ln(1 + (N − n_t + 0.5) / (n_t + 0.5))
//!
//! Query terms are taken as a set: a term repeated in the query contributes once.
//! The kernels are generic over the float type; the memory store uses `f64`.

use std::collections::{BTreeMap, HashMap};

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("k1 must be positive, got {0}")]
    NonPositiveK1(f64),
    #[error("b must lie in [0, 1], got {0}")]
    BOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params<F> {
    pub k1: F,
    pub b: F,
}

impl<F: Float> Default for Params<F> {
    fn default() -> Self {
        Self {
            k1: F::from(1.2).unwrap(),
            b: F::from(0.75).unwrap(),
        }
    }
}

impl<F: Float> Params<F> {
    pub fn new(k1: F, b: F) -> Result<Self, ParamError> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.k1 > F::zero()) {
            return Err(ParamError::NonPositiveK1(self.k1.to_f64().unwrap_or(f64::NAN)));
        }
        if !(self.b >= F::zero() && self.b <= F::one()) {
            return Err(ParamError::BOutOfRange(self.b.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }
}

/// Inverse document frequency; always positive for `df <= n_docs`.
pub fn idf<F: Float>(n_docs: usize, df: usize) -> F {
    let n = F::from(n_docs).unwrap();
    let df = F::from(df).unwrap();
    let half = F::from(0.5).unwrap();
    (F::one() + (n - df + half) / (df + half)).ln()
}

/// Saturated, length-normalized term frequency component.
pub fn term_weight<F: Float>(tf: u32, doc_len: usize, avg_len: F, params: &Params<F>) -> F {
    let tf = F::from(tf).unwrap();
    let len = F::from(doc_len).unwrap();
    let norm = if avg_len > F::zero() {
        F::one() - params.b + params.b * len / avg_len
    } else {
        F::one()
    };
    tf * (params.k1 + F::one()) / (tf + params.k1 * norm)
}

pub type DocId = u64;

#[derive(Debug, Clone)]
struct IndexedDoc {
    owner: u64,
    len: usize,
    terms: Vec<String>,
}

/// Term → (document → term frequency) postings with per-document lengths.
///
/// Each document carries an `owner` tag; several documents may share an owner.
#[derive(Debug, Clone, Default)]
pub struct InvertedIndex {
    docs: BTreeMap<DocId, IndexedDoc>,
    postings: HashMap<String, BTreeMap<DocId, u32>>,
    total_len: usize,
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn contains(&self, doc: DocId) -> bool {
        self.docs.contains_key(&doc)
    }

    pub fn owner(&self, doc: DocId) -> Option<u64> {
        self.docs.get(&doc).map(|d| d.owner)
    }

    /// Inserts a document, replacing any previous document with the same id.
    pub fn insert<S: AsRef<str>>(&mut self, doc: DocId, owner: u64, terms: &[S]) {
        self.remove(doc);
        let mut tf: HashMap<&str, u32> = HashMap::new();
        for t in terms {
            *tf.entry(t.as_ref()).or_default() += 1;
        }
        let mut distinct = Vec::with_capacity(tf.len());
        for (term, count) in tf {
            match self.postings.get_mut(term) {
                Some(list) => {
                    list.insert(doc, count);
                }
                None => {
                    self.postings.insert(term.to_string(), BTreeMap::from([(doc, count)]));
                }
            }
            distinct.push(term.to_string());
        }
        self.total_len += terms.len();
        self.docs.insert(
            doc,
            IndexedDoc {
                owner,
                len: terms.len(),
                terms: distinct,
            },
        );
    }

    pub fn remove(&mut self, doc: DocId) -> bool {
        let Some(old) = self.docs.remove(&doc) else {
            return false;
        };
        self.total_len -= old.len;
        for term in &old.terms {
            if let Some(list) = self.postings.get_mut(term) {
                list.remove(&doc);
                if list.is_empty() {
                    self.postings.remove(term);
                }
            }
        }
        true
    }

    pub fn avg_len<F: Float>(&self) -> F {
        if self.docs.is_empty() {
            return F::zero();
        }
        F::from(self.total_len).unwrap() / F::from(self.docs.len()).unwrap()
    }

    /// Scores every document that shares at least one term with the query.
    ///
    /// Returned in ascending doc-id order; documents with a zero score are omitted.
    pub fn score<F: Float, S: AsRef<str>>(
        &self,
        query_terms: &[S],
        params: &Params<F>,
    ) -> Vec<(DocId, F)> {
        let n = self.docs.len();
        if n == 0 {
            return Vec::new();
        }
        let avg = self.avg_len::<F>();
        let mut seen: Vec<&str> = Vec::new();
        let mut acc: BTreeMap<DocId, F> = BTreeMap::new();
        for term in query_terms {
            let term = term.as_ref();
            if seen.contains(&term) {
                continue;
            }
            seen.push(term);
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let w = idf::<F>(n, list.len());
            for (&doc, &tf) in list {
                let len = self.docs[&doc].len;
                let s = w * term_weight(tf, len, avg, params);
                let e = acc.entry(doc).or_insert_with(F::zero);
                *e = *e + s;
            }
        }
        acc.into_iter().filter(|(_, s)| *s > F::zero()).collect()
    }
}

//! Brute-force reference implementations. Nothing here touches the index
//! code under test: documents are rebuilt from raw text and every statistic
//! is recounted per query.

use std::collections::{BTreeSet, HashMap};

use teachqa_core::sim::QAExample;

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;

/// Lowercased maximal alphanumeric runs.
pub fn terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// BM25 score of every document with a positive score.
pub fn bm25(docs: &[Vec<String>], query: &str) -> Vec<(usize, f64)> {
    let n = docs.len() as f64;
    if docs.is_empty() {
        return Vec::new();
    }
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let q: BTreeSet<String> = terms(query).into_iter().collect();
    let df: HashMap<&str, f64> = q
        .iter()
        .map(|t| (t.as_str(), docs.iter().filter(|d| d.contains(t)).count() as f64))
        .collect();
    let mut out = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let dl = d.len() as f64;
        let mut score = 0.0;
        for t in &q {
            let tf = d.iter().filter(|x| *x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let n_t = df[t.as_str()];
            let idf = (1.0 + (n - n_t + 0.5) / (n_t + 0.5)).ln();
            score += idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * dl / avgdl));
        }
        if score > 0.0 {
            out.push((i, score));
        }
    }
    out
}

/// Facts ranked by their best document, best first, ties to the earlier fact.
pub fn rank(owner: &[usize], docs: &[Vec<String>], query: &str) -> Vec<(usize, f64)> {
    let mut best: HashMap<usize, f64> = HashMap::new();
    for (d, s) in bm25(docs, query) {
        let e = best.entry(owner[d]).or_insert(s);
        if s > *e {
            *e = s;
        }
    }
    let mut v: Vec<(usize, f64)> = best.into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// One fact with the questions it was given for.
#[derive(Debug, Clone)]
pub struct OracleFact {
    pub text: String,
    pub questions: Vec<String>,
}

/// Distinct core facts of `train` in first-seen order, each with its distinct
/// questions.
pub fn facts_from_train(train: &[QAExample]) -> Vec<OracleFact> {
    let mut out: Vec<OracleFact> = Vec::new();
    let key = |s: &str| terms(s).join(" ");
    for ex in train {
        let k = key(&ex.core_fact);
        let i = match out.iter().position(|f| key(&f.text) == k) {
            Some(i) => i,
            None => {
                out.push(OracleFact {
                    text: ex.core_fact.clone(),
                    questions: Vec::new(),
                });
                out.len() - 1
            }
        };
        if !out[i].questions.iter().any(|q| key(q) == key(&ex.question)) {
            out[i].questions.push(ex.question.clone());
        }
    }
    out
}

/// Document list and owning fact for one indexing strategy label.
pub fn documents(facts: &[OracleFact], strategy: &str) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut docs = Vec::new();
    let mut owner = Vec::new();
    for (i, f) in facts.iter().enumerate() {
        let ft = terms(&f.text);
        let mut push = |d: Vec<String>| {
            docs.push(d);
            owner.push(i);
        };
        match strategy {
            "F" => push(ft),
            "Q" | "Q+F" if f.questions.is_empty() => push(ft),
            "Q" => f.questions.iter().for_each(|q| push(terms(q))),
            "Q+F" => f.questions.iter().for_each(|q| push([terms(q), ft.clone()].concat())),
            "RelevantQs+F" => {
                let mut all = ft;
                f.questions.iter().for_each(|q| all.extend(terms(q)));
                push(all)
            }
            other => panic!("unknown strategy {other}"),
        }
    }
    (docs, owner)
}

/// Recall@k grid (hits per k) for test questions whose core fact is indexed.
pub fn recall(train: &[QAExample], test: &[QAExample], strategy: &str, ks: &[usize]) -> (usize, Vec<usize>) {
    let facts = facts_from_train(train);
    let (docs, owner) = documents(&facts, strategy);
    let key = |s: &str| terms(s).join(" ");
    let mut queries = 0;
    let mut hits = vec![0; ks.len()];
    for ex in test {
        let Some(gold) = facts.iter().position(|f| key(&f.text) == key(&ex.core_fact)) else {
            continue;
        };
        queries += 1;
        let ranked = rank(&owner, &docs, &ex.question);
        for (j, &k) in ks.iter().enumerate() {
            if ranked.iter().take(k).any(|(f, _)| *f == gold) {
                hits[j] += 1;
            }
        }
    }
    (queries, hits)
}

use std::fmt::Write as _;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{IndexStrategy, MemoryError, MemoryStore, RetrievalConfig};
use crate::Bm25Params;

/// Fraction of queries whose gold item was found.
pub fn recall_at_k<F: Float>(hits: usize, queries: usize) -> F {
    if queries == 0 {
        return F::zero();
    }
    F::from(hits).unwrap() / F::from(queries).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallAtK {
    pub k: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallTable {
    pub strategy: IndexStrategy,
    pub queries: usize,
    pub rows: Vec<RecallAtK>,
}

/// Strategy × k grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub ks: Vec<usize>,
    pub tables: Vec<RecallTable>,
}

impl RecallReport {
    /// Plain-text grid with recall given in percent.
    pub fn render(&self) -> String {
        let mut out = format!("{:<14}", "Index by");
        for k in &self.ks {
            let _ = write!(out, "{:>8}", format!("R@{k}"));
        }
        out.push('\n');
        for t in &self.tables {
            let _ = write!(out, "{:<14}", t.strategy.label());
            for row in &t.rows {
                let _ = write!(out, "{:>8.1}", row.recall * 100.0);
            }
            out.push('\n');
        }
        out
    }
}

impl MemoryStore {
    /// For each k, the fraction of `(query, gold fact id)` pairs whose gold fact
    /// is among the top-k retrieved under `strategy`.
    pub fn evaluate_recall(
        &self,
        gold_pairs: &[(String, String)],
        ks: &[usize],
        strategy: IndexStrategy,
        params: Bm25Params,
    ) -> Result<RecallTable, MemoryError> {
        for (_, gold) in gold_pairs {
            if self.get(gold).is_none() {
                return Err(MemoryError::UnknownGoldId(gold.clone()));
            }
        }
        let mut rows = Vec::with_capacity(ks.len());
        for &k in ks {
            let cfg = RetrievalConfig {
                r: k,
                strategy,
                params,
            };
            cfg.validate()?;
            let hits = gold_pairs
                .iter()
                .filter(|(query, gold)| self.retrieve(query, &cfg).iter().any(|r| &r.record.id == gold))
                .count();
            rows.push(RecallAtK {
                k,
                recall: recall_at_k(hits, gold_pairs.len()),
            });
        }
        Ok(RecallTable {
            strategy,
            queries: gold_pairs.len(),
            rows,
        })
    }

    pub fn evaluate_recall_all(
        &self,
        gold_pairs: &[(String, String)],
        ks: &[usize],
        strategies: &[IndexStrategy],
        params: Bm25Params,
    ) -> Result<RecallReport, MemoryError> {
        let tables = strategies
            .iter()
            .map(|&s| self.evaluate_recall(gold_pairs, ks, s, params))
            .collect::<Result<_, _>>()?;
        Ok(RecallReport {
            ks: ks.to_vec(),
            tables,
        })
    }
}

//! JSON Lines persistence.
//!
//! ```text
//! {"kind":"meta","next_seq":3}
//! {"kind":"question","id":"q1","text":"Can a magnet attract a penny?"}
//! {"kind":"fact","id":"fact-0","text":"...","provenance":"user","linked_questions":["q1"],"seq":0}
//! {"kind":"blocked","premises":["..."],"hypothesis":"..."}
//! ```
//!
//! `meta` and `question` lines are optional on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text::normalize;

use super::{FactRecord, MemoryError, MemoryStore, Provenance};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Meta {
        next_seq: u64,
    },
    Question {
        id: String,
        text: String,
    },
    Fact {
        id: String,
        text: String,
        provenance: Provenance,
        linked_questions: Vec<String>,
        seq: u64,
    },
    Blocked {
        premises: Vec<String>,
        hypothesis: String,
    },
}

impl MemoryStore {
    pub fn to_jsonl(&self) -> String {
        let mut lines = vec![Line::Meta {
            next_seq: self.next_seq(),
        }];
        lines.extend(self.questions().map(|(id, text)| Line::Question {
            id: id.to_string(),
            text: text.to_string(),
        }));
        lines.extend(self.facts().map(|f| Line::Fact {
            id: f.id.clone(),
            text: f.text.clone(),
            provenance: f.provenance,
            linked_questions: f.linked_question_ids.clone(),
            seq: f.seq,
        }));
        lines.extend(self.blocked().iter().map(|b| Line::Blocked {
            premises: b.premise_texts.clone(),
            hypothesis: b.hypothesis_text.clone(),
        }));
        let mut out = String::new();
        for line in lines {
            out.push_str(&serde_json::to_string(&line).expect("memory lines serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(input: &str) -> Result<Self, MemoryError> {
        let mut store = MemoryStore::new();
        let mut last_seq: Option<u64> = None;
        let mut declared_next = 0;
        for (i, raw) in input.lines().enumerate() {
            let line_no = i + 1;
            let format = |message: String| MemoryError::Format {
                line: line_no,
                message,
            };
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| format(e.to_string()))?;
            match line {
                Line::Meta { next_seq } => declared_next = next_seq,
                Line::Question { id, text } => store.register_question(id, normalize(&text)),
                Line::Fact {
                    id,
                    text,
                    provenance,
                    linked_questions,
                    seq,
                } => {
                    if last_seq.is_some_and(|prev| seq <= prev) {
                        return Err(format(format!("seq {seq} is not strictly increasing")));
                    }
                    let text = normalize(&text);
                    if text.is_empty() {
                        return Err(format("empty fact text".into()));
                    }
                    if store.contains_text(&text) {
                        return Err(format(format!("duplicate fact text `{text}`")));
                    }
                    if store.get(&id).is_some() {
                        return Err(format(format!("duplicate fact id `{id}`")));
                    }
                    last_seq = Some(seq);
                    store.insert_record(FactRecord {
                        id,
                        text,
                        provenance,
                        linked_question_ids: linked_questions,
                        seq,
                    });
                }
                Line::Blocked {
                    premises,
                    hypothesis,
                } => {
                    store
                        .block_entailment(&premises, &hypothesis)
                        .map_err(|e| format(e.to_string()))?;
                }
            }
        }
        store.set_next_seq(declared_next);
        Ok(store)
    }

    /// Writes to a sibling temp file and renames it over `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MemoryError> {
        let path = path.as_ref();
        let io = |source| MemoryError::Io {
            path: path.display().to_string(),
            source,
        };
        let tmp = path.with_extension("jsonl.tmp");
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MemoryError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| MemoryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_jsonl(&text)
    }
}

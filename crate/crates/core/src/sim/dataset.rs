//! Question datasets: the native JSONL format plus OBQA / QuaRTz import shims.
//!
//! Native line:
//! `{"id":..,"question":..,"choices":[{"label":"A","text":..}],"answer_key":"A","core_fact":..,"gold_premises":[..]}`
//!
//! OBQA (with additional facts) lines carry `question.stem`, `question.choices`,
//! `answerKey` and `fact1`; QuaRTz lines carry the same question shape and `para`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::controller::Choice;
use crate::text::{normalize, sentence_key};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: {message}")]
    InvariantViolation { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub id: String,
    pub question: String,
    pub choices: Vec<Choice>,
    pub answer_key: String,
    pub core_fact: String,
    pub gold_premises: Vec<String>,
}

impl QAExample {
    pub fn validate(&self) -> Result<(), String> {
        if normalize(&self.question).is_empty() {
            return Err("empty question".into());
        }
        if self.choices.is_empty() {
            return Err("no choices".into());
        }
        if !self.choices.iter().any(|c| c.label == self.answer_key) {
            return Err(format!("answer_key {} is not a choice label", self.answer_key));
        }
        if normalize(&self.core_fact).is_empty() {
            return Err("empty core_fact".into());
        }
        let key = sentence_key(&self.core_fact);
        if !self.gold_premises.iter().any(|p| sentence_key(p) == key) {
            return Err("core_fact is not among gold_premises".into());
        }
        Ok(())
    }

    pub fn choice_text(&self, label: &str) -> Option<&str> {
        self.choices
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.text.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Native,
    Obqa,
    Quartz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub format: DatasetFormat,
    pub examples: Vec<QAExample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Deserialize)]
struct ExternalChoice {
    label: String,
    text: String,
}

#[derive(Deserialize)]
struct ExternalQuestion {
    stem: String,
    choices: Vec<ExternalChoice>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ExternalLine {
    id: String,
    question: ExternalQuestion,
    answer_key: String,
    #[serde(default)]
    fact1: Option<String>,
    #[serde(default)]
    para: Option<String>,
}

fn parse_line(line: &str, lineno: usize) -> Result<(DatasetFormat, QAExample), DatasetError> {
    let format_err = |message: String| DatasetError::Format { line: lineno, message };
    let value: Value = serde_json::from_str(line).map_err(|e| format_err(e.to_string()))?;
    let nested = value.get("question").map_or(false, Value::is_object);
    if !nested {
        let ex: QAExample = serde_json::from_value(value).map_err(|e| format_err(e.to_string()))?;
        return Ok((DatasetFormat::Native, ex));
    }
    let ext: ExternalLine = serde_json::from_value(value).map_err(|e| format_err(e.to_string()))?;
    let (format, fact) = match (ext.fact1, ext.para) {
        (Some(f), _) => (DatasetFormat::Obqa, f),
        (None, Some(p)) => (DatasetFormat::Quartz, p),
        (None, None) => return Err(format_err("neither `fact1` nor `para` present".into())),
    };
    let fact = normalize(&fact);
    Ok((
        format,
        QAExample {
            id: ext.id,
            question: normalize(&ext.question.stem),
            choices: ext
                .question
                .choices
                .into_iter()
                .map(|c| Choice::new(c.label, normalize(&c.text)))
                .collect(),
            answer_key: ext.answer_key,
            gold_premises: vec![fact.clone()],
            core_fact: fact,
        },
    ))
}

/// Parses a dataset; every line must share one format.
pub fn parse_dataset(input: &str) -> Result<Dataset, DatasetError> {
    let mut format = None;
    let mut examples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (f, ex) = parse_line(line, lineno)?;
        match format {
            None => format = Some(f),
            Some(prev) if prev != f => {
                return Err(DatasetError::Format {
                    line: lineno,
                    message: format!("{f:?} line in a {prev:?} file"),
                })
            }
            _ => {}
        }
        ex.validate()
            .map_err(|message| DatasetError::InvariantViolation { line: lineno, message })?;
        examples.push(ex);
    }
    Ok(Dataset {
        format: format.unwrap_or(DatasetFormat::Native),
        examples,
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}

pub fn to_jsonl(examples: &[QAExample]) -> String {
    let mut out = String::new();
    for e in examples {
        out.push_str(&serde_json::to_string(e).expect("example serializes"));
        out.push('\n');
    }
    out
}

//! Simulated teacher: answer each training question, and when the answer is
//! wrong add the question's core fact to memory. Then measure accuracy on a
//! held-out set with memory frozen.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::QAExample;
use crate::controller::{self, AnswerResult, ControllerConfig, ControllerError};
use crate::engine::ReasoningBackend;
use crate::memory::{MemoryError, MemoryHandle, Provenance, QuestionRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    DirectQa,
    BeforeTeaching,
    AfterTeaching,
    UpperBound,
}

impl ExperimentMode {
    pub const ALL: [ExperimentMode; 4] = [
        ExperimentMode::DirectQa,
        ExperimentMode::BeforeTeaching,
        ExperimentMode::AfterTeaching,
        ExperimentMode::UpperBound,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub seed: u64,
    pub train_fraction: f64,
    pub controller: ControllerConfig,
}

impl ExperimentConfig {
    pub fn new(mode: ExperimentMode, seed: u64) -> Self {
        Self {
            mode,
            seed,
            train_fraction: 1.0,
            controller: ControllerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(ControllerError::InvalidConfig(format!(
                "train_fraction {} is outside (0, 1]",
                self.train_fraction
            )));
        }
        self.controller.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeachStep {
    pub example_id: String,
    pub correct: bool,
    pub fact_added: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TeachLog {
    pub steps: Vec<TeachStep>,
}

impl TeachLog {
    pub fn wrong(&self) -> usize {
        self.steps.iter().filter(|s| !s.correct).count()
    }

    pub fn facts_added(&self) -> usize {
        self.steps.iter().filter(|s| s.fact_added).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example_id: String,
    pub chosen_label: Option<String>,
    pub correct: bool,
    pub proof: Option<Vec<String>>,
    pub memory_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub accuracy: f64,
    pub records: Vec<ExampleRecord>,
    pub memory_hash: String,
    pub memory_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub mean_accuracy: f64,
    pub per_seed: Vec<f64>,
}

/// Train examples in the order a seed visits them.
pub fn shuffled(train: &[QAExample], seed: u64) -> Vec<QAExample> {
    let mut out = train.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

fn prefix_len(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).ceil() as usize).min(n)
}

/// Teaches on `examples` in the given order.
pub fn teach_in_order(
    examples: &[QAExample],
    memory: &MemoryHandle,
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<TeachLog, ControllerError> {
    let mut log = TeachLog::default();
    for ex in examples {
        let result = controller::answer(&ex.question, &ex.choices, memory, backend, config)?;
        let correct = result.choice_label() == Some(ex.answer_key.as_str());
        let mut fact_added = false;
        if !correct {
            let qref = QuestionRef::from_text(&ex.question);
            let mut store = memory.write();
            let before = store.len();
            store.add_fact(&ex.core_fact, Provenance::SimulatedTeacher, Some(&qref))?;
            fact_added = store.len() > before;
        }
        log.steps.push(TeachStep {
            example_id: ex.id.clone(),
            correct,
            fact_added,
        });
    }
    Ok(log)
}

/// Teaches on `train` in seed-shuffled order.
pub fn teach(
    train: &[QAExample],
    seed: u64,
    memory: &MemoryHandle,
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<TeachLog, ControllerError> {
    teach_in_order(&shuffled(train, seed), memory, backend, config)
}

/// Adds every distinct core fact of `train`, each linked to its questions.
pub fn upper_bound_memory(train: &[QAExample], memory: &MemoryHandle) -> Result<(), MemoryError> {
    let mut store = memory.write();
    for ex in train {
        store.add_fact(
            &ex.core_fact,
            Provenance::SimulatedTeacher,
            Some(&QuestionRef::from_text(&ex.question)),
        )?;
    }
    Ok(())
}

/// Answers every test example with memory frozen.
pub fn evaluate(
    test: &[QAExample],
    memory: &MemoryHandle,
    backend: &dyn ReasoningBackend,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ControllerError> {
    config.validate()?;
    let memory_size = memory.read().len();
    let mut records = Vec::with_capacity(test.len());
    for ex in test {
        let result = match config.mode {
            ExperimentMode::DirectQa => {
                controller::answer_direct(&ex.question, &ex.choices, backend, &config.controller)?
            }
            _ => controller::answer(&ex.question, &ex.choices, memory, backend, &config.controller)?,
        };
        let chosen = result.choice_label().map(str::to_string);
        let proof = match &result {
            AnswerResult::Answered {
                best_proof: Some(p), ..
            } => Some(p.premises.clone()),
            _ => None,
        };
        records.push(ExampleRecord {
            example_id: ex.id.clone(),
            correct: chosen.as_deref() == Some(ex.answer_key.as_str()),
            chosen_label: chosen,
            proof,
            memory_size,
        });
    }
    let correct = records.iter().filter(|r| r.correct).count();
    Ok(ExperimentReport {
        config: config.clone(),
        accuracy: if records.is_empty() {
            0.0
        } else {
            correct as f64 / records.len() as f64
        },
        records,
        memory_hash: memory.content_hash(),
        memory_size,
    })
}

/// Runs one configuration from an empty memory. Returns the report and the
/// memory it was evaluated with.
pub fn run_experiment(
    train: &[QAExample],
    test: &[QAExample],
    backend: &dyn ReasoningBackend,
    config: &ExperimentConfig,
) -> Result<(ExperimentReport, MemoryHandle), ControllerError> {
    config.validate()?;
    let memory = MemoryHandle::default();
    let order = shuffled(train, config.seed);
    let seen = &order[..prefix_len(order.len(), config.train_fraction)];
    match config.mode {
        ExperimentMode::DirectQa | ExperimentMode::BeforeTeaching => {}
        ExperimentMode::AfterTeaching => {
            teach_in_order(seen, &memory, backend, &config.controller)?;
        }
        ExperimentMode::UpperBound => upper_bound_memory(seen, &memory)?,
    }
    let report = evaluate(test, &memory, backend, config)?;
    Ok((report, memory))
}

/// Accuracy after teaching on growing prefixes of each seed's train order;
/// memory accumulates across fractions within a seed.
pub fn learning_curve(
    train: &[QAExample],
    test: &[QAExample],
    fractions: &[f64],
    seeds: &[u64],
    backend: &dyn ReasoningBackend,
    config: &ControllerConfig,
) -> Result<Vec<CurvePoint>, ControllerError> {
    if fractions.windows(2).any(|w| w[0] > w[1]) {
        return Err(ControllerError::InvalidConfig("fractions must be ascending".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(ControllerError::InvalidConfig(format!("fraction {f} is outside (0, 1]")));
    }
    let mut per_fraction = vec![Vec::with_capacity(seeds.len()); fractions.len()];
    for &seed in seeds {
        let memory = MemoryHandle::default();
        let order = shuffled(train, seed);
        let mut taught = 0;
        for (i, &f) in fractions.iter().enumerate() {
            let upto = prefix_len(order.len(), f);
            teach_in_order(&order[taught..upto], &memory, backend, config)?;
            taught = upto;
            let eval_cfg = ExperimentConfig {
                mode: ExperimentMode::AfterTeaching,
                seed,
                train_fraction: f,
                controller: config.clone(),
            };
            per_fraction[i].push(evaluate(test, &memory, backend, &eval_cfg)?.accuracy);
        }
    }
    Ok(fractions
        .iter()
        .zip(per_fraction)
        .map(|(&fraction, per_seed)| CurvePoint {
            fraction,
            mean_accuracy: if per_seed.is_empty() {
                0.0
            } else {
                per_seed.iter().sum::<f64>() / per_seed.len() as f64
            },
            per_seed,
        })
        .collect())
}

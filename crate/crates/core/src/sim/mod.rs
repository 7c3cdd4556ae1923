//! Simulated-teacher experiments, datasets and the generated teaching suite.

pub mod dataset;
pub mod synthetic;
pub mod teacher;

pub use dataset::{load_dataset, parse_dataset, Dataset, DatasetError, DatasetFormat, QAExample};
pub use synthetic::{generate, SuiteConfig, SuiteFact, SyntheticSuite};
pub use teacher::{
    evaluate, learning_curve, run_experiment, shuffled, teach, teach_in_order, upper_bound_memory,
    CurvePoint, ExampleRecord, ExperimentConfig, ExperimentMode, ExperimentReport, TeachLog,
    TeachStep,
};

use std::path::PathBuf;

use teachqa_core::sim::{load_dataset, parse_dataset, DatasetError, DatasetFormat};

use crate::Outcome;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `(name, train var, test var, expected train, expected test)`
const REAL: [(&str, &str, &str, usize, usize); 2] = [
    ("OBQA", "TEACHQA_OBQA_TRAIN", "TEACHQA_OBQA_TEST", 4957, 500),
    ("QuaRTz", "TEACHQA_QUARTZ_TRAIN", "TEACHQA_QUARTZ_TEST", 1348, 557),
];

pub fn adapters() -> Outcome {
    for (name, format, n) in [
        ("obqa_sample.jsonl", DatasetFormat::Obqa, 3),
        ("quartz_sample.jsonl", DatasetFormat::Quartz, 2),
        ("native_sample.jsonl", DatasetFormat::Native, 1),
    ] {
        let d = load_dataset(fixture(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(d.format == format, "{name}: detected {:?}", d.format);
        ensure!(d.len() == n, "{name}: {} examples", d.len());
        for ex in &d.examples {
            ensure!(ex.validate().is_ok(), "{name}: {} fails validation", ex.id);
        }
    }

    let obqa = std::fs::read_to_string(fixture("obqa_sample.jsonl")).unwrap();
    let quartz = std::fs::read_to_string(fixture("quartz_sample.jsonl")).unwrap();
    let first = |s: &str| s.lines().next().unwrap().to_string();
    let bad_key = first(&obqa).replace("\"answerKey\": \"B\"", "\"answerKey\": \"E\"");
    let no_fact = first(&obqa).replace("\"fact1\"", "\"fact9\"");
    let mixed = format!("{}\n{}\n", first(&obqa), first(&quartz));
    ensure!(
        matches!(parse_dataset(&bad_key), Err(DatasetError::InvariantViolation { line: 1, .. })),
        "unknown answer key accepted"
    );
    ensure!(matches!(parse_dataset(&no_fact), Err(DatasetError::Format { line: 1, .. })), "missing fact accepted");
    ensure!(matches!(parse_dataset(&mixed), Err(DatasetError::Format { line: 2, .. })), "mixed formats accepted");
    ensure!(matches!(parse_dataset("{oops"), Err(DatasetError::Format { line: 1, .. })), "bad json accepted");

    let mut notes = vec!["format fixtures validate, malformed lines rejected".to_string()];
    for (name, train_var, test_var, want_train, want_test) in REAL {
        match (std::env::var_os(train_var), std::env::var_os(test_var)) {
            (Some(tr), Some(te)) => {
                let tr = load_dataset(&tr).map_err(|e| format!("{name} train: {e}"))?;
                let te = load_dataset(&te).map_err(|e| format!("{name} test: {e}"))?;
                ensure!(
                    (tr.len(), te.len()) == (want_train, want_test),
                    "{name}: partitions {}/{}, expected {want_train}/{want_test}",
                    tr.len(),
                    te.len()
                );
                notes.push(format!("{name} {}/{}", tr.len(), te.len()));
            }
            _ => notes.push(format!("{name} files absent (size check skipped)")),
        }
    }
    Ok(notes.join("; "))
}

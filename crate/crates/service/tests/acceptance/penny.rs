use teachqa_core::engine::{SymbolicBackend, SymbolicKb};
use teachqa_core::session::{apply_feedback, start_session, SessionEnv};
use teachqa_core::text::sentence_key;
use teachqa_core::{answer, AnswerResult, Choice, ControllerConfig, FeedbackAction, MemoryHandle, SessionStatus};

use crate::Outcome;

fn premises(r: &AnswerResult) -> Vec<String> {
    r.best_proof().map(|p| p.premises.clone()).unwrap_or_default()
}

fn same(a: &[String], b: &[&str]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| sentence_key(x) == sentence_key(y))
}

pub fn end_to_end() -> Outcome {
    let memory = MemoryHandle::default();
    let backend = SymbolicBackend::new(SymbolicKb::penny_fixture());
    let config = ControllerConfig::default();
    let env = SessionEnv::new(&memory, &backend, &config);
    let yes_no = Choice::lettered(&["yes", "no"]);

    let mut s = start_session("penny", "Can a magnet attract a penny?", &yes_no, env).map_err(|e| e.to_string())?;
    let first = premises(&s.last_result);
    ensure!(
        s.last_result.choice_label() == Some("A")
            && first.iter().any(|p| sentence_key(p) == sentence_key("A penny is made of magnetic metal."))
            && first.iter().any(|p| sentence_key(p) == sentence_key("A magnet can attract magnetic metals.")),
        "(a) first answer {:?} because {first:?}",
        s.last_result.choice_label()
    );

    let script = [
        FeedbackAction::FactIsMissing {
            text: "A penny is made of copper.".into(),
        },
        FeedbackAction::FactIsFalse { premise: 2 },
    ];
    let expected: [&[&str]; 2] = [
        &["A penny is made of copper.", "A magnet can attract copper."],
        &["A penny is made of copper.", "A magnet cannot attract copper."],
    ];
    for (action, want) in script.into_iter().zip(expected) {
        let name = action.name();
        apply_feedback(&mut s, action, env).map_err(|e| e.to_string())?;
        let got = premises(&s.last_result);
        ensure!(same(&got, want), "(b) after {name}: proof {got:?}, expected {want:?}");
    }
    ensure!(s.last_result.choice_label() == Some("B"), "(b) final answer is not `no`");
    let final_hyp = match &s.last_result {
        AnswerResult::Answered { hypothesis, .. } => hypothesis.clone(),
        _ => String::new(),
    };
    ensure!(
        sentence_key(&final_hyp) == sentence_key("A magnet cannot attract a penny."),
        "(b) final hypothesis `{final_hyp}`"
    );
    apply_feedback(&mut s, FeedbackAction::LooksGood, env).map_err(|e| e.to_string())?;
    ensure!(s.status == SessionStatus::Confirmed, "(b) session not confirmed");
    for f in ["A penny is made of copper.", "A magnet cannot attract copper."] {
        ensure!(memory.read().contains_text(f), "(b) memory lacks `{f}`");
    }

    let transfer = answer("Can a magnet attract a copper pan?", &yes_no, &memory, &backend, &config)
        .map_err(|e| e.to_string())?;
    let got = premises(&transfer);
    ensure!(transfer.choice_label() == Some("B"), "(c) transfer answered {:?}", transfer.choice_label());
    ensure!(
        same(&got, &["A copper pan is made of copper.", "A magnet cannot attract copper."]),
        "(c) transfer proof {got:?}"
    );
    Ok(format!(
        "yes -> [copper, can attract copper] -> no -> confirmed; transfer: no because {}",
        got.join(" ")
    ))
}

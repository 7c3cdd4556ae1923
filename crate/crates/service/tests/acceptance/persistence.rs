use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teachqa::cli::run_with;
use teachqa_core::engine::{SymbolicBackend, SymbolicKb};
use teachqa_core::session::{self, apply_feedback, start_session, transcript_from_jsonl, transcript_to_jsonl, SessionEnv};
use teachqa_core::sim::{self, SuiteConfig};
use teachqa_core::{
    Choice, ControllerConfig, FeedbackAction, IndexStrategy, MemoryHandle, MemoryStore, Provenance, QuestionRef,
    RetrievalConfig,
};

use crate::Outcome;

const WORDS: &[&str] = &[
    "magnet", "penny", "copper", "metal", "attract", "iron", "plant", "food", "sun", "energy", "water", "rock",
    "cool", "warm", "can", "cannot", "is", "a", "the", "of", "made", "light", "heat", "sound",
];

fn text(rng: &mut ChaCha8Rng, n: std::ops::RangeInclusive<usize>) -> String {
    let k = rng.gen_range(n);
    (0..k).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ") + "."
}

fn random_store(rng: &mut ChaCha8Rng) -> MemoryStore {
    let mut m = MemoryStore::new();
    for _ in 0..rng.gen_range(1..=40) {
        let q = rng.gen_bool(0.6).then(|| QuestionRef::from_text(&text(rng, 3..=8)));
        let prov = *[Provenance::User, Provenance::SimulatedTeacher, Provenance::SessionCommit].choose(rng).unwrap();
        m.add_fact(&text(rng, 2..=9), prov, q.as_ref()).unwrap();
    }
    let ids: Vec<String> = m.facts().map(|f| f.id.clone()).collect();
    let drop = rng.gen_range(0..=3);
    for id in ids.choose_multiple(rng, drop) {
        m.remove_fact(id).unwrap();
    }
    for _ in 0..rng.gen_range(0..=3) {
        m.block_entailment(&[text(rng, 2..=5)], &text(rng, 2..=5)).unwrap();
    }
    m
}

fn round_trips(rng: &mut ChaCha8Rng, dir: &std::path::Path) -> Result<usize, String> {
    let mut checked = 0;
    for case in 0..50 {
        let store = random_store(rng);
        let path = dir.join(format!("m{case}.jsonl"));
        store.save(&path).map_err(|e| e.to_string())?;
        let loaded = MemoryStore::load(&path).map_err(|e| e.to_string())?;
        ensure!(loaded.content_hash() == store.content_hash(), "store {case}: hash changed on load");
        ensure!(loaded.to_jsonl() == store.to_jsonl(), "store {case}: re-serialized bytes differ");
        for _ in 0..20 {
            let q = text(rng, 1..=8);
            for s in IndexStrategy::ALL {
                let cfg = RetrievalConfig::default().with_strategy(s).with_r(50);
                let a: Vec<(String, u64)> =
                    store.retrieve(&q, &cfg).into_iter().map(|r| (r.record.id, r.score.to_bits())).collect();
                let b: Vec<(String, u64)> =
                    loaded.retrieve(&q, &cfg).into_iter().map(|r| (r.record.id, r.score.to_bits())).collect();
                ensure!(a == b, "store {case} {s}: retrieval differs after load for `{q}`");
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn random_action(rng: &mut ChaCha8Rng, texts: &[String]) -> FeedbackAction {
    let i = rng.gen_range(0..=4);
    let t = texts.choose(rng).unwrap().clone();
    match rng.gen_range(0..9) {
        0 | 8 => FeedbackAction::FactIsMissing { text: t },
        1 => FeedbackAction::FactIsFalse { premise: i },
        2 => FeedbackAction::FactIsTrue { fact: i },
        3 => FeedbackAction::BadReasoning,
        4 => FeedbackAction::FactIsIrrelevant { fact: i },
        5 => FeedbackAction::UseOldFact { fact: i },
        6 => FeedbackAction::UseNewFact { text: t },
        _ => FeedbackAction::LooksGood,
    }
}

fn replays(rng: &mut ChaCha8Rng, dir: &std::path::Path) -> Result<(usize, usize), String> {
    let suite = sim::generate(&SuiteConfig::default());
    let suite_kb = SymbolicKb::from_file(suite.kb.clone()).map_err(|e| e.to_string())?;
    let penny_texts: Vec<String> = [
        "A penny is made of copper.",
        "A magnet cannot attract copper.",
        "A copper pan is made of copper.",
        "Copper is not magnetic.",
        "A penny is made of magnetic metal.",
    ]
    .map(String::from)
    .to_vec();
    let suite_texts: Vec<String> = suite.facts.iter().map(|f| f.sentence.clone()).collect();
    let config = ControllerConfig::default();
    let mut actions = 0;
    let mut cli_checked = 0;
    for case in 0..50 {
        let penny = rng.gen_bool(0.5);
        let (kb, texts, question) = if penny {
            let q = ["Can a magnet attract a penny?", "Can a magnet attract a copper pan?"].choose(rng).unwrap();
            (SymbolicKb::penny_fixture(), &penny_texts, q.to_string())
        } else {
            (suite_kb.clone(), &suite_texts, suite.train.choose(rng).unwrap().question.clone())
        };
        let initial = MemoryStore::new();
        let live = MemoryHandle::new(initial.clone());
        let seeded = rng.gen_range(0..=2);
        for t in texts.choose_multiple(rng, seeded) {
            live.add_fact(t, Provenance::User, None).unwrap();
        }
        let start_mem = live.snapshot();
        let backend = SymbolicBackend::new(kb.clone());
        let env = SessionEnv::new(&live, &backend, &config);
        let choices = Choice::lettered(&["yes", "no"]);
        let mut s = start_session(format!("s{case}"), &question, &choices, env).map_err(|e| e.to_string())?;
        for _ in 0..rng.gen_range(1..=6) {
            if apply_feedback(&mut s, random_action(rng, texts), env).is_ok() {
                actions += 1;
            }
        }
        let recorded = s.transcript.last().unwrap().memory_hash.clone();
        ensure!(recorded == live.content_hash(), "session {case}: transcript hash is stale");

        let parsed = transcript_from_jsonl(&transcript_to_jsonl(&s.transcript)).map_err(|e| e.to_string())?;
        let fresh = MemoryHandle::new(start_mem.clone());
        let fresh_backend = SymbolicBackend::new(kb.clone());
        let replayed = session::replay(format!("s{case}"), &parsed, SessionEnv::new(&fresh, &fresh_backend, &config))
            .map_err(|e| format!("session {case}: {e}"))?;
        ensure!(fresh.content_hash() == recorded, "session {case}: replayed memory hash differs");
        ensure!(replayed.status == s.status, "session {case}: replayed status differs");

        if case % 5 == 0 {
            let t = dir.join(format!("t{case}.jsonl"));
            let m = dir.join(format!("start{case}.jsonl"));
            let k = dir.join(format!("kb{case}.json"));
            std::fs::write(&t, transcript_to_jsonl(&s.transcript)).map_err(|e| e.to_string())?;
            start_mem.save(&m).map_err(|e| e.to_string())?;
            std::fs::write(&k, serde_json::to_string(kb.source()).unwrap()).map_err(|e| e.to_string())?;
            let mut err = Vec::new();
            let code = run_with(
                [
                    "teachqa",
                    "replay",
                    "--transcript",
                    t.to_str().unwrap(),
                    "--memory",
                    m.to_str().unwrap(),
                    "--kb",
                    k.to_str().unwrap(),
                ],
                &mut Vec::new(),
                &mut err,
            );
            ensure!(code == 0, "session {case}: cli replay exited {code}: {}", String::from_utf8_lossy(&err));
            cli_checked += 1;
        }
    }
    Ok((actions, cli_checked))
}

pub fn round_trip_and_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let checked = round_trips(&mut rng, dir.path())?;
    let (actions, cli) = replays(&mut rng, dir.path())?;
    Ok(format!(
        "50 stores, {checked} retrievals bit-exact; 50 sessions ({actions} actions) replay to the recorded hash, {cli} via cli"
    ))
}

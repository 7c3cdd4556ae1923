use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use teachqa::cli::run_with;
use teachqa_core::sim::{self, QAExample, SuiteConfig};
use teachqa_core::text::sentence_key;
use teachqa_core::{Choice, IndexStrategy, MemoryStore, Provenance, QuestionRef, RetrievalConfig};

use crate::oracle::{self, OracleFact};
use crate::Outcome;

const TOL: f64 = 1e-9;

fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

/// Skewed word choice so that some terms are common and some rare.
fn word<'a>(rng: &mut ChaCha8Rng, v: &'a [String]) -> &'a str {
    let u: f64 = rng.gen();
    &v[((u * u) * v.len() as f64) as usize]
}

fn sentence(rng: &mut ChaCha8Rng, v: &[String], len: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.gen_range(len);
    (0..n).map(|_| word(rng, v)).collect::<Vec<_>>().join(" ")
}

/// Randomized corpora under every strategy against the brute-force oracle.
pub fn bm25_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let v = vocab(60);
    let mut compared = 0usize;
    let mut ties = 0usize;
    for case in 0..1000 {
        let n_docs = rng.gen_range(1..=200);
        let strategy = *IndexStrategy::ALL.choose(&mut rng).unwrap();
        let mut store = MemoryStore::new();
        let mut facts: Vec<OracleFact> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..n_docs {
            let text = sentence(&mut rng, &v, 1..=14);
            let nq = rng.gen_range(0..=2);
            let questions: Vec<String> = (0..nq).map(|_| sentence(&mut rng, &v, 2..=8)).collect();
            if !seen.insert(sentence_key(&text)) {
                continue;
            }
            store.add_fact(&text, Provenance::User, None).unwrap();
            let mut linked: Vec<String> = Vec::new();
            for q in questions {
                store.add_fact(&text, Provenance::User, Some(&QuestionRef::from_text(&q))).unwrap();
                if !linked.iter().any(|l| sentence_key(l) == sentence_key(&q)) {
                    linked.push(q);
                }
            }
            facts.push(OracleFact { text, questions: linked });
        }
        let mut query = sentence(&mut rng, &v, 1..=8);
        if rng.gen_bool(0.1) {
            query.push_str(" unseenterm");
        }
        let (docs, owner) = oracle::documents(&facts, strategy.label());
        let want = oracle::rank(&owner, &docs, &query);
        let cfg = RetrievalConfig::default().with_strategy(strategy).with_r(facts.len());
        let got = store.retrieve(&query, &cfg);
        ensure!(
            got.len() == want.len(),
            "case {case} ({strategy}): {} results, oracle has {}",
            got.len(),
            want.len()
        );
        for (pos, (g, (wi, ws))) in got.iter().zip(&want).enumerate() {
            ensure!(
                (g.score - ws).abs() <= TOL,
                "case {case} ({strategy}) rank {pos}: score {} vs oracle {ws}",
                g.score
            );
            if g.record.seq as usize != *wi {
                let gs = want.iter().find(|(i, _)| *i == g.record.seq as usize).map(|x| x.1);
                ensure!(
                    gs.is_some_and(|gs| (gs - ws).abs() <= TOL),
                    "case {case} ({strategy}) rank {pos}: fact {} vs oracle {wi}",
                    g.record.seq
                );
                ties += 1;
            }
        }
        let r = rng.gen_range(1..=facts.len());
        let top = store.retrieve(&query, &cfg.with_r(r));
        ensure!(
            top.iter().map(|x| x.record.seq).eq(got.iter().take(r).map(|x| x.record.seq)),
            "case {case}: top-{r} is not a prefix of the full ranking"
        );
        compared += got.len();
    }
    Ok(format!("1000 cases, {compared} ranked facts within {TOL:e}, {ties} float-level ties"))
}

fn example(id: String, question: String, fact: &str) -> QAExample {
    QAExample {
        id,
        question,
        choices: Choice::lettered(&["yes", "no"]),
        answer_key: "A".into(),
        core_fact: fact.to_string(),
        gold_premises: vec![fact.to_string()],
    }
}

/// Train/test sets over a small shared vocabulary so that recall is far
/// from saturated.
fn noisy_corpus(seed: u64) -> (Vec<QAExample>, Vec<QAExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = vocab(45);
    let mut facts: Vec<String> = Vec::new();
    while facts.len() < 150 {
        let f = sentence(&mut rng, &v, 5..=10);
        if !facts.iter().any(|x| sentence_key(x) == sentence_key(&f)) {
            facts.push(f);
        }
    }
    let question = |rng: &mut ChaCha8Rng, fact: &str| {
        let words: Vec<&str> = fact.split(' ').collect();
        let mut q: Vec<&str> = words.choose_multiple(rng, 3).copied().collect();
        for _ in 0..4 {
            q.push(word(rng, &v));
        }
        q.shuffle(rng);
        q.join(" ") + "?"
    };
    let mut train = Vec::new();
    for (i, f) in facts.iter().enumerate() {
        for j in 0..rng.gen_range(1..=3) {
            let q = question(&mut rng, f);
            train.push(example(format!("tr-{i}-{j}"), q, f));
        }
    }
    let test = (0..120)
        .map(|i| {
            let f = facts.choose(&mut rng).unwrap().clone();
            let q = question(&mut rng, &f);
            example(format!("te-{i}"), q, &f)
        })
        .collect();
    (train, test)
}

fn bench_json(args: &[&str]) -> Result<Value, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = ["teachqa", "--json", "bench-retrieval"].iter().chain(args).copied();
    let code = run_with(argv, &mut out, &mut err);
    ensure!(code == 0, "bench-retrieval exited {code}: {}", String::from_utf8_lossy(&err));
    serde_json::from_slice(&out).map_err(|e| e.to_string())
}

const KS: [usize; 5] = [1, 2, 3, 5, 10];
const LABELS: [&str; 4] = ["F", "Q", "Q+F", "RelevantQs+F"];

fn check_grid(name: &str, report: &Value, train: &[QAExample], test: &[QAExample]) -> Result<Vec<f64>, String> {
    ensure!(
        report["ks"] == serde_json::json!(KS),
        "{name}: k columns {} differ from {KS:?}",
        report["ks"]
    );
    let tables = report["tables"].as_array().ok_or("no tables")?;
    ensure!(tables.len() == 4, "{name}: {} strategy rows", tables.len());
    let mut first_row = Vec::new();
    for (t, label) in tables.iter().zip(LABELS) {
        ensure!(t["strategy"] == label, "{name}: row {} where {label} expected", t["strategy"]);
        let (queries, hits) = oracle::recall(train, test, label, &KS);
        ensure!(t["queries"] == queries, "{name} {label}: {} queries vs oracle {queries}", t["queries"]);
        let rows = t["rows"].as_array().ok_or("no rows")?;
        ensure!(rows.len() == KS.len(), "{name} {label}: {} columns", rows.len());
        for ((row, k), h) in rows.iter().zip(KS).zip(&hits) {
            let want = *h as f64 / queries as f64;
            ensure!(row["k"] == k, "{name} {label}: column {} where R@{k} expected", row["k"]);
            ensure!(
                row["recall"].as_f64().is_some_and(|r| (r - want).abs() <= 1e-12),
                "{name} {label} R@{k}: {} vs oracle {want}",
                row["recall"]
            );
            if label == "F" {
                first_row.push(want);
            }
        }
    }
    Ok(first_row)
}

/// `bench-retrieval` output against oracle recall on the generated suite
/// (three seeds) and on a noisier corpus read from files.
pub fn strategy_benchmark() -> Outcome {
    for seed in 0..3u64 {
        let suite = sim::generate(&SuiteConfig {
            seed,
            ..SuiteConfig::default()
        });
        let report = bench_json(&["--suite-seed", &seed.to_string()])?;
        check_grid(&format!("suite seed {seed}"), &report, &suite.train, &suite.test)?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (train, test) = noisy_corpus(5);
    let tp = dir.path().join("train.jsonl");
    let sp = dir.path().join("test.jsonl");
    std::fs::write(&tp, sim::dataset::to_jsonl(&train)).map_err(|e| e.to_string())?;
    std::fs::write(&sp, sim::dataset::to_jsonl(&test)).map_err(|e| e.to_string())?;
    let report = bench_json(&["--train", tp.to_str().unwrap(), "--test", sp.to_str().unwrap()])?;
    let f = check_grid("noisy corpus", &report, &train, &test)?;

    let mut out = Vec::new();
    let code = run_with(["teachqa", "bench-retrieval"], &mut out, &mut Vec::new());
    ensure!(code == 0, "text output exited {code}");
    let text = String::from_utf8_lossy(&out);
    let header: Vec<&str> = text.lines().next().unwrap_or("").split_whitespace().collect();
    ensure!(
        header == ["Index", "by", "R@1", "R@2", "R@3", "R@5", "R@10"],
        "header {header:?}"
    );
    let cells: Vec<String> = f.iter().map(|r| format!("{:.1}", r * 100.0)).collect();
    Ok(format!(
        "4 corpora x 4 strategies x R@{{1,2,3,5,10}} identical to oracle; noisy F row: {}",
        cells.join(" ")
    ))
}

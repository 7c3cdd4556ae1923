//! Generated teaching suite with a knowledge base seeded with misconceptions.
//!
//! Each core fact reads `<Category>s can|cannot <verb> <object>s.`. Every
//! member of a category spawns one yes/no question `Can a <member> <verb>
//! <object>s?`; members are split between train and test. The KB knows every
//! membership link, asserts the correct polarity for some facts and the
//! opposite polarity (a misconception) for the rest, so before teaching only
//! the correctly-believed facts are answered right.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::QAExample;
use crate::controller::Choice;
use crate::engine::{IsaRelation, KbAssertion, KbFile, KbIsaLink, Polarity};
use crate::text::capitalize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub core_facts: usize,
    pub train_per_fact: usize,
    pub test_per_fact: usize,
    pub misconceptions: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            core_facts: 20,
            train_per_fact: 4,
            test_per_fact: 4,
            misconceptions: 12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteFact {
    pub category: String,
    pub sentence: String,
    pub positive: bool,
    pub misconception: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSuite {
    pub config: SuiteConfig,
    pub facts: Vec<SuiteFact>,
    pub kb: KbFile,
    pub train: Vec<QAExample>,
    pub test: Vec<QAExample>,
}

const ONSETS: [char; 12] = ['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 't', 'v'];
const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];
const CODAS: [char; 8] = ['b', 'd', 'g', 'k', 'm', 'n', 'p', 't'];

/// The `i`-th five-letter pseudo-word (CVCVC).
fn pseudo_word(mut i: usize) -> String {
    let mut digit = |base: usize| {
        let d = i % base;
        i /= base;
        d
    };
    let c1 = ONSETS[digit(ONSETS.len())];
    let v1 = VOWELS[digit(VOWELS.len())];
    let c2 = ONSETS[digit(ONSETS.len())];
    let v2 = VOWELS[digit(VOWELS.len())];
    let c3 = CODAS[digit(CODAS.len())];
    [c1, v1, c2, v2, c3].iter().collect()
}

/// Builds the suite. Deterministic in `config`.
pub fn generate(config: &SuiteConfig) -> SyntheticSuite {
    let k = config.core_facts;
    let per = config.train_per_fact + config.test_per_fact;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // a stride coprime with the word space spreads consecutive words apart
    let space = ONSETS.len() * VOWELS.len() * ONSETS.len() * VOWELS.len() * CODAS.len();
    let mut words = (0..).map(|n: usize| pseudo_word((n * 7919 + 17) % space));

    let mut misconceived: Vec<usize> = (0..k).collect();
    misconceived.shuffle(&mut rng);
    misconceived.truncate(config.misconceptions.min(k));

    let mut facts = Vec::with_capacity(k);
    let mut kb = KbFile::default();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for f in 0..k {
        let category = words.next().unwrap();
        let verb = words.next().unwrap();
        let object = words.next().unwrap();
        let positive = f % 2 == 0;
        let misconception = misconceived.contains(&f);
        let modal = if positive { "can" } else { "cannot" };
        let sentence = format!("{}s {modal} {verb} {object}s.", capitalize(&category));
        let kb_positive = positive != misconception;
        kb.assertions.push(KbAssertion {
            subject: format!("{category}s"),
            template: format!("{{x}} {{can}} {verb} {object}s"),
            polarity: if kb_positive { Polarity::Pos } else { Polarity::Neg },
        });
        for m in 0..per {
            let member = words.next().unwrap();
            kb.isa_links.push(KbIsaLink {
                child: format!("a {member}"),
                parent: category.clone(),
                relation: IsaRelation::KindOf,
            });
            let ex = QAExample {
                id: format!("syn-{f:02}-{m}"),
                question: format!("Can a {member} {verb} {object}s?"),
                choices: Choice::lettered(&["yes", "no"]),
                answer_key: if positive { "A".into() } else { "B".into() },
                core_fact: sentence.clone(),
                gold_premises: vec![
                    format!("A {member} is a kind of {category}."),
                    sentence.clone(),
                ],
            };
            if m < config.train_per_fact {
                train.push(ex);
            } else {
                test.push(ex);
            }
        }
        facts.push(SuiteFact {
            category,
            sentence,
            positive,
            misconception,
        });
    }
    SyntheticSuite {
        config: config.clone(),
        facts,
        kb,
        train,
        test,
    }
}

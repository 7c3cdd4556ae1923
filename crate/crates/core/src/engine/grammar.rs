//! Template grammar mapping sentences to polar statements and back.
//!
//! Three sentence shapes are recognized, tried in this order:
//!
//! * taxonomy links: `<x> is|are [not] made of|a kind of|a type of <y>`
//! * declared templates with one `{x}` slot and one polarity slot, e.g.
//!   `a magnet {can} attract {x}` or `{x} {be} magnetic`
//! * the generic subject-first shape `<x> can|cannot|is|is not|are|are not <rest>`
//!
//! A sentence prefixed with `It is not true that` is the negation of the rest.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::text::{capitalize, normalize, strip_terminal, with_period};

const NOT_TRUE_PREFIX: &str = "It is not true that ";
const ARTICLES: [&str; 3] = ["a", "an", "the"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub surface: String,
    pub key: String,
}

impl Entity {
    pub fn new(surface: &str) -> Self {
        let surface = normalize(surface);
        let key = entity_key(&surface);
        Self { surface, key }
    }

    /// Surface form without a leading article.
    pub fn bare(&self) -> &str {
        strip_article(&self.surface)
    }
}

fn strip_article(s: &str) -> &str {
    match s.split_once(' ') {
        Some((first, rest)) if ARTICLES.contains(&first.to_lowercase().as_str()) => rest,
        _ => s,
    }
}

fn singularize(word: &str) -> String {
    let n = word.chars().count();
    if n > 4 && word.ends_with("ies") {
        format!("{}y", &word[..word.len() - 3])
    } else if n > 3
        && word.ends_with('s')
        && !(word.ends_with("ss") || word.ends_with("us") || word.ends_with("is"))
    {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}

/// Lowercased, article-free, last word singularized.
pub fn entity_key(surface: &str) -> String {
    let lower = normalize(surface).to_lowercase();
    let bare = strip_article(&lower);
    match bare.rsplit_once(' ') {
        Some((head, last)) => format!("{head} {}", singularize(last)),
        None => singularize(bare),
    }
}

pub(crate) fn looks_plural(surface: &str) -> bool {
    let lower = normalize(surface).to_lowercase();
    if strip_article(&lower) != lower {
        return false;
    }
    let last = lower.rsplit(' ').next().unwrap_or("");
    singularize(last) != last
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsaRelation {
    KindOf,
    MadeOf,
}

impl IsaRelation {
    fn phrase(self) -> &'static str {
        match self {
            IsaRelation::KindOf => "a kind of",
            IsaRelation::MadeOf => "made of",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Modal {
    Can,
    Be,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    Isa { relation: IsaRelation, parent: Entity },
    /// A one-slot pattern such as `a magnet {can} attract {x}`.
    Property { key: String, pattern: String },
}

impl Predicate {
    pub fn key(&self) -> String {
        match self {
            Predicate::Isa { relation, parent } => format!("isa:{relation:?}:{}", parent.key),
            Predicate::Property { key, .. } => key.clone(),
        }
    }

    pub fn isa_parent(&self) -> Option<&Entity> {
        match self {
            Predicate::Isa { parent, .. } => Some(parent),
            Predicate::Property { .. } => None,
        }
    }
}

/// A ground statement: subject, predicate and polarity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub subject: Entity,
    pub predicate: Predicate,
    pub positive: bool,
    /// Number agreement of the copula when rendered.
    pub plural: bool,
}

impl Statement {
    pub fn key(&self) -> String {
        self.key_with(self.positive)
    }

    pub fn negation_key(&self) -> String {
        self.key_with(!self.positive)
    }

    fn key_with(&self, positive: bool) -> String {
        format!(
            "{}|{}|{}",
            self.subject.key,
            self.predicate.key(),
            if positive { '+' } else { '-' }
        )
    }

    pub fn negated(&self) -> Statement {
        Statement {
            positive: !self.positive,
            ..self.clone()
        }
    }

    pub fn is_isa(&self) -> bool {
        matches!(self.predicate, Predicate::Isa { .. })
    }

    pub fn render(&self) -> String {
        let body = match &self.predicate {
            Predicate::Isa { relation, parent } => format!(
                "{} {} {} {}",
                self.subject.surface,
                be_word(self.positive, self.plural),
                relation.phrase(),
                parent.surface
            ),
            Predicate::Property { pattern, .. } => pattern
                .replace("{x}", &self.subject.surface)
                .replace("{can}", if self.positive { "can" } else { "cannot" })
                .replace("{be}", be_word(self.positive, self.plural)),
        };
        with_period(&capitalize(&body))
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn be_word(positive: bool, plural: bool) -> &'static str {
    match (positive, plural) {
        (true, false) => "is",
        (true, true) => "are",
        (false, false) => "is not",
        (false, true) => "are not",
    }
}

fn is_negative_word(pol: &str) -> bool {
    let p = pol.to_lowercase();
    p.contains("not") || p.contains("n't")
}

fn is_plural_copula(pol: &str) -> bool {
    pol.to_lowercase().starts_with("are")
}

const CAN_ALT: &str = "cannot|can not|can't|can";
const BE_ALT: &str = "is not|isn't|are not|aren't|is|are";

fn isa_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?i)^(?P<x>.+?)\s+(?P<pol>{BE_ALT})\s+(?P<rel>made of|a kind of|a type of)\s+(?P<y>.+)$"
        ))
        .unwrap()
    })
}

fn generic_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?i)^(?P<x>.+?)\s+(?P<pol>{CAN_ALT}|{BE_ALT})\s+(?P<rest>.+)$"
        ))
        .unwrap()
    })
}

/// Lowercases a sentence-initial capital unless the word looks like an acronym.
fn decapitalize_initial(s: &str) -> String {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(a), Some(b)) if a.is_uppercase() && !b.is_uppercase() => {
            let mut out: String = a.to_lowercase().collect();
            out.push_str(&s[a.len_utf8()..]);
            out
        }
        (Some(a), None) => a.to_lowercase().collect(),
        _ => s.to_string(),
    }
}

fn pattern_key(pattern: &str) -> String {
    strip_terminal(&normalize(pattern)).to_lowercase()
}

/// A declared one-slot sentence pattern.
#[derive(Debug, Clone)]
pub struct Template {
    pattern: String,
    key: String,
    modal: Modal,
    slot_first: bool,
    regex: Regex,
}

impl Template {
    pub fn parse(pattern: &str) -> Result<Template, String> {
        let pattern = strip_terminal(&normalize(pattern)).to_string();
        let slots = pattern.matches("{x}").count();
        let can = pattern.matches("{can}").count();
        let be = pattern.matches("{be}").count();
        if slots != 1 || can + be != 1 {
            return Err(format!(
                "template `{pattern}` needs exactly one {{x}} and one {{can}} or {{be}} slot"
            ));
        }
        let modal = if can == 1 { Modal::Can } else { Modal::Be };
        let placeholder = Regex::new(r"\{(x|can|be)\}").unwrap();
        let mut parts: Vec<String> = Vec::new();
        let mut last = 0;
        for m in placeholder.find_iter(&pattern) {
            parts.extend(literal_parts(&pattern[last..m.start()]));
            parts.push(match m.as_str() {
                "{x}" => "(?P<x>.+?)".to_string(),
                "{can}" => format!("(?P<pol>{CAN_ALT})"),
                _ => format!("(?P<pol>{BE_ALT})"),
            });
            last = m.end();
        }
        parts.extend(literal_parts(&pattern[last..]));
        let regex = Regex::new(&format!("(?i)^{}$", parts.join(r"\s+")))
            .map_err(|e| format!("template `{pattern}`: {e}"))?;
        Ok(Template {
            key: pattern_key(&pattern),
            slot_first: pattern.starts_with("{x}"),
            pattern,
            modal,
            regex,
        })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn instantiate(&self, subject: &str, positive: bool) -> Statement {
        let subject = Entity::new(subject);
        let plural = self.modal == Modal::Be && looks_plural(&subject.surface);
        Statement {
            subject,
            predicate: Predicate::Property {
                key: self.key.clone(),
                pattern: self.pattern.clone(),
            },
            positive,
            plural,
        }
    }

    fn matches(&self, sentence: &str) -> Option<Statement> {
        let caps = self.regex.captures(sentence)?;
        let pol = caps.name("pol")?.as_str();
        let mut x = caps.name("x")?.as_str().to_string();
        if self.slot_first {
            x = decapitalize_initial(&x);
        }
        let mut st = self.instantiate(&x, !is_negative_word(pol));
        if self.modal == Modal::Be {
            st.plural = is_plural_copula(pol);
        }
        Some(st)
    }
}

fn literal_parts(s: &str) -> Vec<String> {
    s.split_whitespace().map(regex::escape).collect()
}

/// Sentence parser over an ordered list of declared templates.
#[derive(Debug, Clone, Default)]
pub struct Grammar {
    templates: Vec<Template>,
}

impl Grammar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a template unless one with the same key is already declared.
    pub fn declare(&mut self, template: Template) -> &Template {
        let pos = match self.templates.iter().position(|t| t.key == template.key) {
            Some(pos) => pos,
            None => {
                self.templates.push(template);
                self.templates.len() - 1
            }
        };
        &self.templates[pos]
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn parse(&self, sentence: &str) -> Option<Statement> {
        let norm = normalize(sentence);
        let s = strip_terminal(&norm);
        if s.is_empty() {
            return None;
        }
        if s.len() > NOT_TRUE_PREFIX.len()
            && s[..NOT_TRUE_PREFIX.len()].eq_ignore_ascii_case(NOT_TRUE_PREFIX)
        {
            return self
                .parse(&s[NOT_TRUE_PREFIX.len()..])
                .map(|st| st.negated());
        }
        if let Some(c) = isa_regex().captures(s) {
            let relation = if c["rel"].eq_ignore_ascii_case("made of") {
                IsaRelation::MadeOf
            } else {
                IsaRelation::KindOf
            };
            return Some(Statement {
                subject: Entity::new(&decapitalize_initial(&c["x"])),
                predicate: Predicate::Isa {
                    relation,
                    parent: Entity::new(&c["y"]),
                },
                positive: !is_negative_word(&c["pol"]),
                plural: is_plural_copula(&c["pol"]),
            });
        }
        if let Some(st) = self.templates.iter().find_map(|t| t.matches(s)) {
            return Some(st);
        }
        let c = generic_regex().captures(s)?;
        let pol = &c["pol"];
        let can = pol.to_lowercase().starts_with("can");
        let pattern = format!("{{x}} {} {}", if can { "{can}" } else { "{be}" }, &c["rest"]);
        Some(Statement {
            subject: Entity::new(&decapitalize_initial(&c["x"])),
            predicate: Predicate::Property {
                key: pattern_key(&pattern),
                pattern,
            },
            positive: !is_negative_word(pol),
            plural: !can && is_plural_copula(pol),
        })
    }

    /// Flips polarity when the sentence parses, otherwise toggles the
    /// `It is not true that` prefix.
    pub fn negate(&self, sentence: &str) -> String {
        let norm = normalize(sentence);
        if norm.len() > NOT_TRUE_PREFIX.len()
            && norm[..NOT_TRUE_PREFIX.len()].eq_ignore_ascii_case(NOT_TRUE_PREFIX)
            && self.parse(&norm[NOT_TRUE_PREFIX.len()..]).is_none()
        {
            return norm[NOT_TRUE_PREFIX.len()..].to_string();
        }
        match self.parse(&norm) {
            Some(st) => st.negated().render(),
            None => format!("{NOT_TRUE_PREFIX}{norm}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum YesNo {
    Yes,
    No,
}

fn yes_no(choice: &str) -> Option<YesNo> {
    match choice.to_lowercase().as_str() {
        "yes" | "true" => Some(YesNo::Yes),
        "no" | "false" => Some(YesNo::No),
        _ => None,
    }
}

fn choice_listing_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\s*\([A-Za-z1-9]\)\s").unwrap())
}

fn name_a_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^name (?:a|an|one|some) (?P<kind>.+)$").unwrap())
}

/// Question text with any inline `(A) ... (B) ...` listing and trailing punctuation removed.
pub fn question_stem(question: &str) -> String {
    let q = normalize(question);
    let head = match choice_listing_regex().find(&format!("{q} ")) {
        Some(m) => q[..m.start().min(q.len())].to_string(),
        None => q,
    };
    strip_terminal(&head).to_string()
}

/// Type named by an open "Name a X?" question.
pub fn open_question_kind(question: &str) -> Option<Entity> {
    let stem = question_stem(question);
    name_a_regex()
        .captures(&stem)
        .map(|c| Entity::new(&c["kind"]))
}

fn with_article(noun: &str) -> String {
    let lower = noun.to_lowercase();
    if ARTICLES.iter().any(|a| lower.starts_with(&format!("{a} "))) || looks_plural(noun) {
        return noun.to_string();
    }
    let vowel = lower.starts_with(['a', 'e', 'i', 'o', 'u']);
    format!("{} {noun}", if vowel { "an" } else { "a" })
}

/// Splits `words` into a subject and the remainder.
///
/// Prefers the shortest prefix that `known` recognizes as an entity, else an
/// article plus one word, else a single word.
fn split_subject<'a>(words: &[&'a str], known: &dyn Fn(&str) -> bool) -> Option<(String, String)> {
    if words.len() < 2 {
        return None;
    }
    for i in 1..words.len() {
        let subject = words[..i].join(" ");
        if known(&entity_key(&subject)) {
            return Some((subject, words[i..].join(" ")));
        }
    }
    let i = if ARTICLES.contains(&words[0].to_lowercase().as_str()) && words.len() > 2 {
        2
    } else {
        1
    };
    Some((words[..i].join(" "), words[i..].join(" ")))
}

/// Rewrites a question and one answer option into a declarative sentence.
///
/// Unrecognized forms fall back to `<question stem> — <choice>`.
pub fn declarativize(question: &str, choice: &str, known: &dyn Fn(&str) -> bool) -> String {
    let stem = question_stem(question);
    let choice = strip_terminal(&normalize(choice)).to_string();
    let words: Vec<&str> = stem.split_whitespace().collect();
    let first = words.first().map(|w| w.to_lowercase()).unwrap_or_default();
    let fallback = || format!("{stem} — {choice}");

    match (first.as_str(), yes_no(&choice)) {
        ("can", Some(yn)) => {
            let Some((subject, rest)) = split_subject(&words[1..], known) else {
                return fallback();
            };
            let modal = if yn == YesNo::Yes { "can" } else { "cannot" };
            with_period(&capitalize(&format!("{subject} {modal} {rest}")))
        }
        ("is" | "are", Some(yn)) => {
            let Some((subject, rest)) = split_subject(&words[1..], known) else {
                return fallback();
            };
            let copula = match (first.as_str(), yn) {
                ("is", YesNo::Yes) => "is",
                ("is", YesNo::No) => "is not",
                (_, YesNo::Yes) => "are",
                (_, YesNo::No) => "are not",
            };
            with_period(&capitalize(&format!("{subject} {copula} {rest}")))
        }
        ("is" | "are", None) if words.len() > 1 => {
            let subject = words[1..].join(" ");
            with_period(&capitalize(&format!("{subject} {first} {choice}")))
        }
        ("can", None) if words.len() > 2 => match split_subject(&words[1..], known) {
            Some((subject, rest)) => {
                with_period(&capitalize(&format!("{subject} can {rest} {choice}")))
            }
            None => fallback(),
        },
        _ => {
            if let Some(kind) = open_question_kind(&stem) {
                return with_period(&capitalize(&format!(
                    "{} is {} {}",
                    with_article(&choice),
                    IsaRelation::KindOf.phrase(),
                    kind.surface
                )));
            }
            wh_substitute(&words, &choice).unwrap_or_else(fallback)
        }
    }
}

fn wh_substitute(words: &[&str], choice: &str) -> Option<String> {
    let pos = words.iter().position(|w| {
        matches!(
            w.to_lowercase().as_str(),
            "what" | "what's" | "whats" | "which"
        )
    })?;
    let wh = words[pos].to_lowercase();
    let mut out: Vec<String> = words[..pos].iter().map(|w| w.to_string()).collect();
    out.push(choice.to_string());
    let mut next = pos + 1;
    match wh.as_str() {
        "what's" | "whats" => out.push("is".into()),
        // "which <noun>" is replaced by the choice as a whole
        "which" if next < words.len() && !is_verbish(words[next]) => next += 1,
        _ => {}
    }
    out.extend(words[next..].iter().map(|w| w.to_string()));
    Some(with_period(&capitalize(&out.join(" "))))
}

fn is_verbish(word: &str) -> bool {
    matches!(
        word.to_lowercase().as_str(),
        "is" | "are" | "can" | "does" | "do" | "was" | "were" | "will" | "would" | "could" | "should"
    )
}

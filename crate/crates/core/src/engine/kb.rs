//! Knowledge-base fixture: taxonomy links, polar assertions and the templates
//! that render them.
//!
//! ```json
//! {
//!   "templates": ["a magnet {can} attract {x}"],
//!   "isa_links": [{"child": "a penny", "parent": "magnetic metal", "relation": "made-of"}],
//!   "assertions": [{"subject": "magnetic metals", "template": "a magnet {can} attract {x}", "polarity": "pos"}]
//! }
//! ```

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grammar::{looks_plural, Entity, Grammar, IsaRelation, Predicate, Statement, Template};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read knowledge base {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed knowledge base: {0}")]
    Format(String),
    #[error("bad template: {0}")]
    Template(String),
    #[error("taxonomy cycle through `{0}`")]
    Cycle(String),
    #[error("`{0}` is asserted with both polarities")]
    Contradiction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Pos,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbIsaLink {
    pub child: String,
    pub parent: String,
    #[serde(default = "default_relation")]
    pub relation: IsaRelation,
}

fn default_relation() -> IsaRelation {
    IsaRelation::KindOf
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbAssertion {
    pub subject: String,
    pub template: String,
    pub polarity: Polarity,
}

/// On-disk form of a knowledge base.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbFile {
    #[serde(default)]
    pub templates: Vec<String>,
    #[serde(default)]
    pub isa_links: Vec<KbIsaLink>,
    #[serde(default)]
    pub assertions: Vec<KbAssertion>,
}

/// Validated, immutable knowledge base.
#[derive(Debug, Clone)]
pub struct SymbolicKb {
    source: KbFile,
    grammar: Grammar,
    statements: Vec<Statement>,
    by_key: HashMap<String, usize>,
    by_subject: HashMap<String, Vec<usize>>,
    entities: HashSet<String>,
}

impl SymbolicKb {
    pub fn from_file(file: KbFile) -> Result<Self, KbError> {
        let mut grammar = Grammar::new();
        for t in &file.templates {
            grammar.declare(Template::parse(t).map_err(KbError::Template)?);
        }
        let mut statements = Vec::new();
        for link in &file.isa_links {
            let child = Entity::new(&link.child);
            statements.push(Statement {
                plural: looks_plural(&link.child),
                subject: child,
                predicate: Predicate::Isa {
                    relation: link.relation,
                    parent: Entity::new(&link.parent),
                },
                positive: true,
            });
        }
        for a in &file.assertions {
            let template = grammar
                .declare(Template::parse(&a.template).map_err(KbError::Template)?)
                .clone();
            statements.push(template.instantiate(&a.subject, a.polarity == Polarity::Pos));
        }
        let mut by_key = HashMap::new();
        let mut entities = HashSet::new();
        let mut by_subject: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, st) in statements.iter().enumerate() {
            by_subject.entry(st.subject.key.clone()).or_default().push(i);
            if by_key.contains_key(&st.negation_key()) {
                return Err(KbError::Contradiction(st.render()));
            }
            by_key.entry(st.key()).or_insert(i);
            entities.insert(st.subject.key.clone());
            if let Some(p) = st.predicate.isa_parent() {
                entities.insert(p.key.clone());
            }
        }
        let kb = Self {
            source: file,
            grammar,
            statements,
            by_key,
            by_subject,
            entities,
        };
        kb.check_acyclic()?;
        Ok(kb)
    }

    pub fn from_json(json: &str) -> Result<Self, KbError> {
        let file: KbFile =
            serde_json::from_str(json).map_err(|e| KbError::Format(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn check_acyclic(&self) -> Result<(), KbError> {
        let mut edges: HashMap<&str, Vec<&str>> = HashMap::new();
        for st in &self.statements {
            if let Some(p) = st.predicate.isa_parent() {
                edges.entry(&st.subject.key).or_default().push(&p.key);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: HashMap<&str, u8> = HashMap::new();
        fn visit<'a>(
            node: &'a str,
            edges: &HashMap<&'a str, Vec<&'a str>>,
            state: &mut HashMap<&'a str, u8>,
        ) -> Result<(), KbError> {
            match state.get(node) {
                Some(1) => return Err(KbError::Cycle(node.to_string())),
                Some(2) => return Ok(()),
                _ => {}
            }
            state.insert(node, 1);
            for &next in edges.get(node).into_iter().flatten() {
                visit(next, edges, state)?;
            }
            state.insert(node, 2);
            Ok(())
        }
        let mut nodes: Vec<&str> = edges.keys().copied().collect();
        nodes.sort_unstable();
        for n in nodes {
            visit(n, &edges, &mut state)?;
        }
        Ok(())
    }

    pub fn source(&self) -> &KbFile {
        &self.source
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    /// Taxonomy links first, then assertions, each in file order.
    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    /// Indices into [`statements`](Self::statements) whose subject has this key.
    pub fn about(&self, subject_key: &str) -> &[usize] {
        self.by_subject.get(subject_key).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.by_key.contains_key(key)
    }

    pub fn knows_entity(&self, key: &str) -> bool {
        self.entities.contains(key)
    }

    /// Stable digest of the fixture content.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(&self.source).expect("kb serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// The misconception fixture for the magnet/penny dialog.
    pub fn penny_fixture() -> Self {
        Self::from_json(include_str!("../../fixtures/penny_kb.json"))
            .expect("bundled fixture is valid")
    }
}

//! Domain lexicons: the phrase pools symbols are grounded into.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Healthcare,
    Traffic,
    Sports,
    Entertainment,
    Social,
    Science,
    Finance,
    General,
}

impl Domain {
    pub const ALL: [Domain; 8] = [
        Domain::Healthcare,
        Domain::Traffic,
        Domain::Sports,
        Domain::Entertainment,
        Domain::Social,
        Domain::Science,
        Domain::Finance,
        Domain::General,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Healthcare => "healthcare",
            Domain::Traffic => "traffic",
            Domain::Sports => "sports",
            Domain::Entertainment => "entertainment",
            Domain::Social => "social",
            Domain::Science => "science",
            Domain::Finance => "finance",
            Domain::General => "general",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown domain {s:?}"))
    }
}

/// A predicate phrase: `{0}`, `{1}`, ... mark argument slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateTemplate {
    pub arity: usize,
    pub template: String,
}

impl PredicateTemplate {
    pub fn render(&self, args: &[String]) -> String {
        let mut out = self.template.clone();
        for (i, a) in args.iter().enumerate() {
            out = out.replace(&format!("{{{i}}}"), a);
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entries {
    #[serde(default)]
    pub proposition: Vec<String>,
    #[serde(default)]
    pub predicate: Vec<PredicateTemplate>,
    #[serde(default)]
    pub constant: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lexicon {
    pub domain: Domain,
    pub entries: Entries,
    /// Templates with a `{fact}` slot, used to word image-borne premises.
    pub visual_details: Vec<String>,
    /// Templates with `{premise}` and `{conclusion}` slots for heuristic
    /// steps.
    pub bridges: Vec<String>,
    /// Opaque image references assigned to instances round-robin.
    #[serde(default)]
    pub images: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid lexicon at {path}: {message}")]
    Invalid { path: String, message: String },
}

impl LexiconError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        LexiconError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Lexicon::from_json(&text)
}

/// Indices of `{k}` slots in a template, or an error for stray braces.
fn slots(template: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let after = &rest[start + 1..];
        let end = after
            .find('}')
            .ok_or_else(|| "unclosed '{' in template".to_string())?;
        let inner = &after[..end];
        let k = inner
            .parse::<usize>()
            .map_err(|_| format!("slot {{{inner}}} is not an argument index"))?;
        out.push(k);
        rest = &after[end + 1..];
    }
    if rest.contains('}') {
        return Err("stray '}' in template".into());
    }
    Ok(out)
}

fn named_slots(template: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let after = &rest[start + 1..];
        let Some(end) = after.find('}') else { break };
        out.insert(after[..end].to_string());
        rest = &after[end + 1..];
    }
    out
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Lexicon, LexiconError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let lex: Lexicon = serde_path_to_error::deserialize(de).map_err(|e| LexiconError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<(), LexiconError> {
        let e = &self.entries;
        if e.proposition.is_empty() || e.predicate.is_empty() || e.constant.is_empty() {
            return Err(LexiconError::invalid(
                "entries",
                "lexicon must cover all symbol roles",
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, p) in e.proposition.iter().enumerate() {
            let path = format!("entries.proposition[{i}]");
            if p.trim().is_empty() {
                return Err(LexiconError::invalid(path, "phrase renders to empty text"));
            }
            if p.contains('{') || p.contains('}') {
                return Err(LexiconError::invalid(path, "propositions take no slots"));
            }
            if !seen.insert(p.as_str()) {
                return Err(LexiconError::invalid(path, format!("duplicate phrase {p:?}")));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, c) in e.constant.iter().enumerate() {
            let path = format!("entries.constant[{i}]");
            if c.trim().is_empty() {
                return Err(LexiconError::invalid(path, "phrase renders to empty text"));
            }
            if c.contains('{') || c.contains('}') {
                return Err(LexiconError::invalid(path, "constants take no slots"));
            }
            if !seen.insert(c.as_str()) {
                return Err(LexiconError::invalid(path, format!("duplicate phrase {c:?}")));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, p) in e.predicate.iter().enumerate() {
            let path = format!("entries.predicate[{i}]");
            if p.arity == 0 || p.arity > 3 {
                return Err(LexiconError::invalid(
                    format!("{path}.arity"),
                    format!("arity {} outside 1..=3", p.arity),
                ));
            }
            let mut found = slots(&p.template)
                .map_err(|m| LexiconError::invalid(format!("{path}.template"), m))?;
            found.sort_unstable();
            let expected: Vec<usize> = (0..p.arity).collect();
            if found != expected {
                return Err(LexiconError::invalid(
                    format!("{path}.template"),
                    format!(
                        "template has {} slot(s) {:?} but arity {} needs each of {:?} exactly once",
                        found.len(),
                        found,
                        p.arity,
                        expected
                    ),
                ));
            }
            let blank: Vec<String> = vec![String::new(); p.arity];
            if p.render(&blank).trim().is_empty() {
                return Err(LexiconError::invalid(path, "template renders to empty text"));
            }
            if !seen.insert(p.template.as_str()) {
                return Err(LexiconError::invalid(path, "duplicate template"));
            }
        }
        if self.visual_details.is_empty() {
            return Err(LexiconError::invalid("visual_details", "at least one template required"));
        }
        for (i, t) in self.visual_details.iter().enumerate() {
            let names = named_slots(t);
            if names != BTreeSet::from(["fact".to_string()]) {
                return Err(LexiconError::invalid(
                    format!("visual_details[{i}]"),
                    "template must contain exactly the slot {fact}",
                ));
            }
        }
        if self.bridges.is_empty() {
            return Err(LexiconError::invalid("bridges", "at least one template required"));
        }
        for (i, t) in self.bridges.iter().enumerate() {
            let names = named_slots(t);
            if names != BTreeSet::from(["premise".to_string(), "conclusion".to_string()]) {
                return Err(LexiconError::invalid(
                    format!("bridges[{i}]"),
                    "template must contain exactly the slots {premise} and {conclusion}",
                ));
            }
        }
        Ok(())
    }

    pub fn predicates_of_arity(&self, arity: usize) -> impl Iterator<Item = &PredicateTemplate> {
        self.entries.predicate.iter().filter(move |p| p.arity == arity)
    }
}

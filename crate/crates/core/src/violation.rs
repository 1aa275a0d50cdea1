//! Structured validator output shared by every poset.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Clause tags. Tree-shape problems are clause 1 failures; family laws map
/// onto clauses 3, 4, 5 and 7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Clause {
    #[serde(rename = "c1")]
    C1,
    #[serde(rename = "c2")]
    C2,
    #[serde(rename = "c3")]
    C3,
    #[serde(rename = "c4")]
    C4,
    #[serde(rename = "c5")]
    C5,
    #[serde(rename = "c6")]
    C6,
    #[serde(rename = "c7")]
    C7,
    #[serde(rename = "e1")]
    E1,
    #[serde(rename = "e2")]
    E2,
    #[serde(rename = "e3")]
    E3,
    #[serde(rename = "e4")]
    E4,
    #[serde(rename = "e5")]
    E5,
    #[serde(rename = "club")]
    Club,
    #[serde(rename = "f1")]
    F1,
    #[serde(rename = "f2a")]
    F2a,
    #[serde(rename = "f2b")]
    F2b,
    #[serde(rename = "f2c")]
    F2c,
    #[serde(rename = "f3")]
    F3,
    #[serde(rename = "f4")]
    F4,
    #[serde(rename = "f-ext")]
    FExtends,
    #[serde(rename = "p-increasing")]
    PIncreasing,
    #[serde(rename = "p-capturing")]
    PCapturing,
    #[serde(rename = "p-ext")]
    PExtends,
    #[serde(rename = "ambient")]
    Ambient,
}

impl Clause {
    pub fn tag(self) -> &'static str {
        match self {
            Clause::C1 => "c1",
            Clause::C2 => "c2",
            Clause::C3 => "c3",
            Clause::C4 => "c4",
            Clause::C5 => "c5",
            Clause::C6 => "c6",
            Clause::C7 => "c7",
            Clause::E1 => "e1",
            Clause::E2 => "e2",
            Clause::E3 => "e3",
            Clause::E4 => "e4",
            Clause::E5 => "e5",
            Clause::Club => "club",
            Clause::F1 => "f1",
            Clause::F2a => "f2a",
            Clause::F2b => "f2b",
            Clause::F2c => "f2c",
            Clause::F3 => "f3",
            Clause::F4 => "f4",
            Clause::FExtends => "f-ext",
            Clause::PIncreasing => "p-increasing",
            Clause::PCapturing => "p-capturing",
            Clause::PExtends => "p-ext",
            Clause::Ambient => "ambient",
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One failed check: the clause, a short kebab-case kind, and witnesses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub clause: Clause,
    pub kind: String,
    pub witnesses: Vec<String>,
}

impl Violation {
    pub fn new(clause: Clause, kind: &str, witnesses: Vec<String>) -> Self {
        Violation {
            clause,
            kind: kind.to_string(),
            witnesses,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.clause, self.kind)?;
        if !self.witnesses.is_empty() {
            write!(f, " ({})", self.witnesses.join(", "))?;
        }
        Ok(())
    }
}

/// The distinct clause tags present in a violation list, sorted.
pub fn clause_tags(vs: &[Violation]) -> Vec<Clause> {
    let mut tags: Vec<Clause> = vs.iter().map(|v| v.clause).collect();
    tags.sort();
    tags.dedup();
    tags
}

/// Shorthand used by the validators for witness lists.
macro_rules! wit {
    ($($e:expr),* $(,)?) => { vec![$($e.to_string()),*] };
}
pub(crate) use wit;

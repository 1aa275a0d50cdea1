//! Run reports: one record per schedule step plus a summary of the final
//! condition, rendered as text or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use forcelab_core::format::{Codec, FormatError};
use forcelab_core::Violation;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    Violations,
    Error,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Violations,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violations | Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6_vacuous: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fiber: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub op: String,
    pub seed: u64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub violations: Vec<Violation>,
    #[serde(default)]
    pub checks: BTreeMap<String, bool>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_maps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lex_strict: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fiber: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq_len: Option<usize>,
    #[serde(default)]
    pub c6_vacuous_total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_condition: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub poset: String,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub summary: Summary,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopped_at: Option<usize>,
}

impl Codec for Report {
    const KIND: &'static str = "report";
    type Dto = Report;

    fn to_dto(&self) -> Report {
        self.clone()
    }

    fn from_dto(dto: Report) -> Result<Self, FormatError> {
        Ok(dto)
    }
}

fn outcome_word(o: Outcome) -> &'static str {
    match o {
        Outcome::Ok => "ok",
        Outcome::Violations => "violations",
        Outcome::Error => "error",
        Outcome::Skipped => "skipped",
    }
}

impl Report {
    pub fn to_structured(&self) -> String {
        forcelab_core::format::to_json(self)
    }

    pub fn to_human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "run: poset {}, seed {}, {} steps",
            self.poset,
            self.seed,
            self.steps.len()
        );
        for r in &self.steps {
            let _ = write!(s, "  step {:>2} {:<14} {}", r.step, r.op, outcome_word(r.outcome));
            let d = &r.diagnostics;
            for (k, v) in [
                ("height", d.height),
                ("domain", d.domain),
                ("c6-vacuous", d.c6_vacuous),
                ("max-fiber", d.max_fiber),
            ] {
                if let Some(v) = v {
                    let _ = write!(s, " {k}={v}");
                }
            }
            s.push('\n');
            if let Some(e) = &r.error {
                let _ = writeln!(s, "      error: {e}");
            }
            for v in &r.violations {
                let _ = writeln!(s, "      {v}");
            }
            for (name, ok) in r.checks.iter().filter(|(_, ok)| !**ok) {
                let _ = writeln!(s, "      check {name}: {}", if *ok { "pass" } else { "FAIL" });
            }
        }
        let m = &self.summary;
        let mut parts = Vec::new();
        let fields = [
            ("height", m.height),
            ("nodes", m.node_count),
            ("branches", m.branch_count),
            ("family maps", m.family_maps),
            ("phi pairs", m.phi_size),
            ("max fiber", m.max_fiber),
            ("sequence length", m.seq_len),
        ];
        for (k, v) in fields {
            if let Some(v) = v {
                parts.push(format!("{k} {v}"));
            }
        }
        parts.push(format!("c6-vacuous {}", m.c6_vacuous_total));
        if let Some(ok) = m.family_ok {
            parts.push(format!("family laws {}", if ok { "hold" } else { "FAIL" }));
        }
        if let Some(ok) = m.lex_strict {
            parts.push(format!("lex order {}", if ok { "strict" } else { "NOT strict" }));
        }
        let _ = writeln!(s, "summary: {}", parts.join(", "));
        let status = match self.status {
            Status::Ok => "ok".to_string(),
            Status::Violations => "violations".to_string(),
            Status::Error => format!("error at step {}", self.stopped_at.unwrap_or_default()),
        };
        let _ = writeln!(s, "status: {status}");
        s
    }
}

//! Scenarios: a starting condition and a schedule of dense goals and
//! tactics, executed left to right with per-step derived seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use forcelab_core::capture::CaptureSet;
use forcelab_core::format::{Codec, FormatError};
use forcelab_core::fposet::{
    f_add_pair, f_extends, f_limit_lower_bound, f_mirror_amalgamate, f_raise, validate_fcondition_with, FCheck,
    FCondition,
};
use forcelab_core::hposet::{
    add_branch_index, assemble_generic, club_block, extend_height, extends, limit_lower_bound, meets,
    validate_condition_report, DenseGoal, HError, Policy,
};
use forcelab_core::lextree::{lex_compare_branches, validate_family};
use forcelab_core::pposet::{p_add_branch, p_extends, p_lower_bound, validate_pcondition};
use forcelab_core::seed::derive_seed;
use forcelab_core::{Index, Violation};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::doc::{decode, resolve_ref, Document, FAmb, HCond, InputError, PAmb, PCond};
use crate::report::{Diagnostics, Outcome, Report, Status, StepRecord, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosetKind {
    H,
    F,
    P,
}

impl PosetKind {
    fn name(self) -> &'static str {
        match self {
            PosetKind::H => "h",
            PosetKind::F => "f",
            PosetKind::P => "p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Step {
    /// Meet a dense set; a no-op when the current condition already does.
    Goal(DenseGoal),
    ExtendHeight {
        height: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fanout: Option<usize>,
    },
    AddIndex {
        index: Index,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fanout: Option<usize>,
    },
    /// Lower bound of the run so far. `delta` is required for `f`,
    /// `residue` is optional for `p`.
    Limit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        residue: Option<Vec<Index>>,
    },
    AddPair {
        xi: Index,
        eta: Index,
    },
    Raise {
        height: usize,
    },
    /// Lower bound of the run together with its image under the
    /// permutation made of the listed transpositions.
    Mirror {
        delta: usize,
        swaps: Vec<(Index, Index)>,
    },
    AddBranch {
        index: Index,
    },
}

impl Step {
    pub fn name(&self) -> String {
        match self {
            Step::Goal(DenseGoal::HeightAbove(a)) => format!("height-above({a})"),
            Step::Goal(DenseGoal::IndexIn(x)) => format!("index-in({x})"),
            Step::ExtendHeight { height, .. } => format!("extend-height({height})"),
            Step::AddIndex { index, .. } => format!("add-index({index})"),
            Step::Limit { .. } => "limit".into(),
            Step::AddPair { xi, eta } => format!("add-pair({xi},{eta})"),
            Step::Raise { height } => format!("raise({height})"),
            Step::Mirror { delta, .. } => format!("mirror({delta})"),
            Step::AddBranch { index } => format!("add-branch({index})"),
        }
    }

    fn applies_to(&self, kind: PosetKind) -> bool {
        match self {
            Step::Goal(_) | Step::ExtendHeight { .. } | Step::AddIndex { .. } => kind == PosetKind::H,
            Step::Limit { delta, residue } => match kind {
                PosetKind::H => delta.is_none() && residue.is_none(),
                PosetKind::F => delta.is_some() && residue.is_none(),
                PosetKind::P => delta.is_none(),
            },
            Step::AddPair { .. } | Step::Raise { .. } | Step::Mirror { .. } => kind == PosetKind::F,
            Step::AddBranch { .. } => kind == PosetKind::P,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub poset: PosetKind,
    /// Path or inline ambient document; required for `f` and `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<Value>,
    /// Path or inline starting condition; defaults to the trivial one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Value>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub club: BTreeSet<Index>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fanout: Option<usize>,
    pub schedule: Vec<Step>,
    #[serde(default)]
    pub checks: Vec<String>,
}

impl Codec for Scenario {
    const KIND: &'static str = "scenario";
    type Dto = Scenario;

    fn to_dto(&self) -> Scenario {
        self.clone()
    }

    fn from_dto(dto: Scenario) -> Result<Self, FormatError> {
        Ok(dto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    ExtendsPrevious,
    FamilyLaws,
    LexOrder,
    FiberBound(usize),
}

impl Check {
    fn parse(s: &str) -> Option<Check> {
        match s {
            "extends-previous" => Some(Check::ExtendsPrevious),
            "family-laws" => Some(Check::FamilyLaws),
            "lex-order" => Some(Check::LexOrder),
            _ => s.strip_prefix("fiber-bound=")?.parse().ok().map(Check::FiberBound),
        }
    }

    fn applies_to(self, kind: PosetKind) -> bool {
        match self {
            Check::ExtendsPrevious => true,
            Check::FamilyLaws | Check::LexOrder => kind == PosetKind::H,
            Check::FiberBound(_) => kind == PosetKind::F,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub fallback_seed: Option<u64>,
    pub fanout: Option<usize>,
    pub max_height: Option<usize>,
    pub allow_closure: bool,
}

enum State {
    H(Vec<HCond>),
    F(FAmb, Vec<FCondition>),
    P(PAmb, Vec<PCond>),
}

/// A scenario whose references are resolved and whose steps and checks
/// fit its poset.
pub struct Prepared {
    scenario: Scenario,
    checks: Vec<(String, Check)>,
    state: State,
}

pub fn prepare(scn: Scenario, origin: &Path, opts: &RunOptions) -> Result<Prepared, InputError> {
    let dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
    let bad = |msg: String| InputError::Invalid(format!("{}: {msg}", origin.display()));
    if scn.schedule.is_empty() {
        return Err(bad("schedule is empty".into()));
    }
    if let Some((i, s)) = scn.schedule.iter().enumerate().find(|(_, s)| !s.applies_to(scn.poset)) {
        return Err(bad(format!("step {i} ({}) does not apply to poset {}", s.name(), scn.poset.name())));
    }
    let mut checks = Vec::new();
    for name in &scn.checks {
        match Check::parse(name) {
            Some(c) if c.applies_to(scn.poset) => checks.push((name.clone(), c)),
            _ => return Err(bad(format!("unknown check `{name}` for poset {}", scn.poset.name()))),
        }
    }
    let ambient = |v: &Option<Value>| -> Result<(Value, std::path::PathBuf), InputError> {
        let v = v.clone().ok_or_else(|| bad("missing `ambient`".into()))?;
        resolve_ref(v, &dir, origin)
    };
    let initial = scn
        .initial
        .clone()
        .map(|v| resolve_ref(v, &dir, origin))
        .transpose()?;
    let state = match scn.poset {
        PosetKind::H => {
            let start = match initial {
                Some((v, p)) => decode::<HCond>(v, &p)?,
                None => HCond::trivial(scn.club.clone()),
            };
            State::H(vec![start])
        }
        PosetKind::F => {
            let (v, p) = ambient(&scn.ambient)?;
            let amb: FAmb = decode(v, &p)?;
            let start = match initial {
                Some((v, p)) => decode::<FCondition>(v, &p)?,
                None => FCondition::identity(&amb.tree, BTreeSet::from([0])),
            };
            State::F(amb, vec![start])
        }
        PosetKind::P => {
            let (v, p) = ambient(&scn.ambient)?;
            let mut amb: PAmb = decode(v, &p)?;
            amb.allow_closure |= opts.allow_closure;
            let start = match initial {
                Some((v, p)) => decode::<PCond>(v, &p)?,
                None => PCond { seq: vec![] },
            };
            State::P(amb, vec![start])
        }
    };
    Ok(Prepared {
        scenario: scn,
        checks,
        state,
    })
}

fn seed_of(scn: &Scenario, opts: &RunOptions) -> u64 {
    opts.seed.or(scn.seed).or(opts.fallback_seed).unwrap_or(0)
}

/// Executes every step; stops at the first tactic error and marks the
/// remaining steps skipped.
pub fn execute(prep: Prepared, opts: &RunOptions) -> Report {
    let Prepared {
        scenario: scn,
        checks,
        mut state,
    } = prep;
    let seed = seed_of(&scn, opts);
    let fanout = opts.fanout.or(scn.fanout).unwrap_or(2);
    let mut steps = Vec::with_capacity(scn.schedule.len());
    let mut stopped_at = None;
    let mut c6_total = 0;

    for (i, step) in scn.schedule.iter().enumerate() {
        let step_seed = derive_seed(seed, i as u64);
        let mut rec = StepRecord {
            step: i,
            op: step.name(),
            seed: step_seed,
            outcome: Outcome::Ok,
            error: None,
            violations: vec![],
            checks: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
        };
        if stopped_at.is_some() {
            rec.outcome = Outcome::Skipped;
            steps.push(rec);
            continue;
        }
        match apply(&mut state, step, step_seed, fanout, opts.max_height) {
            Err(e) => {
                rec.outcome = Outcome::Error;
                rec.error = Some(e);
                stopped_at = Some(i);
            }
            Ok(()) => {
                inspect(&state, &checks, &mut rec);
                c6_total += rec.diagnostics.c6_vacuous.unwrap_or(0);
                if !rec.violations.is_empty() || rec.checks.values().any(|ok| !ok) {
                    rec.outcome = Outcome::Violations;
                }
            }
        }
        steps.push(rec);
    }

    let status = if stopped_at.is_some() {
        Status::Error
    } else if steps.iter().any(|r| r.outcome == Outcome::Violations) {
        Status::Violations
    } else {
        Status::Ok
    };
    let mut summary = summarize(&state);
    summary.c6_vacuous_total = c6_total;
    Report {
        poset: scn.poset.name().into(),
        seed,
        steps,
        summary,
        status,
        stopped_at,
    }
}

pub fn run_scenario(scn: Scenario, origin: &Path, opts: &RunOptions) -> Result<Report, InputError> {
    Ok(execute(prepare(scn, origin, opts)?, opts))
}

fn push<T: PartialEq>(history: &mut Vec<T>, next: T) {
    if history.last() != Some(&next) {
        history.push(next);
    }
}

/// Number of club blocks among the domain and `extra`; at least one.
fn blocks_with(p: &HCond, extra: Option<Index>) -> usize {
    let blocks: BTreeSet<usize> = p
        .branch_map
        .keys()
        .copied()
        .chain(extra)
        .map(|x| club_block(&p.club, x))
        .collect();
    blocks.len().max(1)
}

fn apply(state: &mut State, step: &Step, seed: u64, fanout: usize, max_height: Option<usize>) -> Result<(), String> {
    let policy = |f: Option<usize>| Policy {
        fanout: f.unwrap_or(fanout),
        seed,
    };
    let cap = |h: usize| match max_height {
        Some(m) if h > m => Err(format!("height {h} exceeds the maximum {m}")),
        _ => Ok(()),
    };
    match state {
        State::H(history) => {
            let cur = history.last().expect("nonempty").clone();
            let next = match step {
                Step::Goal(g) if meets(&cur, *g) => Ok(cur),
                Step::Goal(DenseGoal::HeightAbove(a)) => {
                    cap(a + 1)?;
                    let least = blocks_with(&cur, None);
                    extend_height(&cur, a + 1, Policy { fanout: least, seed })
                }
                Step::Goal(DenseGoal::IndexIn(xi)) => {
                    cap(cur.alpha + 1)?;
                    let least = blocks_with(&cur, Some(*xi));
                    match add_branch_index(&cur, *xi, Policy { fanout: least, seed }) {
                        Err(HError::NoRouting(_)) => add_branch_index(&cur, *xi, Policy { fanout: least + 1, seed }),
                        r => r,
                    }
                }
                Step::ExtendHeight { height, fanout } => {
                    cap(*height)?;
                    extend_height(&cur, *height, policy(*fanout))
                }
                Step::AddIndex { index, fanout } => {
                    cap(cur.alpha + 1)?;
                    add_branch_index(&cur, *index, policy(*fanout))
                }
                Step::Limit { .. } => {
                    cap(cur.alpha + 1)?;
                    limit_lower_bound(history)
                }
                _ => unreachable!("checked by prepare"),
            }
            .map_err(|e| e.to_string())?;
            push(history, next);
        }
        State::F(amb, history) => {
            let cur = history.last().expect("nonempty");
            let next = match step {
                Step::AddPair { xi, eta } => f_add_pair(amb, cur, *xi, *eta),
                Step::Raise { height } => f_raise(amb, cur, *height),
                Step::Limit { delta: Some(d), .. } => f_limit_lower_bound(amb, history, *d),
                Step::Mirror { delta, swaps } => {
                    let mut h = BTreeMap::new();
                    for &(a, b) in swaps {
                        h.insert(a, b);
                        h.insert(b, a);
                    }
                    f_mirror_amalgamate(amb, history, &h, *delta)
                }
                _ => unreachable!("checked by prepare"),
            }
            .map_err(|e| e.to_string())?;
            push(history, next);
        }
        State::P(amb, history) => {
            let cur = history.last().expect("nonempty");
            let next = match step {
                Step::AddBranch { index } => p_add_branch(amb, cur, *index).map_err(|v| {
                    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
                })?,
                Step::Limit { residue, .. } => {
                    let r = residue
                        .as_ref()
                        .map(|idx| -> Result<CaptureSet<_>, String> {
                            let bs = idx
                                .iter()
                                .map(|i| amb.branches.get(i).cloned().ok_or(format!("unknown index {i}")))
                                .collect::<Result<Vec<_>, _>>()?;
                            Ok(CaptureSet::from_branches(bs))
                        })
                        .transpose()?;
                    p_lower_bound(amb, history, r.as_ref()).map_err(|e| e.to_string())?
                }
                _ => unreachable!("checked by prepare"),
            };
            push(history, next);
        }
    }
    Ok(())
}

fn lex_strict(history: &[HCond]) -> bool {
    let Ok(g) = assemble_generic(history) else { return false };
    let bs: Vec<_> = g.branches.values().collect();
    let mut sorted = bs.clone();
    sorted.sort_by(|a, b| lex_compare_branches(&g.tree, a, b).expect("branches of the tree"));
    sorted
        .windows(2)
        .all(|w| lex_compare_branches(&g.tree, w[0], w[1]) == Ok(std::cmp::Ordering::Less))
}

fn inspect(state: &State, checks: &[(String, Check)], rec: &mut StepRecord) {
    let mut violations: Vec<Violation> = Vec::new();
    match state {
        State::H(history) => {
            let cur = history.last().expect("nonempty");
            let v = validate_condition_report(cur);
            violations.extend(v.violations);
            rec.diagnostics = Diagnostics {
                height: Some(cur.alpha),
                domain: Some(cur.branch_map.len()),
                c6_vacuous: Some(v.c6_vacuous),
                max_fiber: None,
            };
            for (name, c) in checks {
                let ok = match c {
                    Check::ExtendsPrevious => {
                        let e = history
                            .len()
                            .checked_sub(2)
                            .map(|i| extends(cur, &history[i]))
                            .unwrap_or_default();
                        let ok = e.is_empty();
                        violations.extend(e);
                        ok
                    }
                    Check::FamilyLaws => validate_family(&cur.tree, &cur.family).is_empty(),
                    Check::LexOrder => lex_strict(history),
                    Check::FiberBound(_) => true,
                };
                rec.checks.insert(name.clone(), ok);
            }
        }
        State::F(amb, history) => {
            let cur = history.last().expect("nonempty");
            let bound = checks.iter().find_map(|(_, c)| match c {
                Check::FiberBound(k) => Some(*k),
                _ => None,
            });
            let v = validate_fcondition_with(amb, cur, FCheck { fiber_bound: bound });
            violations.extend(v.violations.iter().cloned());
            rec.diagnostics = Diagnostics {
                height: cur.alpha(),
                domain: Some(cur.phi.len()),
                c6_vacuous: None,
                max_fiber: Some(v.max_fiber),
            };
            for (name, c) in checks {
                let ok = match c {
                    Check::ExtendsPrevious => {
                        let e = history
                            .len()
                            .checked_sub(2)
                            .map(|i| f_extends(cur, &history[i]))
                            .unwrap_or_default();
                        let ok = e.is_empty();
                        violations.extend(e);
                        ok
                    }
                    Check::FiberBound(_) => !v.violations.iter().any(|x| x.kind == "fiber-exceeds"),
                    _ => true,
                };
                rec.checks.insert(name.clone(), ok);
            }
        }
        State::P(amb, history) => {
            let cur = history.last().expect("nonempty");
            violations.extend(validate_pcondition(amb, cur));
            rec.diagnostics = Diagnostics {
                height: Some(cur.alpha()),
                domain: cur.top().map(|z| z.branches.len()),
                c6_vacuous: None,
                max_fiber: None,
            };
            for (name, c) in checks {
                if let Check::ExtendsPrevious = c {
                    let e = history
                        .len()
                        .checked_sub(2)
                        .map(|i| p_extends(cur, &history[i]))
                        .unwrap_or_default();
                    rec.checks.insert(name.clone(), e.is_empty());
                    violations.extend(e);
                }
            }
        }
    }
    violations.sort();
    violations.dedup();
    rec.violations = violations;
}

fn summarize(state: &State) -> Summary {
    match state {
        State::H(history) => {
            let cur = history.last().expect("nonempty");
            let mut s = Summary {
                height: Some(cur.alpha),
                node_count: Some(cur.tree.node_count()),
                final_condition: Some(Document::H(cur.clone()).to_value()),
                ..Summary::default()
            };
            if let Ok(g) = assemble_generic(history) {
                s.branch_count = Some(g.branches.len());
                s.family_maps = Some(g.family.len());
                s.family_ok = Some(validate_family(&g.tree, &g.family).is_empty());
                s.lex_strict = Some(lex_strict(history));
            }
            s
        }
        State::F(amb, history) => {
            let cur = history.last().expect("nonempty");
            Summary {
                height: cur.alpha(),
                node_count: Some(cur.f.len()),
                phi_size: Some(cur.phi.len()),
                max_fiber: Some(validate_fcondition_with(amb, cur, FCheck::default()).max_fiber),
                final_condition: Some(Document::F(amb.clone(), cur.clone()).to_value()),
                ..Summary::default()
            }
        }
        State::P(amb, history) => {
            let cur = history.last().expect("nonempty");
            Summary {
                seq_len: Some(cur.seq.len()),
                branch_count: cur.top().map(|z| z.branches.len()),
                final_condition: Some(Document::P(amb.clone(), cur.clone()).to_value()),
                ..Summary::default()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_use_kebab_case_tags() {
        let s: Step = serde_json::from_str(r#"{"op":"goal","goal":"height-above","arg":3}"#).unwrap();
        assert_eq!(s, Step::Goal(DenseGoal::HeightAbove(3)));
        let s: Step = serde_json::from_str(r#"{"op":"add-pair","xi":1,"eta":2}"#).unwrap();
        assert_eq!(s, Step::AddPair { xi: 1, eta: 2 });
        assert_eq!(serde_json::from_str::<Step>(&serde_json::to_string(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn checks_parse() {
        assert_eq!(Check::parse("fiber-bound=3"), Some(Check::FiberBound(3)));
        assert_eq!(Check::parse("fiber-bound=x"), None);
        assert_eq!(Check::parse("nope"), None);
    }

    #[test]
    fn mismatched_step_is_an_input_error() {
        let scn = Scenario {
            poset: PosetKind::H,
            ambient: None,
            initial: None,
            club: BTreeSet::new(),
            seed: None,
            fanout: None,
            schedule: vec![Step::AddPair { xi: 1, eta: 1 }],
            checks: vec![],
        };
        assert!(prepare(scn, Path::new("s.json"), &RunOptions::default()).is_err());
    }
}

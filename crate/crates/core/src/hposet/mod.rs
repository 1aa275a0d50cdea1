//! The Kurepa-tree poset: conditions `(T, b, Pi)` with an explicit club
//! parameter, their validator, the extension relation, dense goals and the
//! constructions in [`tactics`] and [`delta`].

mod delta;
pub mod mutate;
mod tactics;

pub use delta::{delta_system, DeltaSystem};
pub use tactics::{
    add_branch_index, amalgamate, assemble_generic, extend_height, limit_lower_bound, GenericTree,
    HError, Policy,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{Index, NodeId};
use crate::lextree::{validate_family, validate_tree, IsoFamily, LexTree};
use crate::scalar::Scalar;
use crate::violation::{wit, Clause, Violation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HCondition<Q> {
    pub alpha: usize,
    pub tree: LexTree<Q>,
    pub branch_map: BTreeMap<Index, NodeId>,
    pub family: IsoFamily,
    pub club: BTreeSet<Index>,
}

impl<Q: Scalar> HCondition<Q> {
    /// Height 0, one root, nothing indexed.
    pub fn trivial(club: BTreeSet<Index>) -> Self {
        HCondition {
            alpha: 0,
            tree: LexTree::single_root(Q::zero()),
            branch_map: BTreeMap::new(),
            family: IsoFamily::empty(0),
            club,
        }
    }

    pub fn domain(&self) -> BTreeSet<Index> {
        self.branch_map.keys().copied().collect()
    }

    pub fn block(&self, xi: Index) -> usize {
        club_block(&self.club, xi)
    }
}

/// Number of club points at or below `xi`. Two indices sit on the same side
/// of every club point iff their blocks are equal.
pub fn club_block(club: &BTreeSet<Index>, xi: Index) -> usize {
    club.range(..=xi).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "goal", content = "arg", rename_all = "kebab-case")]
pub enum DenseGoal {
    HeightAbove(usize),
    IndexIn(Index),
}

pub fn meets<Q: Scalar>(q: &HCondition<Q>, g: DenseGoal) -> bool {
    match g {
        DenseGoal::HeightAbove(a) => q.alpha > a,
        DenseGoal::IndexIn(xi) => q.branch_map.contains_key(&xi),
    }
}

/// Violations plus the number of club checks skipped because the image of
/// an indexed node is not itself indexed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HValidation {
    pub violations: Vec<Violation>,
    pub c6_vacuous: usize,
}

impl HValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_condition<Q: Scalar>(q: &HCondition<Q>) -> Vec<Violation> {
    validate_condition_report(q).violations
}

pub fn validate_condition_report<Q: Scalar>(q: &HCondition<Q>) -> HValidation {
    let mut out = validate_tree(&q.tree);
    let t = &q.tree;
    if t.num_levels() != q.alpha + 1 {
        out.push(Violation::new(Clause::C1, "height-mismatch", wit![q.alpha, t.height()]));
    }
    for h in 0..t.height() {
        for n in &t.levels()[h] {
            if t.children(n.id).is_empty() {
                out.push(Violation::new(Clause::C1, "leaf-below-top", wit![n.id]));
            }
        }
    }

    let mut owner: BTreeMap<NodeId, Index> = BTreeMap::new();
    for (&xi, &n) in &q.branch_map {
        if t.level_of(n) != Some(q.alpha) {
            out.push(Violation::new(Clause::C2, "not-top-level", wit![xi, n]));
        }
        if let Some(eta) = owner.insert(n, xi) {
            out.push(Violation::new(Clause::C2, "not-injective", wit![eta, xi, n]));
        }
    }

    if q.family.bound != q.alpha {
        out.push(Violation::new(Clause::C3, "bound-mismatch", wit![q.family.bound, q.alpha]));
    }
    out.extend(validate_family(t, &q.family));

    let mut vacuous = 0;
    for (&xi, &bx) in &q.branch_map {
        for h in 0..q.alpha.min(t.height()) {
            let Some(a) = t.ancestor_at(bx, h) else { continue };
            for s in &t.levels()[h] {
                let Some(img) = q.family.get(a, s.id).and_then(|m| m.get(bx)) else {
                    continue;
                };
                match owner.get(&img) {
                    None => vacuous += 1,
                    Some(&eta) => {
                        if let Some(c) = separating_point(&q.club, xi, eta) {
                            out.push(Violation::new(
                                Clause::C6,
                                "club-violation",
                                wit![a, s.id, xi, eta, c],
                            ));
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    HValidation {
        violations: out,
        c6_vacuous: vacuous,
    }
}

/// The least club point with exactly one of `xi`, `eta` below it.
fn separating_point(club: &BTreeSet<Index>, xi: Index, eta: Index) -> Option<Index> {
    let (lo, hi) = (xi.min(eta), xi.max(eta));
    if lo == hi {
        return None;
    }
    club.range(lo + 1..=hi).next().copied()
}

/// The extension clauses for `q <= p`. Inputs are not validated first.
pub fn extends<Q: Scalar>(q: &HCondition<Q>, p: &HCondition<Q>) -> Vec<Violation> {
    let mut out = Vec::new();
    if q.alpha < p.alpha || p.tree.num_levels() != p.alpha + 1 || !q.tree.agrees_upto(&p.tree, p.alpha) {
        out.push(Violation::new(Clause::E1, "tree-not-initial", wit![p.alpha]));
    }
    if q.club != p.club {
        out.push(Violation::new(Clause::Club, "club-changed", vec![]));
    }
    for (&xi, &bp) in &p.branch_map {
        match q.branch_map.get(&xi) {
            None => out.push(Violation::new(Clause::E2, "index-dropped", wit![xi])),
            Some(&bq) if !q.tree.is_le(bp, bq) => {
                out.push(Violation::new(Clause::E3, "not-above", wit![xi, bp, bq]))
            }
            Some(_) => {}
        }
    }
    for (&(a, b), pm) in &p.family.maps {
        let Some(qm) = q.family.get(a, b) else {
            out.push(Violation::new(Clause::E4, "map-missing", wit![a, b]));
            continue;
        };
        let changed = pm.pairs().iter().find(|&&(x, y)| qm.get(x) != Some(y)).map(|p| p.0).or_else(|| {
            qm.pairs()
                .iter()
                .find(|&&(x, _)| p.tree.contains(x) && pm.get(x).is_none())
                .map(|p| p.0)
        });
        if let Some(x) = changed {
            out.push(Violation::new(Clause::E4, "map-changed", wit![a, b, x]));
        }
    }

    let owner: BTreeMap<NodeId, Index> = p.branch_map.iter().map(|(&k, &v)| (v, k)).collect();
    let t = &p.tree;
    for (&xi, &bx) in &p.branch_map {
        for h in 0..p.alpha.min(t.height()) {
            let Some(a) = t.ancestor_at(bx, h) else { continue };
            for s in &t.levels()[h] {
                let Some(img) = p.family.get(a, s.id).and_then(|m| m.get(bx)) else {
                    continue;
                };
                // Self links through identity maps are e3's business.
                let Some(&eta) = owner.get(&img).filter(|&&e| e != xi) else { continue };
                let (Some(&qx), Some(&qe)) = (q.branch_map.get(&xi), q.branch_map.get(&eta)) else {
                    continue;
                };
                if q.family.get(a, s.id).and_then(|m| m.get(qx)) != Some(qe) {
                    out.push(Violation::new(Clause::E5, "link-broken", wit![a, s.id, xi, eta]));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

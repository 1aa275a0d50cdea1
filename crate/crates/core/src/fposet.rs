//! The embedding poset over an ambient tree with indexed branches:
//! conditions `(A, f, phi)`, their validator, extension, the limit lower
//! bound and its mirrored variant.
//!
//! On a finite tree a level-, parent- and lex-preserving bijection of
//! `T↾A` onto itself is the identity, so valid conditions always carry the
//! identity on `T↾A`; clause f4 then says that `xi` and `phi(xi)` pass
//! through the same node at the top height.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ids::{Index, NodeId};
use crate::lextree::{lex_compare_branches, validate_family, validate_tree, Branch, IsoFamily, LexTree};
use crate::scalar::Scalar;
use crate::violation::{wit, Clause, Violation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FAmbient<Q> {
    pub tree: LexTree<Q>,
    pub branches: BTreeMap<Index, Branch>,
    pub family: IsoFamily,
    pub x: BTreeSet<Index>,
    pub y: BTreeSet<Index>,
}

impl<Q: Scalar> FAmbient<Q> {
    /// Every branch of `tree` indexed by `indices` in lex order, with the
    /// full canonical family.
    pub fn over_all_branches(
        tree: LexTree<Q>,
        indices: &[Index],
        x: BTreeSet<Index>,
        y: BTreeSet<Index>,
    ) -> Result<Self, crate::lextree::LexTreeError> {
        let family = IsoFamily::canonical(&tree, tree.num_levels())?;
        let branches = indices.iter().copied().zip(tree.branches()).collect();
        Ok(FAmbient { tree, branches, family, x, y })
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = validate_tree(&self.tree);
        out.extend(validate_family(&self.tree, &self.family));
        if self.family.bound != self.tree.num_levels() {
            out.push(Violation::new(Clause::Ambient, "bound-mismatch", wit![self.family.bound]));
        }
        for (xi, b) in &self.branches {
            if !b.is_branch_of(&self.tree) {
                out.push(Violation::new(Clause::Ambient, "foreign-branch", wit![xi]));
            }
        }
        for xi in self.x.iter().chain(&self.y) {
            if !self.branches.contains_key(xi) {
                out.push(Violation::new(Clause::Ambient, "unknown-index", wit![xi]));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn node(&self, xi: Index, h: usize) -> Option<NodeId> {
        self.branches.get(&xi).and_then(|b| b.at(h))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FCondition {
    pub a: BTreeSet<usize>,
    pub f: BTreeMap<NodeId, NodeId>,
    pub phi: BTreeMap<Index, Index>,
}

impl FCondition {
    /// The identity on `T↾A` with an empty `phi`.
    pub fn identity<Q: Scalar>(tree: &LexTree<Q>, a: BTreeSet<usize>) -> Self {
        let f = a
            .iter()
            .filter(|&&h| h < tree.num_levels())
            .flat_map(|&h| tree.levels()[h].iter().map(|n| (n.id, n.id)))
            .collect();
        FCondition {
            a,
            f,
            phi: BTreeMap::new(),
        }
    }

    pub fn alpha(&self) -> Option<usize> {
        self.a.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FCheck {
    /// Largest allowed number of indexed branches through one top node.
    pub fiber_bound: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FValidation {
    pub violations: Vec<Violation>,
    pub max_fiber: usize,
}

pub fn validate_fcondition<Q: Scalar>(amb: &FAmbient<Q>, p: &FCondition) -> Vec<Violation> {
    validate_fcondition_with(amb, p, FCheck::default()).violations
}

pub fn validate_fcondition_with<Q: Scalar>(amb: &FAmbient<Q>, p: &FCondition, check: FCheck) -> FValidation {
    let t = &amb.tree;
    let mut out = Vec::new();
    let Some(alpha) = p.alpha() else {
        out.push(Violation::new(Clause::F1, "empty-heights", vec![]));
        return FValidation { violations: out, max_fiber: 0 };
    };
    if alpha >= t.num_levels() {
        out.push(Violation::new(Clause::F1, "height-out-of-range", wit![alpha]));
        return FValidation { violations: out, max_fiber: 0 };
    }
    check_f1(t, p, &mut out);

    let mut phi_inv: BTreeMap<Index, Index> = BTreeMap::new();
    for (&xi, &eta) in &p.phi {
        if !amb.branches.contains_key(&xi) || !amb.branches.contains_key(&eta) {
            out.push(Violation::new(Clause::F2a, "unknown-index", wit![xi, eta]));
            continue;
        }
        if amb.x.contains(&xi) != amb.y.contains(&eta) {
            out.push(Violation::new(Clause::F2a, "parity", wit![xi, eta]));
        }
        if let Some(prev) = phi_inv.insert(eta, xi) {
            out.push(Violation::new(Clause::F2c, "not-injective", wit![prev, xi, eta]));
        }
        if !amb.x.contains(&xi) && alpha + 1 < t.num_levels() {
            check_f2b(amb, alpha, xi, eta, &mut out);
        }
        if p.f.get(&amb.node(xi, alpha).expect("indexed")) != amb.node(eta, alpha).as_ref() {
            out.push(Violation::new(Clause::F4, "top-mismatch", wit![xi, eta]));
        }
    }

    let known: Vec<(Index, Index)> = p
        .phi
        .iter()
        .map(|(&a, &b)| (a, b))
        .filter(|(a, b)| amb.branches.contains_key(a) && amb.branches.contains_key(b))
        .collect();
    for (i, &(a, fa)) in known.iter().enumerate() {
        for &(b, fb) in &known[i + 1..] {
            let before = lex_compare_branches(t, &amb.branches[&a], &amb.branches[&b]).expect("same tree");
            let after = lex_compare_branches(t, &amb.branches[&fa], &amb.branches[&fb]).expect("same tree");
            if before != after && before != Ordering::Equal {
                out.push(Violation::new(Clause::F2c, "order-violation", wit![a, b]));
            }
        }
    }

    let mut fibers: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &(xi, _) in &known {
        *fibers.entry(amb.node(xi, alpha).expect("indexed")).or_default() += 1;
    }
    let max_fiber = fibers.values().copied().max().unwrap_or(0);
    if let Some(bound) = check.fiber_bound {
        for (n, &k) in &fibers {
            if k > bound {
                out.push(Violation::new(Clause::F3, "fiber-exceeds", wit![n, k]));
            }
        }
    }
    out.sort();
    out.dedup();
    FValidation {
        violations: out,
        max_fiber,
    }
}

fn check_f1<Q: Scalar>(t: &LexTree<Q>, p: &FCondition, out: &mut Vec<Violation>) {
    let nodes: BTreeSet<NodeId> = p
        .a
        .iter()
        .flat_map(|&h| t.levels()[h].iter().map(|n| n.id))
        .collect();
    let dom: BTreeSet<NodeId> = p.f.keys().copied().collect();
    if let Some(x) = nodes.symmetric_difference(&dom).next() {
        out.push(Violation::new(Clause::F1, "domain-mismatch", wit![x]));
        return;
    }
    let ran: BTreeSet<NodeId> = p.f.values().copied().collect();
    if ran != nodes {
        out.push(Violation::new(Clause::F1, "not-bijective", vec![]));
        return;
    }
    let heights: Vec<usize> = p.a.iter().copied().collect();
    for (i, &h) in heights.iter().enumerate() {
        let level = t.level_lex(h);
        for &x in &level {
            let y = p.f[&x];
            if t.level_of(y) != Some(h) {
                out.push(Violation::new(Clause::F1, "level-violation", wit![x, y]));
                return;
            }
            if i > 0 {
                let lo = heights[i - 1];
                let (px, py) = (t.ancestor_at(x, lo).expect("ancestor"), t.ancestor_at(y, lo).expect("ancestor"));
                if p.f[&px] != py {
                    out.push(Violation::new(Clause::F1, "parent-violation", wit![x, y]));
                }
            }
        }
        let ranks: Vec<usize> = level.iter().map(|x| t.lex_rank(p.f[x]).expect("node")).collect();
        if ranks.windows(2).any(|w| w[0] >= w[1]) {
            out.push(Violation::new(Clause::F1, "lex-violation", wit![h]));
        }
    }
}

fn check_f2b<Q: Scalar>(amb: &FAmbient<Q>, alpha: usize, xi: Index, eta: Index, out: &mut Vec<Violation>) {
    let (bx, be) = (&amb.branches[&xi], &amb.branches[&eta]);
    let (t, s) = (bx.nodes[alpha + 1], be.nodes[alpha + 1]);
    let Some(m) = amb.family.get(t, s) else {
        out.push(Violation::new(Clause::F2b, "missing-pair", wit![xi, t, s]));
        return;
    };
    if let Some(h) = (alpha + 1..bx.len()).find(|&h| m.get(bx.nodes[h]) != Some(be.nodes[h])) {
        out.push(Violation::new(Clause::F2b, "not-image", wit![xi, eta, h]));
    }
}

/// `f_p ⊆ f_q` and `phi_p ⊆ phi_q` as graphs.
pub fn f_extends(q: &FCondition, p: &FCondition) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Some((x, _)) = p.f.iter().find(|(x, y)| q.f.get(x) != Some(y)) {
        out.push(Violation::new(Clause::FExtends, "f-not-superset", wit![x]));
    }
    if let Some((xi, _)) = p.phi.iter().find(|(xi, eta)| q.phi.get(xi) != Some(eta)) {
        out.push(Violation::new(Clause::FExtends, "phi-not-superset", wit![xi]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FError {
    #[error("empty chain")]
    EmptyChain,
    #[error("chain member {0} does not extend its predecessor")]
    NotDescending(usize, Vec<Violation>),
    #[error("level {delta} is not above height {alpha}")]
    DeltaNotAbove { delta: usize, alpha: usize },
    #[error("level {0} is outside the tree")]
    DeltaOutOfRange(usize),
    #[error("not-in-S: node {0} lies on no indexed branch")]
    NotInS(NodeId),
    #[error("union of the index maps is not injective at {0}")]
    PhiNotInjective(Index),
    #[error("mirror is not a permutation of its support")]
    BadMirror,
    #[error("mirror moves index {0}, which both sides use")]
    MirrorMovesShared(Index),
    #[error("mirror changes X or Y membership of {0}")]
    MirrorParity(Index),
    #[error("branches of {0} and its mirror image differ below the limit level")]
    MirrorDisagrees(Index),
    #[error("condition would be invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("index {0} is not an indexed branch")]
    UnknownIndex(Index),
}

fn check_chain(chain: &[FCondition]) -> Result<(), FError> {
    if chain.is_empty() {
        return Err(FError::EmptyChain);
    }
    for i in 1..chain.len() {
        let v = f_extends(&chain[i], &chain[i - 1]);
        if !v.is_empty() {
            return Err(FError::NotDescending(i, v));
        }
    }
    Ok(())
}

fn insert_pair(phi: &mut BTreeMap<Index, Index>, inv: &mut BTreeMap<Index, Index>, xi: Index, eta: Index) -> Result<(), FError> {
    if phi.get(&xi).is_some_and(|&e| e != eta) {
        return Err(FError::PhiNotInjective(xi));
    }
    if inv.get(&eta).is_some_and(|&x| x != xi) {
        return Err(FError::PhiNotInjective(eta));
    }
    phi.insert(xi, eta);
    inv.insert(eta, xi);
    Ok(())
}

/// The union of the chain plus level `delta`; `f` at `delta` sends
/// `b_xi(delta)` to `b_phi(xi)(delta)` and fixes nodes no pair reaches.
fn bound_over<Q: Scalar>(
    amb: &FAmbient<Q>,
    chain: &[FCondition],
    phi: BTreeMap<Index, Index>,
    delta: usize,
) -> Result<FCondition, FError> {
    let t = &amb.tree;
    if delta >= t.num_levels() {
        return Err(FError::DeltaOutOfRange(delta));
    }
    for p in chain {
        if let Some(alpha) = p.alpha().filter(|&a| a >= delta) {
            return Err(FError::DeltaNotAbove { delta, alpha });
        }
    }
    let covered: BTreeSet<NodeId> = amb.branches.values().filter_map(|b| b.at(delta)).collect();
    if let Some(n) = t.levels()[delta].iter().find(|n| !covered.contains(&n.id)) {
        return Err(FError::NotInS(n.id));
    }
    let mut out = FCondition::default();
    for p in chain {
        out.a.extend(&p.a);
        out.f.extend(&p.f);
    }
    out.a.insert(delta);
    for n in &t.levels()[delta] {
        out.f.insert(n.id, n.id);
    }
    for (&xi, &eta) in &phi {
        let (Some(x), Some(y)) = (amb.node(xi, delta), amb.node(eta, delta)) else {
            return Err(FError::UnknownIndex(if amb.node(xi, delta).is_none() { xi } else { eta }));
        };
        out.f.insert(x, y);
    }
    out.phi = phi;
    let v = validate_fcondition(amb, &out);
    if v.is_empty() {
        Ok(out)
    } else {
        Err(FError::Invalid(v))
    }
}

pub fn f_limit_lower_bound<Q: Scalar>(amb: &FAmbient<Q>, chain: &[FCondition], delta: usize) -> Result<FCondition, FError> {
    check_chain(chain)?;
    let (mut phi, mut inv) = (BTreeMap::new(), BTreeMap::new());
    for p in chain {
        for (&xi, &eta) in &p.phi {
            insert_pair(&mut phi, &mut inv, xi, eta)?;
        }
    }
    bound_over(amb, chain, phi, delta)
}

fn apply(h: &BTreeMap<Index, Index>, xi: Index) -> Index {
    h.get(&xi).copied().unwrap_or(xi)
}

/// The chain member with every pair `(xi, eta)` replaced by `(h xi, h eta)`.
pub fn mirror(p: &FCondition, h: &BTreeMap<Index, Index>) -> FCondition {
    FCondition {
        a: p.a.clone(),
        f: p.f.clone(),
        phi: p.phi.iter().map(|(&x, &e)| (apply(h, x), apply(h, e))).collect(),
    }
}

/// Lower bound for the chain together with its image under the index
/// permutation `h`.
pub fn f_mirror_amalgamate<Q: Scalar>(
    amb: &FAmbient<Q>,
    chain: &[FCondition],
    h: &BTreeMap<Index, Index>,
    delta: usize,
) -> Result<FCondition, FError> {
    check_chain(chain)?;
    let support: BTreeSet<Index> = h.keys().copied().collect();
    let image: BTreeSet<Index> = h.values().copied().collect();
    if support != image || image.len() != h.len() {
        return Err(FError::BadMirror);
    }
    let used: BTreeSet<Index> = chain.iter().flat_map(|p| p.phi.iter().flat_map(|(&a, &b)| [a, b])).collect();
    for &xi in &used {
        let m = apply(h, xi);
        if m == xi {
            continue;
        }
        if used.contains(&m) {
            return Err(FError::MirrorMovesShared(xi));
        }
        if amb.x.contains(&xi) != amb.x.contains(&m) || amb.y.contains(&xi) != amb.y.contains(&m) {
            return Err(FError::MirrorParity(xi));
        }
        let (Some(a), Some(b)) = (amb.branches.get(&xi), amb.branches.get(&m)) else {
            return Err(FError::UnknownIndex(m));
        };
        if a.nodes.get(..=delta) != b.nodes.get(..=delta) {
            return Err(FError::MirrorDisagrees(xi));
        }
    }
    let (mut phi, mut inv) = (BTreeMap::new(), BTreeMap::new());
    for p in chain {
        for (&xi, &eta) in p.phi.iter().chain(&mirror(p, h).phi) {
            insert_pair(&mut phi, &mut inv, xi, eta)?;
        }
    }
    bound_over(amb, chain, phi, delta)
}

/// Adds the pair `(xi, eta)`; fails when the result is not a condition.
pub fn f_add_pair<Q: Scalar>(amb: &FAmbient<Q>, p: &FCondition, xi: Index, eta: Index) -> Result<FCondition, FError> {
    let mut q = p.clone();
    let mut inv: BTreeMap<Index, Index> = q.phi.iter().map(|(&a, &b)| (b, a)).collect();
    insert_pair(&mut q.phi, &mut inv, xi, eta)?;
    let v = validate_fcondition(amb, &q);
    if v.is_empty() {
        Ok(q)
    } else {
        Err(FError::Invalid(v))
    }
}

/// Adds height `h` (above the current top) with the identity on its level.
pub fn f_raise<Q: Scalar>(amb: &FAmbient<Q>, p: &FCondition, h: usize) -> Result<FCondition, FError> {
    if let Some(alpha) = p.alpha().filter(|&a| a >= h) {
        return Err(FError::DeltaNotAbove { delta: h, alpha });
    }
    if h >= amb.tree.num_levels() {
        return Err(FError::DeltaOutOfRange(h));
    }
    let mut q = p.clone();
    q.a.insert(h);
    for n in &amb.tree.levels()[h] {
        q.f.insert(n.id, n.id);
    }
    let v = validate_fcondition(amb, &q);
    if v.is_empty() {
        Ok(q)
    } else {
        Err(FError::Invalid(v))
    }
}

pub mod mutate {
    //! A known-valid condition and one mutation per checked clause.

    use super::*;
    use crate::lextree::Shape;

    /// Binary tree with levels 0..=3, branch `i` indexed by `i` in lex order.
    /// `X = {0,1,2,3}`, `Y = {0,1,2,5}`.
    pub fn ambient<Q: Scalar>() -> FAmbient<Q> {
        fn full<Q: Scalar>(h: usize, label: usize) -> Shape<Q> {
            Shape(
                Q::from_index(label),
                if h == 0 { vec![] } else { vec![full(h - 1, 0), full(h - 1, 1)] },
            )
        }
        let tree = LexTree::from_spec(&[full(3, 0)]);
        let idx: Vec<Index> = (0..8).collect();
        FAmbient::over_all_branches(tree, &idx, BTreeSet::from([0, 1, 2, 3]), BTreeSet::from([0, 1, 2, 5]))
            .expect("homogeneous")
    }

    /// Heights {0, 1} with `phi = {0 -> 1}`.
    pub fn base<Q: Scalar>(amb: &FAmbient<Q>) -> FCondition {
        let mut p = FCondition::identity(&amb.tree, BTreeSet::from([0, 1]));
        p.phi.insert(0, 1);
        p
    }

    pub const CHECK: FCheck = FCheck { fiber_bound: Some(2) };

    pub fn mutations<Q: Scalar>(amb: &FAmbient<Q>) -> Vec<(Clause, FCondition)> {
        let p = base(amb);
        let with = |pairs: &[(Index, Index)]| {
            let mut m = p.clone();
            m.phi.extend(pairs.iter().copied());
            m
        };
        let mut f1 = p.clone();
        f1.f.remove(&amb.tree.roots()[0]);
        vec![
            (Clause::F1, f1),
            (Clause::F2a, with(&[(2, 3)])),
            (Clause::F2b, with(&[(6, 7)])),
            (Clause::F2c, with(&[(1, 0)])),
            (Clause::F3, with(&[(4, 4), (6, 6), (7, 7)])),
            (Clause::F4, with(&[(2, 5)])),
        ]
    }
}

//! The club-shooting poset over a branch family `L`: increasing sequences of
//! capturing sets, ordered by end-extension.
//!
//! Capturing is the tree form applied to the subtree generated by `L`.
//! Continuity has no content for finite sequences and is not checked.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::capture::{in_omega_tree, CaptureSet};
use crate::ids::Index;
use crate::lextree::{Branch, LexTree};
use crate::scalar::Scalar;
use crate::violation::{wit, Clause, Violation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAmbient<Q> {
    pub tree: LexTree<Q>,
    pub branches: BTreeMap<Index, Branch>,
    pub l: BTreeSet<Index>,
    /// Admit every branch of the subtree generated by `L`, not only `L`'s.
    pub allow_closure: bool,
}

impl<Q: Scalar> PAmbient<Q> {
    pub fn l_branches(&self) -> Vec<&Branch> {
        self.l.iter().filter_map(|xi| self.branches.get(xi)).collect()
    }

    pub fn subtree(&self) -> LexTree<Q> {
        self.tree.subtree_of(&self.l_branches())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = crate::lextree::validate_tree(&self.tree);
        for (xi, b) in &self.branches {
            if !b.is_branch_of(&self.tree) {
                out.push(Violation::new(Clause::Ambient, "foreign-branch", wit![xi]));
            }
        }
        for xi in &self.l {
            if !self.branches.contains_key(xi) {
                out.push(Violation::new(Clause::Ambient, "unknown-index", wit![xi]));
            }
        }
        out
    }

    /// `Z` is made of admissible branches and captures over `subtree(L)`.
    fn admissible(&self, z: &CaptureSet<Q>, sub: &LexTree<Q>, allowed: &BTreeSet<&Branch>) -> Result<(), &'static str> {
        if !z.cuts.is_empty() || !z.nodes.is_empty() {
            return Err("outside-l");
        }
        let ok = |b: &Branch| {
            if self.allow_closure {
                b.is_branch_of(sub)
            } else {
                allowed.contains(b)
            }
        };
        if !z.branches.iter().all(ok) {
            return Err("outside-l");
        }
        match in_omega_tree(z, sub) {
            Ok(true) => Ok(()),
            _ => Err("not-capturing"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PCondition<Q> {
    pub seq: Vec<CaptureSet<Q>>,
}

impl<Q: Scalar> PCondition<Q> {
    pub fn alpha(&self) -> usize {
        self.seq.len().saturating_sub(1)
    }

    pub fn top(&self) -> Option<&CaptureSet<Q>> {
        self.seq.last()
    }
}

pub fn validate_pcondition<Q: Scalar>(amb: &PAmbient<Q>, p: &PCondition<Q>) -> Vec<Violation> {
    let mut out = Vec::new();
    if p.seq.is_empty() {
        out.push(Violation::new(Clause::PIncreasing, "empty-sequence", vec![]));
        return out;
    }
    let sub = amb.subtree();
    let allowed: BTreeSet<&Branch> = amb.l_branches().into_iter().collect();
    for (i, z) in p.seq.iter().enumerate() {
        if i > 0 && !p.seq[i - 1].is_subset(z) {
            out.push(Violation::new(Clause::PIncreasing, "not-increasing", wit![i]));
        }
        if let Err(kind) = amb.admissible(z, &sub, &allowed) {
            out.push(Violation::new(Clause::PCapturing, kind, wit![i]));
        }
    }
    out
}

/// `p.seq` is an initial segment of `q.seq`.
pub fn p_extends<Q: Scalar>(q: &PCondition<Q>, p: &PCondition<Q>) -> Vec<Violation> {
    match p.seq.iter().zip(&q.seq).position(|(a, b)| a != b) {
        None if p.seq.len() <= q.seq.len() => vec![],
        None => vec![Violation::new(Clause::PExtends, "not-initial-segment", wit![q.seq.len()])],
        Some(i) => vec![Violation::new(Clause::PExtends, "not-initial-segment", wit![i])],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PError {
    #[error("empty chain")]
    EmptyChain,
    #[error("chain member {0} does not end-extend its predecessor")]
    NotDescending(usize),
    #[error("limit-not-capturing: the appended union is not admissible ({0})")]
    LimitNotCapturing(String),
}

/// Appends the union of the chain's top entries and `residue` to the
/// longest member. The residue stands for the part of a countable model's
/// trace the chain has not yet absorbed.
pub fn p_lower_bound<Q: Scalar>(
    amb: &PAmbient<Q>,
    chain: &[PCondition<Q>],
    residue: Option<&CaptureSet<Q>>,
) -> Result<PCondition<Q>, PError> {
    let longest = chain.last().ok_or(PError::EmptyChain)?;
    for i in 1..chain.len() {
        if !p_extends(&chain[i], &chain[i - 1]).is_empty() {
            return Err(PError::NotDescending(i));
        }
    }
    let mut union = chain
        .iter()
        .filter_map(|p| p.top())
        .fold(CaptureSet::default(), |acc, z| acc.union(z));
    if let Some(r) = residue {
        union = union.union(r);
    }
    let sub = amb.subtree();
    let allowed: BTreeSet<&Branch> = amb.l_branches().into_iter().collect();
    amb.admissible(&union, &sub, &allowed)
        .map_err(|k| PError::LimitNotCapturing(k.to_string()))?;
    let mut seq = longest.seq.clone();
    seq.push(union);
    Ok(PCondition { seq })
}

/// Appends `top ∪ {b}` for the branch of `xi`; fails when that entry is not
/// admissible.
pub fn p_add_branch<Q: Scalar>(amb: &PAmbient<Q>, p: &PCondition<Q>, xi: Index) -> Result<PCondition<Q>, Vec<Violation>> {
    let Some(b) = amb.branches.get(&xi) else {
        return Err(vec![Violation::new(Clause::PCapturing, "outside-l", wit![xi])]);
    };
    let mut z = p.top().cloned().unwrap_or_default();
    z.branches.insert(b.clone());
    let mut q = p.clone();
    q.seq.push(z);
    let v = validate_pcondition(amb, &q);
    if v.is_empty() {
        Ok(q)
    } else {
        Err(v)
    }
}

pub mod mutate {
    //! A known-valid condition, one mutation per clause, and the
    //! monotonicity witness.

    use super::*;
    use crate::sample::full_tree;

    /// Binary tree with levels 0..=3; `L` is all eight branches, branch `i`
    /// indexed by `i` in lex order.
    pub fn ambient<Q: Scalar>() -> PAmbient<Q> {
        let tree: LexTree<Q> = full_tree(2, 4);
        let branches = (0..).zip(tree.branches()).collect();
        PAmbient {
            tree,
            branches,
            l: (0..8).collect(),
            allow_closure: false,
        }
    }

    pub fn z<Q: Scalar>(amb: &PAmbient<Q>, idx: &[Index]) -> CaptureSet<Q> {
        CaptureSet::from_branches(idx.iter().map(|i| amb.branches[i].clone()))
    }

    /// `{b0, b4}` splits at level 1 and covers it; adding `b2` raises the
    /// split level to 2, where `b6`'s node is missed.
    pub fn hazard<Q: Scalar>(amb: &PAmbient<Q>) -> (CaptureSet<Q>, CaptureSet<Q>) {
        (z(amb, &[0, 4]), z(amb, &[0, 2, 4]))
    }

    pub fn base<Q: Scalar>(amb: &PAmbient<Q>) -> PCondition<Q> {
        PCondition {
            seq: vec![z(amb, &[0, 4]), z(amb, &[0, 2, 4, 6])],
        }
    }

    pub fn mutations<Q: Scalar>(amb: &PAmbient<Q>) -> Vec<(Clause, PCondition<Q>)> {
        let (small, big) = hazard(amb);
        vec![
            (
                Clause::PIncreasing,
                PCondition {
                    seq: vec![z(amb, &[0, 2, 4, 6]), small.clone()],
                },
            ),
            (Clause::PCapturing, PCondition { seq: vec![small, big] }),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::violation::clause_tags;
    use crate::Rational;
    use proptest::prelude::*;

    fn amb() -> PAmbient<Rational> {
        mutate::ambient()
    }

    /// Direct reading: every node on the deepest split level of `Z` lies on
    /// some branch of `Z`.
    fn omega_oracle(z: &[&Branch], levels: usize) -> bool {
        let mut split = 0;
        for a in z {
            for b in z {
                if let Some(h) = (0..levels).find(|&h| a.nodes[h] != b.nodes[h]) {
                    split = split.max(h);
                }
            }
        }
        let covered: BTreeSet<_> = z.iter().map(|b| b.nodes[split]).collect();
        let width = [1, 2, 4, 8][split];
        covered.len() == width
    }

    #[test]
    fn validate_examples() {
        let a = amb();
        let all = PCondition {
            seq: vec![mutate::z(&a, &(0..8).collect::<Vec<_>>())],
        };
        assert!(validate_pcondition(&a, &all).is_empty());
        assert!(validate_pcondition(&a, &mutate::base(&a)).is_empty());
        let mut off = mutate::base(&a);
        off.seq[1].nodes.insert(a.tree.roots()[0]);
        assert_eq!(validate_pcondition(&a, &off)[0].kind, "outside-l");
    }

    #[test]
    fn mutations_hit_one_clause_each() {
        let a = amb();
        for (clause, m) in mutate::mutations(&a) {
            assert_eq!(clause_tags(&validate_pcondition(&a, &m)), vec![clause]);
        }
    }

    #[test]
    fn monotonicity_hazard() {
        let a = amb();
        let (small, big) = mutate::hazard(&a);
        assert!(small.is_subset(&big));
        let sub = a.subtree();
        assert_eq!(in_omega_tree(&small, &sub), Ok(true));
        assert_eq!(in_omega_tree(&big, &sub), Ok(false));
    }

    #[test]
    fn extends_examples() {
        let a = amb();
        let p = mutate::base(&a);
        assert!(p_extends(&p, &p).is_empty());
        let q = p_add_branch(&a, &p, 1).unwrap_err();
        assert_eq!(q[0].kind, "not-capturing");
        let mut r = p.clone();
        r.seq.push(mutate::z(&a, &(0..8).collect::<Vec<_>>()));
        assert!(p_extends(&r, &p).is_empty());
        assert!(!p_extends(&p, &r).is_empty());
        let mut s = r.clone();
        s.seq[0] = mutate::z(&a, &[1, 5]);
        assert_eq!(p_extends(&s, &p)[0].kind, "not-initial-segment");
    }

    #[test]
    fn lower_bound_examples() {
        let a = amb();
        let p = mutate::base(&a);
        let one = p_lower_bound(&a, std::slice::from_ref(&p), None).unwrap();
        assert_eq!(one.seq.last(), p.seq.last());
        assert!(validate_pcondition(&a, &one).is_empty());
        assert!(p_extends(&one, &p).is_empty());

        let r = mutate::z(&a, &[1]);
        assert!(matches!(p_lower_bound(&a, &[p], Some(&r)), Err(PError::LimitNotCapturing(_))));
    }

    #[test]
    fn lower_bound_three_branch_tree() {
        // Root with children 0 and 1; node 0 has children 0 and 1, node 1 one child.
        use crate::lextree::Shape;
        let q = Rational::from_integer;
        let tree = LexTree::from_spec(&[Shape(
            q(0),
            vec![Shape(q(0), vec![Shape(q(0), vec![]), Shape(q(1), vec![])]), Shape(q(1), vec![Shape(q(0), vec![])])],
        )]);
        let branches: BTreeMap<Index, Branch> = (0..).zip(tree.branches()).collect();
        let a = PAmbient {
            tree,
            branches,
            l: (0..3).collect(),
            allow_closure: false,
        };
        let p = PCondition {
            seq: vec![mutate::z(&a, &[0])],
        };
        assert!(validate_pcondition(&a, &p).is_empty());
        // {b0, b2} splits at level 1 and covers it.
        let covered = p_lower_bound(&a, std::slice::from_ref(&p), Some(&mutate::z(&a, &[2]))).unwrap();
        assert!(validate_pcondition(&a, &covered).is_empty());
        // {b0, b1} splits at level 2 and misses b2's node there.
        let err = p_lower_bound(&a, &[p], Some(&mutate::z(&a, &[1])));
        assert!(matches!(err, Err(PError::LimitNotCapturing(_))));
    }

    #[test]
    fn closure_flag_admits_subtree_branches() {
        let mut a = amb();
        a.l = BTreeSet::from([0, 4]);
        let extra = mutate::z(&a, &[0, 4]);
        let p = PCondition { seq: vec![extra] };
        assert!(validate_pcondition(&a, &p).is_empty());
        let outside = PCondition {
            seq: vec![mutate::z(&a, &[0, 2])],
        };
        assert_eq!(validate_pcondition(&a, &outside)[0].kind, "outside-l");
        a.allow_closure = true;
        assert_eq!(validate_pcondition(&a, &outside)[0].kind, "outside-l");
    }

    proptest! {
        #[test]
        fn capturing_matches_oracle(mask in 1u32..256) {
            let a = amb();
            let idx: Vec<Index> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
            let z = mutate::z(&a, &idx);
            let bs: Vec<&Branch> = z.branches.iter().collect();
            let p = PCondition { seq: vec![z.clone()] };
            prop_assert_eq!(validate_pcondition(&a, &p).is_empty(), omega_oracle(&bs, 4));
        }

        #[test]
        fn extension_is_a_partial_order(masks in proptest::collection::vec(1u32..256, 1..6), cut1 in 0usize..6, cut2 in 0usize..6) {
            let a = amb();
            let mut acc = 0u32;
            let seq: Vec<_> = masks.iter().map(|m| {
                acc |= m;
                let idx: Vec<Index> = (0..8).filter(|i| acc >> i & 1 == 1).collect();
                mutate::z(&a, &idx)
            }).collect();
            let (c1, c2) = (cut1.min(cut2) + 1, cut1.max(cut2) + 1);
            let p = PCondition { seq: seq[..c1.min(seq.len())].to_vec() };
            let q = PCondition { seq: seq[..c2.min(seq.len())].to_vec() };
            let r = PCondition { seq: seq.clone() };
            prop_assert!(p_extends(&p, &p).is_empty());
            prop_assert!(p_extends(&q, &p).is_empty());
            prop_assert!(p_extends(&r, &q).is_empty() && p_extends(&r, &p).is_empty());
            if p_extends(&p, &q).is_empty() {
                prop_assert_eq!(&p, &q);
            }
            let chain = [p.clone(), q.clone(), r.clone()];
            if let Ok(b) = p_lower_bound(&a, &chain, None) {
                for m in &chain {
                    prop_assert!(p_extends(&b, m).is_empty());
                }
            }
        }
    }
}

//! Families of cone isomorphisms between same-height nodes.
//!
//! For finite trees a level-, parent- and lex-preserving bijection between
//! two cones is unique when it exists: the root goes to the root and each
//! sorted sibling list is matched by rank. [`IsoFamily::canonical`] builds
//! exactly those maps. The validator still checks every stored map.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};

use super::{LexTree, LexTreeError};
use crate::ids::NodeId;
use crate::scalar::Scalar;
use crate::violation::{wit, Clause, Violation};

/// A finite node map, sorted by source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ConeMap {
    pairs: Vec<(NodeId, NodeId)>,
}

impl ConeMap {
    pub fn from_pairs(mut pairs: Vec<(NodeId, NodeId)>) -> Self {
        pairs.sort();
        ConeMap { pairs }
    }

    pub fn get(&self, x: NodeId) -> Option<NodeId> {
        self.pairs
            .binary_search_by(|(a, _)| a.cmp(&x))
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn inverse(&self) -> ConeMap {
        ConeMap::from_pairs(self.pairs.iter().map(|&(a, b)| (b, a)).collect())
    }

    pub fn insert(&mut self, x: NodeId, y: NodeId) {
        match self.pairs.binary_search_by(|(a, _)| a.cmp(&x)) {
            Ok(i) => self.pairs[i].1 = y,
            Err(i) => self.pairs.insert(i, (x, y)),
        }
    }
}

/// Maps `pi(t, s)` for same-height pairs below `bound`, stored in full.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IsoFamily {
    pub bound: usize,
    pub maps: BTreeMap<(NodeId, NodeId), ConeMap>,
}

impl IsoFamily {
    pub fn empty(bound: usize) -> Self {
        IsoFamily {
            bound,
            maps: BTreeMap::new(),
        }
    }

    /// The unique lex-preserving cone maps for every same-height pair on
    /// levels below `bound`. Fails when two cones at one level differ in shape.
    pub fn canonical<Q: Scalar>(t: &LexTree<Q>, bound: usize) -> Result<Self, LexTreeError> {
        let mut maps = BTreeMap::new();
        for h in 0..bound.min(t.num_levels()) {
            let level = t.level_lex(h);
            for &a in &level {
                for &b in &level {
                    maps.insert((a, b), canonical_map(t, a, b)?);
                }
            }
        }
        Ok(IsoFamily { bound, maps })
    }

    pub fn get(&self, t: NodeId, s: NodeId) -> Option<&ConeMap> {
        self.maps.get(&(t, s))
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Drops every map whose pair lies on a level at or above `bound` of `t`
    /// and restricts the rest to nodes of `t`.
    pub fn restricted_to<Q: Scalar>(&self, t: &LexTree<Q>, bound: usize) -> IsoFamily {
        let maps = self
            .maps
            .iter()
            .filter(|((a, _), _)| t.level_of(*a).is_some_and(|h| h < bound))
            .map(|(k, m)| {
                let pairs = m
                    .pairs()
                    .iter()
                    .copied()
                    .filter(|(x, _)| t.contains(*x))
                    .collect();
                (*k, ConeMap::from_pairs(pairs))
            })
            .collect();
        IsoFamily { bound, maps }
    }
}

fn canonical_map<Q: Scalar>(t: &LexTree<Q>, a: NodeId, b: NodeId) -> Result<ConeMap, LexTreeError> {
    let mut pairs = Vec::new();
    let mut stack = vec![(a, b)];
    while let Some((x, y)) = stack.pop() {
        pairs.push((x, y));
        let (cx, cy) = (t.children(x), t.children(y));
        if cx.len() != cy.len() {
            return Err(LexTreeError::ShapeMismatch(a, b));
        }
        stack.extend(cx.iter().copied().zip(cy.iter().copied()));
    }
    Ok(ConeMap::from_pairs(pairs))
}

/// Image of `x` under `pi(t, s)`.
pub fn apply_iso(fam: &IsoFamily, t: NodeId, s: NodeId, x: NodeId) -> Result<NodeId, LexTreeError> {
    let m = fam.get(t, s).ok_or(LexTreeError::MissingPair(t, s))?;
    m.get(x).ok_or(LexTreeError::OutsideCone { t, x })
}

/// Checks shape (clause 3), coherence (4), symmetry (5) and composition (7).
///
/// Law checks only look at maps that passed the shape check. A missing pair
/// is reported once, under the first law that requires it: symmetry when its
/// reverse is present, coherence when some map sends `t` to `s`, composition
/// when it is a composite of present maps, and clause 3 otherwise.
pub fn validate_family<Q: Scalar>(t: &LexTree<Q>, fam: &IsoFamily) -> Vec<Violation> {
    let mut out = Vec::new();
    // Sorted cones of every node that can key a map.
    let cones: HashMap<NodeId, Vec<NodeId>> = (0..fam.bound.min(t.num_levels()))
        .flat_map(|h| t.levels()[h].iter())
        .map(|n| {
            let mut c = t.cone(n.id);
            c.sort_unstable();
            (n.id, c)
        })
        .collect();

    let mut good: HashSet<(NodeId, NodeId)> = HashSet::default();
    for (&(a, b), m) in &fam.maps {
        let (ha, hb) = (t.level_of(a), t.level_of(b));
        match (ha, hb) {
            (Some(ha), Some(hb)) if ha == hb && ha < fam.bound => {}
            _ => {
                out.push(Violation::new(Clause::C3, "bad-pair-key", wit![a, b]));
                continue;
            }
        }
        if let Some(v) = check_shape(t, a, b, m, &cones[&a], &cones[&b]) {
            out.push(v);
        } else {
            good.insert((a, b));
        }
    }
    let index: HashMap<(NodeId, NodeId), &ConeMap> = fam.maps.iter().map(|(k, m)| (*k, m)).collect();
    let present = |a: NodeId, b: NodeId| index.contains_key(&(a, b));

    let is_good = |a: NodeId, b: NodeId| good.contains(&(a, b));
    let good_keys = || fam.maps.iter().filter(|(k, _)| good.contains(k));

    // Symmetry among well-formed maps.
    for (&(a, b), f) in good_keys() {
        if a < b && is_good(b, a) {
            let g = index[&(b, a)];
            if f.pairs().iter().any(|&(x, y)| g.get(y) != Some(x)) {
                out.push(Violation::new(Clause::C5, "symmetry-violation", wit![a, b]));
            }
        }
    }

    // Coherence, collecting the pairs it demands.
    let mut demanded: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (&(a, b), m) in good_keys() {
        for &(x, y) in m.pairs() {
            if x == a || t.level_of(x).is_none_or(|h| h >= fam.bound) {
                continue;
            }
            if !present(x, y) {
                demanded.insert((x, y));
                continue;
            }
            if !is_good(x, y) {
                continue;
            }
            // A well-formed `sub` has domain exactly the cone of `x`.
            let sub = index[&(x, y)];
            let agrees = sub.pairs().iter().all(|&(z, w)| m.get(z) == Some(w));
            if !agrees {
                out.push(Violation::new(Clause::C4, "coherence-violation", wit![a, b, x, y]));
            }
        }
    }

    // Composition through a pivot per level; with symmetry this covers
    // every triple. Identity maps are checked directly.
    for h in 0..fam.bound.min(t.num_levels()) {
        let level = t.level_lex(h);
        for &a in &level {
            if is_good(a, a) && index[&(a, a)].pairs().iter().any(|(x, y)| x != y) {
                out.push(Violation::new(Clause::C7, "identity-violation", wit![a]));
            }
        }
        for &a in &level {
            for &c in &level {
                if !is_good(a, c) {
                    continue;
                }
                let pivot = level
                    .iter()
                    .copied()
                    .find(|&p| p != a && p != c && is_good(a, p) && is_good(p, c));
                if let Some(p) = pivot {
                    let (f, g, fg) = (index[&(a, p)], index[&(p, c)], index[&(a, c)]);
                    let ok = f
                        .pairs()
                        .iter()
                        .all(|&(x, y)| g.get(y) == fg.get(x));
                    if !ok {
                        out.push(Violation::new(Clause::C7, "composition-violation", wit![a, p, c]));
                    }
                }
            }
        }
        // Missing pairs on this level.
        for &a in &level {
            for &c in &level {
                if present(a, c) {
                    continue;
                }
                let v = if present(c, a) {
                    Violation::new(Clause::C5, "symmetry-missing", wit![a, c])
                } else if demanded.contains(&(a, c)) {
                    Violation::new(Clause::C4, "coherence-missing", wit![a, c])
                } else if level.iter().any(|&u| present(a, u) && present(u, c)) {
                    Violation::new(Clause::C7, "composition-missing", wit![a, c])
                } else {
                    Violation::new(Clause::C3, "pair-missing", wit![a, c])
                };
                out.push(v);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn check_shape<Q: Scalar>(
    t: &LexTree<Q>,
    a: NodeId,
    b: NodeId,
    m: &ConeMap,
    sorted_cone_a: &[NodeId],
    sorted_cone_b: &[NodeId],
) -> Option<Violation> {
    let (cone_a, cone_b) = (sorted_cone_a, sorted_cone_b);
    if !m.pairs().iter().map(|p| p.0).eq(cone_a.iter().copied()) {
        return Some(Violation::new(Clause::C3, "domain-not-cone", wit![a, b]));
    }
    let mut ran: Vec<NodeId> = m.pairs().iter().map(|p| p.1).collect();
    ran.sort_unstable();
    if ran != cone_b {
        return Some(Violation::new(Clause::C3, "not-bijective", wit![a, b]));
    }
    let (ha, hb) = (t.level_of(a)?, t.level_of(b)?);
    for &(x, y) in m.pairs() {
        if t.level_of(x)? - ha != t.level_of(y)? - hb {
            return Some(Violation::new(Clause::C3, "level-violation", wit![a, b, x]));
        }
        if x != a {
            let px = t.parent(x)?;
            if m.get(px) != t.parent(y) {
                return Some(Violation::new(Clause::C3, "parent-violation", wit![a, b, x]));
            }
        } else if y != b {
            return Some(Violation::new(Clause::C3, "parent-violation", wit![a, b, x]));
        }
    }
    for &(x, _) in m.pairs() {
        let ranks: Vec<Option<usize>> = t
            .children(x)
            .iter()
            .map(|&c| m.get(c).and_then(|img| t.sibling_rank(img)))
            .collect();
        if ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Some(Violation::new(Clause::C3, "lex-violation", wit![a, b, x]));
        }
    }
    None
}

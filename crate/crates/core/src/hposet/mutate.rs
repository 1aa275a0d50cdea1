//! Known-valid instances and targeted mutations, one per clause. Each
//! mutation breaks exactly one clause of the validator or of [`extends`].
//!
//! [`extends`]: super::extends

use std::collections::{BTreeMap, BTreeSet};

use super::{extend_height, HCondition, Policy};
use crate::ids::NodeId;
use crate::lextree::{ConeMap, IsoFamily, LexTree, Node, Shape};
use crate::scalar::Scalar;
use crate::violation::Clause;

/// Indices used by the base instance: `XI` and `ETA` are linked through the
/// first two level-1 nodes, `ZETA` is unlinked.
pub const XI: u64 = 1;
pub const ETA: u64 = 5;
pub const ZETA: u64 = 9;

/// Height 2: one root, three children `a, b, c`, two grandchildren each.
/// `XI` sits over `a`, `ETA` over `b` (same rank), `ZETA` over `c` (rank 1).
pub fn base<Q: Scalar>() -> HCondition<Q> {
    let kid = |l: usize| Shape(Q::from_index(l), vec![Shape(Q::from_index(0), vec![]), Shape(Q::from_index(1), vec![])]);
    let tree = LexTree::from_spec(&[Shape(Q::from_index(0), vec![kid(0), kid(1), kid(2)])]);
    let [a, b, c] = level1(&tree);
    let branch_map = BTreeMap::from([
        (XI, tree.children(a)[0]),
        (ETA, tree.children(b)[0]),
        (ZETA, tree.children(c)[1]),
    ]);
    let family = IsoFamily::canonical(&tree, 2).expect("homogeneous");
    HCondition {
        alpha: 2,
        tree,
        branch_map,
        family,
        club: BTreeSet::new(),
    }
}

fn level1<Q: Scalar>(t: &LexTree<Q>) -> [NodeId; 3] {
    let l = t.level_lex(1);
    [l[0], l[1], l[2]]
}

/// A one-level extension of [`base`].
pub fn base_extension<Q: Scalar>() -> HCondition<Q> {
    extend_height(&base(), 3, Policy { fanout: 2, seed: 11 }).expect("base extends")
}

fn relabel<Q: Scalar>(t: &LexTree<Q>, id: NodeId, label: Q) -> LexTree<Q> {
    let levels: Vec<Vec<Node<Q>>> = t
        .levels()
        .iter()
        .map(|lv| {
            lv.iter()
                .map(|n| if n.id == id { Node { label: label.clone(), ..n.clone() } } else { n.clone() })
                .collect()
        })
        .collect();
    LexTree::from_levels(levels)
}

/// Mutations of [`base`] rejected by the condition validator, one per clause.
pub fn condition_mutations<Q: Scalar>() -> Vec<(Clause, HCondition<Q>)> {
    let p = base::<Q>();
    let [a, b, c] = level1(&p.tree);
    let mut out = Vec::new();

    let twin = p.tree.children(b)[1];
    let mut m = p.clone();
    m.tree = relabel(&p.tree, twin, Q::from_index(0));
    out.push((Clause::C1, m));

    let mut m = p.clone();
    m.branch_map.insert(7, p.branch_map[&XI]);
    out.push((Clause::C2, m));

    let mut m = p.clone();
    let (ka, kb) = (p.tree.children(a), p.tree.children(b));
    m.family.maps.insert(
        (a, b),
        ConeMap::from_pairs(vec![(a, b), (ka[0], kb[1]), (ka[1], kb[0])]),
    );
    out.push((Clause::C3, m));

    let mut m = p.clone();
    m.family.maps.remove(&(a, a));
    out.push((Clause::C4, m));

    let mut m = p.clone();
    m.family.maps.remove(&(a, b));
    out.push((Clause::C5, m));

    let mut m = p.clone();
    m.club = BTreeSet::from([3]);
    out.push((Clause::C6, m));

    let mut m = p.clone();
    m.family.maps.remove(&(a, c));
    m.family.maps.remove(&(c, a));
    out.push((Clause::C7, m));
    out
}

/// Mutations of [`base_extension`] that break exactly one extension clause
/// against [`base`].
pub fn extension_mutations<Q: Scalar>() -> Vec<(Clause, HCondition<Q>)> {
    let p = base::<Q>();
    let q = base_extension::<Q>();
    let [a, b, _] = level1(&p.tree);
    let mut out = Vec::new();

    let mut m = q.clone();
    m.tree = relabel(&q.tree, q.tree.roots()[0], Q::from_index(5));
    out.push((Clause::E1, m));

    let mut m = q.clone();
    m.branch_map.remove(&ZETA);
    out.push((Clause::E2, m));

    // ZETA has no links, so moving it off its old cone breaks only e3.
    let mut m = q.clone();
    let used: BTreeSet<NodeId> = q.branch_map.values().copied().collect();
    let off = q
        .tree
        .level_lex(3)
        .into_iter()
        .find(|&n| !used.contains(&n) && !q.tree.is_le(p.branch_map[&ZETA], n))
        .expect("free node");
    m.branch_map.insert(ZETA, off);
    out.push((Clause::E3, m));

    let mut m = q.clone();
    let mut map = q.family.get(a, b).expect("pair").clone();
    let (ka, kb) = (p.tree.children(a), p.tree.children(b));
    map.insert(ka[0], kb[1]);
    map.insert(ka[1], kb[0]);
    m.family.maps.insert((a, b), map);
    out.push((Clause::E4, m));

    // Route ETA to the other child so it is no longer the image of XI.
    let mut m = q.clone();
    let old = q.branch_map[&ETA];
    let parent = q.tree.parent(old).expect("parent");
    let other = q.tree.children(parent).iter().copied().find(|&n| n != old).expect("sibling");
    m.branch_map.insert(ETA, other);
    out.push((Clause::E5, m));
    out
}

//! Leveled trees whose sibling sets carry distinct exact labels. The labels
//! induce the lexicographic order on each level and on branches.

mod family;

pub use family::{apply_iso, validate_family, ConeMap, IsoFamily};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap as HashMap;

use thiserror::Error;

use crate::ids::NodeId;
use crate::scalar::Scalar;
use crate::violation::{wit, Clause, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexTreeError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("restriction to an empty set of heights")]
    EmptyRestriction,
    #[error("height {0} is outside the tree")]
    HeightOutOfRange(usize),
    #[error("branch is not a branch of this tree")]
    ForeignBranch,
    #[error("cones of {0} and {1} are not isomorphic")]
    ShapeMismatch(NodeId, NodeId),
    #[error("family has no map for ({0}, {1})")]
    MissingPair(NodeId, NodeId),
    #[error("{x} is not in the cone of {t}")]
    OutsideCone { t: NodeId, x: NodeId },
    #[error("map is undefined on {0}")]
    Undefined(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node<Q> {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub label: Q,
}

/// A finite leveled tree. Construction never fails; [`validate_tree`]
/// reports shape problems. Query methods assume a valid tree.
#[derive(Debug, Clone)]
pub struct LexTree<Q> {
    levels: Vec<Vec<Node<Q>>>,
    loc: HashMap<NodeId, (usize, usize)>,
    children: HashMap<NodeId, Vec<NodeId>>,
    roots: Vec<NodeId>,
    lex_rank: HashMap<NodeId, usize>,
}

impl<Q: PartialEq> PartialEq for LexTree<Q> {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels
    }
}

impl<Q: Eq> Eq for LexTree<Q> {}

impl<Q: Scalar> LexTree<Q> {
    pub fn from_levels(levels: Vec<Vec<Node<Q>>>) -> Self {
        let mut loc = HashMap::default();
        for (h, level) in levels.iter().enumerate() {
            for (i, n) in level.iter().enumerate() {
                loc.entry(n.id).or_insert((h, i));
            }
        }
        let label_of = |id: &NodeId| -> Option<&Q> {
            loc.get(id).map(|&(h, i)| &levels[h][i].label)
        };
        let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::default();
        let mut roots = Vec::new();
        for level in &levels {
            for n in level {
                match n.parent {
                    Some(p) => children.entry(p).or_default().push(n.id),
                    None => roots.push(n.id),
                }
            }
        }
        for cs in children.values_mut() {
            cs.sort_by(|a, b| label_of(a).cmp(&label_of(b)).then(a.cmp(b)));
        }
        roots.sort_by(|a, b| label_of(a).cmp(&label_of(b)).then(a.cmp(b)));

        // Lexicographic rank within a level: parent's rank, then own label.
        let mut lex_rank = HashMap::default();
        for level in &levels {
            let mut ordered: Vec<(Option<usize>, &Q, NodeId)> = level
                .iter()
                .map(|n| {
                    let pr = n.parent.and_then(|p| lex_rank.get(&p).copied());
                    (pr, &n.label, n.id)
                })
                .collect();
            ordered.sort();
            for (r, (_, _, id)) in ordered.into_iter().enumerate() {
                lex_rank.entry(id).or_insert(r);
            }
        }
        LexTree {
            levels,
            loc,
            children,
            roots,
            lex_rank,
        }
    }

    /// A tree with one root labeled `label`.
    pub fn single_root(label: Q) -> Self {
        Self::from_levels(vec![vec![Node {
            id: NodeId(0),
            parent: None,
            label,
        }]])
    }

    /// Builds a tree from a nested description: one `(label, children)` per root.
    pub fn from_spec(roots: &[Shape<Q>]) -> Self {
        let mut levels: Vec<Vec<Node<Q>>> = Vec::new();
        let mut next = 0u32;
        fn walk<Q: Scalar>(
            s: &Shape<Q>,
            parent: Option<NodeId>,
            h: usize,
            levels: &mut Vec<Vec<Node<Q>>>,
            next: &mut u32,
        ) {
            if levels.len() <= h {
                levels.push(Vec::new());
            }
            let id = NodeId(*next);
            *next += 1;
            levels[h].push(Node {
                id,
                parent,
                label: s.0.clone(),
            });
            for c in &s.1 {
                walk(c, Some(id), h + 1, levels, next);
            }
        }
        for r in roots {
            walk(r, None, 0, &mut levels, &mut next);
        }
        Self::from_levels(levels)
    }

    /// A copy with one more level appended; `fresh` lists `(parent, label)`.
    /// Returns the new tree and the ids of the new nodes in `fresh` order.
    pub fn with_new_level(&self, fresh: &[(NodeId, Q)]) -> (Self, Vec<NodeId>) {
        let mut level = Vec::with_capacity(fresh.len());
        let mut ids = Vec::with_capacity(fresh.len());
        for (next, (p, label)) in (self.next_id().0..).zip(fresh) {
            let id = NodeId(next);
            level.push(Node {
                id,
                parent: Some(*p),
                label: label.clone(),
            });
            ids.push(id);
        }
        let mut levels = self.levels.clone();
        levels.push(level);
        (Self::from_levels(levels), ids)
    }

    pub fn next_id(&self) -> NodeId {
        NodeId(
            self.levels
                .iter()
                .flatten()
                .map(|n| n.id.0 + 1)
                .max()
                .unwrap_or(0),
        )
    }

    pub fn levels(&self) -> &[Vec<Node<Q>>] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Index of the top level.
    pub fn height(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.loc.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node<Q>> {
        self.loc.get(&id).map(|&(h, i)| &self.levels[h][i])
    }

    pub fn level_of(&self, id: NodeId) -> Option<usize> {
        self.loc.get(&id).map(|&(h, _)| h)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).and_then(|n| n.parent)
    }

    pub fn label(&self, id: NodeId) -> Option<&Q> {
        self.node(id).map(|n| &n.label)
    }

    /// Immediate successors sorted by label.
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    /// Nodes of level `h` in lexicographic order.
    pub fn level_lex(&self, h: usize) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.levels[h].iter().map(|n| n.id).collect();
        v.sort_by_key(|id| self.lex_rank[id]);
        v
    }

    pub fn lex_rank(&self, id: NodeId) -> Option<usize> {
        self.lex_rank.get(&id).copied()
    }

    /// Position among the node's siblings (roots count as siblings).
    pub fn sibling_rank(&self, id: NodeId) -> Option<usize> {
        let sibs = match self.parent(id) {
            Some(p) => self.children(p),
            None => &self.roots,
        };
        sibs.iter().position(|&s| s == id)
    }

    pub fn ancestor_at(&self, id: NodeId, h: usize) -> Option<NodeId> {
        let mut cur = id;
        let mut lvl = self.level_of(id)?;
        if h > lvl {
            return None;
        }
        while lvl > h {
            cur = self.parent(cur)?;
            lvl -= 1;
        }
        Some(cur)
    }

    /// Tree order, reflexive: `a` is an ancestor of `b` or equal to it.
    pub fn is_le(&self, a: NodeId, b: NodeId) -> bool {
        match self.level_of(a) {
            Some(h) => self.ancestor_at(b, h) == Some(a),
            None => false,
        }
    }

    /// `t` together with all of its descendants, level by level.
    pub fn cone(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = vec![t];
        let mut i = 0;
        while i < out.len() {
            let cs = self.children(out[i]);
            out.extend_from_slice(cs);
            i += 1;
        }
        out
    }

    /// The branch ending at `top`: its ancestors from level 0 up to itself.
    pub fn path_to(&self, top: NodeId) -> Option<Branch> {
        let h = self.level_of(top)?;
        let mut nodes = vec![top; h + 1];
        let mut cur = top;
        for lvl in (0..h).rev() {
            cur = self.parent(cur)?;
            nodes[lvl] = cur;
        }
        Some(Branch { nodes })
    }

    /// All root-to-top branches in lexicographic order.
    pub fn branches(&self) -> Vec<Branch> {
        if self.levels.is_empty() {
            return Vec::new();
        }
        self.level_lex(self.height())
            .into_iter()
            .filter_map(|t| self.path_to(t))
            .collect()
    }

    /// Same ids, parents and labels on levels `0..=upto` (as sets per level).
    pub fn agrees_upto(&self, other: &Self, upto: usize) -> bool {
        if self.num_levels() <= upto || other.num_levels() <= upto {
            return false;
        }
        (0..=upto).all(|h| {
            let mut a: Vec<_> = self.levels[h].iter().map(|n| (n.id, n.parent, &n.label)).collect();
            let mut b: Vec<_> = other.levels[h].iter().map(|n| (n.id, n.parent, &n.label)).collect();
            a.sort();
            b.sort();
            a == b
        })
    }

    /// The subtree made of the nodes on the given branches.
    pub fn subtree_of(&self, branches: &[&Branch]) -> Self {
        let keep: BTreeSet<NodeId> = branches.iter().flat_map(|b| b.nodes.iter().copied()).collect();
        let levels = self
            .levels
            .iter()
            .map(|lv| lv.iter().filter(|n| keep.contains(&n.id)).cloned().collect::<Vec<_>>())
            .filter(|lv| !lv.is_empty())
            .collect();
        Self::from_levels(levels)
    }

    /// Lexicographic comparison of two nodes on the same level.
    pub fn lex_cmp_nodes(&self, a: NodeId, b: NodeId) -> Ordering {
        self.lex_rank(a).cmp(&self.lex_rank(b))
    }

    /// Label multiset shape: the number of children per node, level by level
    /// in lexicographic order. Equal shapes mean isomorphic lex trees.
    pub fn shape(&self) -> Vec<Vec<usize>> {
        (0..self.num_levels())
            .map(|h| {
                self.level_lex(h)
                    .into_iter()
                    .map(|id| self.children(id).len())
                    .collect()
            })
            .collect()
    }
}

/// Nested tree description used by [`LexTree::from_spec`].
#[derive(Debug, Clone)]
pub struct Shape<Q>(pub Q, pub Vec<Shape<Q>>);

/// One node per level from the root up, each the parent of the next.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    pub nodes: Vec<NodeId>,
}

impl Branch {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Branch { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn at(&self, h: usize) -> Option<NodeId> {
        self.nodes.get(h).copied()
    }

    pub fn top(&self) -> Option<NodeId> {
        self.nodes.last().copied()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains(&id)
    }

    /// Chain property plus full height.
    pub fn is_branch_of<Q: Scalar>(&self, t: &LexTree<Q>) -> bool {
        self.nodes.len() == t.num_levels()
            && self.nodes.iter().enumerate().all(|(h, &id)| {
                t.level_of(id) == Some(h)
                    && (h == 0 || t.parent(id) == Some(self.nodes[h - 1]))
            })
    }

    /// First level where the two branches differ; `None` if one is a prefix
    /// of the other.
    pub fn divergence(&self, other: &Branch) -> Option<usize> {
        self.nodes
            .iter()
            .zip(&other.nodes)
            .position(|(a, b)| a != b)
    }
}

/// Shape problems of a tree, reported as clause 1 failures.
pub fn validate_tree<Q: Scalar>(t: &LexTree<Q>) -> Vec<Violation> {
    let mut out = Vec::new();
    if t.levels.is_empty() {
        out.push(Violation::new(Clause::C1, "empty-tree", vec![]));
        return out;
    }
    let mut seen = BTreeSet::new();
    for (h, level) in t.levels.iter().enumerate() {
        if level.is_empty() {
            out.push(Violation::new(Clause::C1, "empty-level", wit![h]));
        }
        for n in level {
            if !seen.insert(n.id) {
                out.push(Violation::new(Clause::C1, "duplicate-id", wit![n.id]));
            }
            match (h, n.parent) {
                (0, Some(p)) => out.push(Violation::new(Clause::C1, "root-with-parent", wit![n.id, p])),
                (0, None) => {}
                (_, None) => out.push(Violation::new(Clause::C1, "missing-parent", wit![n.id])),
                (_, Some(p)) => match t.level_of(p) {
                    None => out.push(Violation::new(Clause::C1, "unknown-parent", wit![n.id, p])),
                    Some(ph) if ph + 1 != h => {
                        out.push(Violation::new(Clause::C1, "bad-parent-level", wit![n.id, p]))
                    }
                    Some(_) => {}
                },
            }
        }
    }
    let mut groups: BTreeMap<Option<NodeId>, Vec<(&Q, NodeId)>> = BTreeMap::new();
    for n in t.levels.iter().flatten() {
        groups.entry(n.parent).or_default().push((&n.label, n.id));
    }
    for sibs in groups.values_mut() {
        sibs.sort();
        for w in sibs.windows(2) {
            if w[0].0 == w[1].0 {
                out.push(Violation::new(
                    Clause::C1,
                    "duplicate-sibling-label",
                    wit![w[0].1, w[1].1],
                ));
            }
        }
    }
    out
}

/// `T` restricted to the heights in `a`, reindexed consecutively. Node ids
/// are kept; labels are replaced by `0, 1, 2, ...` in lexicographic order of
/// the compressed label paths within each new sibling group.
pub fn restrict<Q: Scalar>(t: &LexTree<Q>, a: &BTreeSet<usize>) -> Result<LexTree<Q>, LexTreeError> {
    if a.is_empty() {
        return Err(LexTreeError::EmptyRestriction);
    }
    if let Some(&h) = a.iter().find(|&&h| h >= t.num_levels()) {
        return Err(LexTreeError::HeightOutOfRange(h));
    }
    let heights: Vec<usize> = a.iter().copied().collect();
    let mut levels = Vec::with_capacity(heights.len());
    for (i, &h) in heights.iter().enumerate() {
        let mut groups: BTreeMap<Option<NodeId>, Vec<NodeId>> = BTreeMap::new();
        for id in t.level_lex(h) {
            let parent = if i == 0 {
                None
            } else {
                t.ancestor_at(id, heights[i - 1])
            };
            groups.entry(parent).or_default().push(id);
        }
        let mut level = Vec::new();
        for (parent, ids) in groups {
            for (k, id) in ids.into_iter().enumerate() {
                level.push(Node {
                    id,
                    parent,
                    label: Q::from_index(k),
                });
            }
        }
        levels.push(level);
    }
    Ok(LexTree::from_levels(levels))
}

/// Lexicographic comparison of branches: labels at the first divergence.
pub fn lex_compare_branches<Q: Scalar>(
    t: &LexTree<Q>,
    a: &Branch,
    b: &Branch,
) -> Result<Ordering, LexTreeError> {
    if !a.is_branch_of(t) || !b.is_branch_of(t) {
        return Err(LexTreeError::ForeignBranch);
    }
    Ok(match a.divergence(b) {
        None => Ordering::Equal,
        Some(h) => t.label(a.nodes[h]).cmp(&t.label(b.nodes[h])),
    })
}

/// Whether `f` is a one-to-one, level and tree-order preserving map from
/// `source` restricted to `c` into `target` restricted to `c`.
pub fn is_club_embedding<Q: Scalar>(
    f: &BTreeMap<NodeId, NodeId>,
    source: &LexTree<Q>,
    target: &LexTree<Q>,
    c: &BTreeSet<usize>,
) -> Result<bool, LexTreeError> {
    if let Some(&h) = c
        .iter()
        .find(|&&h| h >= source.num_levels() || h >= target.num_levels())
    {
        return Err(LexTreeError::HeightOutOfRange(h));
    }
    let heights: Vec<usize> = c.iter().copied().collect();
    let mut image = BTreeSet::new();
    for &h in &heights {
        for n in &source.levels[h] {
            let y = *f.get(&n.id).ok_or(LexTreeError::Undefined(n.id))?;
            if target.level_of(y) != Some(h) || !image.insert(y) {
                return Ok(false);
            }
        }
    }
    for (j, &hj) in heights.iter().enumerate() {
        for n in &source.levels[hj] {
            for &hi in &heights[..j] {
                let x = source.ancestor_at(n.id, hi).expect("valid source");
                if target.ancestor_at(f[&n.id], hi) != Some(f[&x]) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

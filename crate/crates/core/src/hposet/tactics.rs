use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{extends, HCondition};
use crate::ids::{Index, NodeId};
use crate::lextree::{Branch, IsoFamily, LexTree, LexTreeError};
use crate::scalar::Scalar;
use crate::seed::{self, Rng};
use crate::violation::Violation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HError {
    #[error("target height {target} is not above {alpha}")]
    TargetNotAbove { target: usize, alpha: usize },
    #[error("fanout must be at least 1")]
    ZeroFanout,
    #[error("fanout {fanout} cannot separate {blocks} club blocks")]
    FanoutTooSmall { fanout: usize, blocks: usize },
    #[error("index {0} is already indexed")]
    IndexPresent(Index),
    #[error("no club-consistent routing for index {0}")]
    NoRouting(Index),
    #[error("empty chain")]
    EmptyChain,
    #[error("chain member {0} does not extend its predecessor")]
    NotDescending(usize, Vec<Violation>),
    #[error("chain member {0} does not raise the height")]
    HeightNotIncreasing(usize),
    #[error("conditions have different trees")]
    TreeMismatch,
    #[error("conditions have different families")]
    FamilyMismatch,
    #[error("conditions have different clubs")]
    ClubMismatch,
    #[error("branch maps disagree on index {0}")]
    BranchDisagree(Index),
    #[error("indices {0} and {1} are linked across club points")]
    ClubInconsistent(Index, Index),
    #[error("linked indices {0} and {1} sit on the same node")]
    Collision(Index, Index),
    #[error(transparent)]
    Family(#[from] LexTreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub fanout: usize,
    pub seed: u64,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { fanout: 2, seed: 0 }
    }
}

/// `k` distinct labels in increasing order.
fn fresh_labels<Q: Scalar>(rng: &mut Rng, k: usize) -> Vec<Q> {
    let mut set = BTreeSet::new();
    while set.len() < k {
        let den = rng.gen_range(1..=4i64);
        let num = rng.gen_range(-(4 * k as i64)..=4 * k as i64);
        set.insert(Q::from_ratio(num, den));
    }
    set.into_iter().collect()
}

/// Every top node gets `fanout` children; `ids[i][r]` is the child of rank
/// `r` of the `i`-th top node in lex order.
struct Grown<Q> {
    tree: LexTree<Q>,
    tops: Vec<NodeId>,
    ids: Vec<Vec<NodeId>>,
}

impl<Q: Scalar> Grown<Q> {
    fn new(tree: &LexTree<Q>, labels: impl Fn(usize) -> Vec<Q>) -> Self {
        let tops = tree.level_lex(tree.height());
        let mut fresh = Vec::new();
        for (i, &u) in tops.iter().enumerate() {
            fresh.extend(labels(i).into_iter().map(|l| (u, l)));
        }
        let per = if tops.is_empty() { 0 } else { fresh.len() / tops.len() };
        let (tree, flat) = tree.with_new_level(&fresh);
        let ids = flat.chunks(per.max(1)).map(<[NodeId]>::to_vec).collect();
        Grown { tree, tops, ids }
    }

    fn child(&self, parent: NodeId, rank: usize) -> NodeId {
        let i = self.tops.iter().position(|&u| u == parent).expect("top node");
        self.ids[i][rank]
    }
}

fn blocks_of<Q: Scalar>(p: &HCondition<Q>) -> BTreeSet<usize> {
    p.branch_map.keys().map(|&xi| p.block(xi)).collect()
}

/// One random level: children with seeded labels and a seeded injection of
/// the present club blocks into child ranks.
fn grow_random<Q: Scalar>(
    p: &HCondition<Q>,
    fanout: usize,
    rng: &mut Rng,
) -> Result<(Grown<Q>, BTreeMap<usize, usize>), HError> {
    let blocks = blocks_of(p);
    if fanout < blocks.len() {
        return Err(HError::FanoutTooSmall { fanout, blocks: blocks.len() });
    }
    let mut ranks: Vec<usize> = (0..fanout).collect();
    ranks.shuffle(rng);
    let rho: BTreeMap<usize, usize> = blocks.into_iter().zip(ranks).collect();
    let n_tops = p.tree.levels()[p.tree.height()].len();
    let labels: Vec<Vec<Q>> = (0..n_tops).map(|_| fresh_labels(rng, fanout)).collect();
    Ok((Grown::new(&p.tree, |i| labels[i].clone()), rho))
}

fn finish<Q: Scalar>(
    p: &HCondition<Q>,
    tree: LexTree<Q>,
    branch_map: BTreeMap<Index, NodeId>,
) -> Result<HCondition<Q>, HError> {
    let alpha = tree.height();
    let family = IsoFamily::canonical(&tree, alpha)?;
    Ok(HCondition {
        alpha,
        tree,
        branch_map,
        family,
        club: p.club.clone(),
    })
}

/// Raises the height to `target`. At each new level every top node gets
/// `fanout` children and every indexed node moves to the child whose rank
/// is designated for its club block, so linked indices stay linked and
/// indices in different blocks never become linked.
pub fn extend_height<Q: Scalar>(p: &HCondition<Q>, target: usize, policy: Policy) -> Result<HCondition<Q>, HError> {
    if target <= p.alpha {
        return Err(HError::TargetNotAbove { target, alpha: p.alpha });
    }
    if policy.fanout == 0 {
        return Err(HError::ZeroFanout);
    }
    let mut rng = seed::rng(policy.seed);
    let mut cur = p.clone();
    while cur.alpha < target {
        let (g, rho) = grow_random(&cur, policy.fanout, &mut rng)?;
        let branch_map = cur
            .branch_map
            .iter()
            .map(|(&xi, &n)| (xi, g.child(n, rho[&cur.block(xi)])))
            .collect();
        cur = HCondition {
            alpha: cur.alpha + 1,
            tree: g.tree,
            branch_map,
            family: IsoFamily::empty(cur.alpha + 1),
            club: cur.club,
        };
    }
    finish(p, cur.tree, cur.branch_map)
}

/// Extends by one level and puts `xi` on a new top node, on a rank that is
/// either unused by every present block or designated for `xi`'s own block.
pub fn add_branch_index<Q: Scalar>(p: &HCondition<Q>, xi: Index, policy: Policy) -> Result<HCondition<Q>, HError> {
    if p.branch_map.contains_key(&xi) {
        return Err(HError::IndexPresent(xi));
    }
    if policy.fanout == 0 {
        return Err(HError::ZeroFanout);
    }
    let mut rng = seed::rng(policy.seed);
    let (g, rho) = grow_random(p, policy.fanout, &mut rng)?;
    let mut branch_map: BTreeMap<Index, NodeId> = p
        .branch_map
        .iter()
        .map(|(&eta, &n)| (eta, g.child(n, rho[&p.block(eta)])))
        .collect();
    let used: BTreeSet<NodeId> = branch_map.values().copied().collect();
    let designated: BTreeSet<usize> = rho.values().copied().collect();
    let own = rho.get(&p.block(xi)).copied();
    let free_ranks: Vec<usize> = (0..policy.fanout).filter(|r| !designated.contains(r)).collect();
    let ranks: Vec<usize> = if free_ranks.is_empty() {
        own.into_iter().collect()
    } else {
        free_ranks
    };
    let candidates: Vec<NodeId> = ranks
        .iter()
        .flat_map(|&r| g.ids.iter().map(move |kids| kids[r]))
        .filter(|n| !used.contains(n))
        .collect();
    let &node = candidates.choose(&mut rng).ok_or(HError::NoRouting(xi))?;
    branch_map.insert(xi, node);
    finish(p, g.tree, branch_map)
}

fn check_chain<Q: Scalar>(chain: &[HCondition<Q>], strict: bool) -> Result<(), HError> {
    if chain.is_empty() {
        return Err(HError::EmptyChain);
    }
    for i in 1..chain.len() {
        if strict && chain[i].alpha <= chain[i - 1].alpha {
            return Err(HError::HeightNotIncreasing(i));
        }
        let v = extends(&chain[i], &chain[i - 1]);
        if !v.is_empty() {
            return Err(HError::NotDescending(i, v));
        }
    }
    Ok(())
}

/// Lower bound for a descending chain: one new level above the last
/// member holding, over every top node, one child per club block present.
/// The indexed nodes move to their block's child, and the other new nodes
/// are exactly the images of those under the top-level maps of the family.
/// Labels are the ranks `0, 1, ...`.
pub fn limit_lower_bound<Q: Scalar>(chain: &[HCondition<Q>]) -> Result<HCondition<Q>, HError> {
    check_chain(chain, true)?;
    let last = chain.last().expect("nonempty");
    let blocks: Vec<usize> = blocks_of(last).into_iter().collect();
    let k = blocks.len().max(1);
    let g = Grown::new(&last.tree, |_| (0..k).map(Q::from_index).collect());
    let branch_map = last
        .branch_map
        .iter()
        .map(|(&xi, &n)| {
            let r = blocks.binary_search(&last.block(xi)).expect("present block");
            (xi, g.child(n, r))
        })
        .collect();
    finish(last, g.tree, branch_map)
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Pairs `(xi, eta)` with `pi(t, s)(b(xi)) = b(eta)` for some family pair.
fn links<Q: Scalar>(q: &HCondition<Q>) -> Vec<(Index, Index)> {
    let owner: BTreeMap<NodeId, Index> = q.branch_map.iter().map(|(&k, &v)| (v, k)).collect();
    let t = &q.tree;
    let mut out = Vec::new();
    for (&xi, &bx) in &q.branch_map {
        for h in 0..q.alpha.min(t.height()) {
            let Some(a) = t.ancestor_at(bx, h) else { continue };
            for s in &t.levels()[h] {
                if let Some(&eta) = q
                    .family
                    .get(a, s.id)
                    .and_then(|m| m.get(bx))
                    .and_then(|img| owner.get(&img))
                {
                    if eta != xi {
                        out.push((xi, eta));
                    }
                }
            }
        }
    }
    out
}

/// A common extension of two conditions on the same tree. Indices linked in
/// either condition form components; each component gets its own child rank
/// on the new level, ordered by least index, so the result does not depend
/// on argument order.
pub fn amalgamate<Q: Scalar>(p: &HCondition<Q>, q: &HCondition<Q>) -> Result<HCondition<Q>, HError> {
    if p.alpha != q.alpha || p.tree != q.tree {
        return Err(HError::TreeMismatch);
    }
    if p.family != q.family {
        return Err(HError::FamilyMismatch);
    }
    if p.club != q.club {
        return Err(HError::ClubMismatch);
    }
    let mut joint = p.branch_map.clone();
    for (&xi, &n) in &q.branch_map {
        if *joint.entry(xi).or_insert(n) != n {
            return Err(HError::BranchDisagree(xi));
        }
    }
    let dom: Vec<Index> = joint.keys().copied().collect();
    let pos = |xi: Index| dom.binary_search(&xi).expect("joint index");
    let mut dsu = Dsu((0..dom.len()).collect());
    for (a, b) in links(p).into_iter().chain(links(q)) {
        if p.block(a) != p.block(b) {
            return Err(HError::ClubInconsistent(a.min(b), a.max(b)));
        }
        dsu.union(pos(a), pos(b));
    }
    let mut comp_rank: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..dom.len() {
        let root = dsu.find(i);
        let next = comp_rank.len();
        comp_rank.entry(root).or_insert(next);
    }
    let mut seen: BTreeMap<(NodeId, usize), Index> = BTreeMap::new();
    for (i, &xi) in dom.iter().enumerate() {
        let r = comp_rank[&dsu.find(i)];
        if let Some(&eta) = seen.get(&(joint[&xi], r)) {
            return Err(HError::Collision(eta, xi));
        }
        seen.insert((joint[&xi], r), xi);
    }
    let k = comp_rank.len().max(1);
    let g = Grown::new(&p.tree, |_| (0..k).map(Q::from_index).collect());
    let branch_map = dom
        .iter()
        .enumerate()
        .map(|(i, &xi)| (xi, g.child(joint[&xi], comp_rank[&dsu.find(i)])))
        .collect();
    finish(p, g.tree, branch_map)
}

/// The tree, indexed branches and family generated by a descending run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericTree<Q> {
    pub tree: LexTree<Q>,
    pub branches: BTreeMap<Index, Branch>,
    /// Height of the first condition in the run whose domain holds the index.
    pub first_level: BTreeMap<Index, usize>,
    pub family: IsoFamily,
}

pub fn assemble_generic<Q: Scalar>(run: &[HCondition<Q>]) -> Result<GenericTree<Q>, HError> {
    check_chain(run, false)?;
    let last = run.last().expect("nonempty");
    let mut first_level = BTreeMap::new();
    for q in run {
        for &xi in q.branch_map.keys() {
            first_level.entry(xi).or_insert(q.alpha);
        }
    }
    let branches = last
        .branch_map
        .iter()
        .map(|(&xi, &n)| (xi, last.tree.path_to(n).expect("indexed node")))
        .collect();
    Ok(GenericTree {
        tree: last.tree.clone(),
        branches,
        first_level,
        family: last.family.clone(),
    })
}

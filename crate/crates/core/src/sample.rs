//! Seeded random instances for property checks and scenario smoke runs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng as _;

use crate::capture::CaptureSet;
use crate::fposet::{f_add_pair, FAmbient, FCondition};
use crate::hposet::{add_branch_index, extend_height, HCondition, Policy};
use crate::ids::{ElemId, Index};
use crate::lextree::{LexTree, Shape};
use crate::order::{LinOrder, OrderTerm};
use crate::pposet::{p_add_branch, PAmbient, PCondition};
use crate::scalar::Scalar;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy)]
pub struct HChainParams {
    pub max_len: usize,
    pub max_height: usize,
    pub max_fanout: usize,
    pub max_dom: usize,
    pub universe: Index,
    /// Levels wider than this grow with the smallest admissible fanout.
    pub max_width: usize,
}

impl Default for HChainParams {
    fn default() -> Self {
        HChainParams {
            max_len: 5,
            max_height: 6,
            max_fanout: 3,
            max_dom: 5,
            universe: 20,
            max_width: 48,
        }
    }
}

pub fn random_club(rng: &mut Rng, universe: Index, max_points: usize) -> BTreeSet<Index> {
    let k = rng.gen_range(0..=max_points);
    (0..universe).choose_multiple(rng, k).into_iter().collect()
}

/// `None` when even the least admissible fanout exceeds `max_fanout`.
fn pick_fanout<Q: Scalar>(rng: &mut Rng, p: &HCondition<Q>, params: &HChainParams, spare: usize) -> Option<usize> {
    let blocks: BTreeSet<usize> = p.branch_map.keys().map(|&x| p.block(x)).collect();
    let least = (blocks.len() + spare).max(1);
    let width = p.tree.levels()[p.tree.height()].len();
    if least > params.max_fanout {
        None
    } else if width > params.max_width || least == params.max_fanout {
        Some(least)
    } else {
        Some(rng.gen_range(least..=params.max_fanout))
    }
}

/// One random tactic step: raise the height or add a fresh index. Always
/// raises the height by at least one.
pub fn random_h_step<Q: Scalar>(rng: &mut Rng, p: &HCondition<Q>, params: &HChainParams) -> HCondition<Q> {
    let room = params.max_height.saturating_sub(p.alpha).max(1);
    if p.branch_map.len() < params.max_dom && rng.gen_bool(0.6) {
        let fresh: Vec<Index> = (0..params.universe).filter(|x| !p.branch_map.contains_key(x)).collect();
        let fanout = pick_fanout(rng, p, params, 1);
        if let (Some(&xi), Some(fanout)) = (fresh.choose(rng), fanout) {
            let policy = Policy { fanout, seed: rng.gen() };
            if let Ok(q) = add_branch_index(p, xi, policy) {
                return q;
            }
        }
    }
    let step = rng.gen_range(1..=room.min(2));
    let policy = Policy {
        fanout: pick_fanout(rng, p, params, 0).unwrap_or(params.max_fanout.max(1)),
        seed: rng.gen(),
    };
    extend_height(p, p.alpha + step, policy).expect("fanout covers blocks")
}

/// A descending chain with strictly increasing heights.
pub fn random_h_chain<Q: Scalar>(rng: &mut Rng, params: &HChainParams) -> Vec<HCondition<Q>> {
    let club = random_club(rng, params.universe, 2);
    let mut cur = HCondition::trivial(club);
    let len = rng.gen_range(1..=params.max_len);
    let mut chain = Vec::with_capacity(len);
    while chain.len() < len && cur.alpha < params.max_height {
        cur = random_h_step(rng, &cur, params);
        chain.push(cur.clone());
    }
    if chain.is_empty() {
        chain.push(cur);
    }
    chain
}

/// Conditions sharing one tree, family and club: a pool of root indices in
/// one club block over fixed nodes, and for every member a private block of
/// its own.
/// Members take a random subset of the root pool plus up to two private
/// indices, placed off the root pool's rank class.
pub fn random_compatible_family<Q: Scalar>(rng: &mut Rng, size: usize, universe: Index) -> Vec<HCondition<Q>> {
    let size = size.max(1);
    let root_end = universe / 5;
    let width = ((universe - root_end) / size as Index).max(1);
    let club: BTreeSet<Index> = (0..size as Index).map(|i| root_end + i * width).collect();
    let n_root = rng.gen_range(0..=root_end.min(4) as usize);
    let pool: Vec<Index> = (0..root_end).choose_multiple(rng, n_root);

    let mut base = HCondition::trivial(club);
    base = extend_height(&base, 1, Policy { fanout: 2, seed: rng.gen() }).expect("empty domain");
    for &xi in &pool {
        base = add_branch_index(&base, xi, Policy { fanout: 2, seed: rng.gen() }).expect("routing");
    }
    let base = extend_height(&base, base.alpha + 1, Policy { fanout: 2, seed: rng.gen() }).expect("one block");
    let root_rank = base.branch_map.values().next().and_then(|&n| base.tree.sibling_rank(n));
    let free: Vec<_> = {
        let used: BTreeSet<_> = base.branch_map.values().copied().collect();
        base.tree
            .level_lex(base.alpha)
            .into_iter()
            .filter(|&n| !used.contains(&n) && base.tree.sibling_rank(n) != root_rank)
            .collect()
    };

    (0..size)
        .map(|i| {
            let mut q = base.clone();
            q.branch_map.retain(|_, _| rng.gen_bool(0.7));
            let lo = root_end + i as Index * width;
            let hi = if i + 1 == size { universe } else { lo + width };
            let mine: Vec<Index> = (lo..hi).collect();
            let k = rng.gen_range(0..=2.min(mine.len()));
            let nodes: Vec<_> = free.choose_multiple(rng, k).copied().collect();
            for (&xi, n) in mine.choose_multiple(rng, k).zip(nodes) {
                q.branch_map.insert(xi, n);
            }
            q
        })
        .collect()
}

/// A uniform tree of the given fanout with levels `0..levels`.
pub fn full_tree<Q: Scalar>(fanout: usize, levels: usize) -> LexTree<Q> {
    fn grow<Q: Scalar>(fanout: usize, h: usize, label: usize) -> Shape<Q> {
        let kids = if h == 0 { vec![] } else { (0..fanout).map(|k| grow(fanout, h - 1, k)).collect() };
        Shape(Q::from_index(label), kids)
    }
    LexTree::from_spec(&[grow(fanout, levels.saturating_sub(1), 0)])
}

/// An ambient with every branch indexed, a descending chain below level
/// `delta`, and an index permutation whose mirrored chain is compatible.
#[derive(Debug, Clone)]
pub struct FInstance<Q> {
    pub amb: FAmbient<Q>,
    pub chain: Vec<FCondition>,
    pub delta: usize,
    pub mirror: BTreeMap<Index, Index>,
}

pub fn random_f_ambient<Q: Scalar>(rng: &mut Rng) -> FAmbient<Q> {
    let fanout = rng.gen_range(2..=3);
    let levels = if fanout == 2 { rng.gen_range(3..=5) } else { rng.gen_range(3..=4) };
    let tree = full_tree(fanout, levels);
    let n = fanout.pow(levels as u32 - 1);
    let mut idx: Vec<Index> = (0..1000).choose_multiple(rng, n);
    idx.shuffle(rng);
    let x = idx.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    let y = idx.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    FAmbient::over_all_branches(tree, &idx, x, y).expect("homogeneous")
}

fn agree_upto(amb: &FAmbient<impl Scalar>, a: Index, b: Index, delta: usize) -> bool {
    amb.branches[&a].nodes[..=delta] == amb.branches[&b].nodes[..=delta]
}

pub fn random_f_instance<Q: Scalar>(rng: &mut Rng) -> FInstance<Q> {
    let amb = random_f_ambient::<Q>(rng);
    let top = amb.tree.height();
    let delta = if rng.gen_bool(0.2) { top } else { rng.gen_range(1..top) };
    let len = rng.gen_range(1..=delta.min(5));
    let mut alphas = (0..delta).choose_multiple(rng, len);
    alphas.sort_unstable();
    let idx: Vec<Index> = amb.branches.keys().copied().collect();

    let mut chain: Vec<FCondition> = Vec::with_capacity(len);
    let mut a = BTreeSet::new();
    let mut phi = BTreeMap::new();
    for &alpha in &alphas {
        a.insert(alpha);
        a.extend((0..alpha).filter(|_| rng.gen_bool(0.3)));
        let mut cur = FCondition::identity(&amb.tree, a.clone());
        cur.phi = phi.clone();
        for _ in 0..rng.gen_range(1..=3) {
            let &xi = idx.choose(rng).expect("nonempty");
            let eta = if amb.x.contains(&xi) && rng.gen_bool(0.6) {
                let ys: Vec<Index> = idx
                    .iter()
                    .copied()
                    .filter(|&e| e != xi && amb.y.contains(&e) && agree_upto(&amb, xi, e, delta))
                    .collect();
                match ys.choose(rng) {
                    Some(&e) => e,
                    None => continue,
                }
            } else {
                xi
            };
            if cur.phi.contains_key(&xi) {
                continue;
            }
            if let Ok(next) = f_add_pair(&amb, &cur, xi, eta) {
                cur = next;
            }
        }
        phi = cur.phi.clone();
        chain.push(cur);
    }

    let used: BTreeSet<Index> = phi.iter().flat_map(|(&a, &b)| [a, b]).collect();
    let rank: BTreeMap<Index, usize> = {
        let order = amb.tree.branches();
        amb.branches.iter().map(|(&i, b)| (i, order.iter().position(|o| o == b).expect("branch"))).collect()
    };
    let mut mirror = BTreeMap::new();
    for (&xi, _) in phi.iter().filter(|(a, b)| a == b) {
        let (r, lo_hi) = (rank[&xi], |a: usize, b: usize| (a.min(b), a.max(b)));
        let options: Vec<Index> = idx
            .iter()
            .copied()
            .filter(|&e| {
                let (lo, hi) = lo_hi(r, rank[&e]);
                !used.contains(&e)
                    && !mirror.contains_key(&e)
                    && amb.x.contains(&e) == amb.x.contains(&xi)
                    && amb.y.contains(&e) == amb.y.contains(&xi)
                    && agree_upto(&amb, xi, e, delta)
                    && !used.iter().any(|u| *u != xi && lo < rank[u] && rank[u] < hi)
            })
            .collect();
        if let Some(&e) = options.choose(rng) {
            mirror.insert(xi, e);
            mirror.insert(e, xi);
        }
    }
    FInstance { amb, chain, delta, mirror }
}

/// A full tree with every branch indexed and a random nonempty `L`.
pub fn random_p_ambient<Q: Scalar>(rng: &mut Rng) -> PAmbient<Q> {
    let fanout = rng.gen_range(2..=3);
    let levels = rng.gen_range(2..=4);
    let tree: LexTree<Q> = full_tree(fanout, levels);
    let all = tree.branches();
    let mut idx: Vec<Index> = (0..1000).choose_multiple(rng, all.len());
    idx.shuffle(rng);
    let branches: BTreeMap<Index, _> = idx.iter().copied().zip(all).collect();
    let mut l: BTreeSet<Index> = idx.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    if l.is_empty() {
        l.insert(idx[0]);
    }
    PAmbient {
        tree,
        branches,
        l,
        allow_closure: false,
    }
}

/// A valid condition grown by a few admissible branch additions.
pub fn random_p_condition<Q: Scalar>(rng: &mut Rng, amb: &PAmbient<Q>) -> PCondition<Q> {
    let l: Vec<Index> = amb.l.iter().copied().collect();
    let mut p = PCondition { seq: Vec::new() };
    for _ in 0..rng.gen_range(0..=4) {
        let &xi = l.choose(rng).expect("nonempty");
        if let Ok(q) = p_add_branch(amb, &p, xi) {
            p = q;
        }
    }
    p
}

fn random_scalar<Q: Scalar>(rng: &mut Rng) -> Q {
    Q::from_ratio(rng.gen_range(-40..=40), rng.gen_range(1..=6))
}

/// A finite order with distinct positions and short string ids.
pub fn random_order<Q: Scalar>(rng: &mut Rng, max_len: usize) -> LinOrder<Q> {
    let mut pos = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=max_len) {
        pos.insert(random_scalar::<Q>(rng));
    }
    let ids = (0..1000u64).choose_multiple(rng, pos.len());
    let elems = ids.into_iter().map(|k| ElemId(format!("e{k}"))).zip(pos).collect();
    LinOrder::new(elems).expect("distinct ids and positions")
}

pub fn random_term(rng: &mut Rng, depth: usize) -> OrderTerm {
    if depth <= 1 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 => OrderTerm::Fin(rng.gen_range(1..=5)),
            1 => OrderTerm::Omega,
            2 => OrderTerm::OmegaStar,
            _ => OrderTerm::Eta,
        };
    }
    match rng.gen_range(0..3) {
        0 => OrderTerm::Sum((0..rng.gen_range(1..=3)).map(|_| random_term(rng, depth - 1)).collect()),
        1 => random_term(rng, depth - 1).omega_sum(),
        _ => random_term(rng, depth - 1).omega_star_sum(),
    }
}

/// Random cuts plus random branches and nodes of `tree`.
pub fn random_capture_set<Q: Scalar>(rng: &mut Rng, tree: &LexTree<Q>) -> CaptureSet<Q> {
    let mut z = CaptureSet::default();
    for _ in 0..rng.gen_range(0..=4) {
        z.cuts.insert(random_scalar(rng));
    }
    let branches = tree.branches();
    let k = rng.gen_range(0..=branches.len().min(4));
    z.branches.extend(branches.choose_multiple(rng, k).cloned());
    let nodes: Vec<_> = tree.levels().iter().flatten().map(|n| n.id).collect();
    let k = rng.gen_range(0..=nodes.len().min(4));
    z.nodes.extend(nodes.choose_multiple(rng, k).copied());
    z
}

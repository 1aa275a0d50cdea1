use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::ids::Index;

/// Families up to this size are searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSystem {
    pub root: BTreeSet<Index>,
    pub positions: Vec<usize>,
    /// False when the greedy heuristic was used.
    pub exhaustive: bool,
}

fn common_root(domains: &[BTreeSet<Index>], pick: &[usize]) -> Option<BTreeSet<Index>> {
    match pick {
        [] => None,
        [i] => Some(domains[*i].clone()),
        [i, j, ..] => {
            let root: BTreeSet<Index> = domains[*i].intersection(&domains[*j]).copied().collect();
            pick.iter()
                .tuple_combinations()
                .all(|(&a, &b)| domains[a].intersection(&domains[b]).eq(root.iter()))
                .then_some(root)
        }
    }
}

/// A largest subfamily whose pairwise intersections coincide. Among those of
/// maximal size the lexicographically least position list wins. A single set
/// is its own root.
pub fn delta_system(domains: &[BTreeSet<Index>]) -> DeltaSystem {
    let n = domains.len();
    if n == 0 {
        return DeltaSystem {
            root: BTreeSet::new(),
            positions: vec![],
            exhaustive: true,
        };
    }
    if n <= EXHAUSTIVE_LIMIT {
        for size in (1..=n).rev() {
            for pick in (0..n).combinations(size) {
                if let Some(root) = common_root(domains, &pick) {
                    return DeltaSystem {
                        root,
                        positions: pick,
                        exhaustive: true,
                    };
                }
            }
        }
        unreachable!("a single set is always a delta system");
    }
    greedy(domains)
}

fn greedy(domains: &[BTreeSet<Index>]) -> DeltaSystem {
    let n = domains.len();
    let mut best = DeltaSystem {
        root: domains[0].clone(),
        positions: vec![0],
        exhaustive: false,
    };
    let roots: BTreeSet<BTreeSet<Index>> = (0..n)
        .tuple_combinations()
        .map(|(i, j)| domains[i].intersection(&domains[j]).copied().collect())
        .collect();
    for root in roots {
        let mut pick: Vec<usize> = Vec::new();
        for i in 0..n {
            if !root.is_subset(&domains[i]) {
                continue;
            }
            if pick.iter().all(|&j| domains[i].intersection(&domains[j]).eq(root.iter())) {
                pick.push(i);
            }
        }
        if pick.len() > best.positions.len() || (pick.len() == best.positions.len() && pick < best.positions) {
            best = DeltaSystem {
                root,
                positions: pick,
                exhaustive: false,
            };
        }
    }
    best
}

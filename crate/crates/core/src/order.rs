//! Finite linear orders with exact positions, the countable order-type term
//! algebra, ladder (Baumgartner) orders and gap quotients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ids::ElemId;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("duplicate element id `{0}`")]
    DuplicateId(ElemId),
    #[error("elements `{0}` and `{1}` share a position")]
    DuplicatePosition(ElemId, ElemId),
    #[error("ladder at {index} is invalid: {reason}")]
    BadLadder { index: u64, reason: &'static str },
    #[error("indices {0} and {1} carry identical ladders")]
    DuplicateLadder(u64, u64),
    #[error("element `{0}` is not in the ambient order")]
    UnknownElement(ElemId),
    #[error("empty class at position {0}")]
    EmptyClass(usize),
    #[error("term contains eta and has no Hausdorff rank")]
    NotScattered,
    #[error("bad order term: {0}")]
    Term(String),
}

/// A finite linear order; elements are kept sorted by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinOrder<Q> {
    elements: Vec<(ElemId, Q)>,
}

impl<Q: Scalar> LinOrder<Q> {
    pub fn new(elements: Vec<(ElemId, Q)>) -> Result<Self, OrderError> {
        let mut ids = BTreeSet::new();
        for (id, _) in &elements {
            if !ids.insert(id.clone()) {
                return Err(OrderError::DuplicateId(id.clone()));
            }
        }
        let mut elements = elements;
        elements.sort_by(|a, b| a.1.cmp(&b.1));
        if let Some(w) = elements.windows(2).find(|w| w[0].1 == w[1].1) {
            return Err(OrderError::DuplicatePosition(w[0].0.clone(), w[1].0.clone()));
        }
        Ok(LinOrder { elements })
    }

    /// Elements `0, 1, ..., n-1` at positions `0, 1, ..., n-1`.
    pub fn range(n: usize) -> Self {
        LinOrder {
            elements: (0..n)
                .map(|i| (ElemId::from(i as u64), Q::from_index(i)))
                .collect(),
        }
    }

    pub fn from_positions(ps: &[Q]) -> Result<Self, OrderError> {
        Self::new(
            ps.iter()
                .map(|p| (ElemId(p.to_text()), p.clone()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements in increasing order.
    pub fn elements(&self) -> &[(ElemId, Q)] {
        &self.elements
    }

    pub fn positions(&self) -> impl Iterator<Item = &Q> {
        self.elements.iter().map(|(_, p)| p)
    }

    pub fn pos(&self, id: &ElemId) -> Option<&Q> {
        self.elements.iter().find(|(e, _)| e == id).map(|(_, p)| p)
    }

    pub fn rank_of(&self, id: &ElemId) -> Option<usize> {
        self.elements.iter().position(|(e, _)| e == id)
    }

    pub fn contains_pos(&self, q: &Q) -> bool {
        self.elements
            .binary_search_by(|(_, p)| p.cmp(q))
            .is_ok()
    }

    /// Number of elements strictly between two positions.
    pub fn count_between(&self, a: &Q, b: &Q) -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.elements
            .iter()
            .filter(|(_, p)| lo < p && p < hi)
            .count()
    }
}

/// Countable order types built from finite orders, omega, its reverse and
/// the rationals by finite sums and omega / omega* indexed sums.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrderTerm {
    Fin(u64),
    Omega,
    OmegaStar,
    Eta,
    Sum(Vec<OrderTerm>),
    OmegaSum(Box<OrderTerm>),
    OmegaStarSum(Box<OrderTerm>),
}

impl OrderTerm {
    pub fn validate(&self) -> Result<(), OrderError> {
        match self {
            OrderTerm::Fin(0) => Err(OrderError::Term("fin(0) is not allowed".into())),
            OrderTerm::Sum(cs) if cs.is_empty() => {
                Err(OrderError::Term("empty sum".into()))
            }
            OrderTerm::Sum(cs) => cs.iter().try_for_each(OrderTerm::validate),
            OrderTerm::OmegaSum(b) | OrderTerm::OmegaStarSum(b) => b.validate(),
            _ => Ok(()),
        }
    }

    /// A term embeds the rationals exactly when an `eta` node occurs in it.
    pub fn is_scattered(&self) -> bool {
        match self {
            OrderTerm::Eta => false,
            OrderTerm::Fin(_) | OrderTerm::Omega | OrderTerm::OmegaStar => true,
            OrderTerm::Sum(cs) => cs.iter().all(OrderTerm::is_scattered),
            OrderTerm::OmegaSum(b) | OrderTerm::OmegaStarSum(b) => b.is_scattered(),
        }
    }

    pub fn hausdorff_rank(&self) -> Result<u32, OrderError> {
        match self {
            OrderTerm::Eta => Err(OrderError::NotScattered),
            OrderTerm::Fin(_) => Ok(0),
            OrderTerm::Omega | OrderTerm::OmegaStar => Ok(1),
            OrderTerm::Sum(cs) => cs
                .iter()
                .map(OrderTerm::hausdorff_rank)
                .try_fold(0, |m, r| r.map(|r| m.max(r))),
            OrderTerm::OmegaSum(b) | OrderTerm::OmegaStarSum(b) => Ok(b.hausdorff_rank()? + 1),
        }
    }

    pub fn omega_sum(self) -> Self {
        OrderTerm::OmegaSum(Box::new(self))
    }

    pub fn omega_star_sum(self) -> Self {
        OrderTerm::OmegaStarSum(Box::new(self))
    }

    pub fn depth(&self) -> usize {
        match self {
            OrderTerm::Sum(cs) => 1 + cs.iter().map(OrderTerm::depth).max().unwrap_or(0),
            OrderTerm::OmegaSum(b) | OrderTerm::OmegaStarSum(b) => 1 + b.depth(),
            _ => 1,
        }
    }
}

impl fmt::Display for OrderTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderTerm::Fin(n) => write!(f, "fin({n})"),
            OrderTerm::Omega => f.write_str("omega"),
            OrderTerm::OmegaStar => f.write_str("omega*"),
            OrderTerm::Eta => f.write_str("eta"),
            OrderTerm::Sum(cs) => {
                f.write_str("sum(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            OrderTerm::OmegaSum(b) => write!(f, "wsum({b})"),
            OrderTerm::OmegaStarSum(b) => write!(f, "w*sum({b})"),
        }
    }
}

impl FromStr for OrderTerm {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = TermParser {
            src: compact.as_bytes(),
            at: 0,
        };
        let t = p.term()?;
        if p.at != p.src.len() {
            return Err(OrderError::Term(format!("trailing input at {}", p.at)));
        }
        t.validate()?;
        Ok(t)
    }
}

struct TermParser<'a> {
    src: &'a [u8],
    at: usize,
}

impl TermParser<'_> {
    fn eat(&mut self, tok: &str) -> bool {
        if self.src[self.at..].starts_with(tok.as_bytes()) {
            self.at += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), OrderError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(OrderError::Term(format!("expected `{tok}` at {}", self.at)))
        }
    }

    fn term(&mut self) -> Result<OrderTerm, OrderError> {
        // Longer keywords first: `w*sum` before `wsum`, `omega*` before `omega`.
        if self.eat("fin(") {
            let start = self.at;
            while self.at < self.src.len() && self.src[self.at].is_ascii_digit() {
                self.at += 1;
            }
            let n: u64 = std::str::from_utf8(&self.src[start..self.at])
                .ok()
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| OrderError::Term(format!("bad number at {start}")))?;
            self.expect(")")?;
            Ok(OrderTerm::Fin(n))
        } else if self.eat("omega*") {
            Ok(OrderTerm::OmegaStar)
        } else if self.eat("omega") {
            Ok(OrderTerm::Omega)
        } else if self.eat("eta") {
            Ok(OrderTerm::Eta)
        } else if self.eat("sum(") {
            let mut cs = vec![self.term()?];
            while self.eat(",") {
                cs.push(self.term()?);
            }
            self.expect(")")?;
            Ok(OrderTerm::Sum(cs))
        } else if self.eat("w*sum(") {
            let b = self.term()?;
            self.expect(")")?;
            Ok(b.omega_star_sum())
        } else if self.eat("wsum(") {
            let b = self.term()?;
            self.expect(")")?;
            Ok(b.omega_sum())
        } else {
            Err(OrderError::Term(format!("unexpected input at {}", self.at)))
        }
    }
}

/// Lexicographic comparison with the prefix rule: a proper prefix is smaller.
pub fn ladder_lex_compare(a: &[u64], b: &[u64]) -> Ordering {
    a.cmp(b)
}

/// Strictly increasing ladders keyed by limit index, every entry below its key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderOrder {
    ladders: BTreeMap<u64, Vec<u64>>,
}

impl LadderOrder {
    pub fn new(ladders: BTreeMap<u64, Vec<u64>>) -> Result<Self, OrderError> {
        for (&index, l) in &ladders {
            if l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(OrderError::BadLadder {
                    index,
                    reason: "not strictly increasing",
                });
            }
            if l.iter().any(|&e| e >= index) {
                return Err(OrderError::BadLadder {
                    index,
                    reason: "entry not below its index",
                });
            }
        }
        Ok(LadderOrder { ladders })
    }

    pub fn ladders(&self) -> &BTreeMap<u64, Vec<u64>> {
        &self.ladders
    }
}

/// The ladders ordered lexicographically, as a linear order on their keys.
pub fn make_baumgartner<Q: Scalar>(l: &LadderOrder) -> Result<LinOrder<Q>, OrderError> {
    let mut keyed: Vec<(u64, &Vec<u64>)> = l.ladders.iter().map(|(&k, v)| (k, v)).collect();
    keyed.sort_by(|a, b| ladder_lex_compare(a.1, b.1));
    if let Some(w) = keyed.windows(2).find(|w| w[0].1 == w[1].1) {
        let (x, y) = (w[0].0.min(w[1].0), w[0].0.max(w[1].0));
        return Err(OrderError::DuplicateLadder(x, y));
    }
    LinOrder::new(
        keyed
            .into_iter()
            .enumerate()
            .map(|(i, (k, _))| (ElemId::from(k), Q::from_index(i)))
            .collect(),
    )
}

/// Convex classes of `sub` under the transitive closure of "at most `k`
/// ambient elements strictly between". Listed in ambient order.
pub fn gap_quotient<Q: Scalar>(
    ambient: &LinOrder<Q>,
    sub: &BTreeSet<ElemId>,
    k: usize,
) -> Result<Vec<Vec<ElemId>>, OrderError> {
    let mut ranked = Vec::with_capacity(sub.len());
    for id in sub {
        let r = ambient
            .rank_of(id)
            .ok_or_else(|| OrderError::UnknownElement(id.clone()))?;
        ranked.push((r, id.clone()));
    }
    ranked.sort();
    // Between two sub-neighbours at ranks r < s lie exactly s - r - 1 ambient
    // elements; any longer link is implied by the chain of neighbours.
    let mut classes: Vec<Vec<ElemId>> = Vec::new();
    let mut prev: Option<usize> = None;
    for (r, id) in ranked {
        match (prev, classes.last_mut()) {
            (Some(p), Some(last)) if r - p - 1 <= k => last.push(id),
            _ => classes.push(vec![id]),
        }
        prev = Some(r);
    }
    Ok(classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransversalRule {
    First,
    Last,
}

pub fn select_transversal(
    classes: &[Vec<ElemId>],
    rule: TransversalRule,
) -> Result<Vec<ElemId>, OrderError> {
    classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let pick = match rule {
                TransversalRule::First => c.first(),
                TransversalRule::Last => c.last(),
            };
            pick.cloned().ok_or(OrderError::EmptyClass(i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn ids(v: &[u64]) -> BTreeSet<ElemId> {
        v.iter().map(|&k| ElemId::from(k)).collect()
    }

    #[test]
    fn ladder_compare_examples() {
        assert_eq!(ladder_lex_compare(&[1, 3, 5], &[1, 3, 5]), Ordering::Equal);
        assert_eq!(ladder_lex_compare(&[1, 3], &[1, 4]), Ordering::Less);
        assert_eq!(ladder_lex_compare(&[1, 3], &[1, 3, 5]), Ordering::Less);
    }

    #[test]
    fn ladder_compare_is_total_order_on_small_ladders() {
        let mut all: Vec<Vec<u64>> = vec![vec![]];
        for len in 1..=3 {
            for mask in 0u32..(1 << 6) {
                if mask.count_ones() as usize == len {
                    all.push((0..6).filter(|i| mask & (1 << i) != 0).collect());
                }
            }
        }
        for a in &all {
            for b in &all {
                let ab = ladder_lex_compare(a, b);
                assert_eq!(ab, ladder_lex_compare(b, a).reverse());
                assert_eq!(ab == Ordering::Equal, a == b);
                for c in &all {
                    if ab == Ordering::Less && ladder_lex_compare(b, c) == Ordering::Less {
                        assert_eq!(ladder_lex_compare(a, c), Ordering::Less);
                    }
                }
            }
        }
    }

    #[test]
    fn baumgartner_examples() {
        let l = LadderOrder::new(BTreeMap::from([(5, vec![1, 3]), (7, vec![1, 4])])).unwrap();
        let o: LinOrder<Rational> = make_baumgartner(&l).unwrap();
        let keys: Vec<_> = o.elements().iter().map(|(e, _)| e.0.clone()).collect();
        assert_eq!(keys, ["5", "7"]);

        let single = LadderOrder::new(BTreeMap::from([(5, vec![2])])).unwrap();
        assert_eq!(make_baumgartner::<Rational>(&single).unwrap().len(), 1);

        let dup = LadderOrder::new(BTreeMap::from([(5, vec![1, 3]), (9, vec![1, 3])])).unwrap();
        assert_eq!(
            make_baumgartner::<Rational>(&dup),
            Err(OrderError::DuplicateLadder(5, 9))
        );
    }

    #[test]
    fn ladder_validation() {
        assert!(LadderOrder::new(BTreeMap::from([(5, vec![3, 1])])).is_err());
        assert!(LadderOrder::new(BTreeMap::from([(5, vec![1, 5])])).is_err());
    }

    #[test]
    fn scattered_and_rank_examples() {
        assert!(!OrderTerm::Eta.is_scattered());
        assert!(OrderTerm::OmegaStar.omega_sum().is_scattered());
        assert!(OrderTerm::Fin(1).is_scattered());
        assert_eq!(OrderTerm::Fin(3).hausdorff_rank(), Ok(0));
        assert_eq!(OrderTerm::Fin(1).omega_sum().hausdorff_rank(), Ok(1));
        assert_eq!(
            OrderTerm::Fin(1).omega_sum().omega_sum().hausdorff_rank(),
            Ok(2)
        );
        assert_eq!(
            OrderTerm::Sum(vec![OrderTerm::Omega, OrderTerm::Eta]).hausdorff_rank(),
            Err(OrderError::NotScattered)
        );
    }

    #[test]
    fn term_text_syntax() {
        let t: OrderTerm = "sum(fin(2), wsum(omega*), w*sum(eta))".parse().unwrap();
        assert_eq!(t.to_string(), "sum(fin(2),wsum(omega*),w*sum(eta))");
        assert!("fin(0)".parse::<OrderTerm>().is_err());
        assert!("sum()".parse::<OrderTerm>().is_err());
        assert!("omega omega".parse::<OrderTerm>().is_err());
    }

    #[test]
    fn gap_quotient_examples() {
        let amb = LinOrder::<Rational>::range(10);
        assert_eq!(gap_quotient(&amb, &ids(&[0, 9]), 3).unwrap().len(), 2);
        assert_eq!(gap_quotient(&amb, &ids(&[0, 2]), 3).unwrap().len(), 1);
        let chained = gap_quotient(&amb, &ids(&[0, 4, 8]), 3).unwrap();
        assert_eq!(chained, vec![vec![ElemId::from(0), 4.into(), 8.into()]]);
        assert!(gap_quotient(&amb, &ids(&[11]), 3).is_err());
    }

    #[test]
    fn transversal_examples() {
        let a = ElemId::from("a");
        let b = ElemId::from("b");
        let c = ElemId::from("c");
        let d = ElemId::from("d");
        let cls = vec![vec![a.clone()], vec![b.clone(), c.clone()]];
        assert_eq!(
            select_transversal(&cls, TransversalRule::First).unwrap(),
            vec![a.clone(), b.clone()]
        );
        assert_eq!(
            select_transversal(&[vec![a.clone()]], TransversalRule::Last).unwrap(),
            vec![a.clone()]
        );
        let cls = vec![vec![a, b.clone()], vec![c, d.clone()]];
        assert_eq!(
            select_transversal(&cls, TransversalRule::Last).unwrap(),
            vec![b, d]
        );
        assert_eq!(
            select_transversal(&[vec![]], TransversalRule::First),
            Err(OrderError::EmptyClass(0))
        );
    }

    #[test]
    fn lin_order_rejects_duplicates() {
        let q = Rational::from_index(1);
        assert!(LinOrder::new(vec![("a".into(), q), ("b".into(), q)]).is_err());
        assert!(LinOrder::new(vec![("a".into(), q), ("a".into(), q + q)]).is_err());
    }

    fn arb_term() -> impl proptest::strategy::Strategy<Value = OrderTerm> {
        use proptest::prelude::*;
        let leaf = prop_oneof![
            (1u64..5).prop_map(OrderTerm::Fin),
            Just(OrderTerm::Omega),
            Just(OrderTerm::OmegaStar),
            Just(OrderTerm::Eta),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 1..4).prop_map(OrderTerm::Sum),
                inner.clone().prop_map(OrderTerm::omega_sum),
                inner.prop_map(OrderTerm::omega_star_sum),
            ]
        })
    }

    /// Classes of the closure of the pairwise relation, by repeated merging.
    fn closure_classes(ranks: &[usize], k: usize) -> BTreeSet<BTreeSet<usize>> {
        let n = ranks.len();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = ranks[i].abs_diff(ranks[j]) <= k + 1;
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    reach[i][j] |= reach[i][m] && reach[m][j];
                }
            }
        }
        (0..n)
            .map(|i| (0..n).filter(|&j| reach[i][j]).map(|j| ranks[j]).collect())
            .collect()
    }

    #[test]
    fn gap_quotient_matches_closure_on_small_ambients() {
        for size in 0..=8usize {
            let amb = LinOrder::<Rational>::range(size);
            for mask in 0u32..(1 << size) {
                let ranks: Vec<usize> = (0..size).filter(|i| mask & (1 << i) != 0).collect();
                let sub = ids(&ranks.iter().map(|&r| r as u64).collect::<Vec<_>>());
                for k in 0..=size {
                    let got = gap_quotient(&amb, &sub, k).unwrap();
                    let flat: Vec<usize> = got.iter().flatten().map(|e| amb.rank_of(e).unwrap()).collect();
                    assert_eq!(flat, ranks);
                    for w in got.windows(2) {
                        let last = amb.rank_of(w[0].last().unwrap()).unwrap();
                        let first = amb.rank_of(&w[1][0]).unwrap();
                        assert!(last < first);
                    }
                    let as_sets: BTreeSet<BTreeSet<usize>> = got
                        .iter()
                        .map(|c| c.iter().map(|e| amb.rank_of(e).unwrap()).collect())
                        .collect();
                    assert_eq!(as_sets, closure_classes(&ranks, k));
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn term_text_round_trips(t in arb_term()) {
            let back: OrderTerm = t.to_string().parse().unwrap();
            proptest::prop_assert_eq!(back, t);
        }

        #[test]
        fn scattered_iff_no_eta(t in arb_term()) {
            let has_eta = t.to_string().split(|c: char| !c.is_alphanumeric()).any(|w| w == "eta");
            proptest::prop_assert_eq!(t.is_scattered(), !has_eta);
            proptest::prop_assert_eq!(t.hausdorff_rank().is_ok(), !has_eta);
        }

        #[test]
        fn indexed_sums_raise_rank_by_one(t in arb_term()) {
            if let Ok(r) = t.hausdorff_rank() {
                proptest::prop_assert_eq!(t.clone().omega_sum().hausdorff_rank(), Ok(r + 1));
                proptest::prop_assert_eq!(t.omega_star_sum().hausdorff_rank(), Ok(r + 1));
            }
        }
    }
}

//! JSON encoding for every value kind. Documents are objects carrying a
//! mandatory `"schema"` version and a `"kind"` tag next to the value's own
//! fields. Rationals are `"num/den"` strings and node ids are `"n<k>"`.

use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::capture::CaptureSet;
use crate::fposet::{FAmbient, FCondition};
use crate::hposet::{DeltaSystem, HCondition};
use crate::ids::{ElemId, Index, NodeId, ParseNodeIdError};
use crate::lextree::{Branch, ConeMap, IsoFamily, LexTree, LexTreeError, Node};
use crate::order::{LinOrder, OrderError, OrderTerm};
use crate::pposet::{PAmbient, PCondition};
use crate::scalar::{ParseScalarError, Scalar};

pub const SCHEMA: u64 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("document is not a JSON object")]
    NotObject,
    #[error("missing schema version")]
    MissingSchema,
    #[error("unsupported schema version {0} (expected {SCHEMA})")]
    Schema(Value),
    #[error("expected a `{expected}` document, found `{found}`")]
    Kind { expected: String, found: String },
    #[error(transparent)]
    Scalar(#[from] ParseScalarError),
    #[error(transparent)]
    NodeId(#[from] ParseNodeIdError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Tree(#[from] LexTreeError),
    #[error("tree levels are not contiguous: level {0} is empty")]
    GapInLevels(usize),
    #[error("a canonical family needs an enclosing tree")]
    CanonicalWithoutTree,
}

/// A value with a JSON data-transfer form.
pub trait Codec: Sized {
    const KIND: &'static str;
    type Dto: Serialize + DeserializeOwned;

    fn to_dto(&self) -> Self::Dto;
    fn from_dto(dto: Self::Dto) -> Result<Self, FormatError>;
}

/// Wraps a DTO's fields with `schema` and `kind`.
pub fn envelope(kind: &str, dto: &impl Serialize) -> Value {
    let mut obj = match serde_json::to_value(dto).expect("DTOs serialize") {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    obj.insert("schema".into(), Value::from(SCHEMA));
    obj.insert("kind".into(), Value::from(kind));
    Value::Object(obj)
}

/// Checks `schema` and, when `expected` is given, `kind`; returns the kind
/// and the remaining fields.
pub fn open_envelope(v: Value, expected: Option<&str>) -> Result<(String, Value), FormatError> {
    let Value::Object(mut obj) = v else {
        return Err(FormatError::NotObject);
    };
    match obj.remove("schema") {
        None => return Err(FormatError::MissingSchema),
        Some(s) if s.as_u64() == Some(SCHEMA) => {}
        Some(s) => return Err(FormatError::Schema(s)),
    }
    let kind = match obj.remove("kind") {
        Some(Value::String(k)) => k,
        other => other.map(|v| v.to_string()).unwrap_or_default(),
    };
    if let Some(e) = expected {
        if kind != e {
            return Err(FormatError::Kind {
                expected: e.into(),
                found: kind,
            });
        }
    }
    Ok((kind, Value::Object(obj)))
}

pub fn to_value<T: Codec>(v: &T) -> Value {
    envelope(T::KIND, &v.to_dto())
}

pub fn to_json<T: Codec>(v: &T) -> String {
    serde_json::to_string_pretty(&to_value(v)).expect("values serialize")
}

pub fn from_value<T: Codec>(v: Value) -> Result<T, FormatError> {
    let (_, body) = open_envelope(v, Some(T::KIND))?;
    T::from_dto(serde_json::from_value(body)?)
}

pub fn from_json<T: Codec>(s: &str) -> Result<T, FormatError> {
    from_value(serde_json::from_str(s)?)
}

fn node(s: &str) -> Result<NodeId, FormatError> {
    Ok(s.parse()?)
}

fn nodes(v: &[String]) -> Result<Vec<NodeId>, FormatError> {
    v.iter().map(|s| node(s)).collect()
}

fn node_strings(v: &[NodeId]) -> Vec<String> {
    v.iter().map(|n| n.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDto {
    pub id: String,
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDto {
    pub nodes: Vec<NodeDto>,
}

impl<Q: Scalar> Codec for LexTree<Q> {
    const KIND: &'static str = "tree";
    type Dto = TreeDto;

    fn to_dto(&self) -> TreeDto {
        let nodes = self
            .levels()
            .iter()
            .enumerate()
            .flat_map(|(h, lv)| {
                lv.iter().map(move |n| NodeDto {
                    id: n.id.to_string(),
                    level: h,
                    parent: n.parent.map(|p| p.to_string()),
                    label: n.label.to_text(),
                })
            })
            .collect();
        TreeDto { nodes }
    }

    fn from_dto(dto: TreeDto) -> Result<Self, FormatError> {
        let depth = dto.nodes.iter().map(|n| n.level + 1).max().unwrap_or(0);
        let mut levels: Vec<Vec<Node<Q>>> = vec![Vec::new(); depth];
        for n in dto.nodes {
            levels[n.level].push(Node {
                id: node(&n.id)?,
                parent: n.parent.as_deref().map(node).transpose()?,
                label: Q::parse_text(&n.label)?,
            });
        }
        if let Some(h) = levels.iter().position(|l| l.is_empty()) {
            return Err(FormatError::GapInLevels(h));
        }
        Ok(LexTree::from_levels(levels))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDto {
    pub from: String,
    pub to: String,
    pub pairs: Vec<(String, String)>,
}

/// Either explicit maps or `"canonical": true`, which asks the enclosing
/// document to derive the maps from its tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyDto {
    pub bound: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub canonical: bool,
    #[serde(default)]
    pub maps: Vec<MapDto>,
}

impl FamilyDto {
    fn resolve<Q: Scalar>(self, tree: Option<&LexTree<Q>>) -> Result<IsoFamily, FormatError> {
        if self.canonical {
            let t = tree.ok_or(FormatError::CanonicalWithoutTree)?;
            return Ok(IsoFamily::canonical(t, self.bound)?);
        }
        let mut maps = BTreeMap::new();
        for m in self.maps {
            let pairs = m
                .pairs
                .iter()
                .map(|(a, b)| Ok((node(a)?, node(b)?)))
                .collect::<Result<Vec<_>, FormatError>>()?;
            maps.insert((node(&m.from)?, node(&m.to)?), ConeMap::from_pairs(pairs));
        }
        Ok(IsoFamily {
            bound: self.bound,
            maps,
        })
    }
}

impl Codec for IsoFamily {
    const KIND: &'static str = "family";
    type Dto = FamilyDto;

    fn to_dto(&self) -> FamilyDto {
        FamilyDto {
            bound: self.bound,
            canonical: false,
            maps: self
                .maps
                .iter()
                .map(|((a, b), m)| MapDto {
                    from: a.to_string(),
                    to: b.to_string(),
                    pairs: m.pairs().iter().map(|(x, y)| (x.to_string(), y.to_string())).collect(),
                })
                .collect(),
        }
    }

    fn from_dto(dto: FamilyDto) -> Result<Self, FormatError> {
        dto.resolve::<crate::Rational>(None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HConditionDto {
    pub alpha: usize,
    pub tree: TreeDto,
    pub branch_map: BTreeMap<Index, String>,
    pub family: FamilyDto,
    #[serde(default)]
    pub club: BTreeSet<Index>,
}

impl<Q: Scalar> Codec for HCondition<Q> {
    const KIND: &'static str = "h-condition";
    type Dto = HConditionDto;

    fn to_dto(&self) -> HConditionDto {
        HConditionDto {
            alpha: self.alpha,
            tree: self.tree.to_dto(),
            branch_map: self.branch_map.iter().map(|(&k, v)| (k, v.to_string())).collect(),
            family: self.family.to_dto(),
            club: self.club.clone(),
        }
    }

    fn from_dto(dto: HConditionDto) -> Result<Self, FormatError> {
        let tree = LexTree::from_dto(dto.tree)?;
        let family = dto.family.resolve(Some(&tree))?;
        let branch_map = dto
            .branch_map
            .iter()
            .map(|(&k, v)| Ok((k, node(v)?)))
            .collect::<Result<_, FormatError>>()?;
        Ok(HCondition {
            alpha: dto.alpha,
            tree,
            branch_map,
            family,
            club: dto.club,
        })
    }
}

fn branches_dto(b: &BTreeMap<Index, Branch>) -> BTreeMap<Index, Vec<String>> {
    b.iter().map(|(&k, v)| (k, node_strings(&v.nodes))).collect()
}

fn branches_from(b: BTreeMap<Index, Vec<String>>) -> Result<BTreeMap<Index, Branch>, FormatError> {
    b.into_iter().map(|(k, v)| Ok((k, Branch::new(nodes(&v)?)))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FAmbientDto {
    pub tree: TreeDto,
    pub branches: BTreeMap<Index, Vec<String>>,
    pub family: FamilyDto,
    #[serde(default)]
    pub x: BTreeSet<Index>,
    #[serde(default)]
    pub y: BTreeSet<Index>,
}

impl<Q: Scalar> Codec for FAmbient<Q> {
    const KIND: &'static str = "f-ambient";
    type Dto = FAmbientDto;

    fn to_dto(&self) -> FAmbientDto {
        FAmbientDto {
            tree: self.tree.to_dto(),
            branches: branches_dto(&self.branches),
            family: self.family.to_dto(),
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }

    fn from_dto(dto: FAmbientDto) -> Result<Self, FormatError> {
        let tree = LexTree::from_dto(dto.tree)?;
        let family = dto.family.resolve(Some(&tree))?;
        Ok(FAmbient {
            tree,
            branches: branches_from(dto.branches)?,
            family,
            x: dto.x,
            y: dto.y,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FConditionDto {
    pub a: BTreeSet<usize>,
    pub f: BTreeMap<String, String>,
    #[serde(default)]
    pub phi: BTreeMap<Index, Index>,
}

impl Codec for FCondition {
    const KIND: &'static str = "f-condition";
    type Dto = FConditionDto;

    fn to_dto(&self) -> FConditionDto {
        FConditionDto {
            a: self.a.clone(),
            f: self.f.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            phi: self.phi.clone(),
        }
    }

    fn from_dto(dto: FConditionDto) -> Result<Self, FormatError> {
        Ok(FCondition {
            a: dto.a,
            f: dto
                .f
                .iter()
                .map(|(a, b)| Ok((node(a)?, node(b)?)))
                .collect::<Result<_, FormatError>>()?,
            phi: dto.phi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureDto {
    #[serde(default)]
    pub cuts: Vec<String>,
    #[serde(default)]
    pub branches: Vec<Vec<String>>,
    #[serde(default)]
    pub nodes: Vec<String>,
}

impl<Q: Scalar> Codec for CaptureSet<Q> {
    const KIND: &'static str = "capture-set";
    type Dto = CaptureDto;

    fn to_dto(&self) -> CaptureDto {
        CaptureDto {
            cuts: self.cuts.iter().map(Scalar::to_text).collect(),
            branches: self.branches.iter().map(|b| node_strings(&b.nodes)).collect(),
            nodes: self.nodes.iter().map(|n| n.to_string()).collect(),
        }
    }

    fn from_dto(dto: CaptureDto) -> Result<Self, FormatError> {
        Ok(CaptureSet {
            cuts: dto.cuts.iter().map(|c| Q::parse_text(c)).collect::<Result<_, _>>()?,
            branches: dto
                .branches
                .iter()
                .map(|b| Ok(Branch::new(nodes(b)?)))
                .collect::<Result<_, FormatError>>()?,
            nodes: nodes(&dto.nodes)?.into_iter().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PAmbientDto {
    pub tree: TreeDto,
    pub branches: BTreeMap<Index, Vec<String>>,
    pub l: BTreeSet<Index>,
    #[serde(default)]
    pub allow_closure: bool,
}

impl<Q: Scalar> Codec for PAmbient<Q> {
    const KIND: &'static str = "p-ambient";
    type Dto = PAmbientDto;

    fn to_dto(&self) -> PAmbientDto {
        PAmbientDto {
            tree: self.tree.to_dto(),
            branches: branches_dto(&self.branches),
            l: self.l.clone(),
            allow_closure: self.allow_closure,
        }
    }

    fn from_dto(dto: PAmbientDto) -> Result<Self, FormatError> {
        Ok(PAmbient {
            tree: LexTree::from_dto(dto.tree)?,
            branches: branches_from(dto.branches)?,
            l: dto.l,
            allow_closure: dto.allow_closure,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PConditionDto {
    pub seq: Vec<CaptureDto>,
}

impl<Q: Scalar> Codec for PCondition<Q> {
    const KIND: &'static str = "p-condition";
    type Dto = PConditionDto;

    fn to_dto(&self) -> PConditionDto {
        PConditionDto {
            seq: self.seq.iter().map(Codec::to_dto).collect(),
        }
    }

    fn from_dto(dto: PConditionDto) -> Result<Self, FormatError> {
        Ok(PCondition {
            seq: dto.seq.into_iter().map(CaptureSet::from_dto).collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderDto {
    pub elements: Vec<(String, String)>,
}

impl<Q: Scalar> Codec for LinOrder<Q> {
    const KIND: &'static str = "order";
    type Dto = OrderDto;

    fn to_dto(&self) -> OrderDto {
        OrderDto {
            elements: self.elements().iter().map(|(e, p)| (e.0.clone(), p.to_text())).collect(),
        }
    }

    fn from_dto(dto: OrderDto) -> Result<Self, FormatError> {
        let els = dto
            .elements
            .into_iter()
            .map(|(e, p)| Ok((ElemId(e), Q::parse_text(&p)?)))
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(LinOrder::new(els)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDto {
    pub term: String,
}

impl Codec for OrderTerm {
    const KIND: &'static str = "order-term";
    type Dto = TermDto;

    fn to_dto(&self) -> TermDto {
        TermDto { term: self.to_string() }
    }

    fn from_dto(dto: TermDto) -> Result<Self, FormatError> {
        Ok(dto.term.parse()?)
    }
}

impl Codec for DeltaSystem {
    const KIND: &'static str = "delta-system";
    type Dto = DeltaSystem;

    fn to_dto(&self) -> DeltaSystem {
        self.clone()
    }

    fn from_dto(dto: DeltaSystem) -> Result<Self, FormatError> {
        Ok(dto)
    }
}

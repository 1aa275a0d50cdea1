//! Loading documents from disk, resolving file references relative to the
//! referring document.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use forcelab_core::format::{self, Codec, FormatError};
use forcelab_core::fposet::{FAmbient, FCondition};
use forcelab_core::hposet::HCondition;
use forcelab_core::lextree::LexTree;
use forcelab_core::pposet::{PAmbient, PCondition};
use forcelab_core::{Index, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Invalid(String),
}

impl InputError {
    fn at(path: &Path) -> impl FnOnce(FormatError) -> InputError + '_ {
        move |source| InputError::Format {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Tree = LexTree<Rational>;
pub type HCond = HCondition<Rational>;
pub type FAmb = FAmbient<Rational>;
pub type PAmb = PAmbient<Rational>;
pub type PCond = PCondition<Rational>;

/// Index families for delta-system extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamily {
    pub sets: Vec<BTreeSet<Index>>,
}

impl Codec for SetFamily {
    const KIND: &'static str = "set-family";
    type Dto = SetFamily;

    fn to_dto(&self) -> SetFamily {
        self.clone()
    }

    fn from_dto(dto: SetFamily) -> Result<Self, FormatError> {
        Ok(dto)
    }
}

/// Any document the `validate` command understands.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Tree(Tree),
    H(HCond),
    FAmbient(FAmb),
    F(FAmb, FCondition),
    PAmbient(PAmb),
    P(PAmb, PCond),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Tree(_) => Tree::KIND,
            Document::H(_) => HCond::KIND,
            Document::FAmbient(_) => FAmb::KIND,
            Document::F(..) => FCondition::KIND,
            Document::PAmbient(_) => PAmb::KIND,
            Document::P(..) => PCond::KIND,
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Document::Tree(t) => format::to_value(t),
            Document::H(q) => format::to_value(q),
            Document::FAmbient(a) => format::to_value(a),
            Document::F(a, c) => with_ambient(format::to_value(c), format::to_value(a)),
            Document::PAmbient(a) => format::to_value(a),
            Document::P(a, c) => with_ambient(format::to_value(c), format::to_value(a)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("values serialize")
    }
}

fn with_ambient(mut doc: Value, amb: Value) -> Value {
    doc.as_object_mut().expect("object").insert("ambient".into(), amb);
    doc
}

pub fn read_value(path: &Path) -> Result<Value, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| InputError::at(path)(e.into()))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// A reference is a path (relative to `dir`) or an inline document.
pub fn resolve_ref(v: Value, dir: &Path, origin: &Path) -> Result<(Value, PathBuf), InputError> {
    match v {
        Value::String(p) => {
            let path = dir.join(p);
            Ok((read_value(&path)?, path))
        }
        Value::Object(_) => Ok((v, origin.to_path_buf())),
        other => Err(InputError::Invalid(format!(
            "{}: a reference must be a path or an object, found {other}",
            origin.display()
        ))),
    }
}

/// Decodes `v` as `T`; inline objects may omit the envelope.
pub fn decode<T: Codec>(v: Value, origin: &Path) -> Result<T, InputError> {
    let enveloped = v.get("schema").is_some() || v.get("kind").is_some();
    if enveloped {
        format::from_value(v).map_err(InputError::at(origin))
    } else {
        let dto = serde_json::from_value(v).map_err(|e| InputError::at(origin)(e.into()))?;
        T::from_dto(dto).map_err(InputError::at(origin))
    }
}

pub fn load<T: Codec>(path: &Path) -> Result<T, InputError> {
    format::from_value(read_value(path)?).map_err(InputError::at(path))
}

fn take_ambient(body: &mut Value, origin: &Path) -> Result<Value, InputError> {
    body.as_object_mut()
        .and_then(|o| o.remove("ambient"))
        .ok_or_else(|| InputError::Invalid(format!("{}: missing `ambient`", origin.display())))
}

fn envelope_again(kind: &str, body: Value) -> Value {
    let mut m = match body {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    m.insert("schema".into(), Value::from(format::SCHEMA));
    m.insert("kind".into(), Value::from(kind));
    Value::Object(m)
}

/// Decodes a whole document value of any supported kind.
pub fn decode_document(v: Value, origin: &Path, allow_closure: bool) -> Result<Document, InputError> {
    let dir = base_dir(origin);
    let (kind, mut body) = format::open_envelope(v, None).map_err(InputError::at(origin))?;
    let doc = match kind.as_str() {
        k if k == Tree::KIND => Document::Tree(decode(envelope_again(k, body), origin)?),
        k if k == HCond::KIND => Document::H(decode(envelope_again(k, body), origin)?),
        k if k == FAmb::KIND => Document::FAmbient(decode(envelope_again(k, body), origin)?),
        k if k == PAmb::KIND => {
            let mut a: PAmb = decode(envelope_again(k, body), origin)?;
            a.allow_closure |= allow_closure;
            Document::PAmbient(a)
        }
        k if k == FCondition::KIND => {
            let (av, apath) = resolve_ref(take_ambient(&mut body, origin)?, &dir, origin)?;
            let amb: FAmb = decode(av, &apath)?;
            Document::F(amb, decode(envelope_again(k, body), origin)?)
        }
        k if k == PCond::KIND => {
            let (av, apath) = resolve_ref(take_ambient(&mut body, origin)?, &dir, origin)?;
            let mut amb: PAmb = decode(av, &apath)?;
            amb.allow_closure |= allow_closure;
            Document::P(amb, decode(envelope_again(k, body), origin)?)
        }
        other => {
            return Err(InputError::Invalid(format!(
                "{}: `{other}` is not a condition, ambient or tree document",
                origin.display()
            )))
        }
    };
    Ok(doc)
}

pub fn load_document(path: &Path, allow_closure: bool) -> Result<Document, InputError> {
    decode_document(read_value(path)?, path, allow_closure)
}

//! Dynamic values and data references.
//!
//! Goals, justifications and evidence refer to data by [`DataRef`]: a
//! named artifact, a derivation of one at a configuration, or a small
//! expression over artifacts (pairs, query results, exploded or
//! aggregated families, inline values). References resolve to
//! [`DataValue`]s against a name resolver; resolution of the composite
//! forms runs the corresponding operators, so re-checking an argument
//! re-runs the analyses it depends on.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::featexpr::{Configuration, FeatureModel, FeatureUniverse};
use crate::fts::{query, vquery, Fts, TemporalFormula, TransitionSystem};
use crate::gsn::GsnNode;
use crate::variability::{VarFamily, VarSet};
use crate::vgsn::{aggregate, explode, PlAc};

/// An opaque JSON value with a total order (by compact serialization),
/// so it can live in sets and families.
#[derive(Debug, Clone)]
pub struct OpaqueValue(serde_json::Value);

impl OpaqueValue {
    pub fn new(value: serde_json::Value) -> Self {
        OpaqueValue(value)
    }

    pub fn string(text: impl Into<String>) -> Self {
        OpaqueValue(serde_json::Value::String(text.into()))
    }

    pub fn json(&self) -> &serde_json::Value {
        &self.0
    }

    fn key(&self) -> String {
        self.0.to_string()
    }
}

impl PartialEq for OpaqueValue {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for OpaqueValue {}

impl PartialOrd for OpaqueValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpaqueValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for OpaqueValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_str() {
            Some(s) => f.write_str(s),
            None => write!(f, "{}", self.0),
        }
    }
}

/// A reference to data, resolvable against a workspace or store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DataRef {
    /// A named artifact.
    Named(String),
    /// A reference derived at a configuration (feature names).
    Derived { of: Box<DataRef>, config: Vec<String> },
    Pair(Box<DataRef>, Box<DataRef>),
    /// Data of a bounded universal claim: a set plus the element
    /// predicate.
    Forall { set: Box<DataRef>, pred: String },
    /// The result of the label query analysis on a model.
    Query { model: Box<DataRef>, pattern: Box<DataRef> },
    Explode(Box<DataRef>),
    Aggregate(Box<DataRef>),
    Inline(OpaqueValue),
}

impl DataRef {
    pub fn named(name: impl Into<String>) -> Self {
        DataRef::Named(name.into())
    }

    /// The reference to this data as seen from the product derived at
    /// `config`. Derivation distributes over pairs and forall data and
    /// reaches inline values unchanged; named and analysis references
    /// are wrapped.
    pub fn derived_at(&self, config: &Configuration) -> DataRef {
        match self {
            DataRef::Pair(a, b) => DataRef::Pair(
                Box::new(a.derived_at(config)),
                Box::new(b.derived_at(config)),
            ),
            DataRef::Forall { set, pred } => DataRef::Forall {
                set: Box::new(set.derived_at(config)),
                pred: pred.clone(),
            },
            DataRef::Inline(v) => DataRef::Inline(v.clone()),
            other => DataRef::Derived {
                of: Box::new(other.clone()),
                config: config.members().iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            DataRef::Named(name) => serde_json::json!({"ref": name}),
            DataRef::Derived { of, config } => {
                serde_json::json!({"derived": {"of": of.to_json(), "config": config}})
            }
            DataRef::Pair(a, b) => serde_json::json!({"pair": [a.to_json(), b.to_json()]}),
            DataRef::Forall { set, pred } => {
                serde_json::json!({"forall": {"set": set.to_json(), "pred": pred}})
            }
            DataRef::Query { model, pattern } => {
                serde_json::json!({"query": {"model": model.to_json(), "pattern": pattern.to_json()}})
            }
            DataRef::Explode(inner) => serde_json::json!({"explode": inner.to_json()}),
            DataRef::Aggregate(inner) => serde_json::json!({"aggregate": inner.to_json()}),
            DataRef::Inline(v) => serde_json::json!({"inline": v.json()}),
        }
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Document(format!("expected a data reference, got {value}")))?;
        let field = |key: &str| -> Result<&serde_json::Value> {
            obj.get(key).ok_or_else(|| Error::Document(format!("missing `{key}` in data ref")))
        };
        if let Some(name) = obj.get("ref") {
            let name = name
                .as_str()
                .ok_or_else(|| Error::Document("`ref` must be a string".to_string()))?;
            return Ok(DataRef::Named(name.to_string()));
        }
        if let Some(derived) = obj.get("derived") {
            let of = DataRef::from_json(
                derived.get("of").ok_or_else(|| Error::Document("missing `of`".to_string()))?,
            )?;
            let config = derived
                .get("config")
                .and_then(|c| c.as_array())
                .ok_or_else(|| Error::Document("missing `config`".to_string()))?
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Document("feature names must be strings".to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(DataRef::Derived { of: Box::new(of), config });
        }
        if let Some(pair) = obj.get("pair") {
            let items = pair
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Document("`pair` must hold two refs".to_string()))?;
            return Ok(DataRef::Pair(
                Box::new(DataRef::from_json(&items[0])?),
                Box::new(DataRef::from_json(&items[1])?),
            ));
        }
        if let Some(forall) = obj.get("forall") {
            let set = DataRef::from_json(
                forall.get("set").ok_or_else(|| Error::Document("missing `set`".to_string()))?,
            )?;
            let pred = forall
                .get("pred")
                .and_then(|p| p.as_str())
                .ok_or_else(|| Error::Document("missing `pred`".to_string()))?;
            return Ok(DataRef::Forall { set: Box::new(set), pred: pred.to_string() });
        }
        if let Some(q) = obj.get("query") {
            return Ok(DataRef::Query {
                model: Box::new(DataRef::from_json(
                    q.get("model").ok_or_else(|| Error::Document("missing `model`".to_string()))?,
                )?),
                pattern: Box::new(DataRef::from_json(
                    q.get("pattern")
                        .ok_or_else(|| Error::Document("missing `pattern`".to_string()))?,
                )?),
            });
        }
        if obj.contains_key("explode") {
            return Ok(DataRef::Explode(Box::new(DataRef::from_json(field("explode")?)?)));
        }
        if obj.contains_key("aggregate") {
            return Ok(DataRef::Aggregate(Box::new(DataRef::from_json(field("aggregate")?)?)));
        }
        if let Some(inline) = obj.get("inline") {
            return Ok(DataRef::Inline(OpaqueValue::new(inline.clone())));
        }
        Err(Error::Document(format!("unrecognized data reference {value}")))
    }

    /// Parses the compact text form used on the command line:
    /// `name`, `name@F1,F2`, `pair(x,y)`, `forall(x,pred)`,
    /// `query(model,pattern)`, `explode(x)`, `aggregate(x)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        for (prefix, arity) in [
            ("pair(", 2),
            ("forall(", 2),
            ("query(", 2),
            ("explode(", 1),
            ("aggregate(", 1),
        ] {
            if let Some(rest) = text.strip_prefix(prefix) {
                let inner = rest.strip_suffix(')').ok_or_else(|| Error::Syntax {
                    pos: text.len(),
                    msg: "expected `)`".to_string(),
                })?;
                let args = split_args(inner);
                if args.len() != arity {
                    return Err(Error::Document(format!(
                        "`{}` takes {arity} arguments",
                        prefix.trim_end_matches('(')
                    )));
                }
                return Ok(match prefix {
                    "pair(" => DataRef::Pair(
                        Box::new(DataRef::parse(args[0])?),
                        Box::new(DataRef::parse(args[1])?),
                    ),
                    "forall(" => DataRef::Forall {
                        set: Box::new(DataRef::parse(args[0])?),
                        pred: args[1].trim().to_string(),
                    },
                    "query(" => DataRef::Query {
                        model: Box::new(DataRef::parse(args[0])?),
                        pattern: Box::new(DataRef::parse(args[1])?),
                    },
                    "explode(" => DataRef::Explode(Box::new(DataRef::parse(args[0])?)),
                    _ => DataRef::Aggregate(Box::new(DataRef::parse(args[0])?)),
                });
            }
        }
        if let Some((name, cfg)) = text.split_once('@') {
            let config = if cfg.trim().is_empty() {
                Vec::new()
            } else {
                cfg.split(',').map(|s| s.trim().to_string()).collect()
            };
            return Ok(DataRef::Derived {
                of: Box::new(DataRef::Named(name.trim().to_string())),
                config,
            });
        }
        if text.is_empty() {
            return Err(Error::Document("empty data reference".to_string()));
        }
        Ok(DataRef::Named(text.to_string()))
    }

    /// Stable text used for digests and structural comparison.
    pub fn canonical(&self) -> String {
        self.to_json().to_string()
    }
}

// splits `a,b` at the top level (commas inside nested parens don't count)
fn split_args(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

impl fmt::Display for DataRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataRef::Named(name) => f.write_str(name),
            DataRef::Derived { of, config } => write!(f, "{of}@{}", config.join(",")),
            DataRef::Pair(a, b) => write!(f, "pair({a},{b})"),
            DataRef::Forall { set, pred } => write!(f, "forall({set},{pred})"),
            DataRef::Query { model, pattern } => write!(f, "query({model},{pattern})"),
            DataRef::Explode(inner) => write!(f, "explode({inner})"),
            DataRef::Aggregate(inner) => write!(f, "aggregate({inner})"),
            DataRef::Inline(v) => write!(f, "json:{}", v.json()),
        }
    }
}

/// A resolved value.
#[derive(Debug, Clone)]
pub enum DataValue {
    FeatureModel(FeatureModel),
    Fts(Box<Fts>),
    Ts(Box<TransitionSystem>),
    Formula(TemporalFormula),
    Pattern(String),
    VarSet(VarSet<OpaqueValue>),
    Set(BTreeSet<OpaqueValue>),
    VarFamily(VarFamily<OpaqueValue>),
    Family(Vec<BTreeSet<OpaqueValue>>),
    Pair(Box<DataValue>, Box<DataValue>),
    Forall { set: Box<DataValue>, pred: String },
    Json(serde_json::Value),
    Ac(Box<GsnNode>),
    Plac(Box<PlAc>),
}

impl DataValue {
    pub fn shape(&self) -> &'static str {
        match self {
            DataValue::FeatureModel(_) => "feature-model",
            DataValue::Fts(_) => "fts",
            DataValue::Ts(_) => "ts",
            DataValue::Formula(_) => "formula",
            DataValue::Pattern(_) => "pattern",
            DataValue::VarSet(_) => "varset",
            DataValue::Set(_) => "set",
            DataValue::VarFamily(_) => "varfamily",
            DataValue::Family(_) => "family",
            DataValue::Pair(_, _) => "pair",
            DataValue::Forall { .. } => "forall",
            DataValue::Json(_) => "json",
            DataValue::Ac(_) => "ac",
            DataValue::Plac(_) => "plac",
        }
    }

    /// The universe of the first variational component, if any.
    pub fn universe_of(&self) -> Option<FeatureUniverse> {
        match self {
            DataValue::FeatureModel(m) => Some(m.universe().clone()),
            DataValue::Fts(m) => Some(m.model().universe().clone()),
            DataValue::VarSet(s) => Some(s.elements().first()?.pc.universe().clone()),
            DataValue::VarFamily(fam) => Some(fam.members().first()?.pc.universe().clone()),
            DataValue::Pair(a, b) => a.universe_of().or_else(|| b.universe_of()),
            DataValue::Forall { set, .. } => set.universe_of(),
            DataValue::Plac(p) => Some(p.model.universe().clone()),
            _ => None,
        }
    }

    /// Derives the product view at a configuration. Product-level values
    /// pass through unchanged.
    pub fn derive_at(&self, config: &Configuration) -> Result<DataValue> {
        Ok(match self {
            DataValue::Fts(m) => DataValue::Ts(Box::new(m.derive(config)?)),
            DataValue::VarSet(s) => DataValue::Set(s.derive_set(config)?),
            DataValue::VarFamily(fam) => DataValue::Family(fam.derive_family(config)?),
            DataValue::Pair(a, b) => DataValue::Pair(
                Box::new(a.derive_at(config)?),
                Box::new(b.derive_at(config)?),
            ),
            DataValue::Forall { set, pred } => DataValue::Forall {
                set: Box::new(set.derive_at(config)?),
                pred: pred.clone(),
            },
            DataValue::FeatureModel(_) => {
                return Err(Error::DataShape {
                    expected: "a derivable value",
                    got: "feature-model".to_string(),
                })
            }
            other => other.clone(),
        })
    }

    pub fn as_ts(&self) -> Result<&TransitionSystem> {
        match self {
            DataValue::Ts(ts) => Ok(ts),
            other => Err(Error::DataShape { expected: "ts", got: other.shape().to_string() }),
        }
    }

    pub fn as_fts(&self) -> Result<&Fts> {
        match self {
            DataValue::Fts(m) => Ok(m),
            other => Err(Error::DataShape { expected: "fts", got: other.shape().to_string() }),
        }
    }

    pub fn as_formula(&self) -> Result<&TemporalFormula> {
        match self {
            DataValue::Formula(f) => Ok(f),
            other => Err(Error::DataShape { expected: "formula", got: other.shape().to_string() }),
        }
    }

    pub fn as_pattern(&self) -> Result<&str> {
        match self {
            DataValue::Pattern(p) => Ok(p),
            DataValue::Json(serde_json::Value::String(s)) => Ok(s),
            other => Err(Error::DataShape { expected: "pattern", got: other.shape().to_string() }),
        }
    }

    pub fn as_set(&self) -> Result<BTreeSet<OpaqueValue>> {
        match self {
            DataValue::Set(s) => Ok(s.clone()),
            DataValue::Json(serde_json::Value::Array(items)) => {
                Ok(items.iter().cloned().map(OpaqueValue::new).collect())
            }
            other => Err(Error::DataShape { expected: "set", got: other.shape().to_string() }),
        }
    }

    pub fn as_varset(&self) -> Result<&VarSet<OpaqueValue>> {
        match self {
            DataValue::VarSet(s) => Ok(s),
            other => Err(Error::DataShape { expected: "varset", got: other.shape().to_string() }),
        }
    }

    pub fn as_family(&self) -> Result<Vec<BTreeSet<OpaqueValue>>> {
        match self {
            DataValue::Family(f) => Ok(f.clone()),
            DataValue::Json(serde_json::Value::Array(items)) => items
                .iter()
                .map(|member| match member {
                    serde_json::Value::Array(xs) => {
                        Ok(xs.iter().cloned().map(OpaqueValue::new).collect())
                    }
                    other => Err(Error::DataShape {
                        expected: "family",
                        got: format!("json {other}"),
                    }),
                })
                .collect(),
            other => Err(Error::DataShape { expected: "family", got: other.shape().to_string() }),
        }
    }

    pub fn as_varfamily(&self) -> Result<&VarFamily<OpaqueValue>> {
        match self {
            DataValue::VarFamily(f) => Ok(f),
            other => {
                Err(Error::DataShape { expected: "varfamily", got: other.shape().to_string() })
            }
        }
    }

    pub fn as_pair(&self) -> Result<(&DataValue, &DataValue)> {
        match self {
            DataValue::Pair(a, b) => Ok((a, b)),
            other => Err(Error::DataShape { expected: "pair", got: other.shape().to_string() }),
        }
    }

    pub fn as_forall(&self) -> Result<(&DataValue, &str)> {
        match self {
            DataValue::Forall { set, pred } => Ok((set, pred)),
            other => Err(Error::DataShape { expected: "forall", got: other.shape().to_string() }),
        }
    }

    /// Canonical JSON used for digests.
    pub fn canonical_json(&self) -> serde_json::Value {
        match self {
            DataValue::FeatureModel(m) => crate::io::feature_model_to_json(m),
            DataValue::Fts(m) => crate::io::fts_to_json(m),
            DataValue::Ts(ts) => crate::io::ts_to_json(ts),
            DataValue::Formula(f) => serde_json::json!({"formula": f.to_string()}),
            DataValue::Pattern(p) => serde_json::json!({"pattern": p}),
            DataValue::VarSet(s) => crate::io::varset_to_json(s),
            DataValue::Set(s) => {
                serde_json::Value::Array(s.iter().map(|v| v.json().clone()).collect())
            }
            DataValue::VarFamily(f) => crate::io::varfamily_to_json(f),
            DataValue::Family(f) => serde_json::Value::Array(
                f.iter()
                    .map(|m| serde_json::Value::Array(m.iter().map(|v| v.json().clone()).collect()))
                    .collect(),
            ),
            DataValue::Pair(a, b) => {
                serde_json::json!({"pair": [a.canonical_json(), b.canonical_json()]})
            }
            DataValue::Forall { set, pred } => {
                serde_json::json!({"forall": {"set": set.canonical_json(), "pred": pred}})
            }
            DataValue::Json(v) => v.clone(),
            DataValue::Ac(node) => crate::io::ac_node_to_json(node),
            DataValue::Plac(p) => crate::io::plac_to_json(p),
        }
    }
}

/// Name resolution for artifacts.
pub trait ResolveNamed {
    fn resolve_named(&self, name: &str) -> Result<DataValue>;
}

/// In-memory store, used by tests and as the base for workspaces.
#[derive(Default)]
pub struct MemoryStore {
    entries: BTreeMap<String, DataValue>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: DataValue) {
        self.entries.insert(name.into(), value);
    }
}

impl ResolveNamed for MemoryStore {
    fn resolve_named(&self, name: &str) -> Result<DataValue> {
        self.entries.get(name).cloned().ok_or_else(|| Error::DanglingRef(name.to_string()))
    }
}

/// Resolves a reference, evaluating composite forms: derivation,
/// queries, explode/aggregate.
pub fn resolve(r: &DataRef, resolver: &dyn ResolveNamed) -> Result<DataValue> {
    match r {
        DataRef::Named(name) => resolver.resolve_named(name),
        DataRef::Derived { of, config } => {
            let value = resolve(of, resolver)?;
            match value.universe_of() {
                Some(universe) => {
                    let c = Configuration::from_features(
                        &universe,
                        config.iter().map(String::as_str),
                    )?;
                    value.derive_at(&c)
                }
                // a product-level value derives to itself
                None => Ok(value),
            }
        }
        DataRef::Pair(a, b) => Ok(DataValue::Pair(
            Box::new(resolve(a, resolver)?),
            Box::new(resolve(b, resolver)?),
        )),
        DataRef::Forall { set, pred } => Ok(DataValue::Forall {
            set: Box::new(resolve(set, resolver)?),
            pred: pred.clone(),
        }),
        DataRef::Query { model, pattern } => {
            let pattern_value = resolve(pattern, resolver)?;
            let pattern = pattern_value.as_pattern()?;
            match resolve(model, resolver)? {
                DataValue::Fts(m) => {
                    Ok(DataValue::VarSet(vquery(&m, pattern).map(|id| OpaqueValue::string(id))))
                }
                DataValue::Ts(ts) => Ok(DataValue::Set(
                    query(&ts, pattern).into_iter().map(OpaqueValue::string).collect(),
                )),
                other => {
                    Err(Error::DataShape { expected: "fts or ts", got: other.shape().to_string() })
                }
            }
        }
        DataRef::Explode(inner) => match resolve(inner, resolver)? {
            DataValue::VarSet(s) => Ok(DataValue::VarFamily(explode(&s))),
            DataValue::Set(s) => {
                Ok(DataValue::Family(s.into_iter().map(|v| BTreeSet::from([v])).collect()))
            }
            other => {
                Err(Error::DataShape { expected: "varset or set", got: other.shape().to_string() })
            }
        },
        DataRef::Aggregate(inner) => match resolve(inner, resolver)? {
            DataValue::VarSet(s) => Ok(DataValue::VarFamily(aggregate(&s))),
            DataValue::Set(s) => Ok(DataValue::Family(vec![s])),
            other => {
                Err(Error::DataShape { expected: "varset or set", got: other.shape().to_string() })
            }
        },
        DataRef::Inline(v) => Ok(DataValue::Json(v.json().clone())),
    }
}

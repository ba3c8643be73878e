//! Featured transition systems, product derivation, a CTL-fragment
//! model checker with family-level (exact and quasi) lifts, and the
//! label query engine.

mod family;
mod formula;
mod mc;

pub use family::{mc_family, mc_family_exact, mc_family_quasi, FamilyMcResult, FamilyOutcome, McClass, McMode, QuasiMcResult};
pub use formula::{StatePredicate, TemporalFormula};
pub use mc::{mc_product, Counterexample, McResult};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::featexpr::{Configuration, FeatExpr, FeatureModel};
use crate::variability::{Annotated, VarSet};

/// A state of a featured transition system. Both states and transitions
/// carry presence conditions; an absent pc is read as ⊤.
#[derive(Debug, Clone, PartialEq)]
pub struct FtsState {
    pub id: String,
    pub labels: BTreeSet<String>,
    pub pc: FeatExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtsTransition {
    pub src: String,
    pub action: String,
    pub dst: String,
    pub pc: FeatExpr,
}

/// An annotated transition system over a feature model.
///
/// Well-formedness is checked at construction: transition endpoints are
/// declared, the semantics of each endpoint's pc covers the transition's
/// pc (so derivation never dangles), and initial states are present in
/// every valid product.
#[derive(Debug, Clone, PartialEq)]
pub struct Fts {
    model: FeatureModel,
    states: Vec<FtsState>,
    transitions: Vec<FtsTransition>,
    initial: Vec<String>,
}

impl Fts {
    pub fn new(
        model: FeatureModel,
        states: Vec<FtsState>,
        transitions: Vec<FtsTransition>,
        initial: Vec<String>,
    ) -> Result<Self> {
        let universe = model.universe();
        let ids: BTreeSet<&str> = states.iter().map(|s| s.id.as_str()).collect();
        if ids.len() != states.len() {
            return Err(Error::IllFormed("duplicate state id".to_string()));
        }
        if initial.is_empty() {
            return Err(Error::IllFormed("no initial states".to_string()));
        }
        for s in &states {
            if s.pc.universe() != universe {
                return Err(Error::UniverseMismatch);
            }
        }
        let state_pc: BTreeMap<&str, &FeatExpr> =
            states.iter().map(|s| (s.id.as_str(), &s.pc)).collect();
        for t in &transitions {
            if t.pc.universe() != universe {
                return Err(Error::UniverseMismatch);
            }
            for endpoint in [&t.src, &t.dst] {
                let pc = state_pc.get(endpoint.as_str()).ok_or_else(|| {
                    Error::IllFormed(format!(
                        "transition `{}` references undeclared state `{endpoint}`",
                        t.action
                    ))
                })?;
                if !t.pc.semantics().is_subset(&pc.semantics())? {
                    return Err(Error::IllFormed(format!(
                        "state `{endpoint}` has a weaker presence condition than transition `{}`",
                        t.action
                    )));
                }
            }
        }
        let phi = model.expr().semantics();
        for init in &initial {
            let pc = state_pc
                .get(init.as_str())
                .ok_or_else(|| Error::IllFormed(format!("undeclared initial state `{init}`")))?;
            if !phi.is_subset(&pc.semantics())? {
                return Err(Error::IllFormed(format!(
                    "initial state `{init}` is absent from some valid product"
                )));
            }
        }
        Ok(Fts { model, states, transitions, initial })
    }

    pub fn model(&self) -> &FeatureModel {
        &self.model
    }

    pub fn states(&self) -> &[FtsState] {
        &self.states
    }

    pub fn transitions(&self) -> &[FtsTransition] {
        &self.transitions
    }

    pub fn initial(&self) -> &[String] {
        &self.initial
    }

    /// Derives the product transition system for a valid configuration,
    /// removing states and transitions whose presence conditions the
    /// configuration fails.
    pub fn derive(&self, config: &Configuration) -> Result<TransitionSystem> {
        if !self.model.is_valid(config)? {
            return Err(Error::InvalidConfiguration { config: config.to_string() });
        }
        let mut states = Vec::new();
        for s in &self.states {
            if config.satisfies(&s.pc)? {
                states.push(TsState { id: s.id.clone(), labels: s.labels.clone() });
            }
        }
        let mut transitions = Vec::new();
        for t in &self.transitions {
            if config.satisfies(&t.pc)? {
                transitions.push(TsTransition {
                    src: t.src.clone(),
                    action: t.action.clone(),
                    dst: t.dst.clone(),
                });
            }
        }
        TransitionSystem::new(states, transitions, self.initial.clone())
    }
}

/// `derive_fts(m, c)`: the product of `m` under configuration `c`.
pub fn derive_fts(fts: &Fts, config: &Configuration) -> Result<TransitionSystem> {
    fts.derive(config)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsState {
    pub id: String,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsTransition {
    pub src: String,
    pub action: String,
    pub dst: String,
}

/// A plain transition system: the product form of an [`Fts`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    states: Vec<TsState>,
    transitions: Vec<TsTransition>,
    initial: Vec<String>,
}

impl TransitionSystem {
    pub fn new(
        states: Vec<TsState>,
        transitions: Vec<TsTransition>,
        initial: Vec<String>,
    ) -> Result<Self> {
        let ids: BTreeSet<&str> = states.iter().map(|s| s.id.as_str()).collect();
        if ids.len() != states.len() {
            return Err(Error::IllFormed("duplicate state id".to_string()));
        }
        for t in &transitions {
            if !ids.contains(t.src.as_str()) || !ids.contains(t.dst.as_str()) {
                return Err(Error::IllFormed(format!(
                    "transition `{}` has a dangling endpoint",
                    t.action
                )));
            }
        }
        for init in &initial {
            if !ids.contains(init.as_str()) {
                return Err(Error::IllFormed(format!("undeclared initial state `{init}`")));
            }
        }
        Ok(TransitionSystem { states, transitions, initial })
    }

    pub fn states(&self) -> &[TsState] {
        &self.states
    }

    pub fn transitions(&self) -> &[TsTransition] {
        &self.transitions
    }

    pub fn initial(&self) -> &[String] {
        &self.initial
    }

    pub fn state(&self, id: &str) -> Option<&TsState> {
        self.states.iter().find(|s| s.id == id)
    }

    /// Every label appearing on some state.
    pub fn known_labels(&self) -> BTreeSet<&str> {
        self.states.iter().flat_map(|s| s.labels.iter().map(String::as_str)).collect()
    }
}

/// Matches a label against a glob pattern (`*` matches any substring).
pub fn glob_match(pattern: &str, label: &str) -> bool {
    let segments: Vec<&str> = pattern.split('*').collect();
    if segments.len() == 1 {
        return pattern == label;
    }
    let mut rest = label;
    for (i, seg) in segments.iter().enumerate() {
        if i == 0 {
            match rest.strip_prefix(seg) {
                Some(r) => rest = r,
                None => return false,
            }
        } else if i == segments.len() - 1 {
            return seg.is_empty() || rest.ends_with(seg);
        } else if seg.is_empty() {
            continue;
        } else {
            match rest.find(seg) {
                Some(pos) => rest = &rest[pos + seg.len()..],
                None => return false,
            }
        }
    }
    true
}

/// States with at least one label matching the pattern, sorted by id.
pub fn query(ts: &TransitionSystem, pattern: &str) -> BTreeSet<String> {
    ts.states
        .iter()
        .filter(|s| s.labels.iter().any(|l| glob_match(pattern, l)))
        .map(|s| s.id.clone())
        .collect()
}

/// Lifted query: matching states annotated with their presence
/// conditions. An exact lift of [`query`] under derivation.
pub fn vquery(fts: &Fts, pattern: &str) -> VarSet<String> {
    let universe = fts.model().universe();
    let elements = fts
        .states()
        .iter()
        .filter(|s| s.labels.iter().any(|l| glob_match(pattern, l)))
        .map(|s| Annotated::new(s.id.clone(), s.pc.clone()))
        .collect();
    VarSet::from_elements(universe, elements).expect("state pcs share the fts universe")
}

#[cfg(test)]
pub(crate) fn fig3_fts() -> Fts {
    // three states, actions a|⊤, b|B, d|A, c|A, feature model A xor B
    use crate::featexpr::{parse_featexpr, FeatureUniverse};
    let u = FeatureUniverse::new(["A", "B"]).unwrap();
    let model = FeatureModel::new(u.clone(), parse_featexpr("A xor B", &u).unwrap()).unwrap();
    let top = FeatExpr::top(&u);
    let pc = |t: &str| parse_featexpr(t, &u).unwrap();
    let state = |id: &str| FtsState {
        id: id.to_string(),
        labels: BTreeSet::from([id.to_string()]),
        pc: top.clone(),
    };
    let tr = |src: &str, action: &str, dst: &str, pc: FeatExpr| FtsTransition {
        src: src.to_string(),
        action: action.to_string(),
        dst: dst.to_string(),
        pc,
    };
    Fts::new(
        model,
        vec![state("s0"), state("s1"), state("s2")],
        vec![
            tr("s0", "a", "s1", top.clone()),
            tr("s1", "b", "s0", pc("B")),
            tr("s1", "d", "s2", pc("A")),
            tr("s2", "c", "s0", pc("A")),
        ],
        vec!["s0".to_string()],
    )
    .unwrap()
}

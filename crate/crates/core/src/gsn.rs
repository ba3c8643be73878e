//! Product-level assurance cases: goals, evidence, strategies,
//! deductive-correctness checking and the product argument templates.

use std::collections::BTreeSet;

use crate::artifact::{DataRef, OpaqueValue};
use crate::error::{Error, Result};
use crate::registry::CheckContext;
use crate::variability::Verdict;

/// A claim: an atomic proposition or a predicate applied to data.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    Atom { claim: String, text: String },
    Pred { predicate: String, data: DataRef, text: String },
}

impl Goal {
    pub fn text(&self) -> &str {
        match self {
            Goal::Atom { text, .. } | Goal::Pred { text, .. } => text,
        }
    }

    /// Equality up to human-readable text.
    pub fn core_eq(&self, other: &Goal) -> bool {
        match (self, other) {
            (Goal::Atom { claim: a, .. }, Goal::Atom { claim: b, .. }) => a == b,
            (
                Goal::Pred { predicate: p1, data: d1, .. },
                Goal::Pred { predicate: p2, data: d2, .. },
            ) => p1 == p2 && d1 == d2,
            _ => false,
        }
    }
}

/// Evidence attached to a solution node.
#[derive(Debug, Clone, PartialEq)]
pub enum EvidenceRecord {
    Machine {
        analysis: String,
        input_digest: String,
        output_digest: String,
        verdict: Verdict,
        output: Option<serde_json::Value>,
    },
    Attested {
        text: String,
        source: String,
    },
}

impl EvidenceRecord {
    /// Equality on the reproducible core: the analysis, what it ran on,
    /// and the verdict. Output payloads (e.g. counterexample choice) may
    /// legitimately differ between equivalent runs.
    pub fn core_eq(&self, other: &EvidenceRecord) -> bool {
        match (self, other) {
            (
                EvidenceRecord::Machine { analysis: a1, input_digest: i1, verdict: v1, .. },
                EvidenceRecord::Machine { analysis: a2, input_digest: i2, verdict: v2, .. },
            ) => a1 == a2 && i1 == i2 && v1 == v2,
            (EvidenceRecord::Attested { .. }, EvidenceRecord::Attested { .. }) => true,
            _ => false,
        }
    }
}

/// Why a strategy is believed sound.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyJustification {
    /// Taken on faith; counted as an assumption.
    Axiomatic { text: String },
    /// An instantiation of a registered template; re-checkable.
    TemplateInstance {
        template: String,
        data: DataRef,
        aux: Option<DataRef>,
        prec: Option<EvidenceRecord>,
    },
}

pub const UNDEVELOPED: &str = "undeveloped";

/// A GSN tree. An empty-children strategy is an undeveloped goal; `Nil`
/// only arises from derivation.
#[derive(Debug, Clone, PartialEq)]
pub enum GsnNode {
    Nil,
    Evidence {
        id: String,
        goal: Goal,
        record: EvidenceRecord,
        description: Option<String>,
    },
    Strategy {
        id: String,
        goal: Goal,
        justification: StrategyJustification,
        children: Vec<GsnNode>,
        description: Option<String>,
    },
}

impl GsnNode {
    /// A fresh undeveloped goal.
    pub fn undeveloped(id: impl Into<String>, goal: Goal) -> Self {
        GsnNode::Strategy {
            id: id.into(),
            goal,
            justification: StrategyJustification::Axiomatic { text: UNDEVELOPED.to_string() },
            children: Vec::new(),
            description: None,
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            GsnNode::Nil => None,
            GsnNode::Evidence { id, .. } | GsnNode::Strategy { id, .. } => Some(id),
        }
    }

    pub fn goal(&self) -> Option<&Goal> {
        match self {
            GsnNode::Nil => None,
            GsnNode::Evidence { goal, .. } | GsnNode::Strategy { goal, .. } => Some(goal),
        }
    }

    pub fn children(&self) -> &[GsnNode] {
        match self {
            GsnNode::Strategy { children, .. } => children,
            _ => &[],
        }
    }

    pub fn find(&self, id: &str) -> Option<&GsnNode> {
        if self.id() == Some(id) {
            return Some(self);
        }
        self.children().iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut GsnNode> {
        if self.id() == Some(id) {
            return Some(self);
        }
        if let GsnNode::Strategy { children, .. } = self {
            return children.iter_mut().find_map(|c| c.find_mut(id));
        }
        None
    }

    pub fn preorder(&self) -> Vec<&GsnNode> {
        let mut out = vec![self];
        for c in self.children() {
            out.extend(c.preorder());
        }
        out
    }

    /// Structural checks performed at load time: unique ids and no
    /// machine evidence on atomic goals (their denotation is opaque, so
    /// they can only be attested).
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for node in self.preorder() {
            if let Some(id) = node.id() {
                if !ids.insert(id) {
                    return Err(Error::Document(format!("duplicate node id `{id}`")));
                }
            }
            if let GsnNode::Evidence { goal: Goal::Atom { .. }, record, id, .. } = node {
                if matches!(record, EvidenceRecord::Machine { .. }) {
                    return Err(Error::Document(format!(
                        "node `{id}`: machine evidence on an atomic goal"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Certified,
    EvidenceBacked,
    Assumed,
    Broken,
    Undeveloped,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Certified => "certified",
            NodeStatus::EvidenceBacked => "evidence-backed",
            NodeStatus::Assumed => "assumed",
            NodeStatus::Broken => "broken",
            NodeStatus::Undeveloped => "undeveloped",
        }
    }

    pub fn is_ok(self) -> bool {
        matches!(self, NodeStatus::Certified | NodeStatus::EvidenceBacked | NodeStatus::Assumed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AcVerdict {
    Deductive,
    DeductiveWithAssumptions(usize),
    NotDeductive,
}

impl AcVerdict {
    pub fn as_str(&self) -> String {
        match self {
            AcVerdict::Deductive => "deductive".to_string(),
            AcVerdict::DeductiveWithAssumptions(n) => {
                format!("deductive modulo {n} assumption{}", if *n == 1 { "" } else { "s" })
            }
            AcVerdict::NotDeductive => "not deductive".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeReport {
    pub id: String,
    pub status: NodeStatus,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Assumption {
    pub node: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct DeductiveReport {
    pub nodes: Vec<NodeReport>,
    pub assumptions: Vec<Assumption>,
    pub verdict: AcVerdict,
}

/// Compares actual children against a template's instantiation output.
/// Node ids and display text are free; goals must match, machine
/// evidence must match on its reproducible core, and an undeveloped
/// subgoal slot accepts any later development of the same goal.
pub fn children_match_skeleton(actual: &[GsnNode], expected: &[GsnNode]) -> std::result::Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!("expected {} children, found {}", expected.len(), actual.len()));
    }
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        match e {
            GsnNode::Evidence { goal, record, .. } => match a {
                GsnNode::Evidence { goal: ag, record: ar, .. } => {
                    if !goal.core_eq(ag) {
                        return Err(format!("child {i}: goal differs from template output"));
                    }
                    if !record.core_eq(ar) {
                        return Err(format!("child {i}: evidence differs from template output"));
                    }
                }
                _ => return Err(format!("child {i}: expected an evidence node")),
            },
            GsnNode::Strategy { goal, children, .. } if children.is_empty() => {
                let ag = a.goal().ok_or_else(|| format!("child {i}: unexpected nil"))?;
                if !goal.core_eq(ag) {
                    return Err(format!("child {i}: goal differs from template output"));
                }
            }
            GsnNode::Strategy { goal, children, .. } => match a {
                GsnNode::Strategy { goal: ag, children: ac, .. } => {
                    if !goal.core_eq(ag) {
                        return Err(format!("child {i}: goal differs from template output"));
                    }
                    children_match_skeleton(ac, children)?;
                }
                _ => return Err(format!("child {i}: expected a strategy node")),
            },
            GsnNode::Nil => {
                if !matches!(a, GsnNode::Nil) {
                    return Err(format!("child {i}: expected nil"));
                }
            }
        }
    }
    Ok(())
}

/// Checks one strategy's refinement: template instances re-check their
/// precondition against the instantiation data and must carry exactly
/// the children the template produces; axiomatic strategies are
/// assumptions.
pub fn refines_check(node: &GsnNode, ctx: &CheckContext) -> Result<(NodeStatus, Option<String>)> {
    let GsnNode::Strategy { justification, children, id, .. } = node else {
        return Err(Error::Document("refines_check requires a strategy node".to_string()));
    };
    match justification {
        StrategyJustification::Axiomatic { .. } => Ok((NodeStatus::Assumed, None)),
        StrategyJustification::TemplateInstance { template, data, aux, .. } => {
            let t = ctx.registry.template(template)?;
            let prec = (t.prec)(ctx, data, aux.as_ref())?;
            if !prec.pass {
                return Ok((
                    NodeStatus::Broken,
                    Some(format!(
                        "precondition of `{template}` fails: {}",
                        prec.witnesses.join("; ")
                    )),
                ));
            }
            let expected = (t.inst)(ctx, data, aux.as_ref(), id)?;
            match children_match_skeleton(children, &expected) {
                Ok(()) => Ok((NodeStatus::Certified, None)),
                Err(msg) => Ok((NodeStatus::Broken, Some(msg))),
            }
        }
    }
}

/// Recursive deductive check. Total: resolution problems surface as
/// broken statuses, not errors.
pub fn deductive_check(ac: &GsnNode, ctx: &CheckContext) -> DeductiveReport {
    let mut nodes = Vec::new();
    let mut assumptions = Vec::new();
    walk(ac, ctx, &mut nodes, &mut assumptions);
    let verdict = if nodes.iter().all(|n| n.status.is_ok()) {
        if assumptions.is_empty() {
            AcVerdict::Deductive
        } else {
            AcVerdict::DeductiveWithAssumptions(assumptions.len())
        }
    } else {
        AcVerdict::NotDeductive
    };
    DeductiveReport { nodes, assumptions, verdict }
}

fn walk(
    node: &GsnNode,
    ctx: &CheckContext,
    nodes: &mut Vec<NodeReport>,
    assumptions: &mut Vec<Assumption>,
) {
    match node {
        GsnNode::Nil => nodes.push(NodeReport {
            id: "(nil)".to_string(),
            status: NodeStatus::Undeveloped,
            note: None,
        }),
        GsnNode::Evidence { id, record, .. } => {
            let status = match record {
                EvidenceRecord::Machine { verdict: Verdict::Pass, .. } => {
                    NodeStatus::EvidenceBacked
                }
                EvidenceRecord::Machine { verdict: Verdict::Fail, .. } => NodeStatus::Broken,
                EvidenceRecord::Attested { text, .. } => {
                    assumptions.push(Assumption { node: id.clone(), text: text.clone() });
                    NodeStatus::Assumed
                }
            };
            nodes.push(NodeReport { id: id.clone(), status, note: None });
        }
        GsnNode::Strategy { id, justification, children, .. } => {
            let (status, note) = if children.is_empty() {
                (NodeStatus::Undeveloped, None)
            } else {
                match refines_check(node, ctx) {
                    Ok((status, note)) => {
                        if status == NodeStatus::Assumed {
                            let text = match justification {
                                StrategyJustification::Axiomatic { text } => text.clone(),
                                _ => String::new(),
                            };
                            assumptions.push(Assumption { node: id.clone(), text });
                        }
                        (status, note)
                    }
                    Err(err) => (NodeStatus::Broken, Some(err.to_string())),
                }
            };
            nodes.push(NodeReport { id: id.clone(), status, note });
            for child in children {
                walk(child, ctx, nodes, assumptions);
            }
        }
    }
}

/// `complete(S, F)`: the family covers the set, the direction that makes
/// a domain decomposition sound.
pub fn domdecomp_check_complete<T: Ord>(set: &BTreeSet<T>, family: &[BTreeSet<T>]) -> bool {
    set.iter().all(|x| family.iter().any(|member| member.contains(x)))
}

fn forall_goal(set_data: DataRef, pred: &str, text: String) -> Goal {
    Goal::Pred {
        predicate: "forall-in-set".to_string(),
        data: DataRef::Forall { set: Box::new(set_data), pred: pred.to_string() },
        text,
    }
}

/// Instantiates a domain decomposition: one undeveloped subgoal per
/// family member, in family order, each claiming the element predicate
/// over its member set. An empty family is refused unless the
/// decomposed set is itself empty.
pub fn domdecomp_instantiate(
    set: &BTreeSet<OpaqueValue>,
    family: &[BTreeSet<OpaqueValue>],
    pred: &str,
    base_id: &str,
) -> Result<Vec<GsnNode>> {
    if family.is_empty() && !set.is_empty() {
        return Err(Error::Refused(
            "empty family over a non-empty set would be vacuously unsound".to_string(),
        ));
    }
    Ok(family
        .iter()
        .enumerate()
        .map(|(i, member)| {
            let values: Vec<serde_json::Value> =
                member.iter().map(|v| v.json().clone()).collect();
            let names: Vec<String> = member.iter().map(|v| v.to_string()).collect();
            GsnNode::undeveloped(
                format!("{base_id}.{}", i + 1),
                forall_goal(
                    DataRef::Inline(OpaqueValue::new(serde_json::Value::Array(values))),
                    pred,
                    format!("`{pred}` holds for {{{}}}", names.join(", ")),
                ),
            )
        })
        .collect())
}

pub use crate::registry::analytic_instantiate;

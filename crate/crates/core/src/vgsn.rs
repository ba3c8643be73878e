//! Variational GSN: presence-condition-annotated assurance-case trees
//! over variational data, product derivation, and family-level
//! deductive checking.
//!
//! A node's evidence scope is the conjunction of presence conditions on
//! the root-to-node path (validated at load). Family-level
//! certification has two routes that must agree: the per-configuration
//! descent (derive, then run the product check) and the template
//! certificate shortcut (verify the variational precondition once).

use std::collections::BTreeSet;

use crate::artifact::{DataRef, OpaqueValue, resolve};
use crate::digest::digest_json;
use crate::error::{Error, Result};
use crate::featexpr::{ConfigSet, Configuration, FeatExpr, FeatureModel};
use crate::gsn::{
    refines_check, AcVerdict, EvidenceRecord, Goal, GsnNode, NodeStatus, StrategyJustification,
    UNDEVELOPED,
};
use crate::registry::CheckContext;
use crate::variability::{
    Annotated, EvidenceKind, VarFamily, VarSet, VariationalEvidence, VerifyStatus,
    verify_var_evidence,
};

/// A variational goal: a presence condition plus an atomic claim or a
/// predicate over variational data.
#[derive(Debug, Clone, PartialEq)]
pub struct VGoal {
    pub pc: FeatExpr,
    pub body: VGoalBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VGoalBody {
    Atom { claim: String, text: String },
    Pred { predicate: String, data: DataRef, text: String },
}

impl VGoal {
    pub fn text(&self) -> &str {
        match &self.body {
            VGoalBody::Atom { text, .. } | VGoalBody::Pred { text, .. } => text,
        }
    }

    pub fn derive(&self, config: &Configuration) -> Goal {
        match &self.body {
            VGoalBody::Atom { claim, text } => {
                Goal::Atom { claim: claim.clone(), text: text.clone() }
            }
            VGoalBody::Pred { predicate, data, text } => Goal::Pred {
                predicate: predicate.clone(),
                data: data.derived_at(config),
                text: text.clone(),
            },
        }
    }

    fn core_eq(&self, other: &VGoal) -> bool {
        let body_eq = match (&self.body, &other.body) {
            (VGoalBody::Atom { claim: a, .. }, VGoalBody::Atom { claim: b, .. }) => a == b,
            (
                VGoalBody::Pred { predicate: p1, data: d1, .. },
                VGoalBody::Pred { predicate: p2, data: d2, .. },
            ) => p1 == p2 && d1 == d2,
            _ => false,
        };
        body_eq && self.pc.semantic_eq(&other.pc).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VStrategyJustification {
    Axiomatic {
        text: String,
    },
    TemplateInstance {
        template: String,
        data: DataRef,
        aux: Option<DataRef>,
        prec: Option<VariationalEvidence>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VGsnNode {
    Evidence {
        id: String,
        goal: VGoal,
        evidence: VariationalEvidence,
        description: Option<String>,
    },
    Strategy {
        id: String,
        goal: VGoal,
        justification: VStrategyJustification,
        children: Vec<VGsnNode>,
        description: Option<String>,
    },
}

impl VGsnNode {
    pub fn undeveloped(id: impl Into<String>, goal: VGoal) -> Self {
        VGsnNode::Strategy {
            id: id.into(),
            goal,
            justification: VStrategyJustification::Axiomatic { text: UNDEVELOPED.to_string() },
            children: Vec::new(),
            description: None,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            VGsnNode::Evidence { id, .. } | VGsnNode::Strategy { id, .. } => id,
        }
    }

    pub fn goal(&self) -> &VGoal {
        match self {
            VGsnNode::Evidence { goal, .. } | VGsnNode::Strategy { goal, .. } => goal,
        }
    }

    pub fn pc(&self) -> &FeatExpr {
        &self.goal().pc
    }

    pub fn children(&self) -> &[VGsnNode] {
        match self {
            VGsnNode::Strategy { children, .. } => children,
            _ => &[],
        }
    }

    pub fn find(&self, id: &str) -> Option<&VGsnNode> {
        if self.id() == id {
            return Some(self);
        }
        self.children().iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut VGsnNode> {
        if self.id() == id {
            return Some(self);
        }
        if let VGsnNode::Strategy { children, .. } = self {
            return children.iter_mut().find_map(|c| c.find_mut(id));
        }
        None
    }

    pub fn preorder(&self) -> Vec<&VGsnNode> {
        let mut out = vec![self];
        for c in self.children() {
            out.extend(c.preorder());
        }
        out
    }
}

/// A product line of assurance cases: a variational GSN tree carrying
/// its feature model.
#[derive(Debug, Clone, PartialEq)]
pub struct PlAc {
    pub model: FeatureModel,
    pub root: VGsnNode,
}

impl PlAc {
    /// Load-time validation: unique node ids, presence conditions bound
    /// to the model's universe, every evidence scope semantically equal
    /// to the path conjunction of pcs, and atomic goals only ever
    /// attested.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        self.validate_node(&self.root, &FeatExpr::top(self.model.universe()), &mut ids)
    }

    fn validate_node<'a>(
        &self,
        node: &'a VGsnNode,
        parent_pc: &FeatExpr,
        ids: &mut BTreeSet<&'a str>,
    ) -> Result<()> {
        if !ids.insert(node.id()) {
            return Err(Error::Document(format!("duplicate node id `{}`", node.id())));
        }
        if node.pc().universe() != self.model.universe() {
            return Err(Error::UniverseMismatch);
        }
        let eff = parent_pc.and(node.pc());
        if let VGsnNode::Evidence { goal, evidence, id, .. } = node {
            if !evidence.scope.semantic_eq(&eff)? {
                return Err(Error::Document(format!(
                    "node `{id}`: evidence scope `{}` differs from the effective presence \
                     condition `{}`",
                    evidence.scope, eff
                )));
            }
            if matches!(goal.body, VGoalBody::Atom { .. })
                && !matches!(evidence.kind, EvidenceKind::Attested { .. })
            {
                return Err(Error::Document(format!(
                    "node `{id}`: atomic goals can only carry attested evidence"
                )));
            }
        }
        for child in node.children() {
            self.validate_node(child, &eff, ids)?;
        }
        Ok(())
    }

    /// Derives the product assurance case for a valid configuration.
    pub fn derive(&self, config: &Configuration, ctx: &CheckContext) -> Result<GsnNode> {
        if !self.model.is_valid(config)? {
            return Err(Error::InvalidConfiguration { config: config.to_string() });
        }
        derive_node(&self.root, config, ctx)
    }
}

/// `derive_ac`: recursive derivation. An unsatisfied pc yields `Nil`;
/// nil children are removed, so `Nil` never appears below the root.
pub fn derive_ac(plac: &PlAc, config: &Configuration, ctx: &CheckContext) -> Result<GsnNode> {
    plac.derive(config, ctx)
}

/// Node-level derivation, exposed for the template-lift obligation.
pub(crate) fn derive_child_for_obligation(
    node: &VGsnNode,
    config: &Configuration,
    ctx: &CheckContext,
) -> Result<GsnNode> {
    derive_node(node, config, ctx)
}

fn derive_node(node: &VGsnNode, config: &Configuration, ctx: &CheckContext) -> Result<GsnNode> {
    if !config.satisfies(node.pc())? {
        return Ok(GsnNode::Nil);
    }
    match node {
        VGsnNode::Evidence { id, goal, evidence, description } => Ok(GsnNode::Evidence {
            id: id.clone(),
            goal: goal.derive(config),
            record: derive_evidence(evidence, goal, config, ctx)?,
            description: description.clone(),
        }),
        VGsnNode::Strategy { id, goal, justification, children, description } => {
            let justification = match justification {
                VStrategyJustification::Axiomatic { text } => {
                    StrategyJustification::Axiomatic { text: text.clone() }
                }
                VStrategyJustification::TemplateInstance { template, data, aux, .. } => {
                    let vt = ctx.registry.vtemplate(template)?;
                    StrategyJustification::TemplateInstance {
                        template: vt.product_id.clone(),
                        data: data.derived_at(config),
                        aux: aux.as_ref().map(|a| a.derived_at(config)),
                        prec: None,
                    }
                }
            };
            let mut derived_children = Vec::new();
            for child in children {
                match derive_node(child, config, ctx)? {
                    GsnNode::Nil => {}
                    product => derived_children.push(product),
                }
            }
            Ok(GsnNode::Strategy {
                id: id.clone(),
                goal: goal.derive(config),
                justification,
                children: derived_children,
                description: description.clone(),
            })
        }
    }
}

fn derive_evidence(
    evidence: &VariationalEvidence,
    goal: &VGoal,
    config: &Configuration,
    ctx: &CheckContext,
) -> Result<EvidenceRecord> {
    match &evidence.kind {
        EvidenceKind::Attested { text, signer } => {
            Ok(EvidenceRecord::Attested { text: text.clone(), source: signer.clone() })
        }
        EvidenceKind::Exhaustive(table) => table.get(config).cloned().ok_or_else(|| {
            Error::CorruptEvidence(format!(
                "exhaustive table has no entry for configuration {{{config}}}"
            ))
        }),
        EvidenceKind::Analytic(cert) => {
            let vanalysis = ctx.registry.vanalysis(&cert.analysis)?;
            let run = (vanalysis.derive_output)(&cert.output, config)?;
            let input_digest = match &goal.body {
                VGoalBody::Pred { data, .. } => {
                    let derived = resolve(&data.derived_at(config), ctx.resolver)?;
                    digest_json(&derived.canonical_json())
                }
                VGoalBody::Atom { .. } => String::new(),
            };
            Ok(EvidenceRecord::Machine {
                analysis: vanalysis.product_id.clone(),
                input_digest,
                output_digest: digest_json(&run.output),
                verdict: run.verdict,
                output: Some(run.output),
            })
        }
    }
}

/// `explode`: the family of annotated singletons, complete by
/// construction.
pub fn explode<T: Clone + Ord>(set: &VarSet<T>) -> VarFamily<T> {
    VarFamily::from_members(
        set.universe(),
        set.elements()
            .iter()
            .map(|e| Annotated::new(BTreeSet::from([e.value.clone()]), e.pc.clone()))
            .collect(),
    )
    .expect("element pcs share the set universe")
}

/// `aggregate`: groups elements whose presence conditions are
/// semantically equal, in first-occurrence order. Each group is
/// annotated with its smallest-by-serialization member pc.
pub fn aggregate<T: Clone + Ord>(set: &VarSet<T>) -> VarFamily<T> {
    let mut groups: Vec<(Vec<FeatExpr>, BTreeSet<T>)> = Vec::new();
    for e in set.elements() {
        match groups
            .iter_mut()
            .find(|(pcs, _)| pcs[0].semantic_eq(&e.pc).unwrap_or(false))
        {
            Some((pcs, members)) => {
                pcs.push(e.pc.clone());
                members.insert(e.value.clone());
            }
            None => groups.push((vec![e.pc.clone()], BTreeSet::from([e.value.clone()]))),
        }
    }
    VarFamily::from_members(
        set.universe(),
        groups
            .into_iter()
            .map(|(pcs, members)| {
                let canonical = pcs
                    .iter()
                    .min_by(|a, b| {
                        let (ta, tb) = (a.text(), b.text());
                        ta.len().cmp(&tb.len()).then(ta.cmp(&tb))
                    })
                    .expect("group is non-empty")
                    .clone();
                Annotated::new(members, canonical)
            })
            .collect(),
    )
    .expect("group pcs share the set universe")
}

/// Lifted domain decomposition: one subgoal per family member, carrying
/// that member's presence condition.
pub fn vdomdecomp_instantiate(
    set: &VarSet<OpaqueValue>,
    family: &VarFamily<OpaqueValue>,
    pred: &str,
    base_id: &str,
) -> Result<Vec<VGsnNode>> {
    if family.is_empty() && !set.is_empty() {
        return Err(Error::Refused(
            "empty family over a non-empty variational set would be vacuously unsound".to_string(),
        ));
    }
    Ok(family
        .members()
        .iter()
        .enumerate()
        .map(|(i, member)| {
            let values: Vec<serde_json::Value> =
                member.value.iter().map(|v| v.json().clone()).collect();
            let names: Vec<String> = member.value.iter().map(|v| v.to_string()).collect();
            VGsnNode::undeveloped(
                format!("{base_id}.{}", i + 1),
                VGoal {
                    pc: member.pc.clone(),
                    body: VGoalBody::Pred {
                        predicate: "forall-in-set".to_string(),
                        data: DataRef::Forall {
                            set: Box::new(DataRef::Inline(OpaqueValue::new(
                                serde_json::Value::Array(values),
                            ))),
                            pred: pred.to_string(),
                        },
                        text: format!("`{pred}` holds for {{{}}}", names.join(", ")),
                    },
                },
            )
        })
        .collect())
}

/// Compares variational children against a lifted template's output:
/// goals (including pcs, semantically) and evidence cores must match;
/// an undeveloped slot accepts later development of the same goal.
pub fn vchildren_match_skeleton(
    actual: &[VGsnNode],
    expected: &[VGsnNode],
) -> std::result::Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!("expected {} children, found {}", expected.len(), actual.len()));
    }
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        if !e.goal().core_eq(a.goal()) {
            return Err(format!("child {i}: goal differs from template output"));
        }
        match e {
            VGsnNode::Evidence { evidence, .. } => match a {
                VGsnNode::Evidence { evidence: actual_ev, .. } => {
                    if !vevidence_core_eq(actual_ev, evidence) {
                        return Err(format!("child {i}: evidence differs from template output"));
                    }
                }
                _ => return Err(format!("child {i}: expected an evidence node")),
            },
            VGsnNode::Strategy { children, .. } if children.is_empty() => {}
            VGsnNode::Strategy { children, .. } => match a {
                VGsnNode::Strategy { children: ac, .. } => {
                    vchildren_match_skeleton(ac, children)?;
                }
                _ => return Err(format!("child {i}: expected a strategy node")),
            },
        }
    }
    Ok(())
}

fn vevidence_core_eq(a: &VariationalEvidence, b: &VariationalEvidence) -> bool {
    if !a.scope.semantic_eq(&b.scope).unwrap_or(false) {
        return false;
    }
    match (&a.kind, &b.kind) {
        (EvidenceKind::Attested { .. }, EvidenceKind::Attested { .. }) => true,
        (EvidenceKind::Analytic(ca), EvidenceKind::Analytic(cb)) => {
            ca.analysis == cb.analysis
                && ca.input_digest == cb.input_digest
                && ca.verdict == cb.verdict
        }
        (EvidenceKind::Exhaustive(ta), EvidenceKind::Exhaustive(tb)) => {
            ta.len() == tb.len()
                && ta.iter().zip(tb.iter()).all(|((ca, ra), (cb, rb))| {
                    ca == cb && ra.core_eq(rb)
                })
        }
        _ => false,
    }
}

#[derive(Debug, Clone)]
pub struct VRefinesOutcome {
    pub status: NodeStatus,
    pub failing: ConfigSet,
    pub note: Option<String>,
}

/// Family-level refinement check for one strategy node.
///
/// Ground truth is the per-configuration descent over
/// `Conf(Φ ∧ effective pc)`: derive the strategy and run the product
/// refinement check. When the justification is a template instance, the
/// certificate route (verify the variational precondition, compare the
/// children against the lifted template's output) is evaluated too and
/// must agree; a disagreement marks the node broken.
pub fn vrefines_check(
    node: &VGsnNode,
    eff_pc: &FeatExpr,
    model: &FeatureModel,
    ctx: &CheckContext,
) -> Result<VRefinesOutcome> {
    let VGsnNode::Strategy { justification, children, id, .. } = node else {
        return Err(Error::Document("vrefines_check requires a strategy node".to_string()));
    };
    let empty = ConfigSet::empty(model.universe());
    if let VStrategyJustification::Axiomatic { .. } = justification {
        return Ok(VRefinesOutcome { status: NodeStatus::Assumed, failing: empty, note: None });
    }
    // descent route
    let mut failing = empty.clone();
    let mut note = None;
    for config in model.configs_within(eff_pc)? {
        match derive_node(node, &config, ctx) {
            Ok(product_node) => {
                let (status, product_note) = refines_check(&product_node, ctx)?;
                if status != NodeStatus::Certified {
                    failing.insert(&config)?;
                    if note.is_none() {
                        note = product_note
                            .map(|n| format!("at {{{config}}}: {n}"))
                            .or_else(|| Some(format!("refinement fails at {{{config}}}")));
                    }
                }
            }
            Err(err) => {
                failing.insert(&config)?;
                if note.is_none() {
                    note = Some(format!("at {{{config}}}: {err}"));
                }
            }
        }
    }
    // certificate route
    let VStrategyJustification::TemplateInstance { template, data, aux, prec } = justification
    else {
        unreachable!("axiomatic handled above");
    };
    let vt = ctx.registry.vtemplate(template)?;
    let cert_status = {
        let prec_status = match prec {
            Some(evidence) => {
                let outcome = verify_var_evidence(
                    ctx,
                    model,
                    &vt.prec_pred,
                    &DataRef::Pair(
                        Box::new(data.clone()),
                        Box::new(aux.clone().unwrap_or(DataRef::Inline(OpaqueValue::new(
                            serde_json::Value::Null,
                        )))),
                    ),
                    eff_pc,
                    evidence,
                )?;
                outcome.status
            }
            None => {
                let outcome = (vt.vprec)(ctx, model, data, aux.as_ref())?;
                if outcome.pass {
                    VerifyStatus::Verified
                } else {
                    VerifyStatus::Rejected
                }
            }
        };
        match prec_status {
            VerifyStatus::Verified => {
                let expected = (vt.inst)(ctx, model, data, aux.as_ref(), id, eff_pc)?;
                match vchildren_match_skeleton(children, &expected) {
                    Ok(()) => NodeStatus::Certified,
                    Err(msg) => {
                        if note.is_none() {
                            note = Some(msg);
                        }
                        NodeStatus::Broken
                    }
                }
            }
            VerifyStatus::Assumed => NodeStatus::Assumed,
            VerifyStatus::Rejected => NodeStatus::Broken,
        }
    };
    // the two routes must agree
    let descent_ok = failing.is_empty();
    let status = match (descent_ok, cert_status) {
        (true, NodeStatus::Certified) => NodeStatus::Certified,
        (true, NodeStatus::Assumed) => NodeStatus::Assumed,
        (true, _) => {
            note.get_or_insert_with(|| {
                format!(
                    "node `{id}`: template certificate disagrees with per-configuration descent"
                )
            });
            failing = model.configset_within(eff_pc)?;
            NodeStatus::Broken
        }
        (false, _) => NodeStatus::Broken,
    };
    Ok(VRefinesOutcome { status, failing, note })
}

#[derive(Debug, Clone)]
pub struct VNodeReport {
    pub id: String,
    pub status: NodeStatus,
    pub failing: ConfigSet,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct VAssumption {
    pub node: String,
    pub text: String,
    pub pc: FeatExpr,
}

#[derive(Debug, Clone)]
pub struct VDeductiveReport {
    pub nodes: Vec<VNodeReport>,
    pub assumptions: Vec<VAssumption>,
    /// Union of per-node failure sets; empty iff every derived product
    /// assurance case is deductive (modulo the listed assumptions).
    pub failing: ConfigSet,
    pub verdict: AcVerdict,
}

/// Family-level deductive check. The verdict is equivalent to the
/// conjunction of product-level deductive checks over
/// `Conf(Φ ∧ root.pc)`, with the same assumption multiset at each
/// configuration.
pub fn vdeductive_check(plac: &PlAc, ctx: &CheckContext) -> Result<VDeductiveReport> {
    let model = &plac.model;
    let mut nodes = Vec::new();
    let mut assumptions = Vec::new();
    let top = FeatExpr::top(model.universe());
    vwalk(&plac.root, &top, plac, ctx, &mut nodes, &mut assumptions)?;
    let mut failing = ConfigSet::empty(model.universe());
    for n in &nodes {
        failing = failing.union(&n.failing);
    }
    let root_scope = model.configset_within(plac.root.pc())?;
    let verdict = if root_scope.is_empty() {
        // empty scope: vacuously deductive
        AcVerdict::Deductive
    } else if failing.is_empty() {
        if assumptions.is_empty() {
            AcVerdict::Deductive
        } else {
            AcVerdict::DeductiveWithAssumptions(assumptions.len())
        }
    } else {
        AcVerdict::NotDeductive
    };
    Ok(VDeductiveReport { nodes, assumptions, failing, verdict })
}

fn vwalk(
    node: &VGsnNode,
    parent_pc: &FeatExpr,
    plac: &PlAc,
    ctx: &CheckContext,
    nodes: &mut Vec<VNodeReport>,
    assumptions: &mut Vec<VAssumption>,
) -> Result<()> {
    let model = &plac.model;
    let eff = parent_pc.and(node.pc());
    let scope = model.configset_within(&eff)?;
    match node {
        VGsnNode::Evidence { id, goal, evidence, .. } => {
            let (status, failing, note) = if scope.is_empty() {
                (NodeStatus::EvidenceBacked, ConfigSet::empty(model.universe()), Some("vacuous scope".to_string()))
            } else {
                let pred = match &goal.body {
                    VGoalBody::Pred { predicate, .. } => predicate.clone(),
                    VGoalBody::Atom { .. } => String::new(),
                };
                let data = match &goal.body {
                    VGoalBody::Pred { data, .. } => data.clone(),
                    VGoalBody::Atom { .. } => {
                        DataRef::Inline(OpaqueValue::new(serde_json::Value::Null))
                    }
                };
                let outcome = verify_var_evidence(ctx, model, &pred, &data, &eff, evidence)?;
                let status = match outcome.status {
                    VerifyStatus::Verified => NodeStatus::EvidenceBacked,
                    VerifyStatus::Assumed => {
                        let text = match &evidence.kind {
                            EvidenceKind::Attested { text, .. } => text.clone(),
                            _ => "unverifiable evidence".to_string(),
                        };
                        assumptions.push(VAssumption {
                            node: id.clone(),
                            text,
                            pc: eff.clone(),
                        });
                        NodeStatus::Assumed
                    }
                    VerifyStatus::Rejected => NodeStatus::Broken,
                };
                let note = if outcome.notes.is_empty() {
                    None
                } else {
                    Some(outcome.notes.join("; "))
                };
                (status, outcome.failing, note)
            };
            nodes.push(VNodeReport { id: id.clone(), status, failing, note });
        }
        VGsnNode::Strategy { id, justification, children, .. } => {
            let (status, failing, note) = if children.is_empty() {
                // undeveloped everywhere it is present
                (NodeStatus::Undeveloped, scope.clone(), None)
            } else {
                let outcome = vrefines_check(node, &eff, model, ctx)?;
                // configurations where the parent is present but every
                // child is absent derive to an undeveloped product goal
                let mut undeveloped_at = ConfigSet::empty(model.universe());
                for config in scope.configs() {
                    let mut any = false;
                    for child in children {
                        if config.satisfies(child.pc())? {
                            any = true;
                            break;
                        }
                    }
                    if !any {
                        undeveloped_at.insert(&config)?;
                    }
                }
                let failing = outcome.failing.union(&undeveloped_at);
                let status = if !outcome.failing.is_empty() {
                    outcome.status
                } else if !undeveloped_at.is_empty() {
                    NodeStatus::Undeveloped
                } else {
                    outcome.status
                };
                // an axiomatic strategy is an assumption exactly where
                // it derives with at least one child; elsewhere the
                // product node is undeveloped, not assumed
                if let VStrategyJustification::Axiomatic { text } = justification {
                    let mut any_child = FeatExpr::bottom(model.universe());
                    for child in children {
                        any_child = any_child.or(child.pc());
                    }
                    let live = eff.and(&any_child);
                    if !model.configset_within(&live)?.is_empty() {
                        assumptions.push(VAssumption {
                            node: id.clone(),
                            text: text.clone(),
                            pc: live,
                        });
                    }
                }
                (status, failing, outcome.note)
            };
            nodes.push(VNodeReport { id: id.clone(), status, failing, note });
            for child in children {
                vwalk(child, &eff, plac, ctx, nodes, assumptions)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featexpr::{parse_featexpr, FeatureUniverse};

    fn uni(names: &[&str]) -> FeatureUniverse {
        FeatureUniverse::new(names.iter().copied()).unwrap()
    }

    fn pc(text: &str, u: &FeatureUniverse) -> FeatExpr {
        parse_featexpr(text, u).unwrap()
    }

    fn varset(u: &FeatureUniverse, elems: &[(&str, &str)]) -> VarSet<OpaqueValue> {
        VarSet::from_elements(
            u,
            elems
                .iter()
                .map(|(v, p)| Annotated::new(OpaqueValue::string(*v), pc(p, u)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn explode_builds_annotated_singletons() {
        let u = uni(&["A", "B"]);
        let s = varset(&u, &[("x", "A"), ("y", "B")]);
        let family = explode(&s);
        assert_eq!(family.len(), 2);
        assert_eq!(family.members()[0].value.len(), 1);
        assert!(family.members()[0].pc.semantic_eq(&pc("A", &u)).unwrap());
        assert!(explode(&VarSet::<OpaqueValue>::new(&u)).is_empty());
    }

    #[test]
    fn aggregate_groups_by_semantic_pc_equality() {
        let u = uni(&["A", "B"]);
        let s = varset(&u, &[("x", "A"), ("y", "A"), ("z", "B")]);
        let family = aggregate(&s);
        assert_eq!(family.len(), 2);
        assert_eq!(family.members()[0].value.len(), 2);
        assert_eq!(family.members()[1].value.len(), 1);
        // `A & A` lands in the `A` group and the shortest pc text wins
        let s2 = varset(&u, &[("x", "A & A"), ("y", "A")]);
        let family2 = aggregate(&s2);
        assert_eq!(family2.len(), 1);
        assert_eq!(family2.members()[0].pc.text(), "A");
        assert_eq!(family2.members()[0].value.len(), 2);
    }

    #[test]
    fn explode_and_aggregate_are_complete_under_derivation() {
        let u = uni(&["A", "B", "C"]);
        let s = varset(&u, &[("x", "A"), ("y", "B | C"), ("z", "!A"), ("w", "true")]);
        for family in [explode(&s), aggregate(&s)] {
            for mask in 0..u.config_count() as u32 {
                let c = u.config(mask);
                let derived_set = s.derive_set(&c).unwrap();
                let union: BTreeSet<OpaqueValue> = family
                    .derive_family(&c)
                    .unwrap()
                    .into_iter()
                    .flatten()
                    .collect();
                assert!(derived_set.is_subset(&union), "incomplete at {{{c}}}");
            }
        }
    }

    #[test]
    fn vdomdecomp_sets_member_pcs_on_subgoals() {
        let u = uni(&["A", "B"]);
        let s = varset(&u, &[("x", "A"), ("y", "B")]);
        let family = explode(&s);
        let subgoals = vdomdecomp_instantiate(&s, &family, "assured", "G").unwrap();
        assert_eq!(subgoals.len(), 2);
        assert!(subgoals[0].pc().semantic_eq(&pc("A", &u)).unwrap());
        assert!(subgoals[1].pc().semantic_eq(&pc("B", &u)).unwrap());
        assert!(vdomdecomp_instantiate(
            &varset(&u, &[("x", "A")]),
            &VarFamily::new(&u),
            "assured",
            "G"
        )
        .is_err());
    }

    #[test]
    fn vdomdecomp_with_top_pcs_matches_product_shape() {
        let u = uni(&["A"]);
        let s = varset(&u, &[("x", "true"), ("y", "true")]);
        let subgoals = vdomdecomp_instantiate(&s, &explode(&s), "assured", "G").unwrap();
        assert_eq!(subgoals.len(), 2);
        for g in &subgoals {
            assert!(g.pc().semantic_eq(&FeatExpr::top(&u)).unwrap());
        }
    }
}

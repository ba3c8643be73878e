//! Development operations shared by the library and the CLI: template
//! instantiation (with the lift obligation for lifted templates) and
//! attestation of undeveloped goals.

use crate::artifact::{resolve, DataRef, DataValue, OpaqueValue};
use crate::digest::digest_json;
use crate::error::{Error, Result};
use crate::featexpr::FeatExpr;
use crate::gsn::{EvidenceRecord, GsnNode, StrategyJustification};
use crate::registry::{template_lift_obligation, CheckContext};
use crate::variability::{
    AnalyticCert, EvidenceKind, LiftReport, LiftStatus, VariationalEvidence, Verdict,
};
use crate::vgsn::{PlAc, VGsnNode, VStrategyJustification};

fn is_undeveloped_product(node: &GsnNode) -> bool {
    matches!(node, GsnNode::Strategy { children, .. } if children.is_empty())
}

fn is_undeveloped(node: &VGsnNode) -> bool {
    matches!(node, VGsnNode::Strategy { children, .. } if children.is_empty())
}

fn pair_or_null(data: &DataRef, aux: Option<&DataRef>) -> DataRef {
    DataRef::Pair(
        Box::new(data.clone()),
        Box::new(aux.cloned().unwrap_or(DataRef::Inline(OpaqueValue::new(serde_json::Value::Null)))),
    )
}

/// Instantiates a product-level template at an undeveloped goal,
/// replacing its justification and children in place.
pub fn instantiate_product(
    root: &mut GsnNode,
    node_id: &str,
    template_id: &str,
    data: DataRef,
    aux: Option<DataRef>,
    ctx: &CheckContext,
) -> Result<Vec<String>> {
    let t = ctx.registry.template(template_id)?;
    {
        let target = root
            .find(node_id)
            .ok_or_else(|| Error::NodeNotFound(node_id.to_string()))?;
        if !is_undeveloped_product(target) {
            return Err(Error::Refused(format!(
                "node `{node_id}` is not an undeveloped goal"
            )));
        }
    }
    let prec = (t.prec)(ctx, &data, aux.as_ref())?;
    if !prec.pass {
        return Err(Error::Refused(format!(
            "precondition of `{template_id}` fails: {}",
            prec.witnesses.join("; ")
        )));
    }
    let children = (t.inst)(ctx, &data, aux.as_ref(), node_id)?;
    let ids = children.iter().filter_map(|c| c.id().map(str::to_string)).collect();
    let input = resolve(&pair_or_null(&data, aux.as_ref()), ctx.resolver)?;
    let record = EvidenceRecord::Machine {
        analysis: format!("{template_id}.prec"),
        input_digest: digest_json(&input.canonical_json()),
        output_digest: String::new(),
        verdict: Verdict::Pass,
        output: None,
    };
    let target = root.find_mut(node_id).expect("located above");
    if let GsnNode::Strategy { justification, children: slot, .. } = target {
        *justification = StrategyJustification::TemplateInstance {
            template: template_id.to_string(),
            data,
            aux,
            prec: Some(record),
        };
        *slot = children;
    }
    Ok(ids)
}

#[derive(Debug)]
pub struct VInstantiationReport {
    pub children: Vec<String>,
    pub lift: LiftReport,
}

/// Fills in the implied family for the lifted domain decompositions so
/// the stored instance data is always re-checkable.
fn default_aux(template_id: &str, data: &DataRef) -> Result<Option<DataRef>> {
    let set = match data {
        DataRef::Forall { set, .. } => set.clone(),
        _ => {
            return Err(Error::Refused(
                "domain decomposition data must be a forall reference".to_string(),
            ))
        }
    };
    Ok(match template_id {
        "vdomdecomp-explode" => Some(DataRef::Explode(set)),
        "vdomdecomp-aggregate" => Some(DataRef::Aggregate(set)),
        _ => None,
    })
}

/// Instantiates a lifted template at an undeveloped variational goal.
/// The paired lift obligation runs first; a failed check refuses the
/// instantiation and reports its witness configurations.
pub fn instantiate_variational(
    plac: &mut PlAc,
    node_id: &str,
    template_id: &str,
    data: DataRef,
    mut aux: Option<DataRef>,
    ctx: &CheckContext,
) -> Result<VInstantiationReport> {
    let vt = ctx.registry.vtemplate(template_id)?;
    if aux.is_none() {
        aux = default_aux(template_id, &data)?;
    }
    let eff = effective_pc(plac, node_id)?;
    {
        let target = plac
            .root
            .find(node_id)
            .ok_or_else(|| Error::NodeNotFound(node_id.to_string()))?;
        if !is_undeveloped(target) {
            return Err(Error::Refused(format!(
                "node `{node_id}` is not an undeveloped goal"
            )));
        }
    }
    let model = plac.model.clone();
    let prec = (vt.vprec)(ctx, &model, &data, aux.as_ref())?;
    if !prec.pass {
        return Err(Error::Refused(format!(
            "variational precondition of `{template_id}` fails: {}",
            prec.witnesses.join("; ")
        )));
    }
    let children = (vt.inst)(ctx, &model, &data, aux.as_ref(), node_id, &eff)?;
    let lift = template_lift_obligation(ctx, &model, vt, &data, aux.as_ref(), &children, node_id)?;
    if lift.status == LiftStatus::Failed {
        let witnesses: Vec<String> = lift
            .witnesses
            .iter()
            .map(|w| format!("{{{}}}: {}", w.config, w.family_side))
            .collect();
        return Err(Error::Refused(format!(
            "lift obligation of `{template_id}` fails at {}",
            witnesses.join("; ")
        )));
    }
    let prec_evidence = match &vt.prec_analysis {
        Some(analysis_id) => {
            let vanalysis = ctx.registry.vanalysis(analysis_id)?;
            let input_ref = pair_or_null(&data, aux.as_ref());
            let input = resolve(&input_ref, ctx.resolver)?;
            let run = (vanalysis.run)(ctx, &model, &input)?;
            Some(VariationalEvidence {
                scope: eff.clone(),
                kind: EvidenceKind::Analytic(AnalyticCert {
                    analysis: analysis_id.clone(),
                    input_digest: digest_json(&input.canonical_json()),
                    output_digest: digest_json(&run.output),
                    verdict: run.verdict,
                    output: run.output,
                }),
            })
        }
        None => None,
    };
    let ids = children.iter().map(|c| c.id().to_string()).collect();
    let target = plac.root.find_mut(node_id).expect("located above");
    if let VGsnNode::Strategy { justification, children: slot, .. } = target {
        *justification = VStrategyJustification::TemplateInstance {
            template: template_id.to_string(),
            data,
            aux,
            prec: prec_evidence,
        };
        *slot = children;
    }
    Ok(VInstantiationReport { children: ids, lift })
}

/// Turns an undeveloped product goal into attested evidence.
pub fn attest_product(
    root: &mut GsnNode,
    node_id: &str,
    text: &str,
    source: &str,
) -> Result<()> {
    let target =
        root.find_mut(node_id).ok_or_else(|| Error::NodeNotFound(node_id.to_string()))?;
    if !is_undeveloped_product(target) {
        return Err(Error::Refused(format!("node `{node_id}` is not an undeveloped goal")));
    }
    let (id, goal, description) = match target {
        GsnNode::Strategy { id, goal, description, .. } => {
            (id.clone(), goal.clone(), description.clone())
        }
        _ => unreachable!(),
    };
    *target = GsnNode::Evidence {
        id,
        goal,
        record: EvidenceRecord::Attested { text: text.to_string(), source: source.to_string() },
        description,
    };
    Ok(())
}

/// Turns an undeveloped variational goal into attested evidence scoped
/// to its effective presence condition.
pub fn attest_variational(
    plac: &mut PlAc,
    node_id: &str,
    text: &str,
    signer: &str,
) -> Result<()> {
    let eff = effective_pc(plac, node_id)?;
    let target = plac
        .root
        .find_mut(node_id)
        .ok_or_else(|| Error::NodeNotFound(node_id.to_string()))?;
    if !is_undeveloped(target) {
        return Err(Error::Refused(format!("node `{node_id}` is not an undeveloped goal")));
    }
    let (id, goal, description) = match target {
        VGsnNode::Strategy { id, goal, description, .. } => {
            (id.clone(), goal.clone(), description.clone())
        }
        _ => unreachable!(),
    };
    *target = VGsnNode::Evidence {
        id,
        goal,
        evidence: VariationalEvidence {
            scope: eff,
            kind: EvidenceKind::Attested {
                text: text.to_string(),
                signer: signer.to_string(),
            },
        },
        description,
    };
    Ok(())
}

/// The conjunction of presence conditions on the path from the root to
/// the named node.
pub fn effective_pc(plac: &PlAc, node_id: &str) -> Result<FeatExpr> {
    fn walk(node: &VGsnNode, acc: &FeatExpr, id: &str) -> Option<FeatExpr> {
        let eff = acc.and(node.pc());
        if node.id() == id {
            return Some(eff);
        }
        node.children().iter().find_map(|c| walk(c, &eff, id))
    }
    walk(&plac.root, &FeatExpr::top(plac.model.universe()), node_id)
        .ok_or_else(|| Error::NodeNotFound(node_id.to_string()))
}

/// Convenience used by tests and the CLI to check whether a value can
/// serve as lifted-template input.
pub fn resolves_variationally(ctx: &CheckContext, data: &DataRef) -> Result<DataValue> {
    resolve(data, ctx.resolver)
}

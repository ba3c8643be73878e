//! JSON document formats for every artifact kind, also used as the
//! canonical serialization under content digests.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::artifact::{DataRef, OpaqueValue};
use crate::error::{Error, Result};
use crate::featexpr::{parse_featexpr, Configuration, FeatExpr, FeatureModel, FeatureUniverse};
use crate::fts::{
    Counterexample, FamilyMcResult, Fts, FtsState, FtsTransition, McResult, QuasiMcResult,
    TemporalFormula, TransitionSystem, TsState, TsTransition,
};
use crate::gsn::{EvidenceRecord, Goal, GsnNode, StrategyJustification};
use crate::variability::{
    Annotated, AnalyticCert, EvidenceKind, LiftReport, VarFamily, VarSet, VariationalEvidence,
    Verdict,
};
use crate::vgsn::{PlAc, VGoal, VGoalBody, VGsnNode, VStrategyJustification};

fn need<'a>(value: &'a Value, key: &str, what: &str) -> Result<&'a Value> {
    value.get(key).ok_or_else(|| Error::Document(format!("{what}: missing `{key}`")))
}

fn need_str<'a>(value: &'a Value, key: &str, what: &str) -> Result<&'a str> {
    need(value, key, what)?
        .as_str()
        .ok_or_else(|| Error::Document(format!("{what}: `{key}` must be a string")))
}

fn str_list(value: &Value, what: &str) -> Result<Vec<String>> {
    value
        .as_array()
        .ok_or_else(|| Error::Document(format!("{what}: expected an array")))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Document(format!("{what}: expected strings")))
        })
        .collect()
}

// ---- feature models ----------------------------------------------------

pub fn feature_model_to_json(model: &FeatureModel) -> Value {
    json!({
        "features": model.universe().features(),
        "model": model.expr().text(),
    })
}

pub fn feature_model_from_json(value: &Value) -> Result<FeatureModel> {
    let features = str_list(need(value, "features", "feature model")?, "features")?;
    let text = need_str(value, "model", "feature model")?;
    FeatureModel::parse(&features, text)
}

// ---- transition systems -------------------------------------------------

pub fn fts_to_json(fts: &Fts) -> Value {
    json!({
        "universe": fts.model().universe().features(),
        "feature_model": fts.model().expr().text(),
        "states": fts.states().iter().map(|s| json!({
            "id": s.id,
            "labels": s.labels.iter().collect::<Vec<_>>(),
            "pc": s.pc.text(),
        })).collect::<Vec<_>>(),
        "transitions": fts.transitions().iter().map(|t| json!({
            "src": t.src, "action": t.action, "dst": t.dst, "pc": t.pc.text(),
        })).collect::<Vec<_>>(),
        "initial": fts.initial(),
    })
}

fn pc_field(value: &Value, universe: &FeatureUniverse) -> Result<FeatExpr> {
    match value.get("pc") {
        // absence of a presence condition reads as ⊤
        None | Some(Value::Null) => Ok(FeatExpr::top(universe)),
        Some(Value::String(text)) => parse_featexpr(text, universe),
        Some(other) => Err(Error::Document(format!("`pc` must be a string, got {other}"))),
    }
}

pub fn fts_from_json(value: &Value) -> Result<Fts> {
    let features = str_list(need(value, "universe", "fts")?, "universe")?;
    let universe = FeatureUniverse::new(features)?;
    let expr = parse_featexpr(need_str(value, "feature_model", "fts")?, &universe)?;
    let model = FeatureModel::new(universe.clone(), expr)?;
    let states = need(value, "states", "fts")?
        .as_array()
        .ok_or_else(|| Error::Document("fts: `states` must be an array".to_string()))?
        .iter()
        .map(|s| {
            Ok(FtsState {
                id: need_str(s, "id", "state")?.to_string(),
                labels: s
                    .get("labels")
                    .map(|l| str_list(l, "labels"))
                    .transpose()?
                    .unwrap_or_default()
                    .into_iter()
                    .collect(),
                pc: pc_field(s, &universe)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let transitions = need(value, "transitions", "fts")?
        .as_array()
        .ok_or_else(|| Error::Document("fts: `transitions` must be an array".to_string()))?
        .iter()
        .map(|t| {
            Ok(FtsTransition {
                src: need_str(t, "src", "transition")?.to_string(),
                action: need_str(t, "action", "transition")?.to_string(),
                dst: need_str(t, "dst", "transition")?.to_string(),
                pc: pc_field(t, &universe)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let initial = str_list(need(value, "initial", "fts")?, "initial")?;
    Fts::new(model, states, transitions, initial)
}

pub fn ts_to_json(ts: &TransitionSystem) -> Value {
    json!({
        "states": ts.states().iter().map(|s| json!({
            "id": s.id,
            "labels": s.labels.iter().collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "transitions": ts.transitions().iter().map(|t| json!({
            "src": t.src, "action": t.action, "dst": t.dst,
        })).collect::<Vec<_>>(),
        "initial": ts.initial(),
    })
}

pub fn ts_from_json(value: &Value) -> Result<TransitionSystem> {
    let states = need(value, "states", "ts")?
        .as_array()
        .ok_or_else(|| Error::Document("ts: `states` must be an array".to_string()))?
        .iter()
        .map(|s| {
            Ok(TsState {
                id: need_str(s, "id", "state")?.to_string(),
                labels: s
                    .get("labels")
                    .map(|l| str_list(l, "labels"))
                    .transpose()?
                    .unwrap_or_default()
                    .into_iter()
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let transitions = need(value, "transitions", "ts")?
        .as_array()
        .ok_or_else(|| Error::Document("ts: `transitions` must be an array".to_string()))?
        .iter()
        .map(|t| {
            Ok(TsTransition {
                src: need_str(t, "src", "transition")?.to_string(),
                action: need_str(t, "action", "transition")?.to_string(),
                dst: need_str(t, "dst", "transition")?.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let initial = str_list(need(value, "initial", "ts")?, "initial")?;
    TransitionSystem::new(states, transitions, initial)
}

// ---- variational sets and families --------------------------------------

pub fn varset_to_json(set: &VarSet<OpaqueValue>) -> Value {
    json!({
        "universe": set.universe().features(),
        "elements": set.elements().iter().map(|e| json!({
            "value": e.value.json(),
            "pc": e.pc.text(),
        })).collect::<Vec<_>>(),
    })
}

type UniverseLookup<'a> = &'a dyn Fn(&str) -> Result<FeatureUniverse>;

/// Reads a varset. The `universe` field is either an inline feature
/// list or the name of a feature-model artifact, resolved via `lookup`.
pub fn varset_from_json(value: &Value, lookup: Option<UniverseLookup>) -> Result<VarSet<OpaqueValue>> {
    let universe = match need(value, "universe", "varset")? {
        Value::Array(_) => {
            FeatureUniverse::new(str_list(need(value, "universe", "varset")?, "universe")?)?
        }
        Value::String(name) => match lookup {
            Some(resolve) => resolve(name)?,
            None => {
                return Err(Error::Document(format!(
                    "varset references universe `{name}` but no resolver is available"
                )))
            }
        },
        other => return Err(Error::Document(format!("varset: bad universe {other}"))),
    };
    let elements = need(value, "elements", "varset")?
        .as_array()
        .ok_or_else(|| Error::Document("varset: `elements` must be an array".to_string()))?
        .iter()
        .map(|e| {
            Ok(Annotated::new(
                OpaqueValue::new(need(e, "value", "element")?.clone()),
                pc_field(e, &universe)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    VarSet::from_elements(&universe, elements)
}

pub fn varfamily_to_json(family: &VarFamily<OpaqueValue>) -> Value {
    json!({
        "universe": family.universe().features(),
        "members": family.members().iter().map(|m| json!({
            "set": m.value.iter().map(|v| v.json().clone()).collect::<Vec<_>>(),
            "pc": m.pc.text(),
        })).collect::<Vec<_>>(),
    })
}

// ---- analysis results ----------------------------------------------------

pub fn counterexample_to_json(cex: &Counterexample) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("prefix".to_string(), json!(cex.prefix));
    if let Some(i) = cex.loop_index {
        obj.insert("loop".to_string(), json!(i));
    }
    if let Some(v) = &cex.violating {
        obj.insert("violating".to_string(), json!(v));
    }
    Value::Object(obj)
}

pub fn mc_result_to_json(result: &McResult) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("verdict".to_string(), json!(result.verdict.as_str()));
    if let Some(cex) = &result.counterexample {
        obj.insert("counterexample".to_string(), counterexample_to_json(cex));
    }
    if !result.warnings.is_empty() {
        obj.insert("warnings".to_string(), json!(result.warnings));
    }
    Value::Object(obj)
}

pub fn family_mc_to_json(result: &FamilyMcResult) -> Value {
    json!({
        "verdict": if result.all_pass() { "pass" } else { "fail" },
        "classes": result.classes.iter().map(|class| json!({
            "configs": class.configs.configs().iter()
                .map(|c| json!(c.members()))
                .collect::<Vec<_>>(),
            "result": mc_result_to_json(&class.result),
        })).collect::<Vec<_>>(),
    })
}

pub fn quasi_mc_to_json(result: &QuasiMcResult) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("verdict".to_string(), json!(result.verdict.as_str()));
    if let Some((configs, cex)) = &result.witness {
        let mut w = serde_json::Map::new();
        w.insert(
            "configs".to_string(),
            json!(configs.configs().iter().map(|c| json!(c.members())).collect::<Vec<_>>()),
        );
        if let Some(cex) = cex {
            w.insert("counterexample".to_string(), counterexample_to_json(cex));
        }
        obj.insert("witness".to_string(), Value::Object(w));
    }
    Value::Object(obj)
}

pub fn lift_report_to_json(report: &LiftReport) -> Value {
    json!({
        "verdict": if report.ok() { "pass" } else { "fail" },
        "status": report.status.as_str(),
        "witnesses": report.witnesses.iter().map(|w| json!({
            "config": w.config.members(),
            "product": w.product_side,
            "family": w.family_side,
        })).collect::<Vec<_>>(),
    })
}

// ---- evidence records ------------------------------------------------------

pub fn record_to_json(record: &EvidenceRecord) -> Value {
    match record {
        EvidenceRecord::Machine { analysis, input_digest, output_digest, verdict, output } => {
            let mut obj = serde_json::Map::new();
            obj.insert("kind".to_string(), json!("machine"));
            obj.insert("analysis".to_string(), json!(analysis));
            obj.insert("input_digest".to_string(), json!(input_digest));
            obj.insert("output_digest".to_string(), json!(output_digest));
            obj.insert("verdict".to_string(), json!(verdict.as_str()));
            if let Some(output) = output {
                obj.insert("output".to_string(), output.clone());
            }
            Value::Object(obj)
        }
        EvidenceRecord::Attested { text, source } => {
            json!({"kind": "attested", "text": text, "source": source})
        }
    }
}

pub fn record_from_json(value: &Value) -> Result<EvidenceRecord> {
    match need_str(value, "kind", "evidence record")? {
        "machine" => Ok(EvidenceRecord::Machine {
            analysis: need_str(value, "analysis", "machine record")?.to_string(),
            input_digest: value
                .get("input_digest")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
            output_digest: value
                .get("output_digest")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
            verdict: Verdict::parse(need_str(value, "verdict", "machine record")?)?,
            output: value.get("output").cloned(),
        }),
        "attested" => Ok(EvidenceRecord::Attested {
            text: need_str(value, "text", "attested record")?.to_string(),
            source: value.get("source").and_then(|v| v.as_str()).unwrap_or("unknown").to_string(),
        }),
        other => Err(Error::Document(format!("unknown evidence record kind `{other}`"))),
    }
}

pub fn vevidence_to_json(evidence: &VariationalEvidence) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("scope".to_string(), json!(evidence.scope.text()));
    match &evidence.kind {
        EvidenceKind::Exhaustive(table) => {
            obj.insert("kind".to_string(), json!("exhaustive"));
            obj.insert(
                "table".to_string(),
                json!(table
                    .iter()
                    .map(|(config, record)| json!({
                        "config": config.members(),
                        "record": record_to_json(record),
                    }))
                    .collect::<Vec<_>>()),
            );
        }
        EvidenceKind::Analytic(cert) => {
            obj.insert("kind".to_string(), json!("analytic"));
            obj.insert("analysis".to_string(), json!(cert.analysis));
            obj.insert("input_digest".to_string(), json!(cert.input_digest));
            obj.insert("output_digest".to_string(), json!(cert.output_digest));
            obj.insert("verdict".to_string(), json!(cert.verdict.as_str()));
            obj.insert("output".to_string(), cert.output.clone());
        }
        EvidenceKind::Attested { text, signer } => {
            obj.insert("kind".to_string(), json!("attested"));
            obj.insert("text".to_string(), json!(text));
            obj.insert("signer".to_string(), json!(signer));
        }
    }
    Value::Object(obj)
}

pub fn vevidence_from_json(value: &Value, universe: &FeatureUniverse) -> Result<VariationalEvidence> {
    let scope = parse_featexpr(need_str(value, "scope", "evidence")?, universe)?;
    let kind = match need_str(value, "kind", "evidence")? {
        "exhaustive" => {
            let mut table = BTreeMap::new();
            for entry in need(value, "table", "exhaustive evidence")?
                .as_array()
                .ok_or_else(|| Error::Document("`table` must be an array".to_string()))?
            {
                let names = str_list(need(entry, "config", "table entry")?, "config")?;
                let config = Configuration::from_features(
                    universe,
                    names.iter().map(String::as_str),
                )?;
                let record = record_from_json(need(entry, "record", "table entry")?)?;
                if table.insert(config, record).is_some() {
                    return Err(Error::Document(
                        "duplicate configuration in exhaustive table".to_string(),
                    ));
                }
            }
            EvidenceKind::Exhaustive(table)
        }
        "analytic" => EvidenceKind::Analytic(AnalyticCert {
            analysis: need_str(value, "analysis", "analytic evidence")?.to_string(),
            input_digest: need_str(value, "input_digest", "analytic evidence")?.to_string(),
            output_digest: need_str(value, "output_digest", "analytic evidence")?.to_string(),
            verdict: Verdict::parse(need_str(value, "verdict", "analytic evidence")?)?,
            output: need(value, "output", "analytic evidence")?.clone(),
        }),
        "attested" => EvidenceKind::Attested {
            text: need_str(value, "text", "attested evidence")?.to_string(),
            signer: value.get("signer").and_then(|v| v.as_str()).unwrap_or("unknown").to_string(),
        },
        other => return Err(Error::Document(format!("unknown evidence kind `{other}`"))),
    };
    Ok(VariationalEvidence { scope, kind })
}

// ---- product assurance cases ----------------------------------------------

fn goal_to_json(goal: &Goal) -> Value {
    match goal {
        Goal::Atom { claim, text } => json!({"kind": "atom", "claim": claim, "text": text}),
        Goal::Pred { predicate, data, text } => {
            json!({"kind": "pred", "pred": predicate, "data": data.to_json(), "text": text})
        }
    }
}

fn goal_from_json(value: &Value) -> Result<Goal> {
    match need_str(value, "kind", "goal")? {
        "atom" => Ok(Goal::Atom {
            claim: need_str(value, "claim", "goal")?.to_string(),
            text: value.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        }),
        "pred" => Ok(Goal::Pred {
            predicate: need_str(value, "pred", "goal")?.to_string(),
            data: DataRef::from_json(need(value, "data", "goal")?)?,
            text: value.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        }),
        other => Err(Error::Document(format!("unknown goal kind `{other}`"))),
    }
}

fn justification_to_json(justification: &StrategyJustification) -> Value {
    match justification {
        StrategyJustification::Axiomatic { text } => json!({"kind": "axiomatic", "text": text}),
        StrategyJustification::TemplateInstance { template, data, aux, prec } => {
            let mut obj = serde_json::Map::new();
            obj.insert("kind".to_string(), json!("template"));
            obj.insert("template".to_string(), json!(template));
            obj.insert("data".to_string(), data.to_json());
            if let Some(aux) = aux {
                obj.insert("aux".to_string(), aux.to_json());
            }
            if let Some(prec) = prec {
                obj.insert("prec".to_string(), record_to_json(prec));
            }
            Value::Object(obj)
        }
    }
}

fn justification_from_json(value: &Value) -> Result<StrategyJustification> {
    match need_str(value, "kind", "justification")? {
        "axiomatic" => Ok(StrategyJustification::Axiomatic {
            text: value.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        }),
        "template" => Ok(StrategyJustification::TemplateInstance {
            template: need_str(value, "template", "justification")?.to_string(),
            data: DataRef::from_json(need(value, "data", "justification")?)?,
            aux: value.get("aux").map(DataRef::from_json).transpose()?,
            prec: value.get("prec").map(record_from_json).transpose()?,
        }),
        other => Err(Error::Document(format!("unknown justification kind `{other}`"))),
    }
}

pub fn ac_node_to_json(node: &GsnNode) -> Value {
    match node {
        GsnNode::Nil => json!({"kind": "nil"}),
        GsnNode::Evidence { id, goal, record, description } => {
            let mut obj = serde_json::Map::new();
            obj.insert("id".to_string(), json!(id));
            obj.insert("kind".to_string(), json!("evidence"));
            obj.insert("goal".to_string(), goal_to_json(goal));
            obj.insert("evidence".to_string(), record_to_json(record));
            if let Some(d) = description {
                obj.insert("description".to_string(), json!(d));
            }
            Value::Object(obj)
        }
        GsnNode::Strategy { id, goal, justification, children, description } => {
            let mut obj = serde_json::Map::new();
            obj.insert("id".to_string(), json!(id));
            obj.insert("kind".to_string(), json!("strategy"));
            obj.insert("goal".to_string(), goal_to_json(goal));
            obj.insert("justification".to_string(), justification_to_json(justification));
            obj.insert(
                "children".to_string(),
                Value::Array(children.iter().map(ac_node_to_json).collect()),
            );
            if let Some(d) = description {
                obj.insert("description".to_string(), json!(d));
            }
            Value::Object(obj)
        }
    }
}

pub fn ac_node_from_json(value: &Value) -> Result<GsnNode> {
    match need_str(value, "kind", "ac node")? {
        "nil" => Ok(GsnNode::Nil),
        "evidence" => Ok(GsnNode::Evidence {
            id: need_str(value, "id", "ac node")?.to_string(),
            goal: goal_from_json(need(value, "goal", "ac node")?)?,
            record: record_from_json(need(value, "evidence", "ac node")?)?,
            description: value.get("description").and_then(|v| v.as_str()).map(str::to_string),
        }),
        "strategy" => Ok(GsnNode::Strategy {
            id: need_str(value, "id", "ac node")?.to_string(),
            goal: goal_from_json(need(value, "goal", "ac node")?)?,
            justification: justification_from_json(need(value, "justification", "ac node")?)?,
            children: need(value, "children", "ac node")?
                .as_array()
                .ok_or_else(|| Error::Document("`children` must be an array".to_string()))?
                .iter()
                .map(ac_node_from_json)
                .collect::<Result<Vec<_>>>()?,
            description: value.get("description").and_then(|v| v.as_str()).map(str::to_string),
        }),
        other => Err(Error::Document(format!("unknown node kind `{other}`"))),
    }
}

pub fn ac_to_json(root: &GsnNode) -> Value {
    json!({"root": ac_node_to_json(root)})
}

pub fn ac_from_json(value: &Value) -> Result<GsnNode> {
    let root = ac_node_from_json(need(value, "root", "ac")?)?;
    root.validate()?;
    Ok(root)
}

// ---- product-line assurance cases -------------------------------------------

fn vgoal_to_json(goal: &VGoal) -> Value {
    match &goal.body {
        VGoalBody::Atom { claim, text } => json!({"kind": "atom", "claim": claim, "text": text}),
        VGoalBody::Pred { predicate, data, text } => {
            json!({"kind": "pred", "pred": predicate, "data": data.to_json(), "text": text})
        }
    }
}

fn vgoal_from_json(value: &Value, pc: FeatExpr) -> Result<VGoal> {
    let body = match need_str(value, "kind", "goal")? {
        "atom" => VGoalBody::Atom {
            claim: need_str(value, "claim", "goal")?.to_string(),
            text: value.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        },
        "pred" => VGoalBody::Pred {
            predicate: need_str(value, "pred", "goal")?.to_string(),
            data: DataRef::from_json(need(value, "data", "goal")?)?,
            text: value.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        },
        other => return Err(Error::Document(format!("unknown goal kind `{other}`"))),
    };
    Ok(VGoal { pc, body })
}

fn vjustification_to_json(justification: &VStrategyJustification) -> Value {
    match justification {
        VStrategyJustification::Axiomatic { text } => json!({"kind": "axiomatic", "text": text}),
        VStrategyJustification::TemplateInstance { template, data, aux, prec } => {
            let mut obj = serde_json::Map::new();
            obj.insert("kind".to_string(), json!("template"));
            obj.insert("template".to_string(), json!(template));
            obj.insert("data".to_string(), data.to_json());
            if let Some(aux) = aux {
                obj.insert("aux".to_string(), aux.to_json());
            }
            if let Some(prec) = prec {
                obj.insert("prec".to_string(), vevidence_to_json(prec));
            }
            Value::Object(obj)
        }
    }
}

fn vjustification_from_json(value: &Value, universe: &FeatureUniverse) -> Result<VStrategyJustification> {
    match need_str(value, "kind", "justification")? {
        "axiomatic" => Ok(VStrategyJustification::Axiomatic {
            text: value.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        }),
        "template" => Ok(VStrategyJustification::TemplateInstance {
            template: need_str(value, "template", "justification")?.to_string(),
            data: DataRef::from_json(need(value, "data", "justification")?)?,
            aux: value.get("aux").map(DataRef::from_json).transpose()?,
            prec: value
                .get("prec")
                .map(|p| vevidence_from_json(p, universe))
                .transpose()?,
        }),
        other => Err(Error::Document(format!("unknown justification kind `{other}`"))),
    }
}

pub fn vnode_to_json(node: &VGsnNode) -> Value {
    match node {
        VGsnNode::Evidence { id, goal, evidence, description } => {
            let mut obj = serde_json::Map::new();
            obj.insert("id".to_string(), json!(id));
            obj.insert("kind".to_string(), json!("evidence"));
            obj.insert("pc".to_string(), json!(goal.pc.text()));
            obj.insert("goal".to_string(), vgoal_to_json(goal));
            obj.insert("evidence".to_string(), vevidence_to_json(evidence));
            if let Some(d) = description {
                obj.insert("description".to_string(), json!(d));
            }
            Value::Object(obj)
        }
        VGsnNode::Strategy { id, goal, justification, children, description } => {
            let mut obj = serde_json::Map::new();
            obj.insert("id".to_string(), json!(id));
            obj.insert("kind".to_string(), json!("strategy"));
            obj.insert("pc".to_string(), json!(goal.pc.text()));
            obj.insert("goal".to_string(), vgoal_to_json(goal));
            obj.insert("justification".to_string(), vjustification_to_json(justification));
            obj.insert(
                "children".to_string(),
                Value::Array(children.iter().map(vnode_to_json).collect()),
            );
            if let Some(d) = description {
                obj.insert("description".to_string(), json!(d));
            }
            Value::Object(obj)
        }
    }
}

pub fn vnode_from_json(value: &Value, universe: &FeatureUniverse) -> Result<VGsnNode> {
    let pc = pc_field(value, universe)?;
    let id = need_str(value, "id", "plac node")?.to_string();
    let goal = vgoal_from_json(need(value, "goal", "plac node")?, pc)?;
    let description = value.get("description").and_then(|v| v.as_str()).map(str::to_string);
    match need_str(value, "kind", "plac node")? {
        "evidence" => Ok(VGsnNode::Evidence {
            id,
            goal,
            evidence: vevidence_from_json(need(value, "evidence", "plac node")?, universe)?,
            description,
        }),
        "strategy" => Ok(VGsnNode::Strategy {
            id,
            goal,
            justification: vjustification_from_json(
                need(value, "justification", "plac node")?,
                universe,
            )?,
            children: need(value, "children", "plac node")?
                .as_array()
                .ok_or_else(|| Error::Document("`children` must be an array".to_string()))?
                .iter()
                .map(|c| vnode_from_json(c, universe))
                .collect::<Result<Vec<_>>>()?,
            description,
        }),
        other => Err(Error::Document(format!("unknown node kind `{other}`"))),
    }
}

pub fn plac_to_json(plac: &PlAc) -> Value {
    json!({
        "features": plac.model.universe().features(),
        "feature_model": plac.model.expr().text(),
        "root": vnode_to_json(&plac.root),
    })
}

pub fn plac_from_json(value: &Value) -> Result<PlAc> {
    let features = str_list(need(value, "features", "plac")?, "features")?;
    let universe = FeatureUniverse::new(features)?;
    let expr = parse_featexpr(need_str(value, "feature_model", "plac")?, &universe)?;
    let model = FeatureModel::new(universe.clone(), expr)?;
    let root = vnode_from_json(need(value, "root", "plac")?, &universe)?;
    let plac = PlAc { model, root };
    plac.validate()?;
    Ok(plac)
}

// ---- formulas and patterns ----------------------------------------------

pub fn formula_from_json(value: &Value) -> Result<TemporalFormula> {
    TemporalFormula::parse(need_str(value, "formula", "formula artifact")?)
}

pub fn pattern_from_json(value: &Value) -> Result<String> {
    Ok(need_str(value, "pattern", "query artifact")?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fts::fig3_fts;

    #[test]
    fn fts_roundtrip() {
        let fts = fig3_fts();
        let json = fts_to_json(&fts);
        let back = fts_from_json(&json).unwrap();
        assert_eq!(fts, back);
    }

    #[test]
    fn missing_pc_defaults_to_top() {
        let json = json!({
            "universe": ["A"],
            "feature_model": "true",
            "states": [{"id": "s0", "labels": ["x"]}],
            "transitions": [],
            "initial": ["s0"],
        });
        let fts = fts_from_json(&json).unwrap();
        assert_eq!(fts.states()[0].pc.text(), "true");
    }

    #[test]
    fn varset_roundtrip_with_inline_universe() {
        let json = json!({
            "universe": ["A", "B"],
            "elements": [
                {"value": "x", "pc": "A"},
                {"value": "y"},
            ],
        });
        let set = varset_from_json(&json, None).unwrap();
        assert_eq!(set.len(), 2);
        let back = varset_to_json(&set);
        let set2 = varset_from_json(&back, None).unwrap();
        assert_eq!(set, set2);
    }

    #[test]
    fn bad_documents_are_rejected() {
        assert!(feature_model_from_json(&json!({"features": ["A"]})).is_err());
        assert!(ts_from_json(&json!({"states": [], "transitions": []})).is_err());
        assert!(record_from_json(&json!({"kind": "wat"})).is_err());
    }
}

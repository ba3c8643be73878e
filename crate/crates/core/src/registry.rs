//! Registries of predicates, argument templates and analyses.
//!
//! The derivation-operator pairing of variational and product types is
//! expressed twice: statically as the `Variational` trait, and here
//! dynamically, where every family-level analysis names its product
//! counterpart and carries the derivation of its outputs. Built-ins
//! cover the label query and model checking analyses, the domain
//! decomposition template, and the analytic (argument-over-analysis)
//! templates in product, lifted and quasi-lifted forms.

use std::collections::{BTreeMap, BTreeSet};

use crate::artifact::{resolve, DataRef, DataValue, OpaqueValue, ResolveNamed};
use crate::digest::digest_json;
use crate::error::{Error, Result};
use crate::featexpr::{ConfigSet, Configuration, FeatExpr, FeatureModel};
use crate::fts::{mc_family_exact, mc_family_quasi, mc_product, query};
use crate::gsn::{domdecomp_check_complete, domdecomp_instantiate, EvidenceRecord, Goal, GsnNode};
use crate::variability::{
    check_lift, check_quasi_lift, AnalyticCert, LiftReport, LiftStatus, LiftWitness,
    VariationalEvidence, Verdict,
};
use crate::variability::EvidenceKind;
use crate::vgsn::{vdomdecomp_instantiate, VGoal, VGoalBody, VGsnNode};

pub use crate::variability::EvidenceKind as VEvidenceKind;

/// Everything a check needs: the registries and a name resolver.
#[derive(Clone, Copy)]
pub struct CheckContext<'a> {
    pub registry: &'a Registry,
    pub resolver: &'a dyn ResolveNamed,
}

type PredFn = Box<dyn Fn(&CheckContext, &DataValue) -> Result<Option<bool>> + Send + Sync>;

pub enum PredicateDef {
    /// Machine-checkable; `None` means the instance is not decidable
    /// (e.g. a bounded forall over an external element predicate).
    Machine(PredFn),
    /// Declared external: only ever attested.
    External,
}

#[derive(Debug, Clone)]
pub struct PrecOutcome {
    pub pass: bool,
    pub witnesses: Vec<String>,
}

impl PrecOutcome {
    pub fn pass() -> Self {
        PrecOutcome { pass: true, witnesses: Vec::new() }
    }

    pub fn fail(witnesses: Vec<String>) -> Self {
        PrecOutcome { pass: false, witnesses }
    }
}

type ParentFn = Box<dyn Fn(&CheckContext, &DataRef, Option<&DataRef>) -> Result<Goal> + Send + Sync>;
type PrecFn =
    Box<dyn Fn(&CheckContext, &DataRef, Option<&DataRef>) -> Result<PrecOutcome> + Send + Sync>;
type InstFn = Box<
    dyn Fn(&CheckContext, &DataRef, Option<&DataRef>, &str) -> Result<Vec<GsnNode>> + Send + Sync,
>;

/// A product-level argument template.
pub struct TemplateDef {
    pub id: String,
    pub parent_pred: String,
    pub parent: ParentFn,
    pub prec: PrecFn,
    pub inst: InstFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    Exact,
    Quasi,
}

type VPrecFn = Box<
    dyn Fn(&CheckContext, &FeatureModel, &DataRef, Option<&DataRef>) -> Result<PrecOutcome>
        + Send
        + Sync,
>;
type VInstFn = Box<
    dyn Fn(
            &CheckContext,
            &FeatureModel,
            &DataRef,
            Option<&DataRef>,
            &str,
            &FeatExpr,
        ) -> Result<Vec<VGsnNode>>
        + Send
        + Sync,
>;

/// A lifted template over a registered product template. Instantiation
/// carries a mandatory obligation: derivation must commute with
/// instantiation (exactly, or in the sound direction for quasi mode).
pub struct VTemplateDef {
    pub id: String,
    pub product_id: String,
    pub mode: LiftMode,
    /// Predicate naming the precondition claim (for certificates).
    pub prec_pred: String,
    /// Family analysis re-run to verify precondition certificates.
    pub prec_analysis: Option<String>,
    pub vprec: VPrecFn,
    pub inst: VInstFn,
}

#[derive(Debug, Clone)]
pub struct AnalysisRun {
    pub verdict: Verdict,
    pub output: serde_json::Value,
}

type RunFn = Box<dyn Fn(&CheckContext, &DataValue) -> Result<AnalysisRun> + Send + Sync>;
type VRunFn =
    Box<dyn Fn(&CheckContext, &FeatureModel, &DataValue) -> Result<AnalysisRun> + Send + Sync>;
type DeriveOutFn =
    Box<dyn Fn(&serde_json::Value, &Configuration) -> Result<AnalysisRun> + Send + Sync>;
type LiftCheckFn =
    Box<dyn Fn(&CheckContext, &FeatureModel, &DataValue) -> Result<LiftReport> + Send + Sync>;
type FailingFn =
    Box<dyn Fn(&serde_json::Value, &FeatureModel) -> Result<ConfigSet> + Send + Sync>;

/// A product-level analysis.
pub struct AnalysisDef {
    pub id: String,
    pub run: RunFn,
}

/// A family-level analysis: its product counterpart, how its output
/// derives per configuration, its own lift check, and which
/// configurations a failing output incriminates.
pub struct VAnalysisDef {
    pub id: String,
    pub product_id: String,
    pub mode: LiftMode,
    pub run: VRunFn,
    pub derive_output: DeriveOutFn,
    pub lift_check: LiftCheckFn,
    pub failing_configs: FailingFn,
}

#[derive(Default)]
pub struct Registry {
    predicates: BTreeMap<String, PredicateDef>,
    templates: BTreeMap<String, TemplateDef>,
    vtemplates: BTreeMap<String, VTemplateDef>,
    analyses: BTreeMap<String, AnalysisDef>,
    vanalyses: BTreeMap<String, VAnalysisDef>,
}

impl Registry {
    pub fn predicate(&self, id: &str) -> Result<&PredicateDef> {
        self.predicates.get(id).ok_or_else(|| Error::UnknownPredicate(id.to_string()))
    }

    pub fn template(&self, id: &str) -> Result<&TemplateDef> {
        self.templates.get(id).ok_or_else(|| Error::UnknownTemplate(id.to_string()))
    }

    pub fn vtemplate(&self, id: &str) -> Result<&VTemplateDef> {
        self.vtemplates.get(id).ok_or_else(|| Error::UnknownTemplate(id.to_string()))
    }

    pub fn analysis(&self, id: &str) -> Result<&AnalysisDef> {
        self.analyses.get(id).ok_or_else(|| Error::UnknownAnalysis(id.to_string()))
    }

    pub fn vanalysis(&self, id: &str) -> Result<&VAnalysisDef> {
        self.vanalyses.get(id).ok_or_else(|| Error::UnknownAnalysis(id.to_string()))
    }

    pub fn template_ids(&self) -> Vec<&str> {
        self.templates.keys().map(String::as_str).collect()
    }

    pub fn vtemplate_ids(&self) -> Vec<&str> {
        self.vtemplates.keys().map(String::as_str).collect()
    }

    pub fn has_predicate(&self, id: &str) -> bool {
        self.predicates.contains_key(id)
    }

    pub fn register_predicate(&mut self, id: impl Into<String>, def: PredicateDef) {
        self.predicates.insert(id.into(), def);
    }

    pub fn register_template(&mut self, t: TemplateDef) {
        self.templates.insert(t.id.clone(), t);
    }

    /// `lift_template`: registers a lifted counterpart of an existing
    /// product template. The pairing obligation (derivation commutes
    /// with instantiation) is checked on every instantiation executed.
    pub fn register_lifted(&mut self, vt: VTemplateDef) -> Result<()> {
        if !self.templates.contains_key(&vt.product_id) {
            return Err(Error::UnknownTemplate(vt.product_id.clone()));
        }
        self.vtemplates.insert(vt.id.clone(), vt);
        Ok(())
    }

    pub fn register_analysis(&mut self, a: AnalysisDef) {
        self.analyses.insert(a.id.clone(), a);
    }

    pub fn register_vanalysis(&mut self, a: VAnalysisDef) {
        self.vanalyses.insert(a.id.clone(), a);
    }

    /// Runs a machine predicate on resolved data. `Ok(None)` means the
    /// predicate (or its element predicate) is external here.
    pub fn machine_check(
        &self,
        ctx: &CheckContext,
        id: &str,
        data: &DataValue,
    ) -> Result<Option<bool>> {
        match self.predicate(id)? {
            PredicateDef::External => Ok(None),
            PredicateDef::Machine(f) => f(ctx, data),
        }
    }
}

fn mc_input(data: &DataValue) -> Result<(&crate::fts::TransitionSystem, &crate::fts::TemporalFormula)> {
    let (model, spec) = data.as_pair()?;
    Ok((model.as_ts()?, spec.as_formula()?))
}

fn family_mc_input(data: &DataValue) -> Result<(&crate::fts::Fts, &crate::fts::TemporalFormula)> {
    let (model, spec) = data.as_pair()?;
    Ok((model.as_fts()?, spec.as_formula()?))
}

fn config_names(config: &Configuration) -> Vec<String> {
    config.members().iter().map(|s| s.to_string()).collect()
}

fn config_from_names(model: &FeatureModel, names: &[serde_json::Value]) -> Result<Configuration> {
    let features: Vec<&str> = names
        .iter()
        .map(|v| {
            v.as_str().ok_or_else(|| Error::Document("feature names must be strings".to_string()))
        })
        .collect::<Result<_>>()?;
    Ok(Configuration::from_features(model.universe(), features)?)
}

fn class_for_config<'a>(
    payload: &'a serde_json::Value,
    config: &Configuration,
) -> Result<&'a serde_json::Value> {
    let classes = payload
        .get("classes")
        .and_then(|c| c.as_array())
        .ok_or_else(|| Error::CorruptEvidence("family result has no classes".to_string()))?;
    let wanted: BTreeSet<String> = config.members().iter().map(|s| s.to_string()).collect();
    for class in classes {
        let configs = class
            .get("configs")
            .and_then(|c| c.as_array())
            .ok_or_else(|| Error::CorruptEvidence("class has no configs".to_string()))?;
        for c in configs {
            let names: BTreeSet<String> = c
                .as_array()
                .map(|items| {
                    items.iter().filter_map(|v| v.as_str().map(str::to_string)).collect()
                })
                .unwrap_or_default();
            if names == wanted {
                return Ok(class);
            }
        }
    }
    Err(Error::CorruptEvidence(format!(
        "family result covers no class for configuration {{{config}}}"
    )))
}

fn run_from_result_json(value: &serde_json::Value) -> Result<AnalysisRun> {
    let verdict = value
        .get("verdict")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::CorruptEvidence("result has no verdict".to_string()))?;
    Ok(AnalysisRun { verdict: Verdict::parse(verdict)?, output: value.clone() })
}

impl Registry {
    /// The built-in registry: query and model checking analyses with
    /// their lifts, completeness checking, domain decomposition and
    /// analytic templates, and the stock predicates.
    pub fn builtin() -> Self {
        let mut r = Registry::default();

        // ---- predicates -------------------------------------------------
        r.register_predicate(
            "mc-pass",
            PredicateDef::Machine(Box::new(|_ctx, data| {
                let (ts, formula) = mc_input(data)?;
                Ok(Some(mc_product(ts, formula).verdict == Verdict::Pass))
            })),
        );
        r.register_predicate(
            "set-nonempty",
            PredicateDef::Machine(Box::new(|_ctx, data| Ok(Some(!data.as_set()?.is_empty())))),
        );
        r.register_predicate(
            "forall-in-set",
            PredicateDef::Machine(Box::new(|ctx, data| {
                let (set, pred) = data.as_forall()?;
                let elements = set.as_set()?;
                let mut all = true;
                for element in elements {
                    let value = DataValue::Json(element.json().clone());
                    match ctx.registry.machine_check(ctx, pred, &value)? {
                        Some(holds) => all = all && holds,
                        None => return Ok(None),
                    }
                }
                Ok(Some(all))
            })),
        );
        for external in [
            "scenario-assured",
            "mc-subject",
            "query-subject",
            "mc-verdict",
            "query-verdict",
            "lift-exact",
            "lift-quasi",
            "complete",
        ] {
            r.register_predicate(external, PredicateDef::External);
        }

        // ---- product analyses -------------------------------------------
        r.register_analysis(AnalysisDef {
            id: "modelcheck".to_string(),
            run: Box::new(|_ctx, data| {
                let (ts, formula) = mc_input(data)?;
                let result = mc_product(ts, formula);
                Ok(AnalysisRun {
                    verdict: result.verdict,
                    output: crate::io::mc_result_to_json(&result),
                })
            }),
        });
        r.register_analysis(AnalysisDef {
            id: "query".to_string(),
            run: Box::new(|_ctx, data| {
                let (model, pattern) = data.as_pair()?;
                let ids = query(model.as_ts()?, pattern.as_pattern()?);
                Ok(AnalysisRun {
                    verdict: Verdict::Pass,
                    output: serde_json::json!({
                        "verdict": "pass",
                        "states": ids.iter().collect::<Vec<_>>(),
                    }),
                })
            }),
        });
        r.register_analysis(AnalysisDef {
            id: "complete".to_string(),
            run: Box::new(|_ctx, data| {
                let (forall, family) = data.as_pair()?;
                let (set, _pred) = forall.as_forall()?;
                let set = set.as_set()?;
                let family = family.as_family()?;
                let complete = domdecomp_check_complete(&set, &family);
                Ok(AnalysisRun {
                    verdict: if complete { Verdict::Pass } else { Verdict::Fail },
                    output: serde_json::json!({
                        "verdict": if complete { "pass" } else { "fail" },
                        "complete": complete,
                    }),
                })
            }),
        });

        // ---- family analyses --------------------------------------------
        r.register_vanalysis(VAnalysisDef {
            id: "mc-family".to_string(),
            product_id: "modelcheck".to_string(),
            mode: LiftMode::Exact,
            run: Box::new(|_ctx, _fm, data| {
                let (fts, formula) = family_mc_input(data)?;
                let result = mc_family_exact(fts, formula)?;
                Ok(AnalysisRun {
                    verdict: if result.all_pass() { Verdict::Pass } else { Verdict::Fail },
                    output: crate::io::family_mc_to_json(&result),
                })
            }),
            derive_output: Box::new(|payload, config| {
                let class = class_for_config(payload, config)?;
                let result = class
                    .get("result")
                    .ok_or_else(|| Error::CorruptEvidence("class has no result".to_string()))?;
                run_from_result_json(result)
            }),
            lift_check: Box::new(|_ctx, _fm, data| {
                let (fts, formula) = family_mc_input(data)?;
                check_lift(
                    fts.model(),
                    &(fts, formula),
                    |(ts, f): &(crate::fts::TransitionSystem, _)| {
                        crate::io::mc_result_to_json(&mc_product(ts, f))
                    },
                    |(m, f): &(&crate::fts::Fts, &crate::fts::TemporalFormula)| {
                        mc_family_exact(m, f).map(|r| crate::io::family_mc_to_json(&r))
                    },
                    |(m, f), c| Ok((m.derive(c)?, (*f).clone())),
                    |family_out, c| {
                        let payload = family_out
                            .as_ref()
                            .map_err(|e| Error::CorruptEvidence(e.to_string()))?;
                        let class = class_for_config(payload, c)?;
                        class
                            .get("result")
                            .cloned()
                            .ok_or_else(|| Error::CorruptEvidence("class has no result".to_string()))
                    },
                )
            }),
            failing_configs: Box::new(|payload, model| {
                let mut failing = ConfigSet::empty(model.universe());
                if let Some(classes) = payload.get("classes").and_then(|c| c.as_array()) {
                    for class in classes {
                        let verdict =
                            class.pointer("/result/verdict").and_then(|v| v.as_str());
                        if verdict == Some("fail") {
                            if let Some(configs) = class.get("configs").and_then(|c| c.as_array())
                            {
                                for c in configs {
                                    if let Some(items) = c.as_array() {
                                        let cfg = config_from_names(model, items)?;
                                        failing.insert(&cfg)?;
                                    }
                                }
                            }
                        }
                    }
                }
                Ok(failing)
            }),
        });
        r.register_vanalysis(VAnalysisDef {
            id: "mc-family-quasi".to_string(),
            product_id: "modelcheck".to_string(),
            mode: LiftMode::Quasi,
            run: Box::new(|_ctx, _fm, data| {
                let (fts, formula) = family_mc_input(data)?;
                let result = mc_family_quasi(fts, formula)?;
                Ok(AnalysisRun {
                    verdict: result.verdict,
                    output: crate::io::quasi_mc_to_json(&result),
                })
            }),
            derive_output: Box::new(|payload, _config| {
                // the collapsed verdict is the per-product view: a clean
                // family verdict is sound for every product, a failing
                // one is reported conservatively everywhere
                run_from_result_json(payload)
            }),
            lift_check: Box::new(|_ctx, _fm, data| {
                let (fts, formula) = family_mc_input(data)?;
                check_quasi_lift(
                    fts.model(),
                    &(fts, formula),
                    |(ts, f): &(crate::fts::TransitionSystem, _)| mc_product(ts, f).verdict,
                    |(m, f): &(&crate::fts::Fts, &crate::fts::TemporalFormula)| {
                        mc_family_quasi(m, f).map(|r| r.verdict)
                    },
                    |(m, f), c| Ok((m.derive(c)?, (*f).clone())),
                    |v| matches!(v, Ok(Verdict::Pass)),
                    |v| *v == Verdict::Pass,
                )
            }),
            failing_configs: Box::new(|payload, model| {
                let verdict = payload.get("verdict").and_then(|v| v.as_str());
                if verdict == Some("fail") {
                    Ok(model.expr().semantics())
                } else {
                    Ok(ConfigSet::empty(model.universe()))
                }
            }),
        });
        r.register_vanalysis(VAnalysisDef {
            id: "vquery".to_string(),
            product_id: "query".to_string(),
            mode: LiftMode::Exact,
            run: Box::new(|_ctx, _fm, data| {
                let (model, pattern) = data.as_pair()?;
                let results = crate::fts::vquery(model.as_fts()?, pattern.as_pattern()?);
                Ok(AnalysisRun {
                    verdict: Verdict::Pass,
                    output: serde_json::json!({
                        "verdict": "pass",
                        "results": crate::io::varset_to_json(&results.map(|id| OpaqueValue::string(id.clone()))),
                    }),
                })
            }),
            derive_output: Box::new(|payload, config| {
                let results = payload
                    .get("results")
                    .ok_or_else(|| Error::CorruptEvidence("no query results".to_string()))?;
                let varset = crate::io::varset_from_json(results, None)?;
                let derived = varset.derive_set(config)?;
                Ok(AnalysisRun {
                    verdict: Verdict::Pass,
                    output: serde_json::json!({
                        "verdict": "pass",
                        "states": derived.iter().map(|v| v.json().clone()).collect::<Vec<_>>(),
                    }),
                })
            }),
            lift_check: Box::new(|_ctx, _fm, data| {
                let (model, pattern) = data.as_pair()?;
                let fts = model.as_fts()?;
                let pattern = pattern.as_pattern()?;
                check_lift(
                    fts.model(),
                    &(fts, pattern),
                    |(ts, p): &(crate::fts::TransitionSystem, &str)| query(ts, p),
                    |(m, p): &(&crate::fts::Fts, &str)| crate::fts::vquery(m, p),
                    |(m, p), c| Ok((m.derive(c)?, *p)),
                    |vs, c| vs.derive_set(c),
                )
            }),
            failing_configs: Box::new(|_payload, model| Ok(ConfigSet::empty(model.universe()))),
        });
        r.register_vanalysis(VAnalysisDef {
            id: "vcomplete".to_string(),
            product_id: "complete".to_string(),
            mode: LiftMode::Exact,
            run: Box::new(|_ctx, fm, data| {
                let (forall, family) = data.as_pair()?;
                let (set, _pred) = forall.as_forall()?;
                let set = set.as_varset()?;
                let family = family.as_varfamily()?;
                let mut failing: Vec<serde_json::Value> = Vec::new();
                for config in fm.valid_configs() {
                    let derived_set = set.derive_set(&config)?;
                    let union: BTreeSet<OpaqueValue> =
                        family.derive_family(&config)?.into_iter().flatten().collect();
                    if !derived_set.is_subset(&union) {
                        failing.push(serde_json::json!(config_names(&config)));
                    }
                }
                let complete = failing.is_empty();
                Ok(AnalysisRun {
                    verdict: if complete { Verdict::Pass } else { Verdict::Fail },
                    output: serde_json::json!({
                        "verdict": if complete { "pass" } else { "fail" },
                        "complete": complete,
                        "failing": failing,
                    }),
                })
            }),
            derive_output: Box::new(|payload, config| {
                let wanted = serde_json::json!(config_names(config));
                let failed = payload
                    .get("failing")
                    .and_then(|f| f.as_array())
                    .map(|f| f.contains(&wanted))
                    .unwrap_or(false);
                Ok(AnalysisRun {
                    verdict: if failed { Verdict::Fail } else { Verdict::Pass },
                    output: serde_json::json!({
                        "verdict": if failed { "fail" } else { "pass" },
                        "complete": !failed,
                    }),
                })
            }),
            lift_check: Box::new(|_ctx, fm, data| {
                let (forall, family) = data.as_pair()?;
                let (set, _pred) = forall.as_forall()?;
                let set = set.as_varset()?.clone();
                let family = family.as_varfamily()?.clone();
                check_lift(
                    fm,
                    &(set, family),
                    |(s, f): &(BTreeSet<OpaqueValue>, Vec<BTreeSet<OpaqueValue>>)| {
                        domdecomp_check_complete(s, f)
                    },
                    |pair| pair.clone(),
                    |(s, f), c| Ok((s.derive_set(c)?, f.derive_family(c)?)),
                    |(s, f), c| Ok(domdecomp_check_complete(&s.derive_set(c)?, &f.derive_family(c)?)),
                )
            }),
            failing_configs: Box::new(|payload, model| {
                let mut failing = ConfigSet::empty(model.universe());
                if let Some(items) = payload.get("failing").and_then(|f| f.as_array()) {
                    for item in items {
                        if let Some(names) = item.as_array() {
                            failing.insert(&config_from_names(model, names)?)?;
                        }
                    }
                }
                Ok(failing)
            }),
        });

        // lift certificates: re-running them re-checks the lift itself
        for (id, base) in [
            ("lift:mc-family", "mc-family"),
            ("lift:mc-family-quasi", "mc-family-quasi"),
            ("lift:vquery", "vquery"),
        ] {
            let base = base.to_string();
            r.register_vanalysis(VAnalysisDef {
                id: id.to_string(),
                product_id: "lift-check".to_string(),
                mode: LiftMode::Exact,
                run: Box::new(move |ctx, fm, data| {
                    let inner = ctx.registry.vanalysis(&base)?;
                    let report = (inner.lift_check)(ctx, fm, data)?;
                    Ok(AnalysisRun {
                        verdict: if report.ok() { Verdict::Pass } else { Verdict::Fail },
                        output: crate::io::lift_report_to_json(&report),
                    })
                }),
                derive_output: Box::new(|payload, _config| run_from_result_json(payload)),
                lift_check: Box::new(|_ctx, fm, _data| {
                    let _ = fm;
                    Ok(LiftReport { status: LiftStatus::Exact, witnesses: Vec::new() })
                }),
                failing_configs: Box::new(|payload, model| {
                    let verdict = payload.get("verdict").and_then(|v| v.as_str());
                    if verdict == Some("fail") {
                        Ok(model.expr().semantics())
                    } else {
                        Ok(ConfigSet::empty(model.universe()))
                    }
                }),
            });
        }

        // ---- product templates ------------------------------------------
        r.register_template(TemplateDef {
            id: "domdecomp".to_string(),
            parent_pred: "forall-in-set".to_string(),
            parent: Box::new(|_ctx, data, _aux| {
                Ok(Goal::Pred {
                    predicate: "forall-in-set".to_string(),
                    data: data.clone(),
                    text: "Every element of the set satisfies the claim".to_string(),
                })
            }),
            prec: Box::new(|ctx, data, aux| {
                let forall = resolve(data, ctx.resolver)?;
                let (set, _pred) = forall.as_forall()?;
                let set = set.as_set()?;
                let aux = aux.ok_or_else(|| {
                    Error::Refused("domain decomposition needs a family".to_string())
                })?;
                let family = resolve(aux, ctx.resolver)?.as_family()?;
                if family.is_empty() && !set.is_empty() {
                    return Ok(PrecOutcome::fail(vec![
                        "empty family over a non-empty set".to_string(),
                    ]));
                }
                let uncovered: Vec<String> = set
                    .iter()
                    .filter(|x| !family.iter().any(|member| member.contains(x)))
                    .map(|x| x.to_string())
                    .collect();
                if uncovered.is_empty() {
                    Ok(PrecOutcome::pass())
                } else {
                    Ok(PrecOutcome::fail(
                        uncovered.into_iter().map(|x| format!("uncovered element {x}")).collect(),
                    ))
                }
            }),
            inst: Box::new(|ctx, data, aux, base_id| {
                let forall = resolve(data, ctx.resolver)?;
                let (set, pred) = forall.as_forall()?;
                let pred = pred.to_string();
                let set = set.as_set()?;
                let aux = aux.ok_or_else(|| {
                    Error::Refused("domain decomposition needs a family".to_string())
                })?;
                let family = resolve(aux, ctx.resolver)?.as_family()?;
                domdecomp_instantiate(&set, &family, &pred, base_id)
            }),
        });
        register_analytic_template(
            &mut r,
            "mc-analytic",
            "modelcheck",
            "mc-subject",
            "mc-verdict",
            "the model satisfies the formalized property",
            "Model checking",
        );
        register_analytic_template(
            &mut r,
            "query-analytic",
            "query",
            "query-subject",
            "query-verdict",
            "the query identifies exactly the relevant states",
            "Model query",
        );

        // ---- lifted templates -------------------------------------------
        register_vdomdecomp(&mut r, "vdomdecomp-explode", false);
        register_vdomdecomp(&mut r, "vdomdecomp-aggregate", true);
        register_lifted_analytic(
            &mut r,
            "mc-analytic-lifted",
            "mc-analytic",
            "mc-family",
            "lift:mc-family",
            LiftMode::Exact,
        );
        register_lifted_analytic(
            &mut r,
            "mc-analytic-quasilifted",
            "mc-analytic",
            "mc-family-quasi",
            "lift:mc-family-quasi",
            LiftMode::Quasi,
        );
        register_lifted_analytic(
            &mut r,
            "query-analytic-lifted",
            "query-analytic",
            "vquery",
            "lift:vquery",
            LiftMode::Exact,
        );
        r
    }
}

fn pair_ref(data: &DataRef, aux: Option<&DataRef>) -> Result<DataRef> {
    let aux = aux.ok_or_else(|| {
        Error::Refused("analytic templates need the analysis specification as aux data".to_string())
    })?;
    Ok(DataRef::Pair(Box::new(data.clone()), Box::new(aux.clone())))
}

fn register_analytic_template(
    r: &mut Registry,
    id: &str,
    analysis: &str,
    subject_pred: &str,
    verdict_pred: &str,
    subject_text: &str,
    analysis_name: &str,
) {
    let analysis_id = analysis.to_string();
    let subject = subject_pred.to_string();
    let verdict_pred = verdict_pred.to_string();
    let subject_text = subject_text.to_string();
    let analysis_name = analysis_name.to_string();
    let prec_analysis = analysis_id.clone();
    r.register_template(TemplateDef {
        id: id.to_string(),
        parent_pred: subject.clone(),
        parent: Box::new(move |_ctx, data, aux| {
            Ok(Goal::Pred {
                predicate: subject.clone(),
                data: pair_ref(data, aux)?,
                text: subject_text.clone(),
            })
        }),
        prec: Box::new(move |ctx, data, aux| {
            // registered analysis, resolvable input
            let input = resolve(&pair_ref(data, aux)?, ctx.resolver)?;
            let (model, spec) = input.as_pair()?;
            if prec_analysis == "modelcheck" {
                model.as_ts()?;
                spec.as_formula()?;
            } else {
                model.as_ts()?;
                spec.as_pattern()?;
            }
            Ok(PrecOutcome::pass())
        }),
        inst: Box::new(move |ctx, data, aux, base_id| {
            let subject_ref = pair_ref(data, aux)?;
            let input = resolve(&subject_ref, ctx.resolver)?;
            let analysis = ctx.registry.analysis(&analysis_id)?;
            let run = (analysis.run)(ctx, &input)?;
            let input_digest = digest_json(&input.canonical_json());
            let summary = match run.output.get("states") {
                Some(states) => format!("{analysis_name} returned exactly {states}"),
                None => format!("{analysis_name} returned verdict `{}`", run.verdict),
            };
            Ok(vec![
                GsnNode::undeveloped(
                    format!("{base_id}.1"),
                    Goal::Atom {
                        claim: "model-fidelity".to_string(),
                        text: "The model faithfully represents the system under study".to_string(),
                    },
                ),
                GsnNode::undeveloped(
                    format!("{base_id}.2"),
                    Goal::Atom {
                        claim: "spec-fidelity".to_string(),
                        text: "The specification formalizes the intended property".to_string(),
                    },
                ),
                GsnNode::Evidence {
                    id: format!("{base_id}.3"),
                    goal: Goal::Pred {
                        predicate: verdict_pred.clone(),
                        data: subject_ref.clone(),
                        text: summary.clone(),
                    },
                    record: EvidenceRecord::Machine {
                        analysis: analysis_id.clone(),
                        input_digest,
                        output_digest: digest_json(&run.output),
                        verdict: run.verdict,
                        output: Some(run.output),
                    },
                    description: Some(summary),
                },
                GsnNode::undeveloped(
                    format!("{base_id}.4"),
                    Goal::Atom {
                        claim: "analysis-soundness".to_string(),
                        text: format!("{analysis_name} is a sound verification procedure"),
                    },
                ),
            ])
        }),
    });
}

fn register_vdomdecomp(r: &mut Registry, id: &str, aggregate_mode: bool) {
    r.register_lifted(VTemplateDef {
        id: id.to_string(),
        product_id: "domdecomp".to_string(),
        mode: LiftMode::Exact,
        prec_pred: "complete".to_string(),
        prec_analysis: Some("vcomplete".to_string()),
        vprec: Box::new(|ctx, fm, data, aux| {
            let aux = aux.ok_or_else(|| {
                Error::Refused("lifted domain decomposition needs a family".to_string())
            })?;
            let input = DataValue::Pair(
                Box::new(resolve(data, ctx.resolver)?),
                Box::new(resolve(aux, ctx.resolver)?),
            );
            let vcomplete = ctx.registry.vanalysis("vcomplete")?;
            let run = (vcomplete.run)(ctx, fm, &input)?;
            if run.verdict == Verdict::Pass {
                Ok(PrecOutcome::pass())
            } else {
                let failing = run
                    .output
                    .get("failing")
                    .map(|f| f.to_string())
                    .unwrap_or_default();
                Ok(PrecOutcome::fail(vec![format!("family incomplete at {failing}")]))
            }
        }),
        inst: Box::new(move |ctx, _fm, data, aux, base_id, _eff| {
            let forall = resolve(data, ctx.resolver)?;
            let (set, pred) = forall.as_forall()?;
            let pred = pred.to_string();
            let set = set.as_varset()?.clone();
            let family = match aux {
                Some(aux) => resolve(aux, ctx.resolver)?.as_varfamily()?.clone(),
                None => {
                    if aggregate_mode {
                        crate::vgsn::aggregate(&set)
                    } else {
                        crate::vgsn::explode(&set)
                    }
                }
            };
            vdomdecomp_instantiate(&set, &family, &pred, base_id)
        }),
    })
    .expect("product template registered first");
}

fn register_lifted_analytic(
    r: &mut Registry,
    id: &str,
    product_id: &str,
    analysis: &str,
    lift_analysis: &str,
    mode: LiftMode,
) {
    let analysis_id = analysis.to_string();
    let lift_analysis_id = lift_analysis.to_string();
    let (lift_pred, lift_text) = match mode {
        LiftMode::Exact => ("lift-exact", "The family analysis is an exact lift of the product analysis on this input"),
        LiftMode::Quasi => ("lift-quasi", "The family analysis is a sound (quasi) lift of the product analysis on this input"),
    };
    let verdict_pred = match product_id {
        "mc-analytic" => "mc-verdict",
        _ => "query-verdict",
    }
    .to_string();
    r.register_lifted(VTemplateDef {
        id: id.to_string(),
        product_id: product_id.to_string(),
        mode,
        prec_pred: "complete".to_string(),
        prec_analysis: None,
        vprec: Box::new(|ctx, _fm, data, aux| {
            let input = resolve(&pair_ref(data, aux)?, ctx.resolver)?;
            let (model, _spec) = input.as_pair()?;
            model.as_fts()?;
            Ok(PrecOutcome::pass())
        }),
        inst: Box::new(move |ctx, fm, data, aux, base_id, eff| {
            let subject_ref = pair_ref(data, aux)?;
            let input = resolve(&subject_ref, ctx.resolver)?;
            let vanalysis = ctx.registry.vanalysis(&analysis_id)?;
            let run = (vanalysis.run)(ctx, fm, &input)?;
            let lift = ctx.registry.vanalysis(&lift_analysis_id)?;
            let lift_run = (lift.run)(ctx, fm, &input)?;
            let input_digest = digest_json(&input.canonical_json());
            let universe = fm.universe();
            let top = FeatExpr::top(universe);
            let bottom = FeatExpr::bottom(universe);
            let summary = match run.output.get("results") {
                Some(results) => format!("Lifted query returned exactly {results}"),
                None => match mode {
                    LiftMode::Exact => {
                        format!("Family model checking returned verdict `{}`", run.verdict)
                    }
                    LiftMode::Quasi => match run.verdict {
                        Verdict::Pass => {
                            "Family analysis reported no violation".to_string()
                        }
                        Verdict::Fail => {
                            "Family analysis reported a violation".to_string()
                        }
                    },
                },
            };
            let atom = |claim: &str, text: &str| VGoal {
                pc: top.clone(),
                body: VGoalBody::Atom { claim: claim.to_string(), text: text.to_string() },
            };
            Ok(vec![
                VGsnNode::undeveloped(
                    format!("{base_id}.1"),
                    atom("model-fidelity", "The model faithfully represents the product family"),
                ),
                VGsnNode::undeveloped(
                    format!("{base_id}.2"),
                    atom("spec-fidelity", "The specification formalizes the intended property"),
                ),
                VGsnNode::Evidence {
                    id: format!("{base_id}.3"),
                    goal: VGoal {
                        pc: top.clone(),
                        body: VGoalBody::Pred {
                            predicate: verdict_pred.clone(),
                            data: subject_ref.clone(),
                            text: summary.clone(),
                        },
                    },
                    evidence: VariationalEvidence {
                        scope: eff.clone(),
                        kind: EvidenceKind::Analytic(AnalyticCert {
                            analysis: analysis_id.clone(),
                            input_digest: input_digest.clone(),
                            output_digest: digest_json(&run.output),
                            verdict: run.verdict,
                            output: run.output,
                        }),
                    },
                    description: Some(summary),
                },
                VGsnNode::undeveloped(
                    format!("{base_id}.4"),
                    atom("analysis-soundness", "The family analysis procedure is sound"),
                ),
                VGsnNode::Evidence {
                    id: format!("{base_id}.5"),
                    goal: VGoal {
                        pc: bottom.clone(),
                        body: VGoalBody::Pred {
                            predicate: lift_pred.to_string(),
                            data: subject_ref,
                            text: lift_text.to_string(),
                        },
                    },
                    evidence: VariationalEvidence {
                        scope: bottom,
                        kind: EvidenceKind::Analytic(AnalyticCert {
                            analysis: lift_analysis_id.clone(),
                            input_digest,
                            output_digest: digest_json(&lift_run.output),
                            verdict: lift_run.verdict,
                            output: lift_run.output,
                        }),
                    },
                    description: None,
                },
            ])
        }),
    })
    .expect("product template registered first");
}

/// `analytic_instantiate`: instantiates a registered analytic template,
/// running the analysis to fill the verdict slot. Aborts with no partial
/// tree if the analysis run fails to execute.
pub fn analytic_instantiate(
    ctx: &CheckContext,
    template_id: &str,
    data: &DataRef,
    aux: &DataRef,
    base_id: &str,
) -> Result<Vec<GsnNode>> {
    let t = ctx.registry.template(template_id)?;
    (t.inst)(ctx, data, Some(aux), base_id)
}

/// Bounded template-lift obligation: the derivation of the lifted
/// instantiation at every valid configuration must equal the product
/// instantiation on derived data. In quasi mode only the sound
/// direction is enforced: a clean derived verdict may not mask a
/// failing product verdict.
pub fn template_lift_obligation(
    ctx: &CheckContext,
    model: &FeatureModel,
    vt: &VTemplateDef,
    data: &DataRef,
    aux: Option<&DataRef>,
    children: &[VGsnNode],
    node_id: &str,
) -> Result<LiftReport> {
    let product = ctx.registry.template(&vt.product_id)?;
    let mut witnesses = Vec::new();
    for config in model.valid_configs() {
        let mut derived = Vec::new();
        for child in children {
            match crate::vgsn::derive_child_for_obligation(child, &config, ctx)? {
                GsnNode::Nil => {}
                node => derived.push(node),
            }
        }
        let expected = (product.inst)(
            ctx,
            &data.derived_at(&config),
            aux.map(|a| a.derived_at(&config)).as_ref(),
            node_id,
        )?;
        let mismatch = match vt.mode {
            LiftMode::Exact => {
                crate::gsn::children_match_skeleton(&derived, &expected).err()
            }
            LiftMode::Quasi => children_match_quasi(&derived, &expected).err(),
        };
        if let Some(msg) = mismatch {
            witnesses.push(LiftWitness {
                config,
                product_side: format!("{} product subgoals", expected.len()),
                family_side: msg,
            });
        }
    }
    let status = if witnesses.is_empty() {
        match vt.mode {
            LiftMode::Exact => LiftStatus::Exact,
            LiftMode::Quasi => LiftStatus::QuasiSound,
        }
    } else {
        LiftStatus::Failed
    };
    Ok(LiftReport { status, witnesses })
}

/// Skeleton comparison for quasi-lifted templates: structure and goals
/// must match; machine verdicts may disagree only towards the sound
/// side (derived fail over product pass is a tolerated false alarm).
fn children_match_quasi(
    actual: &[GsnNode],
    expected: &[GsnNode],
) -> std::result::Result<(), String> {
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
                    if let (
                        EvidenceRecord::Machine { verdict: product, .. },
                        EvidenceRecord::Machine { verdict: derived, .. },
                    ) = (record, ar)
                    {
                        if *derived == Verdict::Pass && *product == Verdict::Fail {
                            return Err(format!(
                                "child {i}: family verdict masks a failing product verdict"
                            ));
                        }
                    }
                }
                _ => return Err(format!("child {i}: expected an evidence node")),
            },
            GsnNode::Strategy { goal, .. } => {
                let ag = a.goal().ok_or_else(|| format!("child {i}: unexpected nil"))?;
                if !goal.core_eq(ag) {
                    return Err(format!("child {i}: goal differs from template output"));
                }
            }
            GsnNode::Nil => {}
        }
    }
    Ok(())
}

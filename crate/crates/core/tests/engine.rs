//! Cross-module checks: template instantiation and re-checking, lifted
//! templates with their obligations, derivation of product assurance
//! cases, and the family/product deductive equivalence on small trees.

use std::collections::BTreeMap;

use placidus_core::artifact::{DataRef, MemoryStore, OpaqueValue};
use placidus_core::develop::{
    attest_variational, instantiate_product, instantiate_variational,
};
use placidus_core::featexpr::{parse_featexpr, Configuration, FeatExpr, FeatureModel, FeatureUniverse};
use placidus_core::fts::{Fts, FtsState, FtsTransition, TemporalFormula};
use placidus_core::gsn::{
    deductive_check, AcVerdict, EvidenceRecord, Goal, GsnNode, NodeStatus,
};
use placidus_core::registry::{CheckContext, LiftMode, Registry, VTemplateDef};
use placidus_core::variability::{
    Annotated, EvidenceKind, VarSet, VariationalEvidence, Verdict, VerifyStatus,
    verify_var_evidence,
};
use placidus_core::vgsn::{
    derive_ac, vdeductive_check, PlAc, VGoal, VGoalBody, VGsnNode,
};
use placidus_core::Error;

fn toy_universe() -> FeatureUniverse {
    FeatureUniverse::new(["A", "B"]).unwrap()
}

fn pc(text: &str, u: &FeatureUniverse) -> FeatExpr {
    parse_featexpr(text, u).unwrap()
}

fn fig3(u: &FeatureUniverse) -> Fts {
    let model = FeatureModel::new(u.clone(), pc("A xor B", u)).unwrap();
    let top = FeatExpr::top(u);
    let state = |id: &str| FtsState {
        id: id.to_string(),
        labels: std::iter::once(id.to_string()).collect(),
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
            tr("s1", "b", "s0", pc("B", u)),
            tr("s1", "d", "s2", pc("A", u)),
            tr("s2", "c", "s0", pc("A", u)),
        ],
        vec!["s0".to_string()],
    )
    .unwrap()
}

fn toy_store(u: &FeatureUniverse) -> MemoryStore {
    use placidus_core::artifact::DataValue;
    let mut store = MemoryStore::new();
    store.insert("m", DataValue::Fts(Box::new(fig3(u))));
    store.insert("f", DataValue::Formula(TemporalFormula::parse("A[s0 U s1]").unwrap()));
    store.insert("f_ef_s2", DataValue::Formula(TemporalFormula::parse("EF s2").unwrap()));
    store.insert(
        "s",
        DataValue::VarSet(
            VarSet::from_elements(
                u,
                vec![
                    Annotated::new(OpaqueValue::string("x"), pc("A", u)),
                    Annotated::new(OpaqueValue::string("y"), pc("B", u)),
                ],
            )
            .unwrap(),
        ),
    );
    store
}

fn forall_ref(set: DataRef, pred: &str) -> DataRef {
    DataRef::Forall { set: Box::new(set), pred: pred.to_string() }
}

#[test]
fn product_domdecomp_instance_is_certified_and_tampering_breaks_it() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = {
        use placidus_core::artifact::DataValue;
        let mut s = toy_store(&u);
        s.insert(
            "pset",
            DataValue::Json(serde_json::json!(["a", "b", "c"])),
        );
        s.insert(
            "pfam",
            DataValue::Json(serde_json::json!([["a", "b"], ["c"]])),
        );
        s
    };
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let data = forall_ref(DataRef::named("pset"), "scenario-assured");
    let mut root = GsnNode::undeveloped(
        "G0",
        Goal::Pred {
            predicate: "forall-in-set".to_string(),
            data: data.clone(),
            text: "every element is assured".to_string(),
        },
    );
    let children =
        instantiate_product(&mut root, "G0", "domdecomp", data, Some(DataRef::named("pfam")), &ctx)
            .unwrap();
    assert_eq!(children, vec!["G0.1", "G0.2"]);
    let report = deductive_check(&root, &ctx);
    assert_eq!(report.nodes[0].status, NodeStatus::Certified);
    // children are still undeveloped, so the tree is not yet deductive
    assert_eq!(report.verdict, AcVerdict::NotDeductive);

    // dropping one subgoal breaks the structural re-check
    let mut tampered = root.clone();
    if let GsnNode::Strategy { children, .. } = &mut tampered {
        children.pop();
    }
    let report = deductive_check(&tampered, &ctx);
    assert_eq!(report.nodes[0].status, NodeStatus::Broken);
}

#[test]
fn product_domdecomp_rejects_incomplete_families() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = {
        use placidus_core::artifact::DataValue;
        let mut s = toy_store(&u);
        s.insert("pset", DataValue::Json(serde_json::json!(["a", "b", "c"])));
        s.insert("gapfam", DataValue::Json(serde_json::json!([["a"]])));
        s
    };
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let data = forall_ref(DataRef::named("pset"), "scenario-assured");
    let mut root = GsnNode::undeveloped(
        "G0",
        Goal::Pred {
            predicate: "forall-in-set".to_string(),
            data: data.clone(),
            text: String::new(),
        },
    );
    let err = instantiate_product(
        &mut root,
        "G0",
        "domdecomp",
        data,
        Some(DataRef::named("gapfam")),
        &ctx,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Refused(_)), "{err}");
}

#[test]
fn analytic_mc_instance_records_verdicts_and_counterexamples() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    // product model: the A-variant of the toy system
    let data = DataRef::Derived { of: Box::new(DataRef::named("m")), config: vec!["A".into()] };

    // passing formula
    let mut root = GsnNode::undeveloped(
        "G0",
        Goal::Atom { claim: "subject".into(), text: "the system behaves".into() },
    );
    instantiate_product(
        &mut root,
        "G0",
        "mc-analytic",
        data.clone(),
        Some(DataRef::named("f")),
        &ctx,
    )
    .unwrap();
    let g3 = root.find("G0.3").unwrap();
    match g3 {
        GsnNode::Evidence { record: EvidenceRecord::Machine { verdict, .. }, .. } => {
            assert_eq!(*verdict, Verdict::Pass);
        }
        other => panic!("unexpected node {other:?}"),
    }
    let report = deductive_check(&root, &ctx);
    assert_eq!(report.nodes[0].status, NodeStatus::Certified);

    // failing formula: EF s2 fails in the B-variant
    let data_b = DataRef::Derived { of: Box::new(DataRef::named("m")), config: vec!["B".into()] };
    let mut root = GsnNode::undeveloped(
        "G0",
        Goal::Atom { claim: "subject".into(), text: String::new() },
    );
    instantiate_product(
        &mut root,
        "G0",
        "mc-analytic",
        data_b,
        Some(DataRef::named("f_ef_s2")),
        &ctx,
    )
    .unwrap();
    match root.find("G0.3").unwrap() {
        GsnNode::Evidence { record: EvidenceRecord::Machine { verdict, .. }, .. } => {
            assert_eq!(*verdict, Verdict::Fail);
        }
        other => panic!("unexpected node {other:?}"),
    }
    // the strategy itself is still certified: the argument structure is
    // exactly what the template produces, the evidence simply fails
    let report = deductive_check(&root, &ctx);
    assert_eq!(report.nodes[0].status, NodeStatus::Certified);
    assert_eq!(report.verdict, AcVerdict::NotDeductive);
}

fn undeveloped_forall_plac(u: &FeatureUniverse, data: &DataRef) -> PlAc {
    let model = FeatureModel::new(u.clone(), pc("A xor B", u)).unwrap();
    PlAc {
        model,
        root: VGsnNode::undeveloped(
            "G0",
            VGoal {
                pc: FeatExpr::top(u),
                body: VGoalBody::Pred {
                    predicate: "forall-in-set".to_string(),
                    data: data.clone(),
                    text: "every identified element is assured".to_string(),
                },
            },
        ),
    }
}

#[test]
fn vdomdecomp_instantiates_certifies_and_commutes_with_derivation() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let data = forall_ref(DataRef::named("s"), "scenario-assured");
    let mut plac = undeveloped_forall_plac(&u, &data);
    let report =
        instantiate_variational(&mut plac, "G0", "vdomdecomp-explode", data.clone(), None, &ctx)
            .unwrap();
    assert_eq!(report.children, vec!["G0.1", "G0.2"]);
    assert!(report.lift.ok());
    plac.validate().unwrap();

    // attest the subgoals so every product tree is fully developed
    attest_variational(&mut plac, "G0.1", "scenario x reviewed", "safety team").unwrap();
    attest_variational(&mut plac, "G0.2", "scenario y reviewed", "safety team").unwrap();

    let vreport = vdeductive_check(&plac, &ctx).unwrap();
    assert_eq!(vreport.verdict, AcVerdict::DeductiveWithAssumptions(2));
    assert!(vreport.failing.is_empty());
    assert_eq!(vreport.nodes[0].status, NodeStatus::Certified);

    // the derived product at {A} carries only the A-subgoal, and its
    // product check agrees
    for (cfg, expected_children) in [("A", 1usize), ("B", 1)] {
        let config = Configuration::from_features(&u, [cfg]).unwrap();
        let product = derive_ac(&plac, &config, &ctx).unwrap();
        assert_eq!(product.children().len(), expected_children);
        let preport = deductive_check(&product, &ctx);
        assert_eq!(preport.verdict, AcVerdict::DeductiveWithAssumptions(1));
        // derivation preserves node ids
        assert!(product.children()[0].id().unwrap().starts_with("G0."));
    }
}

#[test]
fn wrong_lifted_instantiation_is_refused_with_witnesses() {
    let u = toy_universe();
    let mut registry = Registry::builtin();
    // a deliberately wrong lift of domain decomposition: it drops every
    // subgoal's presence condition to ⊤
    registry
        .register_lifted(VTemplateDef {
            id: "vdomdecomp-broken".to_string(),
            product_id: "domdecomp".to_string(),
            mode: LiftMode::Exact,
            prec_pred: "complete".to_string(),
            prec_analysis: Some("vcomplete".to_string()),
            vprec: Box::new(|ctx, fm, data, aux| {
                let vt = ctx.registry.vtemplate("vdomdecomp-explode")?;
                (vt.vprec)(ctx, fm, data, aux)
            }),
            inst: Box::new(|ctx, fm, data, aux, base_id, eff| {
                let vt = ctx.registry.vtemplate("vdomdecomp-explode")?;
                let mut nodes = (vt.inst)(ctx, fm, data, aux, base_id, eff)?;
                let top = FeatExpr::top(fm.universe());
                for node in &mut nodes {
                    if let VGsnNode::Strategy { goal, .. } = node {
                        goal.pc = top.clone();
                    }
                }
                Ok(nodes)
            }),
        })
        .unwrap();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let data = forall_ref(DataRef::named("s"), "scenario-assured");
    let mut plac = undeveloped_forall_plac(&u, &data);
    let err = instantiate_variational(
        &mut plac,
        "G0",
        "vdomdecomp-broken",
        data,
        Some(DataRef::Explode(Box::new(DataRef::named("s")))),
        &ctx,
    )
    .unwrap_err();
    match err {
        Error::Refused(msg) => assert!(msg.contains("lift obligation"), "{msg}"),
        other => panic!("expected refusal, got {other}"),
    }
}

#[test]
fn identity_template_lifted_by_identity_is_accepted() {
    let u = toy_universe();
    let mut registry = Registry::builtin();
    use placidus_core::registry::{PrecOutcome, TemplateDef};
    registry.register_template(TemplateDef {
        id: "identity".to_string(),
        parent_pred: "forall-in-set".to_string(),
        parent: Box::new(|_ctx, data, _aux| {
            Ok(Goal::Pred {
                predicate: "forall-in-set".to_string(),
                data: data.clone(),
                text: String::new(),
            })
        }),
        prec: Box::new(|_ctx, _data, _aux| Ok(PrecOutcome::pass())),
        inst: Box::new(|_ctx, _data, _aux, _base| Ok(Vec::new())),
    });
    registry
        .register_lifted(VTemplateDef {
            id: "videntity".to_string(),
            product_id: "identity".to_string(),
            mode: LiftMode::Exact,
            prec_pred: "complete".to_string(),
            prec_analysis: None,
            vprec: Box::new(|_ctx, _fm, _data, _aux| Ok(PrecOutcome::pass())),
            inst: Box::new(|_ctx, _fm, _data, _aux, _base, _eff| Ok(Vec::new())),
        })
        .unwrap();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let data = forall_ref(DataRef::named("s"), "scenario-assured");
    let mut plac = undeveloped_forall_plac(&u, &data);
    // an identity instantiation leaves the goal undeveloped (no
    // children), which the obligation accepts vacuously
    let report =
        instantiate_variational(&mut plac, "G0", "videntity", data, None, &ctx).unwrap();
    assert!(report.children.is_empty());
    assert!(report.lift.ok());
}

fn toy_plac_exhaustive(u: &FeatureUniverse, fail_at_b: bool) -> PlAc {
    let model = FeatureModel::new(u.clone(), pc("A xor B", u)).unwrap();
    let data = DataRef::Pair(Box::new(DataRef::named("m")), Box::new(DataRef::named("f")));
    let mut table = BTreeMap::new();
    for (cfg, verdict) in [("A", Verdict::Pass), ("B", if fail_at_b { Verdict::Fail } else { Verdict::Pass })] {
        let config = Configuration::from_features(u, [cfg]).unwrap();
        table.insert(
            config,
            EvidenceRecord::Machine {
                analysis: "modelcheck".to_string(),
                input_digest: String::new(),
                output_digest: String::new(),
                verdict,
                output: None,
            },
        );
    }
    PlAc {
        model,
        root: VGsnNode::Evidence {
            id: "E0".to_string(),
            goal: VGoal {
                pc: FeatExpr::top(u),
                body: VGoalBody::Pred {
                    predicate: "mc-pass".to_string(),
                    data,
                    text: "the property holds in every product".to_string(),
                },
            },
            evidence: VariationalEvidence {
                scope: FeatExpr::top(u),
                kind: EvidenceKind::Exhaustive(table),
            },
            description: None,
        },
    }
}

#[test]
fn exhaustive_evidence_verifies_and_matches_product_derivations() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let plac = toy_plac_exhaustive(&u, false);
    plac.validate().unwrap();
    let report = vdeductive_check(&plac, &ctx).unwrap();
    assert_eq!(report.verdict, AcVerdict::Deductive);
    for config in plac.model.valid_configs() {
        let product = derive_ac(&plac, &config, &ctx).unwrap();
        let preport = deductive_check(&product, &ctx);
        assert_eq!(preport.verdict, AcVerdict::Deductive);
    }
}

#[test]
fn flipped_exhaustive_entry_fails_exactly_at_that_configuration() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let plac = toy_plac_exhaustive(&u, true);
    let report = vdeductive_check(&plac, &ctx).unwrap();
    assert_eq!(report.verdict, AcVerdict::NotDeductive);
    let failing = report.failing.configs();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0].to_string(), "B");
    // the derived product at {B} is broken, at {A} deductive
    let at_b = derive_ac(
        &plac,
        &Configuration::from_features(&u, ["B"]).unwrap(),
        &ctx,
    )
    .unwrap();
    assert_eq!(deductive_check(&at_b, &ctx).verdict, AcVerdict::NotDeductive);
    let at_a = derive_ac(
        &plac,
        &Configuration::from_features(&u, ["A"]).unwrap(),
        &ctx,
    )
    .unwrap();
    assert_eq!(deductive_check(&at_a, &ctx).verdict, AcVerdict::Deductive);
}

#[test]
fn verify_var_evidence_examples() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let model = FeatureModel::new(u.clone(), pc("A xor B", &u)).unwrap();
    let data = DataRef::Pair(Box::new(DataRef::named("m")), Box::new(DataRef::named("f")));

    // empty scope verifies vacuously, whatever the evidence
    let vacuous = verify_var_evidence(
        &ctx,
        &model,
        "mc-pass",
        &data,
        &FeatExpr::bottom(&u),
        &VariationalEvidence {
            scope: FeatExpr::bottom(&u),
            kind: EvidenceKind::Attested { text: "n/a".into(), signer: "n/a".into() },
        },
    )
    .unwrap();
    assert_eq!(vacuous.status, VerifyStatus::Verified);

    // a complete table with passing entries verifies
    let plac = toy_plac_exhaustive(&u, false);
    let VGsnNode::Evidence { evidence, .. } = &plac.root else { unreachable!() };
    let ok = verify_var_evidence(&ctx, &model, "mc-pass", &data, &FeatExpr::top(&u), evidence)
        .unwrap();
    assert_eq!(ok.status, VerifyStatus::Verified);

    // dropping the {B} entry is rejected with that configuration listed
    let mut table = match &evidence.kind {
        EvidenceKind::Exhaustive(table) => table.clone(),
        _ => unreachable!(),
    };
    table.remove(&Configuration::from_features(&u, ["B"]).unwrap());
    let gap = VariationalEvidence {
        scope: FeatExpr::top(&u),
        kind: EvidenceKind::Exhaustive(table),
    };
    let rejected =
        verify_var_evidence(&ctx, &model, "mc-pass", &data, &FeatExpr::top(&u), &gap).unwrap();
    assert_eq!(rejected.status, VerifyStatus::Rejected);
    assert_eq!(rejected.uncovered.len(), 1);
    assert_eq!(rejected.uncovered[0].to_string(), "B");

    // attested evidence is assumed, never verified
    let attested = verify_var_evidence(
        &ctx,
        &model,
        "mc-pass",
        &data,
        &FeatExpr::top(&u),
        &VariationalEvidence {
            scope: FeatExpr::top(&u),
            kind: EvidenceKind::Attested { text: "trust us".into(), signer: "qa".into() },
        },
    )
    .unwrap();
    assert_eq!(attested.status, VerifyStatus::Assumed);
}

#[test]
fn lifted_analytic_mc_instantiates_and_derives_cleanly() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let model = FeatureModel::new(u.clone(), pc("A xor B", &u)).unwrap();
    let mut plac = PlAc {
        model,
        root: VGsnNode::undeveloped(
            "G0",
            VGoal {
                pc: FeatExpr::top(&u),
                body: VGoalBody::Atom {
                    claim: "toy-safety".into(),
                    text: "the toy family reaches s1 as required".into(),
                },
            },
        ),
    };
    let report = instantiate_variational(
        &mut plac,
        "G0",
        "mc-analytic-lifted",
        DataRef::named("m"),
        Some(DataRef::named("f")),
        &ctx,
    )
    .unwrap();
    assert_eq!(report.children.len(), 5);
    assert!(report.lift.ok());
    plac.validate().unwrap();

    // per-product derivations carry the four product subgoals: the lift
    // subgoal is family-level and vanishes in every product
    for config in plac.model.valid_configs() {
        let product = derive_ac(&plac, &config, &ctx).unwrap();
        assert_eq!(product.children().len(), 4);
    }

    // attest the open slots and the family check goes through
    for (id, text) in [
        ("G0.1", "model reviewed"),
        ("G0.2", "formula reviewed"),
        ("G0.4", "checker validated"),
    ] {
        attest_variational(&mut plac, id, text, "review board").unwrap();
    }
    let vreport = vdeductive_check(&plac, &ctx).unwrap();
    assert_eq!(vreport.verdict, AcVerdict::DeductiveWithAssumptions(3));
    for config in plac.model.valid_configs() {
        let product = derive_ac(&plac, &config, &ctx).unwrap();
        let preport = deductive_check(&product, &ctx);
        assert_eq!(preport.verdict, AcVerdict::DeductiveWithAssumptions(3));
    }
}

#[test]
fn quasi_lifted_mc_weakens_the_claim_but_stays_sound() {
    let u = toy_universe();
    let registry = Registry::builtin();
    let store = toy_store(&u);
    let ctx = CheckContext { registry: &registry, resolver: &store };
    let model = FeatureModel::new(u.clone(), pc("A xor B", &u)).unwrap();
    let mut plac = PlAc {
        model,
        root: VGsnNode::undeveloped(
            "G0",
            VGoal {
                pc: FeatExpr::top(&u),
                body: VGoalBody::Atom { claim: "toy-safety".into(), text: String::new() },
            },
        ),
    };
    let report = instantiate_variational(
        &mut plac,
        "G0",
        "mc-analytic-quasilifted",
        DataRef::named("m"),
        Some(DataRef::named("f")),
        &ctx,
    )
    .unwrap();
    assert!(report.lift.ok());
    let g3 = plac.root.find("G0.3").unwrap();
    assert!(g3.goal().text().contains("no violation"));
    for config in plac.model.valid_configs() {
        let product = derive_ac(&plac, &config, &ctx).unwrap();
        assert_eq!(product.children().len(), 4);
        // quasi-derived verdicts stay pass because the family passed
        let g3 = product.find("G0.3").unwrap();
        match g3 {
            GsnNode::Evidence { record: EvidenceRecord::Machine { verdict, .. }, .. } => {
                assert_eq!(*verdict, Verdict::Pass)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

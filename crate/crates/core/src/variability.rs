//! Variational data: values annotated with presence conditions,
//! derivation operators, bounded lift/quasi-lift checking, and
//! variational evidence.
//!
//! A variational type pairs a product type with a derivation operator;
//! here that pairing is the [`Variational`] trait, and the dynamic
//! registry in [`crate::registry`] exposes the same operators by name
//! for artifact-level plumbing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::featexpr::{ConfigSet, Configuration, FeatExpr, FeatureModel, FeatureUniverse};

/// Analysis or evidence verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            other => Err(Error::Document(format!("unknown verdict `{other}`"))),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value annotated with the presence condition under which it exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotated<T> {
    pub value: T,
    pub pc: FeatExpr,
}

impl<T> Annotated<T> {
    pub fn new(value: T, pc: FeatExpr) -> Self {
        Annotated { value, pc }
    }
}

/// A type with a derivation operator to a product type.
pub trait Variational {
    type Product;

    fn universe(&self) -> &FeatureUniverse;

    fn derive(&self, config: &Configuration) -> Result<Self::Product>;
}

/// A finite set of annotated elements. Element order is first-insertion
/// order, which downstream grouping operators rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSet<T> {
    universe: FeatureUniverse,
    elements: Vec<Annotated<T>>,
}

impl<T: Clone + Ord> VarSet<T> {
    pub fn new(universe: &FeatureUniverse) -> Self {
        VarSet { universe: universe.clone(), elements: Vec::new() }
    }

    pub fn from_elements(universe: &FeatureUniverse, elements: Vec<Annotated<T>>) -> Result<Self> {
        for e in &elements {
            if e.pc.universe() != universe {
                return Err(Error::UniverseMismatch);
            }
        }
        let mut set = VarSet { universe: universe.clone(), elements };
        set.normalize();
        Ok(set)
    }

    pub fn push(&mut self, value: T, pc: FeatExpr) -> Result<()> {
        if pc.universe() != &self.universe {
            return Err(Error::UniverseMismatch);
        }
        self.elements.push(Annotated::new(value, pc));
        self.normalize();
        Ok(())
    }

    /// Drops duplicate (value, semantically-equal pc) pairs, keeping the
    /// first occurrence.
    fn normalize(&mut self) {
        let mut kept: Vec<Annotated<T>> = Vec::with_capacity(self.elements.len());
        for e in self.elements.drain(..) {
            let dup = kept
                .iter()
                .any(|k| k.value == e.value && k.pc.semantic_eq(&e.pc).unwrap_or(false));
            if !dup {
                kept.push(e);
            }
        }
        self.elements = kept;
    }

    pub fn elements(&self) -> &[Annotated<T>] {
        &self.elements
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn map<U: Clone + Ord>(&self, f: impl Fn(&T) -> U) -> VarSet<U> {
        VarSet {
            universe: self.universe.clone(),
            elements: self
                .elements
                .iter()
                .map(|e| Annotated::new(f(&e.value), e.pc.clone()))
                .collect(),
        }
    }

    /// Keeps the values whose presence condition the configuration
    /// satisfies.
    pub fn derive_set(&self, config: &Configuration) -> Result<BTreeSet<T>> {
        if config.universe() != &self.universe {
            return Err(Error::UniverseMismatch);
        }
        let mut out = BTreeSet::new();
        for e in &self.elements {
            if config.satisfies(&e.pc)? {
                out.insert(e.value.clone());
            }
        }
        Ok(out)
    }
}

impl<T: Clone + Ord> Variational for VarSet<T> {
    type Product = BTreeSet<T>;

    fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    fn derive(&self, config: &Configuration) -> Result<BTreeSet<T>> {
        self.derive_set(config)
    }
}

/// A finite family of annotated finite sets.
#[derive(Debug, Clone, PartialEq)]
pub struct VarFamily<T> {
    universe: FeatureUniverse,
    members: Vec<Annotated<BTreeSet<T>>>,
}

impl<T: Clone + Ord> VarFamily<T> {
    pub fn new(universe: &FeatureUniverse) -> Self {
        VarFamily { universe: universe.clone(), members: Vec::new() }
    }

    pub fn from_members(
        universe: &FeatureUniverse,
        members: Vec<Annotated<BTreeSet<T>>>,
    ) -> Result<Self> {
        for m in &members {
            if m.pc.universe() != universe {
                return Err(Error::UniverseMismatch);
            }
        }
        Ok(VarFamily { universe: universe.clone(), members })
    }

    pub fn members(&self) -> &[Annotated<BTreeSet<T>>] {
        &self.members
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Keeps the member sets whose presence condition the configuration
    /// satisfies; member sets pass through unchanged.
    pub fn derive_family(&self, config: &Configuration) -> Result<Vec<BTreeSet<T>>> {
        if config.universe() != &self.universe {
            return Err(Error::UniverseMismatch);
        }
        let mut out = Vec::new();
        for m in &self.members {
            if config.satisfies(&m.pc)? {
                out.push(m.value.clone());
            }
        }
        Ok(out)
    }
}

impl<T: Clone + Ord> Variational for VarFamily<T> {
    type Product = Vec<BTreeSet<T>>;

    fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    fn derive(&self, config: &Configuration) -> Result<Vec<BTreeSet<T>>> {
        self.derive_family(config)
    }
}

/// Lift-check outcome. `Failed` always carries at least one witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftStatus {
    Exact,
    QuasiSound,
    Failed,
}

impl LiftStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LiftStatus::Exact => "exact",
            LiftStatus::QuasiSound => "quasi-sound",
            LiftStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiftWitness {
    pub config: Configuration,
    pub product_side: String,
    pub family_side: String,
}

#[derive(Debug, Clone)]
pub struct LiftReport {
    pub status: LiftStatus,
    pub witnesses: Vec<LiftWitness>,
}

impl LiftReport {
    pub fn ok(&self) -> bool {
        self.status != LiftStatus::Failed
    }
}

/// Bounded check of the lift law `derive(F(x), c) = f(derive(x, c))`
/// for one input and every valid configuration of the feature model.
/// `Exact` means the law held everywhere; otherwise every failing
/// configuration is reported.
pub fn check_lift<VX, X, VO, O>(
    model: &FeatureModel,
    input: &VX,
    product: impl Fn(&X) -> O,
    family: impl Fn(&VX) -> VO,
    derive_input: impl Fn(&VX, &Configuration) -> Result<X>,
    derive_output: impl Fn(&VO, &Configuration) -> Result<O>,
) -> Result<LiftReport>
where
    O: PartialEq + fmt::Debug,
{
    let family_out = family(input);
    let mut witnesses = Vec::new();
    for config in model.valid_configs() {
        let product_out = product(&derive_input(input, &config)?);
        let derived = derive_output(&family_out, &config)?;
        if derived != product_out {
            witnesses.push(LiftWitness {
                config,
                product_side: format!("{product_out:?}"),
                family_side: format!("{derived:?}"),
            });
        }
    }
    let status = if witnesses.is_empty() { LiftStatus::Exact } else { LiftStatus::Failed };
    Ok(LiftReport { status, witnesses })
}

/// Bounded quasi-lift check: a clean family verdict must imply a clean
/// verdict for every product. False alarms at the family level are
/// permitted.
pub fn check_quasi_lift<VX, X, VO, O>(
    model: &FeatureModel,
    input: &VX,
    product: impl Fn(&X) -> O,
    family: impl Fn(&VX) -> VO,
    derive_input: impl Fn(&VX, &Configuration) -> Result<X>,
    ok_family: impl Fn(&VO) -> bool,
    ok_product: impl Fn(&O) -> bool,
) -> Result<LiftReport>
where
    O: fmt::Debug,
{
    let family_out = family(input);
    if !ok_family(&family_out) {
        // the soundness implication is vacuous
        return Ok(LiftReport { status: LiftStatus::QuasiSound, witnesses: Vec::new() });
    }
    let mut witnesses = Vec::new();
    for config in model.valid_configs() {
        let product_out = product(&derive_input(input, &config)?);
        if !ok_product(&product_out) {
            witnesses.push(LiftWitness {
                config,
                product_side: format!("{product_out:?}"),
                family_side: "clean family verdict".to_string(),
            });
        }
    }
    let status = if witnesses.is_empty() { LiftStatus::QuasiSound } else { LiftStatus::Failed };
    Ok(LiftReport { status, witnesses })
}

/// A machine-reproducible record of one family-level analysis run.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCert {
    pub analysis: String,
    pub input_digest: String,
    pub output_digest: String,
    pub verdict: Verdict,
    pub output: serde_json::Value,
}

/// Evidence for a variational goal over a scope of configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEvidence {
    pub scope: FeatExpr,
    pub kind: EvidenceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvidenceKind {
    /// One product-level record per configuration in the scope.
    Exhaustive(BTreeMap<Configuration, crate::gsn::EvidenceRecord>),
    /// A certificate of a single family-level analysis run.
    Analytic(AnalyticCert),
    /// Free-text attestation; never machine-verified.
    Attested { text: String, signer: String },
}

/// Trust level assigned to variational evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyStatus {
    Verified,
    Assumed,
    Rejected,
}

/// Outcome of verifying one piece of variational evidence.
#[derive(Debug, Clone)]
pub struct EvidenceOutcome {
    pub status: VerifyStatus,
    /// Configurations (within `Conf(Φ ∧ scope)`) where the check fails.
    pub failing: ConfigSet,
    /// Scope configurations missing from an exhaustive table.
    pub uncovered: Vec<Configuration>,
    pub notes: Vec<String>,
}

impl EvidenceOutcome {
    pub fn new(model: &FeatureModel, status: VerifyStatus) -> Self {
        EvidenceOutcome {
            status,
            failing: ConfigSet::empty(model.universe()),
            uncovered: Vec::new(),
            notes: Vec::new(),
        }
    }
}

/// Verifies variational evidence for the claim `P(data)` over
/// `Conf(Φ ∧ scope)`.
///
/// An empty scope verifies vacuously. Exhaustive tables must cover the
/// scope exactly; entries fail where they record a failing verdict or
/// where a machine re-check of the predicate disagrees with a recorded
/// pass. Analytic certificates verify iff re-running the named family
/// analysis reproduces both digests and the analysis's own lift check
/// passes; a recorded failing verdict rejects with the configurations
/// its output incriminates. Attestations are never more than assumed.
pub fn verify_var_evidence(
    ctx: &crate::registry::CheckContext,
    model: &FeatureModel,
    predicate: &str,
    data: &crate::artifact::DataRef,
    scope: &FeatExpr,
    evidence: &VariationalEvidence,
) -> Result<EvidenceOutcome> {
    use crate::artifact::resolve;
    use crate::digest::digest_json;
    use crate::gsn::EvidenceRecord;

    let scope_set = model.configset_within(scope)?;
    if scope_set.is_empty() {
        return Ok(EvidenceOutcome::new(model, VerifyStatus::Verified));
    }
    match &evidence.kind {
        EvidenceKind::Attested { .. } => Ok(EvidenceOutcome::new(model, VerifyStatus::Assumed)),
        EvidenceKind::Exhaustive(table) => {
            let mut outcome = EvidenceOutcome::new(model, VerifyStatus::Verified);
            let mut unverifiable = false;
            for config in scope_set.configs() {
                let Some(record) = table.get(&config) else {
                    outcome.uncovered.push(config.clone());
                    outcome.failing.insert(&config)?;
                    continue;
                };
                match record {
                    EvidenceRecord::Machine { verdict: Verdict::Fail, .. } => {
                        outcome.failing.insert(&config)?;
                    }
                    EvidenceRecord::Machine { verdict: Verdict::Pass, .. } => {
                        let derived = resolve(&data.derived_at(&config), ctx.resolver)?;
                        match ctx.registry.machine_check(ctx, predicate, &derived)? {
                            Some(true) => {}
                            Some(false) => {
                                outcome.failing.insert(&config)?;
                                outcome.notes.push(format!(
                                    "recorded pass at {{{config}}} does not reproduce"
                                ));
                            }
                            None => unverifiable = true,
                        }
                    }
                    EvidenceRecord::Attested { .. } => unverifiable = true,
                }
            }
            for config in table.keys() {
                if !scope_set.contains(config)? {
                    outcome.notes.push(format!(
                        "table entry {{{config}}} lies outside the evidence scope"
                    ));
                    outcome.status = VerifyStatus::Rejected;
                }
            }
            if !outcome.uncovered.is_empty() || !outcome.failing.is_empty() {
                outcome.status = VerifyStatus::Rejected;
            } else if outcome.status != VerifyStatus::Rejected && unverifiable {
                outcome.status = VerifyStatus::Assumed;
            }
            Ok(outcome)
        }
        EvidenceKind::Analytic(cert) => {
            let vanalysis = ctx.registry.vanalysis(&cert.analysis)?;
            let input = resolve(data, ctx.resolver)?;
            let mut outcome = EvidenceOutcome::new(model, VerifyStatus::Verified);
            let input_digest = digest_json(&input.canonical_json());
            if input_digest != cert.input_digest {
                outcome.status = VerifyStatus::Rejected;
                outcome.failing = scope_set;
                outcome.notes.push("certificate input digest does not match".to_string());
                return Ok(outcome);
            }
            let run = (vanalysis.run)(ctx, model, &input)?;
            if digest_json(&run.output) != cert.output_digest || run.verdict != cert.verdict {
                outcome.status = VerifyStatus::Rejected;
                outcome.failing = scope_set;
                outcome.notes.push("certificate is not reproducible".to_string());
                return Ok(outcome);
            }
            let lift = (vanalysis.lift_check)(ctx, model, &input)?;
            if !lift.ok() {
                outcome.status = VerifyStatus::Rejected;
                for witness in &lift.witnesses {
                    if scope_set.contains(&witness.config)? {
                        outcome.failing.insert(&witness.config)?;
                    }
                }
                if outcome.failing.is_empty() {
                    outcome.failing = scope_set;
                }
                outcome.notes.push("analysis lift check failed".to_string());
                return Ok(outcome);
            }
            if cert.verdict == Verdict::Fail {
                outcome.status = VerifyStatus::Rejected;
                outcome.failing =
                    (vanalysis.failing_configs)(&cert.output, model)?.intersect(&scope_set);
                outcome.notes.push("analysis reported a violation".to_string());
                return Ok(outcome);
            }
            Ok(outcome)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featexpr::parse_featexpr;

    fn uni(names: &[&str]) -> FeatureUniverse {
        FeatureUniverse::new(names.iter().copied()).unwrap()
    }

    fn pc(text: &str, u: &FeatureUniverse) -> FeatExpr {
        parse_featexpr(text, u).unwrap()
    }

    fn cfg(u: &FeatureUniverse, names: &[&str]) -> Configuration {
        Configuration::from_features(u, names.iter().copied()).unwrap()
    }

    #[test]
    fn derive_set_filters_by_presence_condition() {
        let u = uni(&["A", "B"]);
        let s = VarSet::from_elements(
            &u,
            vec![Annotated::new("x", pc("A", &u)), Annotated::new("y", pc("B", &u))],
        )
        .unwrap();
        let derived = s.derive_set(&cfg(&u, &["A"])).unwrap();
        assert_eq!(derived.into_iter().collect::<Vec<_>>(), vec!["x"]);
    }

    #[test]
    fn top_annotated_element_is_always_present() {
        let u = uni(&["A", "B"]);
        let s = VarSet::from_elements(&u, vec![Annotated::new("x", pc("true", &u))]).unwrap();
        for mask in 0..4u32 {
            let derived = s.derive_set(&u.config(mask)).unwrap();
            assert_eq!(derived.len(), 1);
        }
    }

    #[test]
    fn normalization_drops_semantic_duplicates() {
        let u = uni(&["A"]);
        let s = VarSet::from_elements(
            &u,
            vec![
                Annotated::new("x", pc("A", &u)),
                Annotated::new("x", pc("A & A", &u)),
                Annotated::new("x", pc("!A", &u)),
            ],
        )
        .unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn derive_family_keeps_member_sets_intact() {
        let u = uni(&["A", "B"]);
        let f = VarFamily::from_members(
            &u,
            vec![
                Annotated::new(BTreeSet::from(["x"]), pc("A", &u)),
                Annotated::new(BTreeSet::from(["y"]), pc("B", &u)),
            ],
        )
        .unwrap();
        let derived = f.derive_family(&cfg(&u, &["B"])).unwrap();
        assert_eq!(derived, vec![BTreeSet::from(["y"])]);
    }

    #[test]
    fn derivation_rejects_universe_mismatch() {
        let u1 = uni(&["A"]);
        let u2 = uni(&["B"]);
        let s = VarSet::from_elements(&u1, vec![Annotated::new(1, pc("A", &u1))]).unwrap();
        assert!(matches!(
            s.derive_set(&Configuration::empty(&u2)),
            Err(Error::UniverseMismatch)
        ));
    }

    #[test]
    fn derivation_is_monotone_in_pc_strength() {
        // with sem(pc1) ⊆ sem(pc2), presence under pc1 implies presence
        // under pc2 at the same configuration
        let u = uni(&["A", "B", "C"]);
        let stronger = pc("A & B", &u);
        let weaker = pc("A", &u);
        assert!(stronger.semantics().is_subset(&weaker.semantics()).unwrap());
        let s1 = VarSet::from_elements(&u, vec![Annotated::new("x", stronger)]).unwrap();
        let s2 = VarSet::from_elements(&u, vec![Annotated::new("x", weaker)]).unwrap();
        for mask in 0..u.config_count() as u32 {
            let c = u.config(mask);
            if !s1.derive_set(&c).unwrap().is_empty() {
                assert!(!s2.derive_set(&c).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn reannotation_with_top_yields_all_values() {
        let u = uni(&["A", "B"]);
        let s = VarSet::from_elements(
            &u,
            vec![Annotated::new("x", pc("A", &u)), Annotated::new("y", pc("B & !A", &u))],
        )
        .unwrap();
        let retop = VarSet::from_elements(
            &u,
            s.elements()
                .iter()
                .map(|e| Annotated::new(e.value, FeatExpr::top(&u)))
                .collect(),
        )
        .unwrap();
        for mask in 0..4u32 {
            let derived = retop.derive_set(&u.config(mask)).unwrap();
            assert_eq!(derived, BTreeSet::from(["x", "y"]));
        }
    }

    #[test]
    fn identity_lift_is_exact() {
        let u = uni(&["A", "B"]);
        let model = FeatureModel::new(u.clone(), pc("true", &u)).unwrap();
        let s = VarSet::from_elements(
            &u,
            vec![Annotated::new(1, pc("A", &u)), Annotated::new(2, pc("B", &u))],
        )
        .unwrap();
        let report = check_lift(
            &model,
            &s,
            |x: &BTreeSet<i32>| x.clone(),
            |v: &VarSet<i32>| v.clone(),
            |v, c| v.derive_set(c),
            |v, c| v.derive_set(c),
        )
        .unwrap();
        assert_eq!(report.status, LiftStatus::Exact);
    }

    #[test]
    fn lifted_filter_is_exact_and_pc_dropping_filter_fails() {
        let u = uni(&["A", "B"]);
        let model = FeatureModel::new(u.clone(), pc("true", &u)).unwrap();
        let s = VarSet::from_elements(
            &u,
            vec![
                Annotated::new(1, pc("A", &u)),
                Annotated::new(2, pc("B", &u)),
                Annotated::new(3, pc("true", &u)),
            ],
        )
        .unwrap();
        let keep = |v: &i32| *v % 2 == 1;
        let good = check_lift(
            &model,
            &s,
            |x: &BTreeSet<i32>| x.iter().copied().filter(keep).collect::<BTreeSet<_>>(),
            |v: &VarSet<i32>| {
                VarSet::from_elements(
                    &u,
                    v.elements().iter().filter(|e| keep(&e.value)).cloned().collect(),
                )
                .unwrap()
            },
            |v, c| v.derive_set(c),
            |v, c| v.derive_set(c),
        )
        .unwrap();
        assert_eq!(good.status, LiftStatus::Exact);
        // broken lift: filters values but rewrites every annotation to ⊤
        let bad = check_lift(
            &model,
            &s,
            |x: &BTreeSet<i32>| x.iter().copied().filter(keep).collect::<BTreeSet<_>>(),
            |v: &VarSet<i32>| {
                VarSet::from_elements(
                    &u,
                    v.elements()
                        .iter()
                        .filter(|e| keep(&e.value))
                        .map(|e| Annotated::new(e.value, FeatExpr::top(&u)))
                        .collect(),
                )
                .unwrap()
            },
            |v, c| v.derive_set(c),
            |v, c| v.derive_set(c),
        )
        .unwrap();
        assert_eq!(bad.status, LiftStatus::Failed);
        assert!(!bad.witnesses.is_empty());
    }

    #[test]
    fn quasi_check_permits_false_alarms_and_catches_unsound_clean_verdicts() {
        let u = uni(&["A", "B"]);
        let model = FeatureModel::new(u.clone(), pc("A xor B", &u)).unwrap();
        let s = VarSet::from_elements(&u, vec![Annotated::new(1, pc("A", &u))]).unwrap();
        // family checker that always cries wolf: sound vacuously
        let alarmist = check_quasi_lift(
            &model,
            &s,
            |x: &BTreeSet<i32>| x.is_empty(),
            |_v: &VarSet<i32>| false,
            |v, c| v.derive_set(c),
            |clean| *clean,
            |clean| *clean,
        )
        .unwrap();
        assert_eq!(alarmist.status, LiftStatus::QuasiSound);
        // family checker that reports clean while product {A} violates
        let unsound = check_quasi_lift(
            &model,
            &s,
            |x: &BTreeSet<i32>| x.is_empty(),
            |_v: &VarSet<i32>| true,
            |v, c| v.derive_set(c),
            |clean| *clean,
            |clean| *clean,
        )
        .unwrap();
        assert_eq!(unsound.status, LiftStatus::Failed);
        assert_eq!(unsound.witnesses.len(), 1);
        assert_eq!(unsound.witnesses[0].config.to_string(), "A");
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn exact_lift_implies_quasi_sound(masks in prop::collection::vec(0..8u32, 1..6), threshold in 0..4usize) {
            let u = uni(&["A", "B", "C"]);
            let model = FeatureModel::new(u.clone(), FeatExpr::top(&u)).unwrap();
            let elements = masks
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let mut e = FeatExpr::bottom(&u);
                    for (idx, name) in ["A", "B", "C"].iter().enumerate() {
                        if m >> idx & 1 == 1 {
                            e = e.or(&FeatExpr::atom(&u, name).unwrap());
                        }
                    }
                    Annotated::new(i as i32, e)
                })
                .collect();
            let s = VarSet::from_elements(&u, elements).unwrap();
            let f = |x: &BTreeSet<i32>| x.len();
            let vf = |v: &VarSet<i32>| v.clone();
            let exact = check_lift(
                &model, &s, f, vf,
                |v, c| v.derive_set(c),
                |v, c| v.derive_set(c).map(|d| d.len()),
            ).unwrap();
            prop_assert_eq!(exact.status, LiftStatus::Exact);
            // with ok_family read pointwise through the derived outputs,
            // exactness forces quasi-soundness for every ok predicate
            let ok_product = |n: &usize| *n <= threshold;
            let quasi = check_quasi_lift(
                &model, &s, f, vf,
                |v, c| v.derive_set(c),
                |v| {
                    model.valid_configs().iter().all(|c| {
                        ok_product(&v.derive_set(c).unwrap().len())
                    })
                },
                ok_product,
            ).unwrap();
            prop_assert_eq!(quasi.status, LiftStatus::QuasiSound);
        }
    }
}

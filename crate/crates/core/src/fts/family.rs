//! Family-level model checking: exact (per product-class verdicts and
//! counterexamples) and quasi (one collapsed verdict, sound for pass).

use std::collections::BTreeMap;

use super::mc::{mc_product, Counterexample, McResult};
use super::{Fts, TemporalFormula, TransitionSystem};
use crate::digest::digest_json;
use crate::error::Result;
use crate::featexpr::ConfigSet;
use crate::variability::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    Exact,
    Quasi,
}

/// One equivalence class of configurations with a structurally identical
/// derived product, and that product's verdict.
#[derive(Debug, Clone)]
pub struct McClass {
    pub configs: ConfigSet,
    pub result: McResult,
}

/// Exact family verdicts: the classes are disjoint and cover `Conf(Φ)`.
#[derive(Debug, Clone)]
pub struct FamilyMcResult {
    pub classes: Vec<McClass>,
}

impl FamilyMcResult {
    pub fn all_pass(&self) -> bool {
        self.classes.iter().all(|c| c.result.verdict == Verdict::Pass)
    }

    pub fn failing_configs(&self) -> Option<ConfigSet> {
        let mut failing: Option<ConfigSet> = None;
        for class in &self.classes {
            if class.result.verdict == Verdict::Fail {
                failing = Some(match failing {
                    None => class.configs.clone(),
                    Some(acc) => acc.union(&class.configs),
                });
            }
        }
        failing
    }
}

/// Collapsed quasi verdict: pass means every product passes; fail
/// reports a single counterexample with its configurations.
#[derive(Debug, Clone)]
pub struct QuasiMcResult {
    pub verdict: Verdict,
    pub witness: Option<(ConfigSet, Option<Counterexample>)>,
}

#[derive(Debug, Clone)]
pub enum FamilyOutcome {
    Exact(FamilyMcResult),
    Quasi(QuasiMcResult),
}

fn ts_fingerprint(ts: &TransitionSystem) -> String {
    let states: Vec<serde_json::Value> = ts
        .states()
        .iter()
        .map(|s| serde_json::json!({"id": s.id, "labels": s.labels.iter().collect::<Vec<_>>()}))
        .collect();
    let transitions: Vec<serde_json::Value> = ts
        .transitions()
        .iter()
        .map(|t| serde_json::json!({"src": t.src, "action": t.action, "dst": t.dst}))
        .collect();
    digest_json(&serde_json::json!({
        "states": states,
        "transitions": transitions,
        "initial": ts.initial(),
    }))
}

/// Partitions `Conf(Φ)` by structural equality of the derived product
/// and model-checks one representative per class.
pub fn mc_family_exact(fts: &Fts, formula: &TemporalFormula) -> Result<FamilyMcResult> {
    let model = fts.model();
    // first-occurrence order over ascending configurations
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, (ConfigSet, TransitionSystem)> = BTreeMap::new();
    for config in model.valid_configs() {
        let ts = fts.derive(&config)?;
        let key = ts_fingerprint(&ts);
        match groups.get_mut(&key) {
            Some((set, _)) => set.insert(&config)?,
            None => {
                let mut set = ConfigSet::empty(model.universe());
                set.insert(&config)?;
                order.push(key.clone());
                groups.insert(key, (set, ts));
            }
        }
    }
    let mut classes = Vec::with_capacity(order.len());
    for key in order {
        let (configs, ts) = groups.remove(&key).expect("grouped above");
        classes.push(McClass { configs, result: mc_product(&ts, formula) });
    }
    Ok(FamilyMcResult { classes })
}

/// Same computation as [`mc_family_exact`], collapsed to one verdict.
pub fn mc_family_quasi(fts: &Fts, formula: &TemporalFormula) -> Result<QuasiMcResult> {
    let exact = mc_family_exact(fts, formula)?;
    for class in &exact.classes {
        if class.result.verdict == Verdict::Fail {
            return Ok(QuasiMcResult {
                verdict: Verdict::Fail,
                witness: Some((class.configs.clone(), class.result.counterexample.clone())),
            });
        }
    }
    Ok(QuasiMcResult { verdict: Verdict::Pass, witness: None })
}

pub fn mc_family(fts: &Fts, formula: &TemporalFormula, mode: McMode) -> Result<FamilyOutcome> {
    match mode {
        McMode::Exact => Ok(FamilyOutcome::Exact(mc_family_exact(fts, formula)?)),
        McMode::Quasi => Ok(FamilyOutcome::Quasi(mc_family_quasi(fts, formula)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featexpr::{Configuration, FeatExpr, FeatureModel, FeatureUniverse};
    use crate::fts::fig3_fts;
    use crate::fts::{FtsState, FtsTransition};
    use std::collections::BTreeSet;

    #[test]
    fn fig3_ef_s2_fails_exactly_in_the_b_product() {
        // s2 is only reachable through the d-transition, present under A
        let fts = fig3_fts();
        let formula = TemporalFormula::parse("EF s2").unwrap();
        let result = mc_family_exact(&fts, &formula).unwrap();
        assert_eq!(result.classes.len(), 2);
        let u = fts.model().universe().clone();
        let a = Configuration::from_features(&u, ["A"]).unwrap();
        let b = Configuration::from_features(&u, ["B"]).unwrap();
        let failing = result.failing_configs().unwrap();
        assert!(failing.contains(&b).unwrap());
        assert!(!failing.contains(&a).unwrap());
        // the passing class is the complement within Conf(Φ)
        let passing: Vec<_> = result
            .classes
            .iter()
            .filter(|c| c.result.verdict == Verdict::Pass)
            .flat_map(|c| c.configs.configs())
            .collect();
        assert_eq!(passing, vec![a]);
    }

    #[test]
    fn uniform_pcs_collapse_to_one_class() {
        let u = FeatureUniverse::new(["A", "B"]).unwrap();
        let model = FeatureModel::new(u.clone(), FeatExpr::top(&u)).unwrap();
        let top = FeatExpr::top(&u);
        let fts = Fts::new(
            model,
            vec![FtsState {
                id: "s0".into(),
                labels: BTreeSet::from(["p".to_string()]),
                pc: top.clone(),
            }],
            vec![FtsTransition { src: "s0".into(), action: "a".into(), dst: "s0".into(), pc: top }],
            vec!["s0".into()],
        )
        .unwrap();
        let result =
            mc_family_exact(&fts, &TemporalFormula::parse("AG p").unwrap()).unwrap();
        assert_eq!(result.classes.len(), 1);
        assert_eq!(result.classes[0].configs.len(), 4);
    }

    #[test]
    fn classes_partition_the_valid_configurations() {
        let fts = fig3_fts();
        let result =
            mc_family_exact(&fts, &TemporalFormula::parse("AG s0").unwrap()).unwrap();
        let model = fts.model();
        let mut union = ConfigSet::empty(model.universe());
        let mut total = 0usize;
        for class in &result.classes {
            total += class.configs.len();
            union = union.union(&class.configs);
        }
        assert_eq!(total, union.len(), "classes overlap");
        assert_eq!(union, model.expr().semantics());
    }

    #[test]
    fn quasi_collapses_and_reports_one_witness() {
        let fts = fig3_fts();
        let quasi =
            mc_family_quasi(&fts, &TemporalFormula::parse("EF s2").unwrap()).unwrap();
        assert_eq!(quasi.verdict, Verdict::Fail);
        let (configs, _) = quasi.witness.unwrap();
        assert_eq!(configs.len(), 1);
        let pass =
            mc_family_quasi(&fts, &TemporalFormula::parse("EF s1").unwrap()).unwrap();
        assert_eq!(pass.verdict, Verdict::Pass);
        assert!(pass.witness.is_none());
    }

    #[test]
    fn exact_mode_agrees_with_per_product_runs() {
        let fts = fig3_fts();
        for text in ["AG s0", "EF s2", "A[s0 U s1]", "AG (s1 -> A[!s0 U s2])"] {
            let formula = TemporalFormula::parse(text).unwrap();
            let family = mc_family_exact(&fts, &formula).unwrap();
            for config in fts.model().valid_configs() {
                let product = mc_product(&fts.derive(&config).unwrap(), &formula);
                let class = family
                    .classes
                    .iter()
                    .find(|cl| cl.configs.contains(&config).unwrap())
                    .expect("partition covers Conf(Φ)");
                assert_eq!(class.result.verdict, product.verdict);
            }
        }
    }
}

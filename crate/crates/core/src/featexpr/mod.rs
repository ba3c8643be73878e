//! Feature universes, feature expressions and their configuration-set
//! semantics.
//!
//! A universe is an ordered list of feature names; a configuration is a
//! subset of the universe, encoded as a bit mask with feature `i` at bit
//! `i`. The semantics of an expression is the exact set of satisfying
//! configurations, materialized as one bit per subset of the universe.
//! Universes are capped (24 features by default) so that enumeration is
//! always feasible; presence conditions and feature models are plain
//! feature expressions.

mod configset;
mod parse;

pub use configset::ConfigSet;
pub use parse::parse_featexpr;

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Hard ceiling on universe size. `PLACIDUS_MAX_FEATURES` may lower the
/// effective bound but never raise it past this cap.
pub const FEATURE_CAP: usize = 24;

/// Effective enumeration bound, read once per process.
pub fn max_features() -> usize {
    static BOUND: OnceLock<usize> = OnceLock::new();
    *BOUND.get_or_init(|| {
        std::env::var("PLACIDUS_MAX_FEATURES")
            .ok()
            .and_then(|raw| raw.parse::<usize>().ok())
            .map(|n| n.min(FEATURE_CAP))
            .unwrap_or(FEATURE_CAP)
    })
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An ordered, duplicate-free list of feature names. Cheap to clone;
/// equality is by content with pointer equality as a fast path.
#[derive(Clone)]
pub struct FeatureUniverse {
    inner: Arc<Vec<String>>,
}

impl FeatureUniverse {
    pub fn new<I, S>(features: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let features: Vec<String> = features.into_iter().map(Into::into).collect();
        let bound = max_features();
        if features.len() > bound {
            return Err(Error::TooManyFeatures { got: features.len(), bound });
        }
        for (i, name) in features.iter().enumerate() {
            if !is_identifier(name) {
                return Err(Error::BadFeatureName { name: name.clone() });
            }
            if features[..i].contains(name) {
                return Err(Error::DuplicateFeature { name: name.clone() });
            }
        }
        Ok(FeatureUniverse { inner: Arc::new(features) })
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn features(&self) -> &[String] {
        &self.inner
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.inner.iter().position(|f| f == name)
    }

    /// Number of subsets of the universe.
    pub fn config_count(&self) -> usize {
        1usize << self.inner.len()
    }

    pub fn config(&self, mask: u32) -> Configuration {
        debug_assert!((mask as usize) < self.config_count());
        Configuration { universe: self.clone(), mask }
    }
}

impl PartialEq for FeatureUniverse {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl Eq for FeatureUniverse {}

impl fmt::Debug for FeatureUniverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureUniverse({})", self.inner.join(","))
    }
}

/// A subset of the universe's features.
#[derive(Clone)]
pub struct Configuration {
    universe: FeatureUniverse,
    mask: u32,
}

impl Configuration {
    pub fn empty(universe: &FeatureUniverse) -> Self {
        Configuration { universe: universe.clone(), mask: 0 }
    }

    pub fn from_features<'a, I>(universe: &FeatureUniverse, names: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut mask = 0u32;
        for name in names {
            let idx = universe
                .index_of(name)
                .ok_or_else(|| Error::UnknownFeature { name: name.to_string() })?;
            mask |= 1 << idx;
        }
        Ok(Configuration { universe: universe.clone(), mask })
    }

    /// Parses a comma-separated feature list; the empty string is the
    /// empty configuration.
    pub fn parse(universe: &FeatureUniverse, text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(Self::empty(universe));
        }
        Self::from_features(universe, trimmed.split(',').map(str::trim))
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn contains(&self, name: &str) -> bool {
        match self.universe.index_of(name) {
            Some(idx) => self.mask >> idx & 1 == 1,
            None => false,
        }
    }

    /// Selected features in universe order.
    pub fn members(&self) -> Vec<&str> {
        self.universe
            .features()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.mask >> i & 1 == 1)
            .map(|(_, name)| name.as_str())
            .collect()
    }

    /// Direct recursive evaluation of an expression at this
    /// configuration; agrees with membership in [`FeatExpr::semantics`].
    pub fn satisfies(&self, expr: &FeatExpr) -> Result<bool> {
        if self.universe != expr.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(expr.node.eval(self.mask))
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.mask == other.mask
    }
}

impl Eq for Configuration {}

impl PartialOrd for Configuration {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Configuration {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        debug_assert!(self.universe == other.universe);
        self.mask.cmp(&other.mask)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.members().join(","))
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// `sat(c, e)`: true iff `c` satisfies `e`.
pub fn sat(config: &Configuration, expr: &FeatExpr) -> Result<bool> {
    config.satisfies(expr)
}

#[derive(Debug, PartialEq, Eq)]
enum Node {
    All,
    None,
    Atom(usize),
    Not(Arc<Node>),
    And(Arc<Node>, Arc<Node>),
    Or(Arc<Node>, Arc<Node>),
}

impl Node {
    fn eval(&self, mask: u32) -> bool {
        match self {
            Node::All => true,
            Node::None => false,
            Node::Atom(i) => mask >> i & 1 == 1,
            Node::Not(inner) => !inner.eval(mask),
            Node::And(a, b) => a.eval(mask) && b.eval(mask),
            Node::Or(a, b) => a.eval(mask) || b.eval(mask),
        }
    }

    fn semantics(&self, universe: &FeatureUniverse) -> ConfigSet {
        match self {
            Node::All => ConfigSet::full(universe),
            Node::None => ConfigSet::empty(universe),
            Node::Atom(i) => ConfigSet::with_feature(universe, *i),
            Node::Not(inner) => inner.semantics(universe).complement(),
            Node::And(a, b) => a.semantics(universe).intersect(&b.semantics(universe)),
            Node::Or(a, b) => a.semantics(universe).union(&b.semantics(universe)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Or(_, _) => 1,
            Node::And(_, _) => 2,
            _ => 3,
        }
    }

    fn write(&self, universe: &FeatureUniverse, out: &mut String) {
        match self {
            Node::All => out.push_str("true"),
            Node::None => out.push_str("false"),
            Node::Atom(i) => out.push_str(&universe.features()[*i]),
            Node::Not(inner) => {
                out.push('!');
                self.write_child(inner, 3, universe, out);
            }
            Node::And(a, b) => {
                self.write_child(a, 2, universe, out);
                out.push_str(" & ");
                self.write_child(b, 2, universe, out);
            }
            Node::Or(a, b) => {
                self.write_child(a, 1, universe, out);
                out.push_str(" | ");
                self.write_child(b, 1, universe, out);
            }
        }
    }

    fn write_child(&self, child: &Node, min: u8, universe: &FeatureUniverse, out: &mut String) {
        if child.precedence() < min {
            out.push('(');
            child.write(universe, out);
            out.push(')');
        } else {
            child.write(universe, out);
        }
    }
}

/// A feature expression bound to a universe. Presence conditions and
/// feature models are aliases for this type.
#[derive(Clone, PartialEq, Eq)]
pub struct FeatExpr {
    universe: FeatureUniverse,
    node: Arc<Node>,
}

pub type PresenceCondition = FeatExpr;

impl FeatExpr {
    pub fn top(universe: &FeatureUniverse) -> Self {
        FeatExpr { universe: universe.clone(), node: Arc::new(Node::All) }
    }

    pub fn bottom(universe: &FeatureUniverse) -> Self {
        FeatExpr { universe: universe.clone(), node: Arc::new(Node::None) }
    }

    pub fn atom(universe: &FeatureUniverse, name: &str) -> Result<Self> {
        let idx = universe
            .index_of(name)
            .ok_or_else(|| Error::UnknownFeature { name: name.to_string() })?;
        Ok(FeatExpr { universe: universe.clone(), node: Arc::new(Node::Atom(idx)) })
    }

    /// Negation. Combinators assume both operands share a universe;
    /// cross-universe combination is a programming error.
    pub fn negate(&self) -> Self {
        FeatExpr { universe: self.universe.clone(), node: Arc::new(Node::Not(self.node.clone())) }
    }

    pub fn and(&self, other: &FeatExpr) -> Self {
        assert!(self.universe == other.universe, "mixed universes in `and`");
        // unit laws keep path conjunctions readable
        if matches!(*self.node, Node::All) {
            return other.clone();
        }
        if matches!(*other.node, Node::All) {
            return self.clone();
        }
        FeatExpr {
            universe: self.universe.clone(),
            node: Arc::new(Node::And(self.node.clone(), other.node.clone())),
        }
    }

    pub fn or(&self, other: &FeatExpr) -> Self {
        assert!(self.universe == other.universe, "mixed universes in `or`");
        if matches!(*self.node, Node::None) {
            return other.clone();
        }
        if matches!(*other.node, Node::None) {
            return self.clone();
        }
        FeatExpr {
            universe: self.universe.clone(),
            node: Arc::new(Node::Or(self.node.clone(), other.node.clone())),
        }
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    /// Structural recursion mirroring the expression grammar: the
    /// universal set, the empty set, the filter on one feature,
    /// complement, intersection and union.
    pub fn semantics(&self) -> ConfigSet {
        self.node.semantics(&self.universe)
    }

    /// Semantic equality: equal configuration sets.
    pub fn semantic_eq(&self, other: &FeatExpr) -> Result<bool> {
        if self.universe != other.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(self.semantics() == other.semantics())
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.semantics().is_empty()
    }

    /// Re-parseable text form (core connectives only).
    pub fn text(&self) -> String {
        let mut out = String::new();
        self.node.write(&self.universe, &mut out);
        out
    }
}

impl fmt::Display for FeatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

impl fmt::Debug for FeatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatExpr({})", self.text())
    }
}

/// A feature model: the universe plus the constraint defining its valid
/// configurations.
#[derive(Clone, PartialEq)]
pub struct FeatureModel {
    universe: FeatureUniverse,
    expr: FeatExpr,
}

impl FeatureModel {
    pub fn new(universe: FeatureUniverse, expr: FeatExpr) -> Result<Self> {
        if *expr.universe() != universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(FeatureModel { universe, expr })
    }

    /// Parses `{"features": [...], "model": "<expr>"}` parts.
    pub fn parse(features: &[String], model_text: &str) -> Result<Self> {
        let universe = FeatureUniverse::new(features.iter().cloned())?;
        let expr = parse_featexpr(model_text, &universe)?;
        FeatureModel::new(universe, expr)
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    pub fn expr(&self) -> &FeatExpr {
        &self.expr
    }

    pub fn is_valid(&self, config: &Configuration) -> Result<bool> {
        config.satisfies(&self.expr)
    }

    /// All valid configurations in ascending bit-vector order.
    pub fn valid_configs(&self) -> Vec<Configuration> {
        valid_configs(&self.expr, &self.universe)
    }

    /// `Conf(Φ ∧ scope)`: the valid configurations within a presence
    /// condition's scope.
    pub fn configs_within(&self, scope: &FeatExpr) -> Result<Vec<Configuration>> {
        if *scope.universe() != self.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(self.expr.and(scope).semantics().configs())
    }

    /// Configuration set of `Φ ∧ scope`.
    pub fn configset_within(&self, scope: &FeatExpr) -> Result<ConfigSet> {
        if *scope.universe() != self.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(self.expr.and(scope).semantics())
    }
}

impl fmt::Debug for FeatureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureModel({})", self.expr.text())
    }
}

/// All configurations satisfying `expr`, ascending and duplicate-free.
pub fn valid_configs(expr: &FeatExpr, universe: &FeatureUniverse) -> Vec<Configuration> {
    debug_assert!(expr.universe() == universe);
    expr.semantics().configs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uni(names: &[&str]) -> FeatureUniverse {
        FeatureUniverse::new(names.iter().copied()).unwrap()
    }

    fn parse(text: &str, u: &FeatureUniverse) -> FeatExpr {
        parse_featexpr(text, u).unwrap()
    }

    #[test]
    fn universe_rejects_duplicates_and_bad_names() {
        assert!(matches!(
            FeatureUniverse::new(["A", "A"]),
            Err(Error::DuplicateFeature { .. })
        ));
        assert!(matches!(
            FeatureUniverse::new(["A", "B C"]),
            Err(Error::BadFeatureName { .. })
        ));
        assert!(matches!(
            FeatureUniverse::new((0..25).map(|i| format!("F{i}"))),
            Err(Error::TooManyFeatures { .. })
        ));
    }

    #[test]
    fn semantics_of_constants_and_atoms() {
        let u = uni(&["A", "B"]);
        let all = FeatExpr::top(&u).semantics();
        assert_eq!(all.len(), 4);
        let atom_a = FeatExpr::atom(&u, "A").unwrap().semantics();
        let configs: Vec<String> = atom_a.configs().iter().map(|c| c.to_string()).collect();
        assert_eq!(configs, vec!["A", "A,B"]);
    }

    #[test]
    fn xor_semantics_match_fig3_feature_model() {
        let u = uni(&["A", "B"]);
        let expr = parse("A xor B", &u);
        let configs: Vec<String> = expr.semantics().configs().iter().map(|c| c.to_string()).collect();
        assert_eq!(configs, vec!["A", "B"]);
    }

    #[test]
    fn sat_examples() {
        let u = uni(&["A", "B"]);
        let a = Configuration::from_features(&u, ["A"]).unwrap();
        let empty = Configuration::empty(&u);
        let both = Configuration::from_features(&u, ["A", "B"]).unwrap();
        assert!(a.satisfies(&parse("A", &u)).unwrap());
        assert!(empty.satisfies(&parse("!A", &u)).unwrap());
        assert!(!both.satisfies(&parse("A xor B", &u)).unwrap());
    }

    #[test]
    fn sat_rejects_universe_mismatch() {
        let u1 = uni(&["A"]);
        let u2 = uni(&["B"]);
        let c = Configuration::empty(&u1);
        assert!(matches!(c.satisfies(&FeatExpr::top(&u2)), Err(Error::UniverseMismatch)));
    }

    #[test]
    fn valid_configs_of_none_is_empty() {
        let u = uni(&["A", "B"]);
        assert!(valid_configs(&FeatExpr::bottom(&u), &u).is_empty());
    }

    #[test]
    fn infusion_feature_model_has_36_valid_configs() {
        let model = FeatureModel::parse(
            &[
                "HW_MONITORING",
                "MULTIPLE_DRUGS",
                "CHECK_DRUG_TYPE",
                "PROGRAMMABLE_INFUSION",
                "CHECK_INFUSION_RATE",
                "VISUAL_DISPLAY",
            ]
            .map(String::from),
            "(MULTIPLE_DRUGS -> CHECK_DRUG_TYPE) & (PROGRAMMABLE_INFUSION -> CHECK_INFUSION_RATE)",
        )
        .unwrap();
        assert_eq!(model.universe().config_count(), 64);
        assert_eq!(model.valid_configs().len(), 36);
    }

    fn arb_expr(features: usize) -> impl Strategy<Value = ExprTree> {
        let leaf = prop_oneof![
            Just(ExprTree::All),
            Just(ExprTree::None),
            (0..features).prop_map(ExprTree::Atom),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| ExprTree::Not(Box::new(e))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| ExprTree::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| ExprTree::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    #[derive(Debug, Clone)]
    enum ExprTree {
        All,
        None,
        Atom(usize),
        Not(Box<ExprTree>),
        And(Box<ExprTree>, Box<ExprTree>),
        Or(Box<ExprTree>, Box<ExprTree>),
    }

    impl ExprTree {
        fn build(&self, u: &FeatureUniverse) -> FeatExpr {
            match self {
                ExprTree::All => FeatExpr::top(u),
                ExprTree::None => FeatExpr::bottom(u),
                ExprTree::Atom(i) => {
                    let name = u.features()[i % u.len()].clone();
                    FeatExpr::atom(u, &name).unwrap()
                }
                ExprTree::Not(e) => e.build(u).negate(),
                ExprTree::And(a, b) => a.build(u).and(&b.build(u)),
                ExprTree::Or(a, b) => a.build(u).or(&b.build(u)),
            }
        }
    }

    proptest! {
        #[test]
        fn de_morgan_and_lattice_laws(a in arb_expr(6), b in arb_expr(6)) {
            let u = uni(&["F0", "F1", "F2", "F3", "F4", "F5"]);
            let ea = a.build(&u);
            let eb = b.build(&u);
            let not_and = ea.and(&eb).negate().semantics();
            let or_nots = ea.negate().or(&eb.negate()).semantics();
            prop_assert_eq!(&not_and, &or_nots);
            let not_or = ea.or(&eb).negate().semantics();
            let and_nots = ea.negate().and(&eb.negate()).semantics();
            prop_assert_eq!(&not_or, &and_nots);
            // absorption
            prop_assert_eq!(&ea.and(&ea.or(&eb)).semantics(), &ea.semantics());
            prop_assert_eq!(&ea.or(&ea.and(&eb)).semantics(), &ea.semantics());
        }

        #[test]
        fn evaluator_agrees_with_set_semantics(e in arb_expr(4)) {
            let u = uni(&["F0", "F1", "F2", "F3"]);
            let expr = e.build(&u);
            let sem = expr.semantics();
            for mask in 0..u.config_count() as u32 {
                let c = u.config(mask);
                prop_assert_eq!(c.satisfies(&expr).unwrap(), sem.contains(&c).unwrap());
            }
        }

        #[test]
        fn display_parse_roundtrip_is_semantic_identity(e in arb_expr(4)) {
            let u = uni(&["F0", "F1", "F2", "F3"]);
            let expr = e.build(&u);
            let reparsed = parse(&expr.text(), &u);
            prop_assert!(expr.semantic_eq(&reparsed).unwrap());
        }
    }

    #[test]
    fn valid_configs_of_top_enumerates_all_subsets_sorted() {
        for n in 0..5usize {
            let names: Vec<String> = (0..n).map(|i| format!("F{i}")).collect();
            let u = FeatureUniverse::new(names).unwrap();
            let configs = valid_configs(&FeatExpr::top(&u), &u);
            assert_eq!(configs.len(), 1 << n);
            let masks: Vec<u32> = configs.iter().map(|c| c.mask()).collect();
            let mut sorted = masks.clone();
            sorted.dedup();
            sorted.sort_unstable();
            assert_eq!(masks, sorted);
        }
    }
}

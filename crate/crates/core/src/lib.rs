//! Engine for product lines of assurance cases.
//!
//! The crate is organized around five layers: feature expressions and
//! their configuration-set semantics ([`featexpr`]), variational data
//! with derivation operators and bounded lift checking ([`variability`]),
//! featured transition systems with a CTL-fragment model checker and
//! label queries ([`fts`]), product-level GSN assurance cases with
//! argument templates ([`gsn`]), and presence-condition-annotated GSN
//! over variational data ([`vgsn`]). Dynamic plumbing (data references,
//! registries of predicates, templates and analyses) lives in
//! [`artifact`] and [`registry`].

pub mod artifact;
pub mod develop;
pub mod digest;
pub mod error;
pub mod featexpr;
pub mod fts;
pub mod gsn;
pub mod io;
pub mod registry;
pub mod variability;
pub mod vgsn;

pub use error::{Error, Result};
pub use featexpr::{
    max_features, parse_featexpr, sat, valid_configs, ConfigSet, Configuration, FeatExpr,
    FeatureModel, FeatureUniverse, PresenceCondition, FEATURE_CAP,
};
pub use variability::{
    check_lift, check_quasi_lift, verify_var_evidence, Annotated, EvidenceKind, LiftReport,
    LiftStatus, LiftWitness, VarFamily, VarSet, VariationalEvidence, Verdict, VerifyStatus,
};

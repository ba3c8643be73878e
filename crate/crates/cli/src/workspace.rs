//! Workspace manifests and artifact loading.
//!
//! A manifest maps artifact names to `{kind, path}` entries. Loading
//! parses and validates every artifact up front, collecting all issues
//! (parse errors, dangling data references, unknown predicate or
//! template ids) instead of stopping at the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use placidus_core::artifact::{resolve, DataRef, DataValue, ResolveNamed};
use placidus_core::error::Error as CoreError;
use placidus_core::gsn::{Goal, GsnNode, StrategyJustification};
use placidus_core::registry::{CheckContext, Registry};
use placidus_core::vgsn::{PlAc, VGoalBody, VGsnNode, VStrategyJustification};
use placidus_core::{io, FeatureUniverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    FeatureModel,
    Fts,
    VarSet,
    Ac,
    Plac,
    Formula,
    Query,
}

impl ArtifactKind {
    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "feature-model" => ArtifactKind::FeatureModel,
            "fts" => ArtifactKind::Fts,
            "varset" => ArtifactKind::VarSet,
            "ac" => ArtifactKind::Ac,
            "plac" => ArtifactKind::Plac,
            "formula" => ArtifactKind::Formula,
            "query" => ArtifactKind::Query,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::FeatureModel => "feature-model",
            ArtifactKind::Fts => "fts",
            ArtifactKind::VarSet => "varset",
            ArtifactKind::Ac => "ac",
            ArtifactKind::Plac => "plac",
            ArtifactKind::Formula => "formula",
            ArtifactKind::Query => "query",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArtifactEntry {
    pub kind: ArtifactKind,
    pub path: PathBuf,
}

#[derive(Debug)]
pub struct LoadIssue {
    pub artifact: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub issues: Vec<LoadIssue>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "workspace validation failed:")?;
        for issue in &self.issues {
            writeln!(f, "  {}: {}", issue.artifact, issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for LoadReport {}

pub struct Workspace {
    pub manifest_path: PathBuf,
    pub dir: PathBuf,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
    pub registry: Registry,
}

impl Workspace {
    /// Loads and fully validates a workspace manifest.
    pub fn load(manifest_path: &Path) -> Result<Workspace, Box<dyn std::error::Error>> {
        let text = std::fs::read_to_string(manifest_path)
            .map_err(|e| format!("cannot read {}: {e}", manifest_path.display()))?;
        let json: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| format!("{}: {e}", manifest_path.display()))?;
        let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut artifacts = BTreeMap::new();
        let mut report = LoadReport::default();
        let entries = json
            .get("artifacts")
            .and_then(|a| a.as_object())
            .ok_or_else(|| format!("{}: missing `artifacts` table", manifest_path.display()))?;
        for (name, entry) in entries {
            let kind = entry.get("kind").and_then(|k| k.as_str()).unwrap_or("");
            let Some(kind) = ArtifactKind::parse(kind) else {
                report.issues.push(LoadIssue {
                    artifact: name.clone(),
                    message: format!("unknown artifact kind `{kind}`"),
                });
                continue;
            };
            let Some(path) = entry.get("path").and_then(|p| p.as_str()) else {
                report.issues.push(LoadIssue {
                    artifact: name.clone(),
                    message: "missing `path`".to_string(),
                });
                continue;
            };
            artifacts.insert(
                name.clone(),
                ArtifactEntry { kind, path: dir.join(path) },
            );
        }
        let ws = Workspace {
            manifest_path: manifest_path.to_path_buf(),
            dir,
            artifacts,
            registry: Registry::builtin(),
        };
        ws.validate(&mut report);
        if report.issues.is_empty() {
            Ok(ws)
        } else {
            Err(Box::new(report))
        }
    }

    fn validate(&self, report: &mut LoadReport) {
        for (name, entry) in &self.artifacts {
            match self.load_value(name) {
                Ok(value) => {
                    // cross-references inside assurance cases
                    let refs: Vec<DataRef> = match &value {
                        DataValue::Ac(root) => collect_ac_refs(root),
                        DataValue::Plac(plac) => collect_plac_refs(plac),
                        _ => Vec::new(),
                    };
                    for r in refs {
                        if let Err(err) = resolve(&r, self) {
                            report.issues.push(LoadIssue {
                                artifact: name.clone(),
                                message: format!("data reference `{r}`: {err}"),
                            });
                        }
                    }
                    let preds: BTreeSet<String> = match &value {
                        DataValue::Ac(root) => collect_ac_preds(root),
                        DataValue::Plac(plac) => collect_plac_preds(plac),
                        _ => BTreeSet::new(),
                    };
                    for p in preds {
                        if !self.registry.has_predicate(&p) {
                            report.issues.push(LoadIssue {
                                artifact: name.clone(),
                                message: format!("unknown predicate `{p}`"),
                            });
                        }
                    }
                    let templates: BTreeSet<(String, bool)> = match &value {
                        DataValue::Ac(root) => {
                            collect_ac_templates(root).into_iter().map(|t| (t, false)).collect()
                        }
                        DataValue::Plac(plac) => {
                            collect_plac_templates(plac).into_iter().map(|t| (t, true)).collect()
                        }
                        _ => BTreeSet::new(),
                    };
                    for (t, lifted) in templates {
                        let found = if lifted {
                            self.registry.vtemplate(&t).is_ok()
                        } else {
                            self.registry.template(&t).is_ok()
                        };
                        if !found {
                            report.issues.push(LoadIssue {
                                artifact: name.clone(),
                                message: format!("unknown template `{t}`"),
                            });
                        }
                    }
                }
                Err(err) => {
                    report.issues.push(LoadIssue {
                        artifact: name.clone(),
                        message: format!("{} ({})", err, entry.path.display()),
                    });
                }
            }
        }
    }

    pub fn entry(&self, name: &str) -> Result<&ArtifactEntry, CoreError> {
        self.artifacts.get(name).ok_or_else(|| CoreError::DanglingRef(name.to_string()))
    }

    pub fn read_json(&self, name: &str) -> Result<serde_json::Value, CoreError> {
        let entry = self.entry(name)?;
        let text = std::fs::read_to_string(&entry.path)
            .map_err(|e| CoreError::Document(format!("{}: {e}", entry.path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn universe_of_model_artifact(&self, name: &str) -> Result<FeatureUniverse, CoreError> {
        match self.load_value(name)? {
            DataValue::FeatureModel(m) => Ok(m.universe().clone()),
            DataValue::Fts(m) => Ok(m.model().universe().clone()),
            other => Err(CoreError::DataShape {
                expected: "feature-model",
                got: other.shape().to_string(),
            }),
        }
    }

    /// Loads one artifact by name.
    pub fn load_value(&self, name: &str) -> Result<DataValue, CoreError> {
        let entry = self.entry(name)?;
        let json = self.read_json(name)?;
        Ok(match entry.kind {
            ArtifactKind::FeatureModel => {
                DataValue::FeatureModel(io::feature_model_from_json(&json)?)
            }
            ArtifactKind::Fts => {
                // product transition systems share the artifact kind
                if json.get("feature_model").is_some() {
                    DataValue::Fts(Box::new(io::fts_from_json(&json)?))
                } else {
                    DataValue::Ts(Box::new(io::ts_from_json(&json)?))
                }
            }
            ArtifactKind::VarSet => {
                let lookup = |n: &str| self.universe_of_model_artifact(n);
                DataValue::VarSet(io::varset_from_json(&json, Some(&lookup))?)
            }
            ArtifactKind::Ac => DataValue::Ac(Box::new(io::ac_from_json(&json)?)),
            ArtifactKind::Plac => DataValue::Plac(Box::new(io::plac_from_json(&json)?)),
            ArtifactKind::Formula => DataValue::Formula(io::formula_from_json(&json)?),
            ArtifactKind::Query => DataValue::Pattern(io::pattern_from_json(&json)?),
        })
    }

    pub fn context(&self) -> CheckContext<'_> {
        CheckContext { registry: &self.registry, resolver: self }
    }

    /// Rewrites an artifact file in place, keeping a `.bak` copy.
    pub fn rewrite(&self, name: &str, json: &serde_json::Value) -> Result<(), CoreError> {
        let entry = self.entry(name)?;
        let backup = entry.path.with_extension("json.bak");
        std::fs::copy(&entry.path, &backup)
            .map_err(|e| CoreError::Document(format!("cannot back up: {e}")))?;
        std::fs::write(&entry.path, serde_json::to_string_pretty(json).unwrap())
            .map_err(|e| CoreError::Document(format!("cannot write: {e}")))?;
        Ok(())
    }
}

impl ResolveNamed for Workspace {
    fn resolve_named(&self, name: &str) -> Result<DataValue, CoreError> {
        self.load_value(name)
    }
}

fn collect_ac_refs(root: &GsnNode) -> Vec<DataRef> {
    let mut out = Vec::new();
    for node in root.preorder() {
        if let Some(Goal::Pred { data, .. }) = node.goal() {
            out.push(data.clone());
        }
        if let GsnNode::Strategy {
            justification: StrategyJustification::TemplateInstance { data, aux, .. },
            ..
        } = node
        {
            out.push(data.clone());
            if let Some(aux) = aux {
                out.push(aux.clone());
            }
        }
    }
    out
}

fn collect_plac_refs(plac: &PlAc) -> Vec<DataRef> {
    let mut out = Vec::new();
    for node in plac.root.preorder() {
        if let VGoalBody::Pred { data, .. } = &node.goal().body {
            out.push(data.clone());
        }
        if let VGsnNode::Strategy {
            justification: VStrategyJustification::TemplateInstance { data, aux, .. },
            ..
        } = node
        {
            out.push(data.clone());
            if let Some(aux) = aux {
                out.push(aux.clone());
            }
        }
    }
    out
}

fn collect_ac_preds(root: &GsnNode) -> BTreeSet<String> {
    root.preorder()
        .iter()
        .filter_map(|n| match n.goal() {
            Some(Goal::Pred { predicate, .. }) => Some(predicate.clone()),
            _ => None,
        })
        .collect()
}

fn collect_plac_preds(plac: &PlAc) -> BTreeSet<String> {
    plac.root
        .preorder()
        .iter()
        .filter_map(|n| match &n.goal().body {
            VGoalBody::Pred { predicate, .. } => Some(predicate.clone()),
            _ => None,
        })
        .collect()
}

fn collect_ac_templates(root: &GsnNode) -> BTreeSet<String> {
    root.preorder()
        .iter()
        .filter_map(|n| match n {
            GsnNode::Strategy {
                justification: StrategyJustification::TemplateInstance { template, .. },
                ..
            } => Some(template.clone()),
            _ => None,
        })
        .collect()
}

fn collect_plac_templates(plac: &PlAc) -> BTreeSet<String> {
    plac.root
        .preorder()
        .iter()
        .filter_map(|n| match n {
            VGsnNode::Strategy {
                justification: VStrategyJustification::TemplateInstance { template, .. },
                ..
            } => Some(template.clone()),
            _ => None,
        })
        .collect()
}

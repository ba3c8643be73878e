//! `placidus`: derivation, checking and development of product lines of
//! assurance cases from workspace manifests.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use placidus_cli::render::{render_plac, render_product};
use placidus_cli::workspace::{ArtifactKind, Workspace};
use placidus_core::artifact::{DataRef, DataValue};
use placidus_core::develop::{
    attest_product, attest_variational, instantiate_product, instantiate_variational,
};
use placidus_core::error::Error as CoreError;
use placidus_core::fts::{mc_family_exact, mc_family_quasi, mc_product, query, vquery, TemporalFormula};
use placidus_core::gsn::{deductive_check, AcVerdict, NodeStatus};
use placidus_core::registry::LiftMode;
use placidus_core::variability::Verdict;
use placidus_core::vgsn::vdeductive_check;
use placidus_core::{io, ConfigSet, Configuration};

#[derive(Parser)]
#[command(
    name = "placidus",
    version,
    about = "Product lines of assurance cases: configuration enumeration, derivation, deductive checking, lifted analyses and argument templates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the valid configurations of a feature model
    Configs {
        workspace: PathBuf,
        /// A feature-model (or fts) artifact name
        model: String,
        #[arg(long)]
        json: bool,
    },
    /// Derive the product of a variational artifact at a configuration
    Derive {
        workspace: PathBuf,
        /// An fts or plac artifact name
        artifact: String,
        /// Comma-separated feature names (empty string for the empty
        /// configuration)
        #[arg(long)]
        config: String,
        /// Output path (defaults next to the input)
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Deductive check of an assurance case or product line thereof
    CheckAc {
        workspace: PathBuf,
        artifact: String,
        #[arg(long)]
        json: bool,
    },
    /// Instantiate an argument template at an undeveloped goal
    /// (rewrites the artifact in place, keeping a .bak copy)
    Instantiate {
        workspace: PathBuf,
        artifact: String,
        #[arg(long)]
        template: String,
        #[arg(long)]
        goal: String,
        /// Data reference (name, name@CFG, pair(..), forall(..),
        /// query(..), explode(..), aggregate(..))
        #[arg(long)]
        data: String,
        #[arg(long)]
        aux: Option<String>,
        /// Element predicate; wraps --data into forall(data, pred)
        #[arg(long)]
        pred: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Check that a family analysis lifts a product analysis on an input
    CheckLift {
        workspace: PathBuf,
        #[arg(long)]
        product: String,
        #[arg(long)]
        family: String,
        /// The variational input artifact (an fts)
        #[arg(long)]
        input: String,
        /// The analysis specification artifact (formula or query)
        #[arg(long)]
        spec: Option<String>,
        /// Check quasi-soundness instead of exactness
        #[arg(long)]
        quasi: bool,
        #[arg(long)]
        json: bool,
    },
    /// Model-check a transition system or a whole product line
    Modelcheck {
        workspace: PathBuf,
        artifact: String,
        /// Formula text, e.g. "AG (p -> A[q U r])"
        formula: String,
        /// Family mode for fts artifacts: exact | quasi
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Query state labels with a glob pattern
    Query {
        workspace: PathBuf,
        artifact: String,
        pattern: String,
        /// Lifted query (annotated results) for fts artifacts
        #[arg(long)]
        lifted: bool,
        #[arg(long)]
        json: bool,
    },
    /// Render an assurance case to DOT
    Render {
        workspace: PathBuf,
        artifact: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Colour nodes by deductive status
        #[arg(long)]
        with_status: bool,
        #[arg(long)]
        json: bool,
    },
    /// Attest an undeveloped goal (rewrites the artifact in place)
    Attest {
        workspace: PathBuf,
        artifact: String,
        #[arg(long)]
        goal: String,
        #[arg(long)]
        text: String,
        #[arg(long, default_value = "unattributed")]
        source: String,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn configset_brief(set: &ConfigSet) -> String {
    let configs = set.configs();
    let shown: Vec<String> = configs.iter().take(8).map(|c| format!("{{{c}}}")).collect();
    if configs.len() > 8 {
        format!("{} (+{} more)", shown.join(" "), configs.len() - 8)
    } else {
        shown.join(" ")
    }
}

fn configset_json(set: &ConfigSet) -> serde_json::Value {
    json!(set.configs().iter().map(|c| json!(c.members())).collect::<Vec<_>>())
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Configs { workspace, model, json } => {
            let ws = load(&workspace)?;
            let model = match ws.load_value(&model)? {
                DataValue::FeatureModel(m) => m,
                DataValue::Fts(m) => m.model().clone(),
                other => anyhow::bail!("`{model}` is a {}, not a feature model", other.shape()),
            };
            let configs = model.valid_configs();
            if json {
                println!(
                    "{}",
                    json!({
                        "count": configs.len(),
                        "configs": configs.iter().map(|c| json!(c.members())).collect::<Vec<_>>(),
                    })
                );
            } else {
                for c in &configs {
                    println!("{c}");
                }
            }
            Ok(0)
        }
        Command::Derive { workspace, artifact, config, out, json } => {
            let ws = load(&workspace)?;
            let value = ws.load_value(&artifact)?;
            let entry = ws.entry(&artifact)?;
            let (document, derived_kind) = match &value {
                DataValue::Fts(fts) => {
                    let c = Configuration::parse(fts.model().universe(), &config)?;
                    (io::ts_to_json(&fts.derive(&c)?), "ts")
                }
                DataValue::Plac(plac) => {
                    let c = Configuration::parse(plac.model.universe(), &config)?;
                    let product = plac.derive(&c, &ws.context())?;
                    (io::ac_to_json(&product), "ac")
                }
                other => anyhow::bail!("`{artifact}` is a {}, not derivable", other.shape()),
            };
            let out_path = out.unwrap_or_else(|| {
                let stem = entry.path.file_stem().unwrap_or_default().to_string_lossy();
                let cfg = if config.trim().is_empty() {
                    "empty".to_string()
                } else {
                    config.replace(',', "_")
                };
                entry.path.with_file_name(format!("{stem}@{cfg}.json"))
            });
            std::fs::write(&out_path, serde_json::to_string_pretty(&document)?)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "artifact": artifact,
                        "config": config,
                        "kind": derived_kind,
                        "output": out_path.display().to_string(),
                    })
                );
            } else {
                println!("derived {derived_kind} written to {}", out_path.display());
            }
            Ok(0)
        }
        Command::CheckAc { workspace, artifact, json } => {
            let ws = load(&workspace)?;
            check_ac(&ws, &artifact, json)
        }
        Command::Instantiate { workspace, artifact, template, goal, data, aux, pred, json } => {
            let ws = load(&workspace)?;
            let mut data = DataRef::parse(&data)?;
            if let Some(pred) = pred {
                data = DataRef::Forall { set: Box::new(data), pred };
            }
            let aux = aux.map(|a| DataRef::parse(&a)).transpose()?;
            instantiate(&ws, &artifact, &template, &goal, data, aux, json)
        }
        Command::CheckLift { workspace, product, family, input, spec, quasi, json } => {
            let ws = load(&workspace)?;
            let def = ws.registry.vanalysis(&family)?;
            if def.product_id != product {
                anyhow::bail!(
                    "family analysis `{family}` is registered as a lift of `{}`, not `{product}`",
                    def.product_id
                );
            }
            match (quasi, def.mode) {
                (false, LiftMode::Quasi) => {
                    anyhow::bail!("`{family}` is a quasi-lift; pass --quasi")
                }
                (true, LiftMode::Exact) => {
                    anyhow::bail!("`{family}` is an exact lift; drop --quasi")
                }
                _ => {}
            }
            let input_value = match spec {
                Some(spec) => DataValue::Pair(
                    Box::new(ws.load_value(&input)?),
                    Box::new(ws.load_value(&spec)?),
                ),
                None => ws.load_value(&input)?,
            };
            let model = match &input_value {
                DataValue::Pair(a, _) => a.as_fts()?.model().clone(),
                DataValue::Fts(m) => m.model().clone(),
                other => anyhow::bail!("input resolves to {}, expected an fts", other.shape()),
            };
            let report = (def.lift_check)(&ws.context(), &model, &input_value)?;
            if json {
                println!("{}", io::lift_report_to_json(&report));
            } else {
                println!("lift check: {}", report.status.as_str());
                for w in &report.witnesses {
                    println!(
                        "  at {{{}}}: product {} / family {}",
                        w.config, w.product_side, w.family_side
                    );
                }
            }
            Ok(if report.ok() { 0 } else { 1 })
        }
        Command::Modelcheck { workspace, artifact, formula, family, json } => {
            let ws = load(&workspace)?;
            let formula = TemporalFormula::parse(&formula)?;
            match ws.load_value(&artifact)? {
                DataValue::Ts(ts) => {
                    let result = mc_product(&ts, &formula);
                    for w in &result.warnings {
                        eprintln!("warning: {w}");
                    }
                    if json {
                        println!("{}", io::mc_result_to_json(&result));
                    } else {
                        println!("verdict: {}", result.verdict);
                        if let Some(cex) = &result.counterexample {
                            println!("counterexample: {}", cex.prefix.join(" -> "));
                            if let Some(i) = cex.loop_index {
                                println!("  (loops back to position {i})");
                            }
                        }
                    }
                    Ok(if result.verdict == Verdict::Pass { 0 } else { 1 })
                }
                DataValue::Fts(fts) => {
                    let mode = family.as_deref().unwrap_or("exact");
                    match mode {
                        "exact" => {
                            let result = mc_family_exact(&fts, &formula)?;
                            if json {
                                println!("{}", io::family_mc_to_json(&result));
                            } else {
                                for class in &result.classes {
                                    println!(
                                        "configs {} -> {}",
                                        configset_brief(&class.configs),
                                        class.result.verdict
                                    );
                                    if let Some(cex) = &class.result.counterexample {
                                        println!("  counterexample: {}", cex.prefix.join(" -> "));
                                    }
                                }
                            }
                            Ok(if result.all_pass() { 0 } else { 1 })
                        }
                        "quasi" => {
                            let result = mc_family_quasi(&fts, &formula)?;
                            if json {
                                println!("{}", io::quasi_mc_to_json(&result));
                            } else {
                                println!("verdict: {}", result.verdict);
                                if let Some((configs, cex)) = &result.witness {
                                    println!("violating configs: {}", configset_brief(configs));
                                    if let Some(cex) = cex {
                                        println!("counterexample: {}", cex.prefix.join(" -> "));
                                    }
                                }
                            }
                            Ok(if result.verdict == Verdict::Pass { 0 } else { 1 })
                        }
                        other => anyhow::bail!("unknown family mode `{other}`"),
                    }
                }
                other => anyhow::bail!("`{artifact}` is a {}, not checkable", other.shape()),
            }
        }
        Command::Query { workspace, artifact, pattern, lifted, json } => {
            let ws = load(&workspace)?;
            match ws.load_value(&artifact)? {
                DataValue::Ts(ts) => {
                    let ids = query(&ts, &pattern);
                    if json {
                        println!("{}", json!({"states": ids.iter().collect::<Vec<_>>()}));
                    } else {
                        for id in ids {
                            println!("{id}");
                        }
                    }
                    Ok(0)
                }
                DataValue::Fts(fts) => {
                    if !lifted {
                        anyhow::bail!(
                            "`{artifact}` is a product line; pass --lifted or derive a product first"
                        );
                    }
                    let results = vquery(&fts, &pattern);
                    if json {
                        let as_opaque = results.map(|id| {
                            placidus_core::artifact::OpaqueValue::string(id.clone())
                        });
                        println!("{}", json!({"results": io::varset_to_json(&as_opaque)}));
                    } else {
                        for e in results.elements() {
                            println!("{} [{}]", e.value, e.pc.text());
                        }
                    }
                    Ok(0)
                }
                other => anyhow::bail!("`{artifact}` is a {}, not queryable", other.shape()),
            }
        }
        Command::Render { workspace, artifact, out, with_status, json } => {
            let ws = load(&workspace)?;
            let dot = match ws.load_value(&artifact)? {
                DataValue::Ac(root) => {
                    let statuses = with_status.then(|| {
                        deductive_check(&root, &ws.context())
                            .nodes
                            .into_iter()
                            .map(|n| (n.id, n.status))
                            .collect::<BTreeMap<String, NodeStatus>>()
                    });
                    render_product(&root, statuses.as_ref())
                }
                DataValue::Plac(plac) => {
                    let statuses = if with_status {
                        let report = vdeductive_check(&plac, &ws.context())?;
                        Some(
                            report
                                .nodes
                                .into_iter()
                                .map(|n| (n.id, n.status))
                                .collect::<BTreeMap<String, NodeStatus>>(),
                        )
                    } else {
                        None
                    };
                    render_plac(&plac, statuses.as_ref())
                }
                other => anyhow::bail!("`{artifact}` is a {}, not renderable", other.shape()),
            };
            match &out {
                Some(path) => std::fs::write(path, &dot)?,
                None => {
                    if !json {
                        print!("{dot}");
                    }
                }
            }
            if json {
                println!(
                    "{}",
                    json!({
                        "dot": dot,
                        "output": out.map(|p| p.display().to_string()),
                    })
                );
            }
            Ok(0)
        }
        Command::Attest { workspace, artifact, goal, text, source, json } => {
            let ws = load(&workspace)?;
            let outcome = match ws.load_value(&artifact)? {
                DataValue::Ac(mut root) => {
                    attest_product(&mut root, &goal, &text, &source)?;
                    ws.rewrite(&artifact, &io::ac_to_json(&root))?;
                    Ok(())
                }
                DataValue::Plac(mut plac) => {
                    attest_variational(&mut plac, &goal, &text, &source)?;
                    ws.rewrite(&artifact, &io::plac_to_json(&plac))?;
                    Ok(())
                }
                other => Err(anyhow::anyhow!(
                    "`{artifact}` is a {}, not an assurance case",
                    other.shape()
                )),
            };
            outcome?;
            if json {
                println!("{}", json!({"status": "ok", "goal": goal}));
            } else {
                println!("attested `{goal}`");
            }
            Ok(0)
        }
    }
}

fn load(path: &PathBuf) -> anyhow::Result<Workspace> {
    Workspace::load(path).map_err(|e| anyhow::anyhow!("{e}"))
}

fn check_ac(ws: &Workspace, artifact: &str, json_mode: bool) -> anyhow::Result<u8> {
    let ctx = ws.context();
    match ws.load_value(artifact)? {
        DataValue::Ac(root) => {
            let report = deductive_check(&root, &ctx);
            if json_mode {
                println!(
                    "{}",
                    json!({
                        "verdict": report.verdict.as_str(),
                        "deductive": report.verdict != AcVerdict::NotDeductive,
                        "assumptions": report.assumptions.iter().map(|a| json!({
                            "node": a.node, "text": a.text,
                        })).collect::<Vec<_>>(),
                        "nodes": report.nodes.iter().map(|n| json!({
                            "id": n.id,
                            "status": n.status.as_str(),
                            "note": n.note,
                        })).collect::<Vec<_>>(),
                    })
                );
            } else {
                println!("{:<24} {:<16} note", "node", "status");
                for n in &report.nodes {
                    println!(
                        "{:<24} {:<16} {}",
                        n.id,
                        n.status.as_str(),
                        n.note.as_deref().unwrap_or("")
                    );
                }
                if !report.assumptions.is_empty() {
                    println!("assumptions:");
                    for a in &report.assumptions {
                        println!("  {}: {}", a.node, a.text);
                    }
                }
                println!("verdict: {}", report.verdict.as_str());
            }
            Ok(exit_for(&report.verdict))
        }
        DataValue::Plac(plac) => {
            let report = vdeductive_check(&plac, &ctx)?;
            if json_mode {
                println!(
                    "{}",
                    json!({
                        "verdict": report.verdict.as_str(),
                        "deductive": report.verdict != AcVerdict::NotDeductive,
                        "failing": configset_json(&report.failing),
                        "assumptions": report.assumptions.iter().map(|a| json!({
                            "node": a.node, "text": a.text, "pc": a.pc.text(),
                        })).collect::<Vec<_>>(),
                        "nodes": report.nodes.iter().map(|n| json!({
                            "id": n.id,
                            "status": n.status.as_str(),
                            "failing": configset_json(&n.failing),
                            "note": n.note,
                        })).collect::<Vec<_>>(),
                    })
                );
            } else {
                println!("{:<24} {:<16} failing configurations", "node", "status");
                for n in &report.nodes {
                    let failing = if n.failing.is_empty() {
                        String::new()
                    } else {
                        configset_brief(&n.failing)
                    };
                    println!("{:<24} {:<16} {}", n.id, n.status.as_str(), failing);
                    if let Some(note) = &n.note {
                        println!("{:<24} {:<16} note: {note}", "", "");
                    }
                }
                if !report.assumptions.is_empty() {
                    println!("assumptions:");
                    for a in &report.assumptions {
                        println!("  {} [{}]: {}", a.node, a.pc.text(), a.text);
                    }
                }
                if !report.failing.is_empty() {
                    println!("failing configurations: {}", configset_brief(&report.failing));
                }
                println!("verdict: {}", report.verdict.as_str());
            }
            Ok(exit_for(&report.verdict))
        }
        other => anyhow::bail!("`{artifact}` is a {}, not an assurance case", other.shape()),
    }
}

fn exit_for(verdict: &AcVerdict) -> u8 {
    match verdict {
        AcVerdict::Deductive => 0,
        // assumptions and failures both exit 1; the output distinguishes
        AcVerdict::DeductiveWithAssumptions(_) | AcVerdict::NotDeductive => 1,
    }
}

fn instantiate(
    ws: &Workspace,
    artifact: &str,
    template: &str,
    goal: &str,
    data: DataRef,
    aux: Option<DataRef>,
    json_mode: bool,
) -> anyhow::Result<u8> {
    let ctx = ws.context();
    let entry_kind = ws.entry(artifact)?.kind;
    let refusal = |msg: String, json_mode: bool| -> anyhow::Result<u8> {
        if json_mode {
            println!("{}", json!({"status": "refused", "message": msg}));
        } else {
            eprintln!("refused: {msg}");
        }
        Ok(1)
    };
    match entry_kind {
        ArtifactKind::Ac => {
            let DataValue::Ac(mut root) = ws.load_value(artifact)? else { unreachable!() };
            match instantiate_product(&mut root, goal, template, data, aux, &ctx) {
                Ok(children) => {
                    ws.rewrite(artifact, &io::ac_to_json(&root))?;
                    if json_mode {
                        println!("{}", json!({"status": "ok", "children": children}));
                    } else {
                        println!("instantiated `{template}` at `{goal}`: {}", children.join(", "));
                    }
                    Ok(0)
                }
                Err(CoreError::Refused(msg)) => refusal(msg, json_mode),
                Err(other) => Err(other.into()),
            }
        }
        ArtifactKind::Plac => {
            let DataValue::Plac(mut plac) = ws.load_value(artifact)? else { unreachable!() };
            match instantiate_variational(&mut plac, goal, template, data, aux, &ctx) {
                Ok(report) => {
                    ws.rewrite(artifact, &io::plac_to_json(&plac))?;
                    if json_mode {
                        println!(
                            "{}",
                            json!({
                                "status": "ok",
                                "children": report.children,
                                "lift": report.lift.status.as_str(),
                            })
                        );
                    } else {
                        println!(
                            "instantiated `{template}` at `{goal}` (lift: {}): {}",
                            report.lift.status.as_str(),
                            report.children.join(", ")
                        );
                    }
                    Ok(0)
                }
                Err(CoreError::Refused(msg)) => refusal(msg, json_mode),
                Err(other) => Err(other.into()),
            }
        }
        other => anyhow::bail!("`{artifact}` is a {}, not an assurance case", other.as_str()),
    }
}

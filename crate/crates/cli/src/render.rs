//! Deterministic DOT rendering of assurance cases. One DOT node per AC
//! node in preorder; strategies are boxes, evidence nodes ellipses;
//! presence conditions append as a bracketed suffix; statuses, when a
//! report is supplied, colour the nodes.

use std::collections::BTreeMap;

use placidus_core::gsn::{GsnNode, NodeStatus};
use placidus_core::vgsn::{PlAc, VGsnNode};

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn status_color(status: NodeStatus) -> &'static str {
    match status {
        NodeStatus::Certified | NodeStatus::EvidenceBacked => "palegreen",
        NodeStatus::Assumed => "khaki",
        NodeStatus::Broken => "salmon",
        NodeStatus::Undeveloped => "lightgray",
    }
}

fn emit_node(
    out: &mut String,
    index: usize,
    parts: &[&str],
    evidence: bool,
    status: Option<NodeStatus>,
) {
    let shape = if evidence { "ellipse" } else { "box" };
    let label: Vec<String> =
        parts.iter().filter(|p| !p.is_empty()).map(|p| escape(p)).collect();
    let label = label.join("\\n");
    match status {
        Some(s) => out.push_str(&format!(
            "  n{index} [shape={shape}, style=filled, fillcolor={}, label=\"{label}\"];\n",
            status_color(s),
        )),
        None => out.push_str(&format!("  n{index} [shape={shape}, label=\"{label}\"];\n")),
    }
}

/// Renders a product assurance case.
pub fn render_product(root: &GsnNode, statuses: Option<&BTreeMap<String, NodeStatus>>) -> String {
    let mut out = String::from("digraph assurance_case {\n  rankdir=TB;\n");
    let mut counter = 0usize;
    walk_product(root, None, &mut counter, &mut out, statuses);
    out.push_str("}\n");
    out
}

fn walk_product(
    node: &GsnNode,
    parent: Option<usize>,
    counter: &mut usize,
    out: &mut String,
    statuses: Option<&BTreeMap<String, NodeStatus>>,
) {
    let index = *counter;
    *counter += 1;
    match node {
        GsnNode::Nil => {
            emit_node(out, index, &["(nil)"], false, None);
        }
        GsnNode::Evidence { id, goal, .. } => {
            let status = statuses.and_then(|s| s.get(id).copied());
            emit_node(out, index, &[id, goal.text()], true, status);
        }
        GsnNode::Strategy { id, goal, children, .. } => {
            let status = statuses.and_then(|s| s.get(id).copied());
            emit_node(out, index, &[id, goal.text()], false, status);
            for child in children {
                walk_product(child, Some(index), counter, out, statuses);
            }
        }
    }
    if let Some(p) = parent {
        out.push_str(&format!("  n{p} -> n{index};\n"));
    }
}

/// Renders a product-line assurance case with presence conditions.
pub fn render_plac(plac: &PlAc, statuses: Option<&BTreeMap<String, NodeStatus>>) -> String {
    let mut out = String::from("digraph product_line_assurance_case {\n  rankdir=TB;\n");
    let mut counter = 0usize;
    walk_plac(&plac.root, None, &mut counter, &mut out, statuses);
    out.push_str("}\n");
    out
}

fn walk_plac(
    node: &VGsnNode,
    parent: Option<usize>,
    counter: &mut usize,
    out: &mut String,
    statuses: Option<&BTreeMap<String, NodeStatus>>,
) {
    let index = *counter;
    *counter += 1;
    let pc = node.pc().text();
    let pc_suffix = if pc == "true" { String::new() } else { format!("[{pc}]") };
    let evidence = matches!(node, VGsnNode::Evidence { .. });
    let status = statuses.and_then(|s| s.get(node.id()).copied());
    emit_node(out, index, &[node.id(), node.goal().text(), &pc_suffix], evidence, status);
    for child in node.children() {
        walk_plac(child, Some(index), counter, out, statuses);
    }
    if let Some(p) = parent {
        out.push_str(&format!("  n{p} -> n{index};\n"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use placidus_core::gsn::{EvidenceRecord, Goal};
    use placidus_core::variability::Verdict;

    fn leaf(id: &str) -> GsnNode {
        GsnNode::Evidence {
            id: id.to_string(),
            goal: Goal::Atom { claim: "c".into(), text: "claim".into() },
            record: EvidenceRecord::Machine {
                analysis: "a".into(),
                input_digest: String::new(),
                output_digest: String::new(),
                verdict: Verdict::Pass,
                output: None,
            },
            description: None,
        }
    }

    #[test]
    fn single_evidence_node_renders_one_dot_node() {
        let dot = render_product(&leaf("Sn1"), None);
        assert_eq!(dot.matches("shape=ellipse").count(), 1);
        assert_eq!(dot.matches("->").count(), 0);
    }

    #[test]
    fn rendering_is_deterministic() {
        let tree = GsnNode::Strategy {
            id: "G0".into(),
            goal: Goal::Atom { claim: "root".into(), text: "root claim".into() },
            justification: placidus_core::gsn::StrategyJustification::Axiomatic {
                text: "t".into(),
            },
            children: vec![leaf("Sn1"), leaf("Sn2")],
            description: None,
        };
        let a = render_product(&tree, None);
        let b = render_product(&tree, None);
        assert_eq!(a, b);
        assert_eq!(a.matches("->").count(), 2);
    }
}

//! Attack tree documents: TOML with state sets written as formulas.
//!
//! ```toml
//! schema = 1
//!
//! [tree]
//! node = "and"
//! from = "init"
//! to = "shc"
//!
//! [[tree.children]]
//! node = "base"
//! from = "init"
//! to = "HC"
//! ```

use refrisk_core::attack_tree::AttackTree;
use refrisk_core::semantics::{Infrastructure, RuleSystem, StoreView};
use refrisk_core::{StateSet, TransitionSystem};
use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::schema::{line_of, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Base,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeNode {
    pub node: NodeKind,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub schema: u32,
    pub tree: TreeNode,
}

pub fn parse_tree(text: &str) -> Result<TreeDoc, CliError> {
    let doc: TreeDoc = toml::from_str(text).map_err(|e| CliError::Schema {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        path: "tree".into(),
        message: e.message().to_string(),
    })?;
    if doc.schema != SCHEMA_VERSION {
        return Err(CliError::Schema {
            line: 1,
            path: "schema".into(),
            message: format!("unsupported schema version {}", doc.schema),
        });
    }
    if let Some(path) = base_with_children(&doc.tree, "tree") {
        return Err(CliError::Schema { line: 0, path, message: "a base node has no children".into() });
    }
    Ok(doc)
}

fn base_with_children(n: &TreeNode, path: &str) -> Option<String> {
    if n.node == NodeKind::Base && !n.children.is_empty() {
        return Some(path.into());
    }
    n.children.iter().enumerate().find_map(|(i, c)| base_with_children(c, &format!("{path}.children[{i}]")))
}

pub fn render_doc(doc: &TreeDoc) -> String {
    toml::to_string(doc).expect("tree documents serialize")
}

/// Resolves every set of the document against the model.
pub fn resolve<T, D>(a: &Analysis<'_, T>, n: &TreeNode) -> Result<AttackTree<Infrastructure<D>>, CliError>
where
    T: TransitionSystem<State = Infrastructure<D>> + RuleSystem<State = Infrastructure<D>>,
    D: StoreView + Clone + Ord,
{
    let from = a.eval_str(&n.from)?;
    let to = a.eval_str(&n.to)?;
    let children = n.children.iter().map(|c| resolve(a, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(match n.node {
        NodeKind::Base => AttackTree::base(from, to),
        NodeKind::And => AttackTree::and(children, from, to),
        NodeKind::Or => AttackTree::or(children, from, to),
    })
}

/// The document of a tree, with sets written by `show`.
pub fn describe<S: Ord + Clone>(t: &AttackTree<S>, show: &dyn Fn(&StateSet<S>) -> String) -> TreeNode {
    let (from, to) = t.goal();
    let node = match t {
        AttackTree::Base(_) => NodeKind::Base,
        AttackTree::And(..) => NodeKind::And,
        AttackTree::Or(..) => NodeKind::Or,
    };
    TreeNode {
        node,
        from: show(from),
        to: show(to),
        children: t.children().iter().map(|c| describe(c, show)).collect(),
    }
}

/// The indented `AND(from, to)` rendering of a document, sets as written.
pub fn render_node(n: &TreeNode) -> String {
    let mut out = String::new();
    render_into(n, 0, &mut out);
    out
}

fn render_into(n: &TreeNode, depth: usize, out: &mut String) {
    let tag = match n.node {
        NodeKind::Base => "N",
        NodeKind::And => "AND",
        NodeKind::Or => "OR",
    };
    out.push_str(&format!("{}{tag}({}, {})\n", "  ".repeat(depth), n.from, n.to));
    for c in &n.children {
        render_into(c, depth + 1, out);
    }
}

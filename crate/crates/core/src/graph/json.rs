//! JSON interchange for the two serialized graph forms.
//!
//! Flat graph:
//! `{"id", "entry", "exit", "nodes": [{"id", "kind", "label"?, "gateway_kind"?,
//! "gateway_role"?}], "edges": [[from, to]]}`
//!
//! Block tree:
//! `{"id", "root": {"type": "act"|"seq"|"xor"|"and"|"or"|"loop", ...}}`

use serde::{Deserialize, Serialize};

use super::{
    BlockTree, GatewayKind, GatewayRole, GraphError, Node, NodeId, NodeKind, ProcessGraph,
    DEFAULT_MAX_UNROLL,
};

#[derive(Serialize, Deserialize)]
struct FlatGraphDoc {
    id: String,
    entry: String,
    exit: String,
    nodes: Vec<FlatNode>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct FlatNode {
    id: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gateway_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gateway_role: Option<String>,
}

/// Parses and validates a flat-graph JSON document.
pub fn parse_graph(bytes: &[u8]) -> Result<ProcessGraph, GraphError> {
    let doc: FlatGraphDoc =
        serde_json::from_slice(bytes).map_err(|e| GraphError::Schema(e.to_string()))?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for raw in doc.nodes {
        let id = NodeId::new(raw.id)?;
        let kind = match raw.kind.as_str() {
            "activity" => {
                if raw.gateway_kind.is_some() || raw.gateway_role.is_some() {
                    return Err(GraphError::Validation(format!(
                        "activity {id} carries gateway fields"
                    )));
                }
                let label = raw.label.ok_or_else(|| {
                    GraphError::Validation(format!("activity {id} is missing a label"))
                })?;
                NodeKind::Activity { label }
            }
            "gateway" => {
                if raw.label.is_some() {
                    return Err(GraphError::Validation(format!("gateway {id} carries a label")));
                }
                let kind = match raw.gateway_kind.as_deref() {
                    Some("xor") => GatewayKind::Xor,
                    Some("and") => GatewayKind::And,
                    Some("or") => GatewayKind::Or,
                    other => {
                        return Err(GraphError::Schema(format!(
                            "gateway {id}: bad gateway_kind {other:?}"
                        )))
                    }
                };
                let role = match raw.gateway_role.as_deref() {
                    Some("split") => GatewayRole::Split,
                    Some("join") => GatewayRole::Join,
                    other => {
                        return Err(GraphError::Schema(format!(
                            "gateway {id}: bad gateway_role {other:?}"
                        )))
                    }
                };
                NodeKind::Gateway { kind, role }
            }
            other => return Err(GraphError::Schema(format!("node {id}: bad kind {other:?}"))),
        };
        nodes.push(Node { id, kind });
    }
    let edges = doc
        .edges
        .into_iter()
        .map(|(from, to)| Ok((NodeId::new(from)?, NodeId::new(to)?)))
        .collect::<Result<Vec<_>, GraphError>>()?;
    ProcessGraph::new(doc.id, nodes, edges, NodeId::new(doc.entry)?, NodeId::new(doc.exit)?)
}

/// Serializes a graph to the flat JSON form. Content round-trips bit-exactly
/// through [`parse_graph`].
pub fn serialize_graph(graph: &ProcessGraph) -> Vec<u8> {
    let doc = FlatGraphDoc {
        id: graph.id().to_string(),
        entry: graph.entry().as_str().to_string(),
        exit: graph.exit().as_str().to_string(),
        nodes: graph
            .nodes()
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Activity { label } => FlatNode {
                    id: n.id.as_str().to_string(),
                    kind: "activity".into(),
                    label: Some(label.clone()),
                    gateway_kind: None,
                    gateway_role: None,
                },
                NodeKind::Gateway { kind, role } => FlatNode {
                    id: n.id.as_str().to_string(),
                    kind: "gateway".into(),
                    label: None,
                    gateway_kind: Some(kind.as_str().to_string()),
                    gateway_role: Some(
                        match role {
                            GatewayRole::Split => "split",
                            GatewayRole::Join => "join",
                        }
                        .to_string(),
                    ),
                },
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|(f, t)| (f.as_str().to_string(), t.as_str().to_string()))
            .collect(),
    };
    serde_json::to_vec_pretty(&doc).expect("flat graph serializes")
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    id: String,
    root: TreeJson,
}

fn default_unroll() -> u32 {
    DEFAULT_MAX_UNROLL
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum TreeJson {
    Act { label: String, node_id: String },
    Seq { children: Vec<TreeJson> },
    Xor { branches: Vec<TreeJson> },
    And { branches: Vec<TreeJson> },
    Or { branches: Vec<TreeJson> },
    Loop {
        body: Box<TreeJson>,
        #[serde(default = "default_unroll")]
        max_unroll: u32,
    },
}

impl TreeJson {
    fn into_tree(self) -> Result<BlockTree, GraphError> {
        Ok(match self {
            TreeJson::Act { label, node_id } => {
                BlockTree::Act { label, node_id: NodeId::new(node_id)? }
            }
            TreeJson::Seq { children } => BlockTree::Seq(
                children.into_iter().map(TreeJson::into_tree).collect::<Result<_, _>>()?,
            ),
            TreeJson::Xor { branches } => BlockTree::Xor(
                branches.into_iter().map(TreeJson::into_tree).collect::<Result<_, _>>()?,
            ),
            TreeJson::And { branches } => BlockTree::And(
                branches.into_iter().map(TreeJson::into_tree).collect::<Result<_, _>>()?,
            ),
            TreeJson::Or { branches } => BlockTree::Or(
                branches.into_iter().map(TreeJson::into_tree).collect::<Result<_, _>>()?,
            ),
            TreeJson::Loop { body, max_unroll } => {
                BlockTree::Loop { body: Box::new(body.into_tree()?), max_unroll }
            }
        })
    }

    fn from_tree(tree: &BlockTree) -> TreeJson {
        match tree {
            BlockTree::Act { label, node_id } => {
                TreeJson::Act { label: label.clone(), node_id: node_id.as_str().to_string() }
            }
            BlockTree::Seq(c) => TreeJson::Seq { children: c.iter().map(Self::from_tree).collect() },
            BlockTree::Xor(b) => TreeJson::Xor { branches: b.iter().map(Self::from_tree).collect() },
            BlockTree::And(b) => TreeJson::And { branches: b.iter().map(Self::from_tree).collect() },
            BlockTree::Or(b) => TreeJson::Or { branches: b.iter().map(Self::from_tree).collect() },
            BlockTree::Loop { body, max_unroll } => {
                TreeJson::Loop { body: Box::new(Self::from_tree(body)), max_unroll: *max_unroll }
            }
        }
    }
}

/// Parses a block-tree JSON document; returns the graph id and the validated tree.
pub fn parse_tree(bytes: &[u8]) -> Result<(String, BlockTree), GraphError> {
    let doc: TreeDoc =
        serde_json::from_slice(bytes).map_err(|e| GraphError::Schema(e.to_string()))?;
    let tree = doc.root.into_tree()?;
    tree.validate()?;
    Ok((doc.id, tree))
}

/// Serializes a block tree under the given graph id.
pub fn serialize_tree(id: &str, tree: &BlockTree) -> Vec<u8> {
    let doc = TreeDoc { id: id.to_string(), root: TreeJson::from_tree(tree) };
    serde_json::to_vec_pretty(&doc).expect("block tree serializes")
}

/// The tree as a `serde_json::Value`, for embedding in dataset rows.
pub(crate) fn tree_value(tree: &BlockTree) -> serde_json::Value {
    serde_json::to_value(TreeJson::from_tree(tree)).expect("block tree serializes")
}

/// Parses a tree from an embedded `serde_json::Value`.
pub(crate) fn tree_from_value(value: serde_json::Value) -> Result<BlockTree, GraphError> {
    let raw: TreeJson =
        serde_json::from_value(value).map_err(|e| GraphError::Schema(e.to_string()))?;
    let tree = raw.into_tree()?;
    tree.validate()?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sequence_parses() {
        let doc = br#"{
            "id": "g1", "entry": "A", "exit": "B",
            "nodes": [
                {"id": "A", "kind": "activity", "label": "first"},
                {"id": "B", "kind": "activity", "label": "second"}
            ],
            "edges": [["A", "B"]]
        }"#;
        let g = parse_graph(doc).unwrap();
        assert_eq!(g.entry().as_str(), "A");
        assert_eq!(g.exit().as_str(), "B");
        assert_eq!(g.nodes().len(), 2);
    }

    #[test]
    fn unknown_edge_target_is_validation_error() {
        let doc = br#"{
            "id": "g1", "entry": "A", "exit": "A",
            "nodes": [{"id": "A", "kind": "activity", "label": "a"}],
            "edges": [["A", "Z"]]
        }"#;
        match parse_graph(doc) {
            Err(GraphError::Validation(msg)) => assert!(msg.contains('Z'), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_schema_error() {
        assert!(matches!(parse_graph(b"{"), Err(GraphError::Schema(_))));
        // wrong field type
        assert!(matches!(
            parse_graph(br#"{"id": 3, "entry": "A", "exit": "A", "nodes": [], "edges": []}"#),
            Err(GraphError::Schema(_))
        ));
    }

    #[test]
    fn xor_pattern_parses_with_five_nodes_six_edges() {
        // XOR split g1 over activities D, E, F joined by g2
        let doc = br#"{
            "id": "fig3b", "entry": "g1", "exit": "g2",
            "nodes": [
                {"id": "g1", "kind": "gateway", "gateway_kind": "xor", "gateway_role": "split"},
                {"id": "D", "kind": "activity", "label": "d"},
                {"id": "E", "kind": "activity", "label": "e"},
                {"id": "F", "kind": "activity", "label": "f"},
                {"id": "g2", "kind": "gateway", "gateway_kind": "xor", "gateway_role": "join"}
            ],
            "edges": [["g1","D"],["g1","E"],["g1","F"],["D","g2"],["E","g2"],["F","g2"]]
        }"#;
        let g = parse_graph(doc).unwrap();
        assert_eq!(g.nodes().len(), 5);
        assert_eq!(g.edges().len(), 6);
    }

    #[test]
    fn serialize_parse_round_trip_is_bit_exact() {
        let doc = br#"{
            "id": "g1", "entry": "A", "exit": "B",
            "nodes": [
                {"id": "A", "kind": "activity", "label": "first"},
                {"id": "B", "kind": "activity", "label": "second"}
            ],
            "edges": [["A", "B"]]
        }"#;
        let g = parse_graph(doc).unwrap();
        let bytes = serialize_graph(&g);
        let g2 = parse_graph(&bytes).unwrap();
        assert_eq!(bytes, serialize_graph(&g2));
    }

    #[test]
    fn tree_round_trip_and_default_unroll() {
        let doc = br#"{
            "id": "t1",
            "root": {"type": "loop", "body": {"type": "act", "label": "work", "node_id": "a"}}
        }"#;
        let (id, tree) = parse_tree(doc).unwrap();
        assert_eq!(id, "t1");
        match &tree {
            BlockTree::Loop { max_unroll, .. } => assert_eq!(*max_unroll, 2),
            other => panic!("expected loop, got {other:?}"),
        }
        let bytes = serialize_tree(&id, &tree);
        let (id2, tree2) = parse_tree(&bytes).unwrap();
        assert_eq!(id2, "t1");
        assert_eq!(tree, tree2);
    }
}

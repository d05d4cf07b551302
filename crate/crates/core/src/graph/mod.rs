// SPDX-License-Identifier: MIT OR Apache-2.0

//! Directed-graph domain model for synthetic diagrams.
//!
//! A [`DiagramGraph`] holds nodes in canonical order (sorted by identifier,
//! stable for repeated identifiers) and edges that refer to nodes by their
//! slot in that order. Slots rather than identifiers are needed because
//! node-count diagrams repeat the identifier `A`.

mod aspect;
mod label;
mod sample;

pub use aspect::{Aspect, AspectLabel, Category, BOTTOM_TEXT};
pub use label::{derive_label, reachable};
pub use sample::{make_bottom_variant, sample_graph, sample_graph_with, SampleOptions, DEFAULT_ATTEMPT_BUDGET};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of the node every aspect is asked about.
pub const TARGET_ID: char = 'A';
/// Identifier of the second endpoint for edge aspects.
pub const PARTNER_ID: char = 'B';
/// Number of nodes in every generated diagram.
pub const NODES_PER_DIAGRAM: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Yellow,
    Blue,
    Brown,
    Orange,
    Pink,
    Purple,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Green,
        Color::Yellow,
        Color::Blue,
        Color::Brown,
        Color::Orange,
        Color::Pink,
        Color::Purple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Blue => "blue",
            Color::Brown => "brown",
            Color::Orange => "orange",
            Color::Pink => "pink",
            Color::Purple => "purple",
        }
    }

    /// CSS named-color value.
    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [0xFF, 0x00, 0x00],
            Color::Green => [0x00, 0x80, 0x00],
            Color::Yellow => [0xFF, 0xFF, 0x00],
            Color::Blue => [0x00, 0x00, 0xFF],
            Color::Brown => [0xA5, 0x2A, 0x2A],
            Color::Orange => [0xFF, 0xA5, 0x00],
            Color::Pink => [0xFF, 0xC0, 0xCB],
            Color::Purple => [0x80, 0x00, 0x80],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// True for fills on which black identifier glyphs stay legible.
    pub fn is_light(self) -> bool {
        matches!(self, Color::Yellow | Color::Orange | Color::Pink)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Pentagon,
    Hexagon,
    Septagon,
}

impl Shape {
    pub const ALL: [Shape; 5] = [
        Shape::Circle,
        Shape::Square,
        Shape::Pentagon,
        Shape::Hexagon,
        Shape::Septagon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Square => "square",
            Shape::Pentagon => "pentagon",
            Shape::Hexagon => "hexagon",
            Shape::Septagon => "septagon",
        }
    }

    /// Polygon side count; `None` for circles.
    pub fn sides(self) -> Option<usize> {
        match self {
            Shape::Circle => None,
            Shape::Square => Some(4),
            Shape::Pentagon => Some(5),
            Shape::Hexagon => Some(6),
            Shape::Septagon => Some(7),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeStyle {
    Solid,
    Dashed,
}

impl EdgeStyle {
    pub const ALL: [EdgeStyle; 2] = [EdgeStyle::Solid, EdgeStyle::Dashed];

    pub fn name(self) -> &'static str {
        match self {
            EdgeStyle::Solid => "solid",
            EdgeStyle::Dashed => "dashed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub id: char,
    pub color: Color,
    pub shape: Shape,
}

/// Directed edge between two node slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub color: Color,
    pub style: EdgeStyle,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiagramGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl DiagramGraph {
    /// Builds a graph, validating structure and putting it in canonical order.
    ///
    /// Edge endpoints index into `nodes` as given; they are remapped when the
    /// nodes are sorted.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        for node in &nodes {
            if !node.id.is_ascii_uppercase() {
                return Err(Error::InvalidGraph(format!(
                    "identifier {:?} is not a single uppercase letter",
                    node.id
                )));
            }
        }
        let n = nodes.len();
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {}->{} references a missing node",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::InvalidGraph(format!("self-loop on slot {}", e.src)));
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| nodes[i].id);
        let mut remap = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let nodes: Vec<Node> = order.iter().map(|&i| nodes[i]).collect();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| Edge {
                src: remap[e.src],
                dst: remap[e.dst],
                ..e
            })
            .collect();
        edges.sort_by_key(|e| (e.src, e.dst));
        if edges.windows(2).any(|w| (w[0].src, w[0].dst) == (w[1].src, w[1].dst)) {
            return Err(Error::InvalidGraph("duplicate edge for an ordered pair".into()));
        }
        Ok(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Slot of the first node carrying `id`.
    pub fn slot_of(&self, id: char) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn count_id(&self, id: char) -> usize {
        self.nodes.iter().filter(|n| n.id == id).count()
    }

    /// Edge `src -> dst` between two slots, if present.
    pub fn edge(&self, src: usize, dst: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.src == src && e.dst == dst)
    }

    pub fn in_degree(&self, slot: usize) -> usize {
        self.edges.iter().filter(|e| e.dst == slot).count()
    }

    pub fn out_degree(&self, slot: usize) -> usize {
        self.edges.iter().filter(|e| e.src == slot).count()
    }

    /// True when the graph has the standard diagram size and identifiers are
    /// unique, or it is a node-count graph in which only `A` repeats.
    pub fn is_standard(&self) -> bool {
        if self.nodes.len() != NODES_PER_DIAGRAM {
            return false;
        }
        let mut ids: Vec<char> = self
            .nodes
            .iter()
            .map(|n| n.id)
            .filter(|&c| c != TARGET_ID)
            .collect();
        let before = ids.len();
        ids.dedup();
        ids.len() == before
    }

    /// Canonical JSON encoding: nodes sorted by identifier, edges by
    /// `(src, dst)`, fixed key order.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string(&GraphDoc::from(self)).expect("graph serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        let nodes = doc
            .nodes
            .into_iter()
            .map(|n| {
                let mut chars = n.id.chars();
                match (chars.next(), chars.next()) {
                    (Some(id), None) => Ok(Node {
                        id,
                        color: n.color,
                        shape: n.shape,
                    }),
                    _ => Err(Error::InvalidGraph(format!("bad identifier {:?}", n.id))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, doc.edges)
    }
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    color: Color,
    shape: Shape,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<Edge>,
}

impl From<&DiagramGraph> for GraphDoc {
    fn from(g: &DiagramGraph) -> Self {
        Self {
            nodes: g
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.to_string(),
                    color: n.color,
                    shape: n.shape,
                })
                .collect(),
            edges: g.edges.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: char) -> Node {
        Node {
            id,
            color: Color::Red,
            shape: Shape::Circle,
        }
    }

    fn edge(src: usize, dst: usize) -> Edge {
        Edge {
            src,
            dst,
            color: Color::Blue,
            style: EdgeStyle::Solid,
        }
    }

    #[test]
    fn canonical_order_remaps_edges() {
        let g = DiagramGraph::new(vec![node('C'), node('A'), node('B')], vec![edge(0, 1), edge(2, 0)])
            .unwrap();
        let ids: Vec<char> = g.nodes().iter().map(|n| n.id).collect();
        assert_eq!(ids, vec!['A', 'B', 'C']);
        // C->A becomes 2->0, B->C becomes 1->2
        assert_eq!(
            g.edges().iter().map(|e| (e.src, e.dst)).collect::<Vec<_>>(),
            vec![(1, 2), (2, 0)]
        );
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(DiagramGraph::new(vec![node('A')], vec![edge(0, 0)]).is_err());
        assert!(DiagramGraph::new(vec![node('A'), node('B')], vec![edge(0, 1), edge(0, 1)]).is_err());
        assert!(DiagramGraph::new(vec![node('a')], vec![]).is_err());
        assert!(DiagramGraph::new(vec![node('A')], vec![edge(0, 3)]).is_err());
    }

    #[test]
    fn json_is_canonical() {
        let g = DiagramGraph::new(vec![node('B'), node('A')], vec![edge(1, 0)]).unwrap();
        let text = g.to_json();
        assert_eq!(
            text,
            "{\"nodes\":[{\"id\":\"A\",\"color\":\"red\",\"shape\":\"circle\"},\
             {\"id\":\"B\",\"color\":\"red\",\"shape\":\"circle\"}],\
             \"edges\":[{\"src\":0,\"dst\":1,\"color\":\"blue\",\"style\":\"solid\"}]}\n"
        );
        assert_eq!(DiagramGraph::from_json(&text).unwrap(), g);
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Display text of the target-absent class.
pub const BOTTOM_TEXT: &str = "N/A";

/// Grouping of aspects by how much of the diagram they depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    /// Localized around node A.
    Single,
    /// Depends on nodes A and B and the edge between them.
    Multiple,
    /// Depends on the whole diagram.
    Global,
}

/// One of the eleven visual properties a diagram question can ask about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    NodeColor,
    NodeShape,
    InDegree,
    OutDegree,
    EdgeColor,
    EdgeStyle,
    EdgeExistence,
    EdgeDirection,
    MultiHopPath,
    NodeCount,
    EdgeCount,
}

const COLORS: &[&str] = &["red", "green", "yellow", "blue", "brown", "orange", "pink", "purple"];
const SHAPES: &[&str] = &["circle", "square", "pentagon", "hexagon", "septagon"];
const DEGREES: &[&str] = &["0", "1", "2", "3", "4"];
const COUNTS: &[&str] = &["1", "2", "3", "4", "5"];
const EXISTENCE: &[&str] = &["exist", "not exist"];

impl Aspect {
    pub const ALL: [Aspect; 11] = [
        Aspect::NodeColor,
        Aspect::NodeShape,
        Aspect::InDegree,
        Aspect::OutDegree,
        Aspect::EdgeColor,
        Aspect::EdgeStyle,
        Aspect::EdgeExistence,
        Aspect::EdgeDirection,
        Aspect::MultiHopPath,
        Aspect::NodeCount,
        Aspect::EdgeCount,
    ];

    pub fn category(self) -> Category {
        use Aspect::*;
        match self {
            NodeColor | NodeShape | InDegree | OutDegree => Category::Single,
            EdgeColor | EdgeStyle | EdgeExistence | EdgeDirection | MultiHopPath => Category::Multiple,
            NodeCount | EdgeCount => Category::Global,
        }
    }

    /// Ordered label set.
    pub fn labels(self) -> &'static [&'static str] {
        use Aspect::*;
        match self {
            NodeColor | EdgeColor => COLORS,
            NodeShape => SHAPES,
            InDegree | OutDegree => DEGREES,
            EdgeStyle => &["solid", "dashed"],
            EdgeExistence | MultiHopPath => EXISTENCE,
            EdgeDirection => &["forward", "backward"],
            NodeCount | EdgeCount => COUNTS,
        }
    }

    pub fn num_labels(self) -> usize {
        self.labels().len()
    }

    /// Class count including the target-absent class.
    pub fn num_classes(self) -> usize {
        self.num_labels() + 1
    }

    pub fn label_index(self, text: &str) -> Option<usize> {
        self.labels().iter().position(|&l| l == text)
    }

    /// Parses label text; [`BOTTOM_TEXT`] maps to the target-absent class.
    pub fn parse_label(self, text: &str) -> Result<AspectLabel> {
        if text == BOTTOM_TEXT {
            return Ok(AspectLabel::Bottom);
        }
        self.label_index(text)
            .map(|i| AspectLabel::Class(i as u8))
            .ok_or_else(|| Error::UnknownLabel {
                aspect: self.name().into(),
                label: text.into(),
            })
    }

    /// Machine name, used in paths and configs.
    pub fn name(self) -> &'static str {
        use Aspect::*;
        match self {
            NodeColor => "node_color",
            NodeShape => "node_shape",
            InDegree => "in_degree",
            OutDegree => "out_degree",
            EdgeColor => "edge_color",
            EdgeStyle => "edge_style",
            EdgeExistence => "edge_existence",
            EdgeDirection => "edge_direction",
            MultiHopPath => "multi_hop_path",
            NodeCount => "node_count",
            EdgeCount => "edge_count",
        }
    }

    pub fn title(self) -> &'static str {
        use Aspect::*;
        match self {
            NodeColor => "Node Color",
            NodeShape => "Node Shape",
            InDegree => "In-degree",
            OutDegree => "Out-degree",
            EdgeColor => "Edge Color",
            EdgeStyle => "Edge Style",
            EdgeExistence => "Edge Existence",
            EdgeDirection => "Edge Direction",
            MultiHopPath => "Multi-hop Path",
            NodeCount => "Node Count",
            EdgeCount => "Edge Count",
        }
    }

    /// Position in the canonical aspect order.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aspect {
    type Err = Error;

    /// Accepts `node_color`, `node-color` or `NodeColor`.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Aspect::ALL
            .into_iter()
            .find(|a| a.name().replace('_', "") == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown aspect {s:?}")))
    }
}

/// Gold label of a sample: an index into the aspect's label set, or the
/// target-absent class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AspectLabel {
    Class(u8),
    Bottom,
}

impl AspectLabel {
    pub fn text(self, aspect: Aspect) -> &'static str {
        match self {
            AspectLabel::Class(i) => aspect.labels()[i as usize],
            AspectLabel::Bottom => BOTTOM_TEXT,
        }
    }

    /// Index in the probe class order: labels first, target-absent last.
    pub fn class_index(self, aspect: Aspect) -> usize {
        match self {
            AspectLabel::Class(i) => i as usize,
            AspectLabel::Bottom => aspect.num_labels(),
        }
    }

    pub fn from_class_index(aspect: Aspect, index: usize) -> Self {
        if index >= aspect.num_labels() {
            AspectLabel::Bottom
        } else {
            AspectLabel::Class(index as u8)
        }
    }

    pub fn is_bottom(self) -> bool {
        self == AspectLabel::Bottom
    }
}

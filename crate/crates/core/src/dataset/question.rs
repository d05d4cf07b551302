// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::graph::Aspect;

/// Question text for an aspect, without answer choices.
pub fn question_template(aspect: Aspect) -> &'static str {
    use Aspect::*;
    match aspect {
        NodeColor => "What color is node A?",
        NodeShape => "What shape is node A?",
        InDegree => "What is the in-degree of node A?",
        OutDegree => "What is the out-degree of node A?",
        EdgeColor => "What color is the edge between node A and node B?",
        EdgeStyle => "What style is the edge between node A and node B?",
        EdgeExistence => "Does an edge exist between node A and node B?",
        EdgeDirection => "What is the direction of the edge between node A and node B?",
        MultiHopPath => "Is there a path from node A to node B?",
        NodeCount => "How many nodes labeled A are in the graph?",
        EdgeCount => "How many edges are in the graph?",
    }
}

/// Question with the label set appended as answer choices.
pub fn question_for(aspect: Aspect) -> String {
    format!("{} Answer with one of: {}", question_template(aspect), aspect.labels().join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates() {
        assert_eq!(
            question_for(Aspect::NodeColor),
            "What color is node A? Answer with one of: red, green, yellow, blue, brown, orange, pink, purple"
        );
        assert_eq!(
            question_for(Aspect::NodeCount),
            "How many nodes labeled A are in the graph? Answer with one of: 1, 2, 3, 4, 5"
        );
        assert_eq!(
            question_for(Aspect::EdgeDirection),
            "What is the direction of the edge between node A and node B? Answer with one of: forward, backward"
        );
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gold-label derivation.
//!
//! Targets are the first node with identifier `A` and, for edge aspects, the
//! edge between `A` and `B` in either direction. When the target is absent the
//! label is [`AspectLabel::Bottom`]. For existence-style aspects, whose label
//! set already covers "no edge" / "no path", the target is the node pair and
//! the label is bottom only when `A` or `B` is missing.

use std::collections::VecDeque;

use super::{Aspect, AspectLabel, DiagramGraph, Edge, PARTNER_ID, TARGET_ID};
use crate::error::{Error, Result};

fn class(i: usize, aspect: Aspect) -> AspectLabel {
    if i < aspect.num_labels() {
        AspectLabel::Class(i as u8)
    } else {
        AspectLabel::Bottom
    }
}

/// Edge between slots `a` and `b`, preferring `a -> b`.
fn pair_edge(g: &DiagramGraph, a: usize, b: usize) -> Option<&Edge> {
    g.edge(a, b).or_else(|| g.edge(b, a))
}

pub fn derive_label(graph: &DiagramGraph, aspect: Aspect) -> AspectLabel {
    use Aspect::*;
    let a = graph.slot_of(TARGET_ID);
    let b = graph.slot_of(PARTNER_ID);
    match aspect {
        NodeColor | NodeShape | InDegree | OutDegree => {
            let Some(a) = a else {
                return AspectLabel::Bottom;
            };
            let node = &graph.nodes()[a];
            match aspect {
                NodeColor => class(node.color.index(), aspect),
                NodeShape => class(node.shape.index(), aspect),
                InDegree => class(graph.in_degree(a), aspect),
                _ => class(graph.out_degree(a), aspect),
            }
        }
        EdgeColor | EdgeStyle => {
            let (Some(a), Some(b)) = (a, b) else {
                return AspectLabel::Bottom;
            };
            match pair_edge(graph, a, b) {
                None => AspectLabel::Bottom,
                Some(e) if aspect == EdgeColor => class(e.color.index(), aspect),
                Some(e) => class(e.style as usize, aspect),
            }
        }
        EdgeExistence => match (a, b) {
            (Some(a), Some(b)) => class(usize::from(pair_edge(graph, a, b).is_none()), aspect),
            _ => AspectLabel::Bottom,
        },
        EdgeDirection => {
            let (Some(a), Some(b)) = (a, b) else {
                return AspectLabel::Bottom;
            };
            if graph.edge(a, b).is_some() {
                AspectLabel::Class(0)
            } else if graph.edge(b, a).is_some() {
                AspectLabel::Class(1)
            } else {
                AspectLabel::Bottom
            }
        }
        MultiHopPath => match (a, b) {
            (Some(a), Some(b)) => class(usize::from(!reachable_slots(graph, a, b)), aspect),
            _ => AspectLabel::Bottom,
        },
        NodeCount => match graph.count_id(TARGET_ID) {
            0 => AspectLabel::Bottom,
            k => class(k - 1, aspect),
        },
        EdgeCount => match graph.edges().len() {
            0 => AspectLabel::Bottom,
            k => class(k - 1, aspect),
        },
    }
}

pub(crate) fn reachable_slots(graph: &DiagramGraph, src: usize, dst: usize) -> bool {
    let n = graph.nodes().len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for e in graph.edges().iter().filter(|e| e.src == u) {
            if e.dst == dst {
                return true;
            }
            if !seen[e.dst] {
                seen[e.dst] = true;
                queue.push_back(e.dst);
            }
        }
    }
    false
}

/// True iff a directed path of length at least one leads from `src` to `dst`.
pub fn reachable(graph: &DiagramGraph, src: char, dst: char) -> Result<bool> {
    let s = graph.slot_of(src).ok_or(Error::UnknownIdentifier(src))?;
    let d = graph.slot_of(dst).ok_or(Error::UnknownIdentifier(dst))?;
    Ok(reachable_slots(graph, s, d))
}

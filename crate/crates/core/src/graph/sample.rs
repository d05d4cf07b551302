// SPDX-License-Identifier: MIT OR Apache-2.0

//! Class-conditional graph sampling.
//!
//! Every generator proposes a random graph, derives its label and keeps it
//! only if the label matches the requested target. Attribute aspects override
//! the target attribute after proposing; degree aspects propose with the
//! target's incident edges already placed so the budget is not wasted on
//! rare degrees.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{derive_label, Aspect, AspectLabel, Color, DiagramGraph, Edge, EdgeStyle, Node, Shape};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng, tag};

pub const DEFAULT_ATTEMPT_BUDGET: u32 = 10_000;

const STANDARD_IDS: [char; 5] = ['A', 'B', 'C', 'D', 'E'];
const NO_TARGET_IDS: [char; 5] = ['B', 'C', 'D', 'E', 'F'];
const NO_PARTNER_IDS: [char; 5] = ['A', 'C', 'D', 'E', 'F'];
const MAX_EDGES: usize = 5;

#[derive(Clone, Debug)]
pub struct SampleOptions {
    pub attempt_budget: u32,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            attempt_budget: DEFAULT_ATTEMPT_BUDGET,
        }
    }
}

fn random_nodes(rng: &mut ChaCha8Rng, ids: &[char]) -> Vec<Node> {
    ids.iter()
        .map(|&id| Node {
            id,
            color: Color::ALL[rng.random_range(0..Color::ALL.len())],
            shape: Shape::ALL[rng.random_range(0..Shape::ALL.len())],
        })
        .collect()
}

fn random_edge(rng: &mut ChaCha8Rng, src: usize, dst: usize) -> Edge {
    Edge {
        src,
        dst,
        color: Color::ALL[rng.random_range(0..Color::ALL.len())],
        style: EdgeStyle::ALL[rng.random_range(0..2)],
    }
}

/// Draws `count` edges over distinct unordered pairs, so anti-parallel pairs
/// never occur. `fixed` edges are placed first; `pair_ok` filters the
/// remaining unordered pairs and `orient` picks each one's direction.
fn random_edges(
    rng: &mut ChaCha8Rng,
    n_nodes: usize,
    count: usize,
    fixed: &[(usize, usize)],
    pair_ok: impl Fn(usize, usize) -> bool,
    orient: impl Fn(&mut ChaCha8Rng, usize, usize) -> (usize, usize),
) -> Option<Vec<Edge>> {
    let used = |i: usize, j: usize| fixed.iter().any(|&(s, d)| (s, d) == (i, j) || (d, s) == (i, j));
    let pool: Vec<(usize, usize)> = (0..n_nodes)
        .flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)))
        .filter(|&(i, j)| !used(i, j) && pair_ok(i, j))
        .collect();
    let extra = count.checked_sub(fixed.len())?;
    if extra > pool.len() {
        return None;
    }
    let mut edges: Vec<Edge> = fixed.iter().map(|&(s, d)| random_edge(rng, s, d)).collect();
    for k in index::sample(rng, pool.len(), extra) {
        let (i, j) = pool[k];
        let (s, d) = orient(rng, i, j);
        edges.push(random_edge(rng, s, d));
    }
    Some(edges)
}

fn any_direction(rng: &mut ChaCha8Rng, i: usize, j: usize) -> (usize, usize) {
    if rng.random_bool(0.5) {
        (i, j)
    } else {
        (j, i)
    }
}

fn unconstrained(rng: &mut ChaCha8Rng, ids: &[char], count: usize) -> Option<(Vec<Node>, Vec<Edge>)> {
    let nodes = random_nodes(rng, ids);
    let edges = random_edges(rng, ids.len(), count, &[], |_, _| true, any_direction)?;
    Some((nodes, edges))
}

/// Proposes the target node (slot 0) with exactly `degree` incoming
/// (`incoming = true`) or outgoing edges among `count` total.
fn with_degree(
    rng: &mut ChaCha8Rng,
    count: usize,
    degree: usize,
    incoming: bool,
) -> Option<(Vec<Node>, Vec<Edge>)> {
    let nodes = random_nodes(rng, &STANDARD_IDS);
    let partners: Vec<usize> = index::sample(rng, 4, degree).into_iter().map(|k| k + 1).collect();
    let fixed: Vec<(usize, usize)> = partners
        .iter()
        .map(|&p| if incoming { (p, 0) } else { (0, p) })
        .collect();
    let edges = random_edges(
        rng,
        5,
        count,
        &fixed,
        |_, _| true,
        |rng, i, j| match (i, incoming) {
            // pairs touching the target point away from the counted direction
            (0, true) => (0, j),
            (0, false) => (j, 0),
            _ => any_direction(rng, i, j),
        },
    )?;
    Some((nodes, edges))
}

fn propose(rng: &mut ChaCha8Rng, aspect: Aspect, target: usize) -> Option<DiagramGraph> {
    use Aspect::*;
    let count = if aspect == EdgeCount {
        target + 1
    } else {
        rng.random_range(1..=MAX_EDGES)
    };
    let (mut nodes, mut edges) = match aspect {
        InDegree | OutDegree => {
            if count < target {
                return None;
            }
            with_degree(rng, count, target, aspect == InDegree)?
        }
        NodeCount => {
            let k = target + 1;
            let ids: Vec<char> = std::iter::repeat_n('A', k).chain(STANDARD_IDS[1..=5 - k].iter().copied()).collect();
            unconstrained(rng, &ids, count)?
        }
        _ => unconstrained(rng, &STANDARD_IDS, count)?,
    };
    match aspect {
        NodeColor => nodes[0].color = Color::ALL[target],
        NodeShape => nodes[0].shape = Shape::ALL[target],
        EdgeColor | EdgeStyle => {
            let e = edges.iter_mut().find(|e| (e.src, e.dst) == (0, 1) || (e.src, e.dst) == (1, 0))?;
            if aspect == EdgeColor {
                e.color = Color::ALL[target];
            } else {
                e.style = super::EdgeStyle::ALL[target];
            }
        }
        // a positive multi-hop path must not be a direct edge
        MultiHopPath if target == 0 && edges.iter().any(|e| (e.src, e.dst) == (0, 1)) => return None,
        _ => {}
    }
    DiagramGraph::new(nodes, edges).ok()
}

/// Samples a graph whose gold label for `aspect` is `target`.
///
/// Deterministic in `(aspect, target, seed)`.
pub fn sample_graph(aspect: Aspect, target: AspectLabel, seed: u64) -> Result<DiagramGraph> {
    sample_graph_with(aspect, target, seed, &SampleOptions::default())
}

pub fn sample_graph_with(
    aspect: Aspect,
    target: AspectLabel,
    seed: u64,
    options: &SampleOptions,
) -> Result<DiagramGraph> {
    let t = match target {
        AspectLabel::Class(t) if (t as usize) < aspect.num_labels() => t as usize,
        AspectLabel::Class(t) => {
            return Err(Error::UnknownLabel {
                aspect: aspect.name().into(),
                label: t.to_string(),
            })
        }
        AspectLabel::Bottom => {
            return Err(Error::InvalidArgument(
                "target-absent graphs come from make_bottom_variant".into(),
            ))
        }
    };
    let mut rng = rng(derive_seed(&[tag("sample_graph"), aspect.index() as u64, t as u64, seed]));
    for _ in 0..options.attempt_budget {
        if let Some(g) = propose(&mut rng, aspect, t) {
            if derive_label(&g, aspect) == target {
                return Ok(g);
            }
        }
    }
    Err(Error::SamplingExhausted {
        aspect: aspect.name().into(),
        target: target.text(aspect).into(),
        attempts: options.attempt_budget,
    })
}

/// Samples a graph in which the aspect's target does not exist.
///
/// Node aspects and node count drop identifier `A`; edge attribute and
/// direction aspects keep `A` and `B` unconnected; existence-style aspects
/// drop `B`; edge count has no edges.
pub fn make_bottom_variant(aspect: Aspect, seed: u64) -> DiagramGraph {
    use Aspect::*;
    let mut rng = rng(derive_seed(&[tag("bottom_variant"), aspect.index() as u64, seed]));
    let count = rng.random_range(1..=MAX_EDGES);
    let (ids, count, pair_ok): (&[char], usize, fn(usize, usize) -> bool) = match aspect {
        NodeColor | NodeShape | InDegree | OutDegree | NodeCount => (&NO_TARGET_IDS, count, |_, _| true),
        EdgeColor | EdgeStyle | EdgeDirection => (&STANDARD_IDS, count, |i, j| (i, j) != (0, 1)),
        EdgeExistence | MultiHopPath => (&NO_PARTNER_IDS, count, |_, _| true),
        EdgeCount => (&STANDARD_IDS, 0, |_, _| true),
    };
    let nodes = random_nodes(&mut rng, ids);
    let edges = random_edges(&mut rng, ids.len(), count, &[], pair_ok, any_direction)
        .expect("at most 5 edges always fit on 5 nodes");
    DiagramGraph::new(nodes, edges).expect("generated graph is valid")
}

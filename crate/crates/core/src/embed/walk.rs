use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::StaticGraph;
use crate::seed;

/// Second-order random walk parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Return parameter: weight `1/p` for stepping back to the previous node.
    pub p: f64,
    /// In-out parameter: weight `1/q` for moving two hops away.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) || !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::invalid(format!(
                "walk p and q must be positive, got p={} q={}",
                self.p, self.q
            )));
        }
        if self.walks_per_node == 0 {
            return Err(Error::invalid("walks per node must be at least 1"));
        }
        if self.walk_length < 2 {
            return Err(Error::invalid("walk length must be at least 2"));
        }
        Ok(())
    }
}

/// Unnormalized probability of moving to `x` given that the walk came from
/// `u`, where `distance` is the hop distance between `u` and `x`.
pub fn transition_weight(distance: u8, p: f64, q: f64, edge_weight: f64) -> Result<f64> {
    let bias = match distance {
        0 => 1.0 / p,
        1 => 1.0,
        2 => 1.0 / q,
        d => {
            return Err(Error::invalid(format!(
                "hop distance {d} between consecutive walk states is impossible"
            )))
        }
    };
    Ok(edge_weight * bias)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// Precomputed alias tables for first steps and for every `(prev -> cur)`
/// edge state.
pub struct WalkSampler<'g> {
    graph: &'g StaticGraph,
    first: Vec<Option<AliasTable>>,
    /// Indexed by the adjacency slot of `prev -> cur`; `None` when the
    /// walk is first order (`p = q = 1`) or `cur` is a sink.
    second: Vec<Option<AliasTable>>,
    slot_offsets: Vec<usize>,
}

impl<'g> WalkSampler<'g> {
    pub fn new(graph: &'g StaticGraph, p: f64, q: f64) -> Self {
        let n = graph.node_capacity();
        let first: Vec<Option<AliasTable>> = (0..n as u32)
            .map(|v| AliasTable::new(graph.neighbor_weights(v)))
            .collect();
        let mut slot_offsets = Vec::with_capacity(n + 1);
        slot_offsets.push(0);
        for v in 0..n as u32 {
            slot_offsets.push(slot_offsets[v as usize] + graph.neighbors(v).len());
        }
        let second = if p == 1.0 && q == 1.0 {
            Vec::new()
        } else {
            (0..n as u32)
                .into_par_iter()
                .flat_map_iter(|prev| {
                    graph
                        .neighbors(prev)
                        .iter()
                        .map(move |&cur| edge_table(graph, prev, cur, p, q))
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        Self {
            graph,
            first,
            second,
            slot_offsets,
        }
    }

    /// Distribution over the successors of `cur` having arrived from `prev`.
    pub fn step_table(&self, prev: u32, cur: u32) -> Option<&AliasTable> {
        if self.second.is_empty() {
            return self.first[cur as usize].as_ref();
        }
        let pos = self.graph.neighbors(prev).binary_search(&cur).ok()?;
        self.second[self.slot_offsets[prev as usize] + pos].as_ref()
    }

    pub fn walk<R: Rng>(&self, start: u32, length: usize, rng: &mut R) -> Vec<u32> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        let Some(table) = self.first[start as usize].as_ref() else {
            return walk;
        };
        let mut cur = self.graph.neighbors(start)[table.sample(rng)];
        walk.push(cur);
        let mut prev = start;
        while walk.len() < length {
            let Some(table) = self.step_table(prev, cur) else {
                break;
            };
            let next = self.graph.neighbors(cur)[table.sample(rng)];
            walk.push(next);
            prev = cur;
            cur = next;
        }
        walk
    }
}

fn edge_table(g: &StaticGraph, prev: u32, cur: u32, p: f64, q: f64) -> Option<AliasTable> {
    let weights: Vec<f64> = g
        .neighbors(cur)
        .iter()
        .zip(g.neighbor_weights(cur))
        .map(|(&x, &w)| {
            let distance = if x == prev {
                0
            } else if g.has_edge(prev, x) {
                1
            } else {
                2
            };
            transition_weight(distance, p, q, w).expect("distance is in range")
        })
        .collect();
    AliasTable::new(&weights)
}

/// `walks_per_node` rounds of walks from every node present in `graph`.
/// Each round visits the start nodes in a freshly shuffled order and every
/// walk draws from its own RNG stream, so the output is deterministic.
pub fn generate_walks(graph: &StaticGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    let nodes: Vec<u32> = graph.present_nodes().collect();
    if nodes.is_empty() {
        return Err(Error::invalid("cannot walk an empty snapshot"));
    }
    let sampler = WalkSampler::new(graph, cfg.p, cfg.q);
    let mut walks = Vec::with_capacity(nodes.len() * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let mut order = nodes.clone();
        order.shuffle(&mut seed::rng(cfg.seed, "walk.order", round as u64));
        let stream_base = (round * graph.node_capacity()) as u64;
        let batch: Vec<Vec<u32>> = order
            .par_iter()
            .map(|&start| {
                let mut rng = seed::rng(cfg.seed, "walk.path", stream_base + u64::from(start));
                sampler.walk(start, cfg.walk_length, &mut rng)
            })
            .collect();
        walks.extend(batch);
    }
    Ok(WalkCorpus { walks })
}

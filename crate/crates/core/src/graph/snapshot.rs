use std::collections::HashMap;
use std::sync::Arc;

use super::{canonical, NodeIndex, Pair, TemporalEdge, TemporalGraph};
use crate::error::{Error, Result};

/// A static weighted graph over the full node index, stored as sorted
/// out-adjacency lists. Undirected edges appear in both lists.
#[derive(Debug, Clone)]
pub struct StaticGraph {
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    present: Vec<bool>,
    pair_count: usize,
}

impl StaticGraph {
    /// Collapses `edges` per node pair (weights summed) into a static graph
    /// over `node_count` nodes.
    pub fn from_edges<'a, I>(node_count: usize, directed: bool, edges: I) -> Self
    where
        I: IntoIterator<Item = &'a TemporalEdge>,
    {
        let mut pairs: HashMap<Pair, f64> = HashMap::new();
        let mut present = vec![false; node_count];
        for e in edges {
            *pairs
                .entry(canonical(e.src, e.dst, directed))
                .or_insert(0.0) += e.weight;
            present[e.src as usize] = true;
            present[e.dst as usize] = true;
        }
        let mut sorted: Vec<(Pair, f64)> = pairs.into_iter().collect();
        sorted.sort_unstable_by_key(|&(p, _)| p);
        Self::from_pairs(node_count, directed, &sorted, present)
    }

    /// Builds from distinct, weighted pairs (canonical for undirected).
    pub fn from_weighted_pairs(node_count: usize, directed: bool, pairs: &[(Pair, f64)]) -> Self {
        let mut present = vec![false; node_count];
        for &((a, b), _) in pairs {
            present[a as usize] = true;
            present[b as usize] = true;
        }
        Self::from_pairs(node_count, directed, pairs, present)
    }

    fn from_pairs(
        node_count: usize,
        directed: bool,
        pairs: &[(Pair, f64)],
        present: Vec<bool>,
    ) -> Self {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); node_count];
        for &((a, b), w) in pairs {
            adj[a as usize].push((b, w));
            if !directed && a != b {
                adj[b as usize].push((a, w));
            }
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable_by_key(|&(t, _)| t);
            for (t, w) in list {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        StaticGraph {
            directed,
            offsets,
            targets,
            weights,
            present,
            pair_count: pairs.len(),
        }
    }

    pub fn node_capacity(&self) -> usize {
        self.present.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Whether `v` is an endpoint of at least one edge.
    pub fn contains(&self, v: u32) -> bool {
        self.present.get(v as usize).copied().unwrap_or(false)
    }

    pub fn present_nodes(&self) -> impl Iterator<Item = u32> + '_ {
        self.present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| i as u32)
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// Number of distinct (collapsed) edges.
    pub fn edge_count(&self) -> usize {
        self.pair_count
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn neighbor_weights(&self, v: u32) -> &[f64] {
        let v = v as usize;
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, from: u32, to: u32) -> bool {
        self.neighbors(from).binary_search(&to).is_ok()
    }

    pub fn edge_weight(&self, from: u32, to: u32) -> Option<f64> {
        let i = self.neighbors(from).binary_search(&to).ok()?;
        Some(self.neighbor_weights(from)[i])
    }

    /// Distinct pairs with their weights, canonical for undirected graphs.
    pub fn pairs(&self) -> Vec<(Pair, f64)> {
        let mut out = Vec::with_capacity(self.pair_count);
        for u in 0..self.node_capacity() as u32 {
            for (&v, &w) in self.neighbors(u).iter().zip(self.neighbor_weights(u)) {
                if self.directed || u <= v {
                    out.push(((u, v), w));
                }
            }
        }
        out
    }
}

/// `T` cumulative snapshots sharing one node index.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    boundaries: Vec<i64>,
    snapshots: Vec<StaticGraph>,
    nodes: Arc<NodeIndex>,
}

impl SnapshotSeries {
    pub fn boundaries(&self) -> &[i64] {
        &self.boundaries
    }

    pub fn snapshots(&self) -> &[StaticGraph] {
        &self.snapshots
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &StaticGraph {
        self.snapshots.last().expect("series is never empty")
    }

    /// Keeps `ceil(fraction * T)` evenly spaced snapshots, always including
    /// the last one.
    pub fn subset(&self, fraction: f64) -> Result<SnapshotSeries> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "timestep fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let keep = subset_indices(self.len(), fraction);
        Ok(SnapshotSeries {
            boundaries: keep.iter().map(|&i| self.boundaries[i]).collect(),
            snapshots: keep.iter().map(|&i| self.snapshots[i].clone()).collect(),
            nodes: Arc::clone(&self.nodes),
        })
    }
}

/// Indices of the `ceil(fraction * total)` snapshots kept for a timestep
/// fraction, ascending and ending at `total - 1`.
pub fn subset_indices(total: usize, fraction: f64) -> Vec<usize> {
    // Tolerate fp noise such as 0.6 * 5 = 3.0000000000000004.
    let keep = (((fraction * total as f64) - 1e-9).ceil() as usize).clamp(1, total);
    if keep == 1 {
        return vec![total - 1];
    }
    let last = total - 1;
    (0..keep)
        .rev()
        .map(|j| last - (j * last + (keep - 1) / 2) / (keep - 1))
        .collect()
}

/// Partitions the observed time range into `steps` equal-width buckets and
/// returns the cumulative snapshot at each bucket's right boundary.
pub fn build_snapshots(g: &TemporalGraph, steps: usize) -> Result<SnapshotSeries> {
    if steps == 0 {
        return Err(Error::invalid("snapshot count must be at least 1"));
    }
    let (t0, t1) = g
        .time_range()
        .ok_or_else(|| Error::invalid("cannot snapshot a graph without edges"))?;
    let distinct = g.distinct_timestamps().len();
    if steps > distinct {
        return Err(Error::invalid(format!(
            "{steps} snapshots requested but the graph has only {distinct} distinct timestamps; use T <= {distinct}"
        )));
    }
    let span = i128::from(t1) - i128::from(t0);
    let boundaries: Vec<i64> = (1..=steps)
        .map(|k| (i128::from(t0) + span * k as i128 / steps as i128) as i64)
        .collect();

    let mut order: Vec<&TemporalEdge> = g.edges().iter().collect();
    order.sort_by_key(|e| e.timestamp);

    let n = g.node_count();
    let mut snapshots = Vec::with_capacity(steps);
    let mut weights: HashMap<Pair, f64> = HashMap::new();
    let mut cursor = 0;
    for &b in &boundaries {
        while cursor < order.len() && order[cursor].timestamp <= b {
            let e = order[cursor];
            *weights.entry(g.pair(e)).or_insert(0.0) += e.weight;
            cursor += 1;
        }
        let mut pairs: Vec<(Pair, f64)> = weights.iter().map(|(&p, &w)| (p, w)).collect();
        pairs.sort_unstable_by_key(|&(p, _)| p);
        snapshots.push(StaticGraph::from_weighted_pairs(n, g.is_directed(), &pairs));
    }
    Ok(SnapshotSeries {
        boundaries,
        snapshots,
        nodes: Arc::clone(g.nodes()),
    })
}

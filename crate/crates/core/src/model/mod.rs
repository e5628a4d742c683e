//! The temporal combiner and task heads, trained end to end.
//!
//! A node's aligned embedding history is reduced to one vector `h_T` by a
//! recurrent combiner (an LSTM by default). Node classification applies a
//! softmax layer to `h_T`; link prediction applies one to the
//! concatenation of both endpoints' vectors. Gradients are computed by
//! hand-written backpropagation through time and can flow into the
//! embedding table itself.

mod checkpoint;
mod combiner;
mod engine;
mod head;
mod history;
mod train;

pub use checkpoint::{loss_trace_csv, read_checkpoint, write_checkpoint, Checkpoint};
pub use combiner::{lstm_forward, Combiner, CombinerKind, LstmParams, RnnParams, Trace};
pub use engine::{batch_loss, loss_and_gradients, Example, Gradients};
pub use head::{loss_link_prediction, loss_node_classification, softmax, Dense, TaskHead};
pub use history::{build_histories, HistoryTable, NodeHistory};
pub use train::{train, Adam, TrainConfig, TrainOutcome};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{canonical, Pair};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalModel {
    pub combiner: Combiner,
    pub head: TaskHead,
}

impl TemporalModel {
    pub fn for_links(kind: CombinerKind, dim: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed, "model.init", 0);
        let combiner = Combiner::init(kind, dim, &mut rng);
        let head = TaskHead::link(dim, &mut rng);
        Self { combiner, head }
    }

    pub fn for_node_classes(
        kind: CombinerKind,
        dim: usize,
        classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = seed::rng(seed, "model.init", 0);
        let combiner = Combiner::init(kind, dim, &mut rng);
        let head = TaskHead::node_class(dim, classes, &mut rng)?;
        Ok(Self { combiner, head })
    }

    pub fn dim(&self) -> usize {
        self.combiner.dim()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            combiner: self.combiner.zeros_like(),
            head: self.head.zeros_like(),
        }
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut t = self.combiner.tensors();
        let head = self.head.dense();
        t.push(("head.w", &head.w[..]));
        t.push(("head.b", &head.b[..]));
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.combiner.tensors_mut();
        let head = self.head.dense_mut();
        t.push(&mut head.w[..]);
        t.push(&mut head.b[..]);
        t
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Temporal embedding `h_T` of a node from the table.
    pub fn embed(&self, table: &HistoryTable, node: u32) -> Result<Vec<f64>> {
        check_node(table, node)?;
        self.combiner
            .forward(table.rows_of(node), table.mask_of(node), None)
    }

    /// Link probability for `pair`; undirected pairs are put in canonical
    /// order first so both orientations score the same.
    pub fn predict_pair(&self, table: &HistoryTable, pair: Pair, directed: bool) -> Result<f64> {
        let (a, b) = canonical(pair.0, pair.1, directed);
        link_probability(&self.head, &self.embed(table, a)?, &self.embed(table, b)?)
    }

    /// Link probabilities for many pairs, embedding each node once.
    pub fn score_pairs(
        &self,
        table: &HistoryTable,
        pairs: &[Pair],
        directed: bool,
    ) -> Result<Vec<f64>> {
        let pairs: Vec<Pair> = pairs
            .iter()
            .map(|&(a, b)| canonical(a, b, directed))
            .collect();
        let vectors = self.embed_many(table, pairs.iter().flat_map(|&(a, b)| [a, b]))?;
        pairs
            .iter()
            .map(|(a, b)| link_probability(&self.head, &vectors[a], &vectors[b]))
            .collect()
    }

    /// Class probabilities for each node.
    pub fn class_probabilities(
        &self,
        table: &HistoryTable,
        nodes: &[u32],
    ) -> Result<Vec<Vec<f64>>> {
        let vectors = self.embed_many(table, nodes.iter().copied())?;
        nodes
            .iter()
            .map(|v| class_probabilities(&self.head, &vectors[v]))
            .collect()
    }

    fn embed_many(
        &self,
        table: &HistoryTable,
        nodes: impl Iterator<Item = u32>,
    ) -> Result<std::collections::HashMap<u32, Vec<f64>>> {
        let mut uniq: Vec<u32> = nodes.collect();
        uniq.sort_unstable();
        uniq.dedup();
        uniq.par_iter()
            .map(|&v| Ok((v, self.embed(table, v)?)))
            .collect()
    }
}

pub(crate) fn check_node(table: &HistoryTable, node: u32) -> Result<()> {
    if (node as usize) < table.node_count() && table.has(node) {
        return Ok(());
    }
    let name = table
        .nodes()
        .names()
        .get(node as usize)
        .map_or_else(|| format!("#{node}"), Clone::clone);
    Err(Error::invalid(format!(
        "node {name:?} is absent from every snapshot and cannot be embedded"
    )))
}

fn class_probabilities(head: &TaskHead, h: &[f64]) -> Result<Vec<f64>> {
    match head {
        TaskHead::NodeClass(l) => Ok(softmax(&l.forward(h))),
        TaskHead::Link(_) => Err(Error::invalid(
            "model has a link head, not a node-class head",
        )),
    }
}

fn link_probability(head: &TaskHead, h1: &[f64], h2: &[f64]) -> Result<f64> {
    match head {
        TaskHead::Link(l) => {
            let x: Vec<f64> = h1.iter().chain(h2).copied().collect();
            Ok(softmax(&l.forward(&x))[1])
        }
        TaskHead::NodeClass(_) => Err(Error::invalid(
            "model has a node-class head, not a link head",
        )),
    }
}

/// `softmax(W h_T + b)` for one history.
pub fn predict_node_class(
    history: &NodeHistory,
    combiner: &Combiner,
    head: &TaskHead,
) -> Result<Vec<f64>> {
    let h = combiner.forward(&history.rows, &history.mask, None)?;
    class_probabilities(head, &h)
}

/// Positive-class probability of the link head on `[h_T(v1); h_T(v2)]`.
pub fn predict_link(
    h1: &NodeHistory,
    h2: &NodeHistory,
    combiner: &Combiner,
    head: &TaskHead,
) -> Result<f64> {
    let a = combiner.forward(&h1.rows, &h1.mask, None)?;
    let b = combiner.forward(&h2.rows, &h2.mask, None)?;
    link_probability(head, &a, &b)
}

use std::sync::Arc;

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::NodeIndex;

/// One node's `T x d` embedding history. Rows where the node is absent are
/// zero and masked off.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeHistory {
    pub dim: usize,
    pub rows: Vec<f64>,
    pub mask: Vec<bool>,
}

impl NodeHistory {
    pub fn new(dim: usize, rows: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if rows.len() != dim * mask.len() {
            return Err(Error::invalid("history rows do not match its mask"));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::invalid("history has no observed step"));
        }
        Ok(Self { dim, rows, mask })
    }

    pub fn steps(&self) -> usize {
        self.mask.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t * self.dim..(t + 1) * self.dim]
    }

    /// `(step, row)` for unmasked steps in time order.
    pub fn observed(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        (0..self.steps())
            .filter(|&t| self.mask[t])
            .map(|t| (t, self.row(t)))
    }
}

/// Histories of every node, stored densely as `node x step x dim`. The
/// table doubles as the trainable copy of the aligned embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryTable {
    nodes: Arc<NodeIndex>,
    steps: usize,
    dim: usize,
    pub(crate) data: Vec<f64>,
    mask: Vec<bool>,
}

impl HistoryTable {
    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Whether `node` is observed at least once.
    pub fn has(&self, node: u32) -> bool {
        self.mask_of(node).iter().any(|&m| m)
    }

    pub fn mask_of(&self, node: u32) -> &[bool] {
        let n = node as usize;
        &self.mask[n * self.steps..(n + 1) * self.steps]
    }

    pub fn rows_of(&self, node: u32) -> &[f64] {
        let n = node as usize;
        let span = self.steps * self.dim;
        &self.data[n * span..(n + 1) * span]
    }

    pub fn rows_of_mut(&mut self, node: u32) -> &mut [f64] {
        let n = node as usize;
        let span = self.steps * self.dim;
        &mut self.data[n * span..(n + 1) * span]
    }

    pub fn history(&self, node: u32) -> Option<NodeHistory> {
        if (node as usize) >= self.node_count() || !self.has(node) {
            return None;
        }
        Some(NodeHistory {
            dim: self.dim,
            rows: self.rows_of(node).to_vec(),
            mask: self.mask_of(node).to_vec(),
        })
    }

    /// Embedding of `node` at `step`, if observed there.
    pub fn get(&self, node: u32, step: usize) -> Option<&[f64]> {
        if !self.mask_of(node)[step] {
            return None;
        }
        let base = (node as usize * self.steps + step) * self.dim;
        Some(&self.data[base..base + self.dim])
    }

    /// Snapshot `step` as an embedding matrix (for export after fine-tuning).
    pub fn to_matrix(&self, step: usize) -> Result<EmbeddingMatrix> {
        let mut columns = Vec::new();
        let mut values = Vec::new();
        for v in 0..self.node_count() as u32 {
            if let Some(row) = self.get(v, step) {
                columns.push(v);
                values.extend_from_slice(row);
            }
        }
        EmbeddingMatrix::new(Arc::clone(&self.nodes), step, self.dim, columns, values)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Stacks an (aligned) embedding series into per-node histories. Row `t`
/// of node `v` is `v`'s column at step `t`, or zeros with the mask off.
pub fn build_histories(series: &[EmbeddingMatrix]) -> Result<HistoryTable> {
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("empty embedding series"))?;
    let nodes = Arc::clone(first.nodes());
    let (steps, dim) = (series.len(), first.dim());
    for m in series {
        if m.dim() != dim || !Arc::ptr_eq(m.nodes(), &nodes) && **m.nodes() != *nodes {
            return Err(Error::invalid(
                "embedding series mixes dimensions or node indices",
            ));
        }
    }
    let n = nodes.len();
    let mut data = vec![0.0; n * steps * dim];
    let mut mask = vec![false; n * steps];
    for (t, m) in series.iter().enumerate() {
        for (j, &v) in m.columns().iter().enumerate() {
            let base = (v as usize * steps + t) * dim;
            data[base..base + dim].copy_from_slice(m.column_at(j));
            mask[v as usize * steps + t] = true;
        }
    }
    Ok(HistoryTable {
        nodes,
        steps,
        dim,
        data,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_series_matches_hand_assembly() {
        let nodes = Arc::new(NodeIndex::from_names(["a", "b", "c"]));
        let m0 = EmbeddingMatrix::new(Arc::clone(&nodes), 0, 2, vec![0, 1], vec![1., 2., 3., 4.])
            .unwrap();
        let m1 = EmbeddingMatrix::new(Arc::clone(&nodes), 1, 2, vec![0, 1], vec![5., 6., 7., 8.])
            .unwrap();
        let m2 = EmbeddingMatrix::new(
            Arc::clone(&nodes),
            2,
            2,
            vec![0, 1, 2],
            vec![9., 10., 11., 12., 13., 14.],
        )
        .unwrap();
        let table = build_histories(&[m0, m1, m2]).unwrap();

        let a = table.history(0).unwrap();
        assert_eq!(a.rows, vec![1., 2., 5., 6., 9., 10.]);
        assert_eq!(a.mask, vec![true, true, true]);
        let c = table.history(2).unwrap();
        assert_eq!(c.rows, vec![0., 0., 0., 0., 13., 14.]);
        assert_eq!(c.mask, vec![false, false, true]);
        assert_eq!(c.observed().count(), 1);
        assert_eq!(table.to_matrix(2).unwrap().get(2), Some(&[13., 14.][..]));
    }

    #[test]
    fn unseen_node_has_no_history() {
        let nodes = Arc::new(NodeIndex::from_names(["a", "b"]));
        let m = EmbeddingMatrix::new(Arc::clone(&nodes), 0, 2, vec![0], vec![1., 1.]).unwrap();
        let table = build_histories(&[m]).unwrap();
        assert!(table.history(1).is_none());
        assert!(NodeHistory::new(1, vec![0.0], vec![false]).is_err());
    }
}

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::combiner::{Combiner, Trace};
use super::head::{softmax, TaskHead};
use super::history::HistoryTable;
use super::{check_node, TemporalModel};
use crate::error::{Error, Result};
use crate::graph::Pair;

/// One supervised example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Example {
    Link { pair: Pair, label: bool },
    Node { node: u32, class: usize },
}

impl Example {
    fn nodes(&self) -> impl Iterator<Item = u32> {
        let (a, b) = match *self {
            Example::Link { pair, .. } => (pair.0, Some(pair.1)),
            Example::Node { node, .. } => (node, None),
        };
        std::iter::once(a).chain(b)
    }
}

/// Gradients of a batch loss, shaped like the model. Embedding gradients
/// are keyed by node and laid out like [`HistoryTable::rows_of`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub model: TemporalModel,
    pub embeddings: Option<BTreeMap<u32, Vec<f64>>>,
}

struct Forward {
    nodes: Vec<u32>,
    hidden: Vec<Vec<f64>>,
    traces: Vec<Trace>,
}

fn forward_nodes(
    model: &TemporalModel,
    table: &HistoryTable,
    batch: &[Example],
) -> Result<Forward> {
    if let Some(bad) = batch.iter().find(|e| match (e, &model.head) {
        (Example::Link { .. }, TaskHead::Link(_)) => false,
        (Example::Node { class, .. }, TaskHead::NodeClass(l)) => *class >= l.outputs,
        _ => true,
    }) {
        return Err(Error::invalid(format!(
            "example {bad:?} does not fit the model's task head"
        )));
    }
    let mut nodes: Vec<u32> = batch.iter().flat_map(Example::nodes).collect();
    nodes.sort_unstable();
    nodes.dedup();
    for &v in &nodes {
        check_node(table, v)?;
    }
    let results: Vec<Result<(Vec<f64>, Trace)>> = nodes
        .par_iter()
        .map(|&v| {
            let mut trace = Trace::default();
            let h = model
                .combiner
                .forward(table.rows_of(v), table.mask_of(v), Some(&mut trace))?;
            Ok((h, trace))
        })
        .collect();
    let mut hidden = Vec::with_capacity(nodes.len());
    let mut traces = Vec::with_capacity(nodes.len());
    for r in results {
        let (h, t) = r?;
        hidden.push(h);
        traces.push(t);
    }
    Ok(Forward {
        nodes,
        hidden,
        traces,
    })
}

/// Per-example `(loss, dlogits)` from head logits, mean-reduced by `scale`.
fn head_terms(logits: &[f64], target: usize, scale: f64) -> (f64, Vec<f64>) {
    let p = softmax(logits);
    let loss = -p[target].max(1e-15).ln();
    let d = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| (pk - if k == target { 1.0 } else { 0.0 }) * scale)
        .collect();
    (loss, d)
}

/// Mean cross-entropy of the batch, without gradients.
pub fn batch_loss(model: &TemporalModel, table: &HistoryTable, batch: &[Example]) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let fwd = forward_nodes(model, table, batch)?;
    let idx = |v: u32| fwd.nodes.binary_search(&v).expect("node was embedded");
    let head = model.head.dense();
    let mut total = 0.0;
    for e in sorted(batch) {
        let (logits, target) = match *e {
            Example::Link { pair, label } => {
                let x: Vec<f64> = fwd.hidden[idx(pair.0)]
                    .iter()
                    .chain(&fwd.hidden[idx(pair.1)])
                    .copied()
                    .collect();
                (head.forward(&x), usize::from(label))
            }
            Example::Node { node, class } => (head.forward(&fwd.hidden[idx(node)]), class),
        };
        total += head_terms(&logits, target, 1.0).0;
    }
    Ok(total / batch.len() as f64)
}

/// Canonical processing order so that gradients do not depend on the
/// order of examples within a batch.
fn sorted(batch: &[Example]) -> Vec<&Example> {
    let mut v: Vec<&Example> = batch.iter().collect();
    v.sort();
    v
}

const BACKWARD_CHUNK: usize = 16;

/// Mean batch loss and its exact gradient with respect to every model
/// parameter and, when `with_embeddings` is set, every observed embedding
/// row that the batch touches. Masked rows never receive gradient.
pub fn loss_and_gradients(
    model: &TemporalModel,
    table: &HistoryTable,
    batch: &[Example],
    with_embeddings: bool,
) -> Result<(f64, Gradients)> {
    let mut grad = model.zeros_like();
    if batch.is_empty() {
        let embeddings = with_embeddings.then(BTreeMap::new);
        return Ok((
            0.0,
            Gradients {
                model: grad,
                embeddings,
            },
        ));
    }
    let fwd = forward_nodes(model, table, batch)?;
    let idx = |v: u32| fwd.nodes.binary_search(&v).expect("node was embedded");
    let d = model.dim();
    let scale = 1.0 / batch.len() as f64;
    let head = model.head.dense();
    let mut dh = vec![vec![0.0; d]; fwd.nodes.len()];
    let mut total = 0.0;
    for e in sorted(batch) {
        match *e {
            Example::Link { pair, label } => {
                let (a, b) = (idx(pair.0), idx(pair.1));
                let x: Vec<f64> = fwd.hidden[a]
                    .iter()
                    .chain(&fwd.hidden[b])
                    .copied()
                    .collect();
                let (loss, dl) = head_terms(&head.forward(&x), usize::from(label), scale);
                total += loss;
                let dx = head.backward(&x, &dl, grad.head.dense_mut());
                for k in 0..d {
                    dh[a][k] += dx[k];
                    dh[b][k] += dx[d + k];
                }
            }
            Example::Node { node, class } => {
                let a = idx(node);
                let (loss, dl) = head_terms(&head.forward(&fwd.hidden[a]), class, scale);
                total += loss;
                let dx = head.backward(&fwd.hidden[a], &dl, grad.head.dense_mut());
                for (acc, g) in dh[a].iter_mut().zip(dx) {
                    *acc += g;
                }
            }
        }
    }

    let chunks: Vec<(Combiner, Vec<(u32, Vec<f64>)>)> = (0..fwd.nodes.len())
        .collect::<Vec<_>>()
        .par_chunks(BACKWARD_CHUNK)
        .map(|chunk| {
            let mut cg = model.combiner.zeros_like();
            let mut rows = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let v = fwd.nodes[i];
                let src = table.rows_of(v);
                let mut d_rows = vec![0.0; src.len()];
                model
                    .combiner
                    .backward(src, &fwd.traces[i], &dh[i], &mut cg, Some(&mut d_rows));
                rows.push((v, d_rows));
            }
            (cg, rows)
        })
        .collect();

    let mut embeddings = with_embeddings.then(BTreeMap::new);
    for (cg, rows) in chunks {
        for (acc, part) in grad.combiner.tensors_mut().into_iter().zip(cg.tensors()) {
            for (a, b) in acc.iter_mut().zip(part.1) {
                *a += b;
            }
        }
        if let Some(map) = embeddings.as_mut() {
            map.extend(rows);
        }
    }

    for (name, t) in grad.tensors() {
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("in gradient of {name}"),
            });
        }
    }
    if let Some(map) = &embeddings {
        if let Some((v, _)) = map.iter().find(|(_, g)| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite {
                context: format!("in embedding gradient of node {v}"),
            });
        }
    }
    Ok((
        total * scale,
        Gradients {
            model: grad,
            embeddings,
        },
    ))
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use temporal_embed::embed::EmbeddingMatrix;
use temporal_embed::graph::{NodeIndex, StaticGraph};

pub fn matrix(d: usize, cols: Vec<u32>, values: Vec<f64>) -> EmbeddingMatrix {
    let n = cols.iter().max().map_or(0, |m| m + 1);
    let nodes = Arc::new(NodeIndex::from_names((0..n).map(|i| format!("v{i}"))));
    EmbeddingMatrix::new(nodes, 0, d, cols, values).unwrap()
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Haar-ish random orthogonal matrix (row-major) via Gram-Schmidt on
/// Gaussian columns; includes reflections.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut r = vec![0.0; d * d];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            r[i * d + j] = c[i];
        }
    }
    r
}

/// `‖R·next − prev‖²_F` over shared columns.
pub fn residual(r: &[f64], next: &EmbeddingMatrix, prev: &EmbeddingMatrix) -> f64 {
    next.rotated(r).shared_distance(prev).powi(2)
}

/// Global clustering coefficient by enumerating every node triple.
pub fn brute_force_cc(n: usize, edges: &[(u32, u32)]) -> f64 {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a as usize][b as usize] = true;
            adj[b as usize][a as usize] = true;
        }
    }
    let (mut closed, mut triples) = (0u64, 0u64);
    for c in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                if a != c && b != c && adj[c][a] && adj[c][b] {
                    triples += 1;
                    if adj[a][b] {
                        closed += 1;
                    }
                }
            }
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

pub fn static_graph(n: usize, directed: bool, edges: &[(u32, u32)]) -> StaticGraph {
    let pairs: Vec<((u32, u32), f64)> = edges.iter().map(|&p| (p, 1.0)).collect();
    StaticGraph::from_weighted_pairs(n, directed, &pairs)
}

/// Mean over all positive-negative pairs of 1 (correct order), 1/2 (tie)
/// or 0, as an exact fraction `(numerator / 2, denominator)`.
pub fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice_wins, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1;
                twice_wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

/// `(micro, macro)` F1 from an explicit `L x L` confusion matrix.
pub fn confusion_f1(predictions: &[usize], labels: &[usize], classes: usize) -> (f64, f64) {
    let mut cm = vec![vec![0u64; classes]; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        cm[l][p] += 1;
    }
    let f1 = |tp: u64, fp: u64, fn_: u64| {
        if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let mut macro_sum = 0.0;
    for c in 0..classes {
        let tp = cm[c][c];
        let fp: u64 = (0..classes).filter(|&r| r != c).map(|r| cm[r][c]).sum();
        let fn_: u64 = (0..classes).filter(|&p| p != c).map(|p| cm[c][p]).sum();
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        macro_sum += f1(tp, fp, fn_);
    }
    (f1(tp_all, fp_all, fn_all), macro_sum / classes as f64)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

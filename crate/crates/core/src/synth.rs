//! Temporal random graphs whose final degree sequence follows a target
//! profile. Edges arrive in `T` equal batches; each new edge joins two
//! nodes with probability proportional to the product of their remaining
//! degree deficits.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeIndex, Pair, TemporalEdge, TemporalGraph};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeTarget {
    Linear,
    Logarithmic,
    Sinusoidal,
    Exponential,
}

impl DegreeTarget {
    pub const ALL: [DegreeTarget; 4] = [
        DegreeTarget::Linear,
        DegreeTarget::Logarithmic,
        DegreeTarget::Sinusoidal,
        DegreeTarget::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DegreeTarget::Linear => "linear",
            DegreeTarget::Logarithmic => "logarithmic",
            DegreeTarget::Sinusoidal => "sinusoidal",
            DegreeTarget::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for DegreeTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown degree target {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub target: DegreeTarget,
    #[serde(default)]
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        let max = self.n * (self.n - 1) / 2;
        if self.m > max {
            return Err(Error::invalid(format!(
                "m = {} exceeds the {max} possible pairs",
                self.m
            )));
        }
        if self.steps == 0 {
            return Err(Error::invalid("T must be at least 1"));
        }
        if self.m < self.steps {
            return Err(Error::invalid(format!(
                "m = {} edges cannot fill T = {} non-empty steps",
                self.m, self.steps
            )));
        }
        Ok(())
    }
}

/// Ratio between the largest and smallest exponential-target degree.
const EXPONENTIAL_RATIO: f64 = 100.0;

fn shape(target: DegreeTarget, i: usize, n: usize) -> f64 {
    let x = i as f64;
    match target {
        DegreeTarget::Linear => x,
        DegreeTarget::Logarithmic => (1.0 + x).ln(),
        DegreeTarget::Sinusoidal => {
            (1.0 + (2.0 * std::f64::consts::PI * x / n as f64).sin()) / 2.0 + 1.0
        }
        DegreeTarget::Exponential => {
            let c = EXPONENTIAL_RATIO.powf(1.0 / (n.max(2) - 1) as f64);
            c.powf(x)
        }
    }
}

/// `a * shape(i)` for ranks `1..=n`, with `a` chosen so the unrounded
/// values sum to `total`, rounded to integers. The sinusoidal shape has an
/// additive offset, so `a` multiplies the whole expression there.
fn scaled_profile(target: DegreeTarget, n: usize, total: usize) -> Vec<usize> {
    let raw: Vec<f64> = (1..=n).map(|i| shape(target, i, n)).collect();
    let a = total as f64 / raw.iter().sum::<f64>();
    raw.iter().map(|r| (a * r).round() as usize).collect()
}

/// Target degree of every node (node `i` gets rank `i + 1`), summing to
/// exactly `2m` with each entry in `[1, n - 1]`.
pub fn target_degree_profile(cfg: &SynthConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let n = cfg.n;
    let total = 2 * cfg.m;
    if total < n || total > n * (n - 1) {
        return Err(Error::invalid(format!(
            "a degree sum of {total} cannot be met with every degree in [1, {}]",
            n - 1
        )));
    }
    let mut deg: Vec<usize> = scaled_profile(cfg.target, n, total)
        .into_iter()
        .map(|d| d.clamp(1, n - 1))
        .collect();
    let mut sum: usize = deg.iter().sum();
    while sum != total {
        let grow = sum < total;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| deg[y].cmp(&deg[x]).then(y.cmp(&x)));
        let mut changed = false;
        for i in order {
            if sum == total {
                break;
            }
            if grow && deg[i] < n - 1 {
                deg[i] += 1;
                sum += 1;
                changed = true;
            } else if !grow && deg[i] > 1 {
                deg[i] -= 1;
                sum -= 1;
                changed = true;
            }
        }
        if !changed {
            return Err(Error::invalid(
                "degree profile cannot be repaired within bounds",
            ));
        }
    }
    Ok(deg)
}

/// Prefix sums over node weights for `O(log n)` sampling and updates.
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(values: Vec<f64>) -> Self {
        let mut f = Fenwick {
            tree: vec![0.0; values.len() + 1],
            values: vec![0.0; values.len()],
        };
        for (i, v) in values.into_iter().enumerate() {
            f.set(i, v);
        }
        f
    }

    fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Smallest index whose prefix sum exceeds `x`.
    fn find(&self, mut x: f64) -> usize {
        let mut pos = 0;
        let mut step = self.tree.len().next_power_of_two() / 2;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= x {
                pos = next;
                x -= self.tree[next];
            }
            step /= 2;
        }
        pos.min(self.values.len() - 1)
    }
}

/// Floor on the deficit weight so saturated nodes can still be chosen.
pub const DEFICIT_FLOOR: f64 = 0.1;

const MAX_REJECTIONS: usize = 256;

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graph: TemporalGraph,
    pub target: Vec<usize>,
    pub degrees: Vec<usize>,
    /// `sum |degree - target|` over nodes.
    pub l1_distance: usize,
}

fn deficit(target: usize, degree: usize) -> f64 {
    (target as f64 - degree as f64).max(DEFICIT_FLOOR)
}

/// Samples the temporal graph. Node `i` is named `i`; step `t` (0-based)
/// is timestamped `t + 1`.
pub fn generate_temporal_graph(cfg: &SynthConfig) -> Result<SynthOutput> {
    let target = target_degree_profile(cfg)?;
    let n = cfg.n;
    let mut rng = seed::rng(cfg.seed, "synth.edges", 0);
    let mut degrees = vec![0usize; n];
    let mut weights = Fenwick::new(target.iter().map(|&t| deficit(t, 0)).collect());
    let mut present: HashSet<Pair> = HashSet::with_capacity(cfg.m);
    let mut edges = Vec::with_capacity(cfg.m);
    let per_step = cfg.m / cfg.steps;

    for step in 0..cfg.steps {
        let count = if step + 1 == cfg.steps {
            cfg.m - per_step * (cfg.steps - 1)
        } else {
            per_step
        };
        for _ in 0..count {
            let pair = sample_pair(&weights, &present, n, &mut rng).ok_or_else(|| {
                Error::invalid(format!(
                    "graph is saturated at step {}; no absent pair remains",
                    step + 1
                ))
            })?;
            present.insert(pair);
            for v in [pair.0, pair.1] {
                let v = v as usize;
                degrees[v] += 1;
                weights.set(v, deficit(target[v], degrees[v]));
            }
            edges.push(TemporalEdge {
                src: pair.0,
                dst: pair.1,
                timestamp: step as i64 + 1,
                weight: 1.0,
            });
        }
    }
    let nodes = Arc::new(NodeIndex::from_names((0..n).map(|i| i.to_string())));
    let graph = TemporalGraph::new(nodes, edges, false, false)?;
    let l1_distance = degrees
        .iter()
        .zip(&target)
        .map(|(&d, &t)| d.abs_diff(t))
        .sum();
    log::info!(
        "synthetic {} graph: n={n} m={} T={}, L1 distance to target {l1_distance}",
        cfg.target.name(),
        cfg.m,
        cfg.steps
    );
    Ok(SynthOutput {
        graph,
        target,
        degrees,
        l1_distance,
    })
}

fn sample_pair<R: Rng>(
    weights: &Fenwick,
    present: &HashSet<Pair>,
    n: usize,
    rng: &mut R,
) -> Option<Pair> {
    let total = weights.total();
    for _ in 0..MAX_REJECTIONS {
        let u = weights.find(rng.gen_range(0.0..total)) as u32;
        let v = weights.find(rng.gen_range(0.0..total)) as u32;
        let pair = (u.min(v), u.max(v));
        if u != v && !present.contains(&pair) {
            return Some(pair);
        }
    }
    // Dense regime: enumerate the absent pairs and sample exactly.
    let mut pairs = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if !present.contains(&(u, v)) {
                acc += weights.values[u as usize] * weights.values[v as usize];
                pairs.push((u, v));
                cumulative.push(acc);
            }
        }
    }
    if pairs.is_empty() {
        return None;
    }
    let x = rng.gen_range(0.0..acc);
    let i = cumulative.partition_point(|&c| c <= x).min(pairs.len() - 1);
    Some(pairs[i])
}

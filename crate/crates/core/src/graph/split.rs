use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{canonical, NodeIndex, Pair, TemporalGraph};
use crate::error::{Error, Result};
use crate::seed;

/// Picks the pivot timestamp whose cumulative edge fraction is closest to
/// `train_fraction`, among timestamps that leave at least one valid test
/// edge: a pair first connected after the pivot whose endpoints both exist
/// at the pivot. Ties go to the earlier timestamp.
pub fn select_pivot(g: &TemporalGraph, train_fraction: f64) -> Result<i64> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let ts = g.distinct_timestamps();
    if ts.len() < 2 {
        return Err(Error::invalid(
            "no valid pivot: the graph has fewer than two distinct timestamps",
        ));
    }

    let mut appears: HashMap<u32, i64> = HashMap::new();
    let mut formed: HashMap<Pair, i64> = HashMap::new();
    for e in g.edges() {
        for v in [e.src, e.dst] {
            let a = appears.entry(v).or_insert(e.timestamp);
            *a = (*a).min(e.timestamp);
        }
        if e.src != e.dst {
            let f = formed.entry(g.pair(e)).or_insert(e.timestamp);
            *f = (*f).min(e.timestamp);
        }
    }

    // A pair is a valid test edge for every pivot in [max(appear), formed).
    let mut delta = vec![0i64; ts.len() + 1];
    for (&(u, v), &f) in &formed {
        let lo = appears[&u].max(appears[&v]);
        if lo >= f {
            continue;
        }
        let start = ts.partition_point(|&t| t < lo);
        let end = ts.partition_point(|&t| t < f);
        delta[start] += 1;
        delta[end] -= 1;
    }

    let mut counts: Vec<usize> = Vec::with_capacity(ts.len());
    let mut sorted: Vec<i64> = g.edges().iter().map(|e| e.timestamp).collect();
    sorted.sort_unstable();
    for &t in &ts {
        counts.push(sorted.partition_point(|&x| x <= t));
    }

    let total = g.edge_count() as f64;
    let mut best: Option<(f64, i64)> = None;
    let mut open = 0i64;
    for (i, &t) in ts.iter().enumerate() {
        open += delta[i];
        if open <= 0 {
            continue;
        }
        let gap = (counts[i] as f64 / total - train_fraction).abs();
        if best.is_none_or(|(b, _)| gap < b) {
            best = Some((gap, t));
        }
    }
    best.map(|(_, t)| t).ok_or_else(|| {
        Error::invalid("no pivot leaves a test edge between nodes that exist before the pivot")
    })
}

/// Train/test node pairs for temporal link prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSplit {
    pub pivot: i64,
    pub directed: bool,
    pub train_pos: Vec<Pair>,
    pub train_neg: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub test_neg: Vec<Pair>,
}

#[derive(Serialize, Deserialize)]
struct LinkSplitJson {
    pivot: i64,
    directed: bool,
    train_pos: Vec<(String, String)>,
    train_neg: Vec<(String, String)>,
    test_pos: Vec<(String, String)>,
    test_neg: Vec<(String, String)>,
}

impl LinkSplit {
    /// Training examples as `(pair, label)`, positives first.
    pub fn train_examples(&self) -> Vec<(Pair, bool)> {
        labelled(&self.train_pos, &self.train_neg)
    }

    pub fn test_examples(&self) -> Vec<(Pair, bool)> {
        labelled(&self.test_pos, &self.test_neg)
    }

    pub fn to_json(&self, nodes: &NodeIndex) -> String {
        let names = |ps: &[Pair]| -> Vec<(String, String)> {
            ps.iter()
                .map(|&(a, b)| (nodes.name(a).to_owned(), nodes.name(b).to_owned()))
                .collect()
        };
        let doc = LinkSplitJson {
            pivot: self.pivot,
            directed: self.directed,
            train_pos: names(&self.train_pos),
            train_neg: names(&self.train_neg),
            test_pos: names(&self.test_pos),
            test_neg: names(&self.test_neg),
        };
        serde_json::to_string_pretty(&doc).expect("split serializes")
    }

    pub fn from_json(json: &str, nodes: &NodeIndex) -> Result<Self> {
        let doc: LinkSplitJson =
            serde_json::from_str(json).map_err(|e| Error::Format(format!("split json: {e}")))?;
        let ids = |ps: Vec<(String, String)>| -> Result<Vec<Pair>> {
            ps.into_iter()
                .map(|(a, b)| {
                    let look = |n: &str| {
                        nodes
                            .get(n)
                            .ok_or_else(|| Error::Format(format!("split names unknown node {n:?}")))
                    };
                    Ok((look(&a)?, look(&b)?))
                })
                .collect()
        };
        Ok(LinkSplit {
            pivot: doc.pivot,
            directed: doc.directed,
            train_pos: ids(doc.train_pos)?,
            train_neg: ids(doc.train_neg)?,
            test_pos: ids(doc.test_pos)?,
            test_neg: ids(doc.test_neg)?,
        })
    }

    /// Checks every structural guarantee of the split against the graph it
    /// was drawn from.
    pub fn validate(&self, g: &TemporalGraph) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.train_pos.len() != self.train_neg.len() {
            return fail("train positive/negative counts differ".into());
        }
        if self.test_pos.len() != self.test_neg.len() {
            return fail("test positive/negative counts differ".into());
        }
        let mut pre_nodes = HashSet::new();
        let mut pre_pairs = HashSet::new();
        let mut all_pairs = HashSet::new();
        for e in g.edges() {
            all_pairs.insert(g.pair(e));
            if e.timestamp <= self.pivot {
                pre_nodes.insert(e.src);
                pre_nodes.insert(e.dst);
                pre_pairs.insert(g.pair(e));
            }
        }
        for &p in &self.train_pos {
            if !pre_pairs.contains(&p) {
                return fail(format!(
                    "train positive {p:?} is not connected at the pivot"
                ));
            }
        }
        for &p in &self.train_neg {
            if pre_pairs.contains(&p) || p.0 == p.1 {
                return fail(format!("train negative {p:?} is connected at the pivot"));
            }
        }
        for &p in self.test_pos.iter().chain(&self.test_neg) {
            if !pre_nodes.contains(&p.0) || !pre_nodes.contains(&p.1) {
                return fail(format!(
                    "test pair {p:?} has an endpoint unseen before the pivot"
                ));
            }
            if p.0 == p.1 {
                return fail(format!("test pair {p:?} is a self pair"));
            }
        }
        for &p in &self.test_pos {
            if pre_pairs.contains(&p) || !all_pairs.contains(&p) {
                return fail(format!("test positive {p:?} is not a newly formed edge"));
            }
        }
        for &p in &self.test_neg {
            if all_pairs.contains(&p) {
                return fail(format!(
                    "test negative {p:?} is connected at some timestamp"
                ));
            }
        }
        for set in [
            &self.train_pos,
            &self.train_neg,
            &self.test_pos,
            &self.test_neg,
        ] {
            let uniq: HashSet<_> = set.iter().collect();
            if uniq.len() != set.len() {
                return fail("duplicate pair in split".into());
            }
        }
        Ok(())
    }
}

fn labelled(pos: &[Pair], neg: &[Pair]) -> Vec<(Pair, bool)> {
    pos.iter()
        .map(|&p| (p, true))
        .chain(neg.iter().map(|&p| (p, false)))
        .collect()
}

/// Splits edges around `pivot`: training positives are the pairs connected
/// by the pivot, test positives the pairs first connected after it between
/// nodes that already exist. Negatives of equal count are drawn uniformly
/// without replacement among pre-pivot nodes, from pairs unconnected at the
/// pivot (train) or never connected (test).
pub fn split_link_prediction(g: &TemporalGraph, pivot: i64, seed: u64) -> Result<LinkSplit> {
    let directed = g.is_directed();
    let mut pre_pairs: HashSet<Pair> = HashSet::new();
    let mut all_pairs: HashSet<Pair> = HashSet::new();
    let mut pre_present = vec![false; g.node_count()];
    for e in g.edges() {
        let p = g.pair(e);
        all_pairs.insert(p);
        if e.timestamp <= pivot {
            pre_pairs.insert(p);
            pre_present[e.src as usize] = true;
            pre_present[e.dst as usize] = true;
        }
    }
    let pre_nodes: Vec<u32> = (0..g.node_count() as u32)
        .filter(|&v| pre_present[v as usize])
        .collect();

    let mut train_pos: Vec<Pair> = pre_pairs.iter().copied().filter(|p| p.0 != p.1).collect();
    train_pos.sort_unstable();
    let mut test_pos: Vec<Pair> = all_pairs
        .iter()
        .copied()
        .filter(|p| {
            p.0 != p.1
                && !pre_pairs.contains(p)
                && pre_present[p.0 as usize]
                && pre_present[p.1 as usize]
        })
        .collect();
    test_pos.sort_unstable();

    let mut rng = seed::rng(seed, "split.train_neg", 0);
    let train_neg = sample_unconnected(
        &pre_nodes,
        directed,
        &pre_pairs,
        train_pos.len(),
        &mut rng,
        "training negatives",
    )?;
    let mut rng = seed::rng(seed, "split.test_neg", 0);
    let test_neg = sample_unconnected(
        &pre_nodes,
        directed,
        &all_pairs,
        test_pos.len(),
        &mut rng,
        "test negatives",
    )?;

    Ok(LinkSplit {
        pivot,
        directed,
        train_pos,
        train_neg,
        test_pos,
        test_neg,
    })
}

/// Uniform sample without replacement of `count` non-self pairs over
/// `nodes` that are absent from `forbidden`.
fn sample_unconnected<R: Rng>(
    nodes: &[u32],
    directed: bool,
    forbidden: &HashSet<Pair>,
    count: usize,
    rng: &mut R,
    what: &'static str,
) -> Result<Vec<Pair>> {
    let n = nodes.len() as u64;
    let universe = if directed {
        n * n.saturating_sub(1)
    } else {
        n * n.saturating_sub(1) / 2
    };
    let mut member = vec![false; nodes.iter().map(|&v| v as usize + 1).max().unwrap_or(0)];
    for &v in nodes {
        member[v as usize] = true;
    }
    let inside = |v: u32| member.get(v as usize).copied().unwrap_or(false);
    let blocked = forbidden
        .iter()
        .filter(|p| p.0 != p.1 && inside(p.0) && inside(p.1))
        .count() as u64;
    let available = (universe - blocked) as usize;
    if count > available {
        return Err(Error::InsufficientNegatives {
            what,
            required: count,
            available,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }

    if count * 2 <= available {
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let a = nodes[rng.gen_range(0..nodes.len())];
            let b = nodes[rng.gen_range(0..nodes.len())];
            if a == b {
                continue;
            }
            let p = canonical(a, b, directed);
            if forbidden.contains(&p) || !chosen.insert(p) {
                continue;
            }
            out.push(p);
        }
        return Ok(out);
    }

    let mut pool = Vec::with_capacity(available);
    for (i, &a) in nodes.iter().enumerate() {
        let others: Box<dyn Iterator<Item = &u32>> = if directed {
            Box::new(nodes.iter())
        } else {
            Box::new(nodes[i + 1..].iter())
        };
        for &b in others {
            let p = canonical(a, b, directed);
            if a != b && !forbidden.contains(&p) {
                pool.push(p);
            }
        }
    }
    let picked = rand::seq::index::sample(rng, pool.len(), count);
    Ok(picked.into_iter().map(|i| pool[i]).collect())
}

/// A random node-level train/test partition with class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    pub train_nodes: Vec<u32>,
    pub test_nodes: Vec<u32>,
    pub labels: BTreeMap<u32, usize>,
    pub classes: usize,
}

impl NodeSplit {
    pub fn train_examples(&self) -> Vec<(u32, usize)> {
        self.train_nodes
            .iter()
            .map(|v| (*v, self.labels[v]))
            .collect()
    }

    pub fn test_examples(&self) -> Vec<(u32, usize)> {
        self.test_nodes
            .iter()
            .map(|v| (*v, self.labels[v]))
            .collect()
    }
}

/// Shuffles labeled nodes and puts `floor(fraction * n)` of them in the
/// training set.
pub fn split_node_classification(
    labels: &[(u32, usize)],
    fraction: f64,
    seed: u64,
) -> Result<NodeSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let map: BTreeMap<u32, usize> = labels.iter().copied().collect();
    if map.len() != labels.len() {
        return Err(Error::invalid("a node is labeled more than once"));
    }
    if map.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 labeled nodes, got {}",
            map.len()
        )));
    }
    let mut order: Vec<u32> = map.keys().copied().collect();
    order.shuffle(&mut seed::rng(seed, "split.nodes", 0));
    let cut = (fraction * order.len() as f64).floor() as usize;
    if cut == 0 || cut == order.len() {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {} labeled nodes leaves an empty side",
            order.len()
        )));
    }
    let test_nodes = order.split_off(cut);
    let classes = map.values().max().map_or(0, |m| m + 1);
    Ok(NodeSplit {
        train_nodes: order,
        test_nodes,
        labels: map,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ten edges at t = 1..10 on a dense core so every late edge joins
    /// existing nodes.
    fn ten_step_graph() -> TemporalGraph {
        let pairs = [
            ("a", "b"),
            ("b", "c"),
            ("c", "d"),
            ("d", "e"),
            ("e", "f"),
            ("f", "g"),
            ("g", "h"),
            ("h", "a"),
            ("a", "c"),
            ("b", "d"),
        ];
        let triples: Vec<(&str, &str, i64)> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (a, b, i as i64 + 1))
            .collect();
        TemporalGraph::from_triples(&triples, false)
    }

    #[test]
    fn exact_eighty_percent_pivot() {
        assert_eq!(select_pivot(&ten_step_graph(), 0.8).unwrap(), 8);
    }

    #[test]
    fn single_timestamp_has_no_pivot() {
        let g = TemporalGraph::from_triples(&[("a", "b", 3), ("b", "c", 3), ("a", "c", 3)], false);
        assert!(select_pivot(&g, 0.8).is_err());
        assert!(select_pivot(&ten_step_graph(), 1.0).is_err());
    }

    #[test]
    fn skewed_timestamps_pick_closest_fraction() {
        // Eight edges at t=8, then one at 9 and one at 10.
        let mut triples: Vec<(String, String, i64)> = Vec::new();
        let names = ["a", "b", "c", "d", "e"];
        let mut k = 0;
        'outer: for i in 0..names.len() {
            for j in i + 1..names.len() {
                if k == 8 {
                    break 'outer;
                }
                triples.push((names[i].into(), names[j].into(), 8));
                k += 1;
            }
        }
        triples.push(("c".into(), "e".into(), 9));
        triples.push(("d".into(), "e".into(), 10));
        let g = TemporalGraph::from_triples(&triples, false);
        assert_eq!(select_pivot(&g, 0.8).unwrap(), 8);
    }

    #[test]
    fn pivot_skips_timestamps_without_valid_test_edges() {
        // Edges after t=1 all touch new nodes until t=3 closes a pair of
        // existing nodes, so t=1 is invalid even though it is closest.
        let g = TemporalGraph::from_triples(
            &[("a", "b", 1), ("a", "c", 1), ("c", "d", 2), ("b", "d", 3)],
            false,
        );
        assert_eq!(select_pivot(&g, 0.5).unwrap(), 2);
    }

    #[test]
    fn closing_triangle_forces_counts() {
        let g = TemporalGraph::from_triples(
            &[("a", "b", 1), ("b", "c", 2), ("c", "d", 3), ("a", "c", 4)],
            false,
        );
        let s = split_link_prediction(&g, 3, 7).unwrap();
        assert_eq!(s.test_pos, vec![(0, 2)]);
        assert_eq!(s.test_neg.len(), 1);
        assert_eq!(s.train_pos.len(), 3);
        assert_eq!(s.train_neg.len(), 3);
        s.validate(&g).unwrap();
    }

    #[test]
    fn complete_pre_pivot_graph_has_no_negatives() {
        let g = TemporalGraph::from_triples(
            &[("a", "b", 1), ("b", "c", 1), ("a", "c", 1), ("a", "d", 2)],
            false,
        );
        let err = split_link_prediction(&g, 1, 0).unwrap_err();
        assert!(
            matches!(
                err,
                Error::InsufficientNegatives {
                    required: 3,
                    available: 0,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn split_json_round_trips() {
        let g = ten_step_graph();
        let s = split_link_prediction(&g, 8, 1).unwrap();
        let json = s.to_json(g.nodes());
        assert!(json.contains("\"pivot\": 8"));
        assert_eq!(LinkSplit::from_json(&json, g.nodes()).unwrap(), s);
    }

    #[test]
    fn node_split_sizes() {
        let labels: Vec<(u32, usize)> = (0..10).map(|i| (i, (i % 3) as usize)).collect();
        let s = split_node_classification(&labels, 0.8, 3).unwrap();
        assert_eq!((s.train_nodes.len(), s.test_nodes.len()), (8, 2));
        assert!(s.train_nodes.iter().all(|v| !s.test_nodes.contains(v)));
        assert_eq!(s.classes, 3);
    }

    #[test]
    fn node_split_depends_on_seed() {
        let labels: Vec<(u32, usize)> = (0..4).map(|i| (i, 0)).collect();
        let parts: HashSet<Vec<u32>> = (0..8)
            .map(|seed| {
                let mut t = split_node_classification(&labels, 0.5, seed)
                    .unwrap()
                    .train_nodes;
                t.sort_unstable();
                assert_eq!(t.len(), 2);
                t
            })
            .collect();
        assert!(parts.len() > 1);
    }

    #[test]
    fn node_split_needs_two_nodes() {
        assert!(split_node_classification(&[(0, 0)], 0.8, 0).is_err());
    }
}

//! Temporal graphs: ingestion, multi-edge collapsing, cumulative snapshots,
//! train/test splits and structural statistics.

mod clustering;
mod snapshot;
mod split;

pub use clustering::clustering_coefficient;
pub use snapshot::{build_snapshots, subset_indices, SnapshotSeries, StaticGraph};
pub use split::{
    select_pivot, split_link_prediction, split_node_classification, LinkSplit, NodeSplit,
};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Dense index of node ids, in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIndex {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl NodeIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut idx = Self::new();
        for n in names {
            idx.intern(&n.into());
        }
        idx
    }

    /// Returns the index of `name`, inserting it if unseen.
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.lookup.get(name) {
            return i;
        }
        let i = u32::try_from(self.names.len()).expect("more than u32::MAX nodes");
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, idx: u32) -> &str {
        &self.names[idx as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A node pair. Ordered for directed graphs, `(min, max)` for undirected.
pub type Pair = (u32, u32);

pub(crate) fn canonical(src: u32, dst: u32, directed: bool) -> Pair {
    if directed || src <= dst {
        (src, dst)
    } else {
        (dst, src)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalEdge {
    pub src: u32,
    pub dst: u32,
    pub timestamp: i64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct TemporalGraph {
    nodes: Arc<NodeIndex>,
    edges: Vec<TemporalEdge>,
    directed: bool,
    weighted: bool,
}

impl TemporalGraph {
    /// Builds a graph, checking that endpoints are indexed and weights are
    /// positive. Unweighted graphs have every weight reset to 1.
    pub fn new(
        nodes: Arc<NodeIndex>,
        mut edges: Vec<TemporalEdge>,
        directed: bool,
        weighted: bool,
    ) -> Result<Self> {
        let n = nodes.len() as u32;
        for (i, e) in edges.iter_mut().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::invalid(format!(
                    "edge {i} has an endpoint outside the node set"
                )));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::invalid(format!(
                    "edge {i} has non-positive weight {}",
                    e.weight
                )));
            }
            if !weighted {
                e.weight = 1.0;
            }
        }
        Ok(Self {
            nodes,
            edges,
            directed,
            weighted,
        })
    }

    /// Convenience constructor from `(src, dst, timestamp)` name triples.
    pub fn from_triples<S: AsRef<str>>(triples: &[(S, S, i64)], directed: bool) -> Self {
        let mut nodes = NodeIndex::new();
        let edges = triples
            .iter()
            .map(|(s, d, t)| TemporalEdge {
                src: nodes.intern(s.as_ref()),
                dst: nodes.intern(d.as_ref()),
                timestamp: *t,
                weight: 1.0,
            })
            .collect();
        Self {
            nodes: Arc::new(nodes),
            edges,
            directed,
            weighted: false,
        }
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn time_range(&self) -> Option<(i64, i64)> {
        let min = self.edges.iter().map(|e| e.timestamp).min()?;
        let max = self.edges.iter().map(|e| e.timestamp).max()?;
        Some((min, max))
    }

    /// Sorted distinct timestamps.
    pub fn distinct_timestamps(&self) -> Vec<i64> {
        let mut ts: Vec<i64> = self.edges.iter().map(|e| e.timestamp).collect();
        ts.sort_unstable();
        ts.dedup();
        ts
    }

    pub fn pair(&self, e: &TemporalEdge) -> Pair {
        canonical(e.src, e.dst, self.directed)
    }

    /// The graph restricted to edges with `timestamp <= pivot`. The node
    /// index is shared, so node ids stay comparable with the full graph.
    pub fn up_to(&self, pivot: i64) -> TemporalGraph {
        TemporalGraph {
            nodes: Arc::clone(&self.nodes),
            edges: self
                .edges
                .iter()
                .filter(|e| e.timestamp <= pivot)
                .copied()
                .collect(),
            directed: self.directed,
            weighted: self.weighted,
        }
    }

    /// Writes the edge list as TSV (`src dst timestamp [weight]`).
    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.edges {
            let (s, d) = (self.nodes.name(e.src), self.nodes.name(e.dst));
            if self.weighted {
                writeln!(w, "{s}\t{d}\t{}\t{}", e.timestamp, e.weight)?;
            } else {
                writeln!(w, "{s}\t{d}\t{}", e.timestamp)?;
            }
        }
        Ok(())
    }
}

/// Reads a `src<TAB>dst<TAB>timestamp[<TAB>weight]` edge list.
pub fn ingest_edge_list(
    path: impl AsRef<Path>,
    directed: bool,
    weighted: bool,
) -> Result<TemporalGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(file, path, directed, weighted)
}

/// Parses an edge list from any reader; `origin` names the source in errors.
pub fn parse_edge_list<R: Read>(
    reader: R,
    origin: impl AsRef<Path>,
    directed: bool,
    weighted: bool,
) -> Result<TemporalGraph> {
    let origin = origin.as_ref();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut nodes = NodeIndex::new();
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(
                lineno,
                format!(
                    "expected 3 or 4 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let timestamp: i64 = fields[2].trim().parse().map_err(|_| {
            parse_err(
                lineno,
                format!("timestamp {:?} is not an integer", fields[2]),
            )
        })?;
        let weight = match fields.get(3) {
            Some(w) => {
                let w: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("weight {w:?} is not a number")))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(parse_err(
                        lineno,
                        format!("weight must be positive, got {w}"),
                    ));
                }
                w
            }
            None => 1.0,
        };
        let (src, dst) = (fields[0].trim(), fields[1].trim());
        if src.is_empty() || dst.is_empty() {
            return Err(parse_err(lineno, "empty node id".into()));
        }
        edges.push(TemporalEdge {
            src: nodes.intern(src),
            dst: nodes.intern(dst),
            timestamp,
            weight: if weighted { weight } else { 1.0 },
        });
    }
    Ok(TemporalGraph {
        nodes: Arc::new(nodes),
        edges,
        directed,
        weighted,
    })
}

/// Merges edges sharing `(src, dst, time bucket)` into one edge whose weight
/// is the sum of the merged weights. Buckets are `[k*g, (k+1)*g)` and the
/// merged timestamp is the bucket start.
pub fn collapse_multi_edges(g: &TemporalGraph, granularity: i64) -> Result<TemporalGraph> {
    if granularity <= 0 {
        return Err(Error::invalid(format!(
            "granularity must be positive, got {granularity}"
        )));
    }
    let mut slot: HashMap<(Pair, i64), usize> = HashMap::new();
    let mut out: Vec<TemporalEdge> = Vec::new();
    let mut merged = false;
    for e in &g.edges {
        let bucket = e.timestamp.div_euclid(granularity) * granularity;
        let (src, dst) = g.pair(e);
        match slot.get(&((src, dst), bucket)) {
            Some(&i) => {
                out[i].weight += e.weight;
                merged = true;
            }
            None => {
                slot.insert(((src, dst), bucket), out.len());
                out.push(TemporalEdge {
                    src: e.src,
                    dst: e.dst,
                    timestamp: bucket,
                    weight: e.weight,
                });
            }
        }
    }
    Ok(TemporalGraph {
        nodes: Arc::clone(&g.nodes),
        edges: out,
        directed: g.directed,
        weighted: g.weighted || merged,
    })
}

/// `(node, class)` pairs and the class names they index.
pub type Labels = (Vec<(u32, usize)>, Vec<String>);

/// Reads `node<TAB>label` lines. Class indices follow the sorted order of
/// the distinct label strings. Returns `(node, class)` pairs in file order
/// and the class names.
pub fn read_labels(path: impl AsRef<Path>, nodes: &NodeIndex) -> Result<Labels> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labels(file, path, nodes)
}

pub fn parse_labels<R: Read>(
    reader: R,
    origin: impl AsRef<Path>,
    nodes: &NodeIndex,
) -> Result<Labels> {
    let origin = origin.as_ref();
    let mut raw = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (node, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message: "expected node<TAB>label".into(),
        })?;
        let idx = nodes.get(node.trim()).ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message: format!("labeled node {node:?} does not appear in the graph"),
        })?;
        raw.push((idx, label.trim().to_owned()));
    }
    let mut classes: Vec<String> = raw.iter().map(|(_, l)| l.clone()).collect();
    classes.sort();
    classes.dedup();
    let labels = raw
        .into_iter()
        .map(|(n, l)| (n, classes.binary_search(&l).expect("label was collected")))
        .collect();
    Ok((labels, classes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<TemporalGraph> {
        parse_edge_list(s.as_bytes(), "mem", false, true)
    }

    #[test]
    fn parses_well_formed_lines() {
        let g = parse("a\tb\t1\nb\ta\t2\t2.5\n# comment\n\na\tb\t3\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edges()[1].weight, 2.5);
        assert_eq!(g.nodes().names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn rejects_non_positive_weight() {
        let err = parse("a\tb\t1\na\tb\t-1\t0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_field_count_and_timestamp() {
        assert!(matches!(parse("a\tb\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse("a\tb\tx\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("a\tb\t1\tw\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unweighted_ingest_drops_weights() {
        let g = parse_edge_list("a\tb\t1\t4\n".as_bytes(), "mem", true, false).unwrap();
        assert_eq!(g.edges()[0].weight, 1.0);
    }

    #[test]
    fn collapse_sums_within_bucket() {
        let g = TemporalGraph::from_triples(&[("a", "b", 5), ("a", "b", 5), ("a", "b", 5)], true);
        let c = collapse_multi_edges(&g, 10).unwrap();
        assert_eq!(c.edge_count(), 1);
        assert_eq!(c.edges()[0].weight, 3.0);
        assert_eq!(c.edges()[0].timestamp, 0);
    }

    #[test]
    fn collapse_mixed_buckets() {
        let g = TemporalGraph::from_triples(&[("a", "b", 1), ("a", "b", 1), ("a", "b", 2)], true);
        let c = collapse_multi_edges(&g, 1).unwrap();
        let w: Vec<f64> = c.edges().iter().map(|e| e.weight).collect();
        assert_eq!(w, vec![2.0, 1.0]);
    }

    #[test]
    fn collapse_identity_when_unique() {
        let g = TemporalGraph::from_triples(&[("a", "b", 1), ("b", "c", 2), ("a", "c", 2)], false);
        let c = collapse_multi_edges(&g, 1).unwrap();
        assert_eq!(c.edges(), g.edges());
        assert!(collapse_multi_edges(&g, 0).is_err());
    }

    #[test]
    fn undirected_collapse_merges_reversed_pairs() {
        let g = TemporalGraph::from_triples(&[("a", "b", 1), ("b", "a", 1)], false);
        assert_eq!(collapse_multi_edges(&g, 1).unwrap().edge_count(), 1);
        let d = TemporalGraph::from_triples(&[("a", "b", 1), ("b", "a", 1)], true);
        assert_eq!(collapse_multi_edges(&d, 1).unwrap().edge_count(), 2);
    }

    #[test]
    fn labels_map_to_sorted_classes() {
        let g = TemporalGraph::from_triples(&[("a", "b", 1), ("c", "b", 1)], false);
        let (labels, classes) =
            parse_labels("a\tz\nb\ty\nc\tz\n".as_bytes(), "mem", g.nodes()).unwrap();
        assert_eq!(classes, vec!["y", "z"]);
        assert_eq!(labels, vec![(0, 1), (1, 0), (2, 1)]);
        assert!(parse_labels("q\tz\n".as_bytes(), "mem", g.nodes()).is_err());
    }
}

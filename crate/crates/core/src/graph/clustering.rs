use super::StaticGraph;

/// Global clustering coefficient: `3 * triangles / connected triples`.
///
/// Directions, weights and self-loops are ignored. Returns 0 when the graph
/// has no connected triple.
pub fn clustering_coefficient(g: &StaticGraph) -> f64 {
    let n = g.node_capacity();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..n as u32 {
        for &v in g.neighbors(u) {
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut triples = 0u64;
    let mut closed = 0u64;
    for nbrs in &adj {
        let k = nbrs.len() as u64;
        triples += k * k.saturating_sub(1) / 2;
        // Each triangle is found once per vertex, from its smallest
        // neighbour pair, so `closed` counts 3 * triangles.
        for (i, &a) in nbrs.iter().enumerate() {
            let lst = &adj[a as usize];
            closed += nbrs[i + 1..]
                .iter()
                .filter(|&&b| lst.binary_search(&b).is_ok())
                .count() as u64;
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

// Two embeddings of the same graph trained with different seeds live in
// arbitrarily rotated spaces. Orthogonal Procrustes maps one onto the
// other without distorting distances.

use std::sync::Arc;

use temporal_embed::align::{align_series, orthogonality_residual, procrustes_align};
use temporal_embed::embed::{generate_walks, train_skipgram, SkipGramConfig, WalkConfig};
use temporal_embed::graph::{NodeIndex, StaticGraph};

pub fn run_example() -> temporal_embed::Result<()> {
    let n = 30u32;
    let pairs: Vec<((u32, u32), f64)> = (0..n)
        .flat_map(|i| [(i, (i + 1) % n), (i, (i + 5) % n)])
        .map(|(a, b)| ((a.min(b), a.max(b)), 1.0))
        .collect();
    let graph = StaticGraph::from_weighted_pairs(n as usize, false, &pairs);
    let nodes = Arc::new(NodeIndex::from_names((0..n).map(|i| i.to_string())));

    let embed = |seed: u64, step: usize| {
        let walks = WalkConfig {
            walks_per_node: 10,
            walk_length: 20,
            seed,
            ..WalkConfig::default()
        };
        let cfg = SkipGramConfig {
            dim: 8,
            window: 4,
            seed,
            ..SkipGramConfig::default()
        };
        train_skipgram(&generate_walks(&graph, &walks)?, &cfg, &nodes, step)
    };
    let first = embed(1, 0)?;
    let second = embed(2, 1)?;

    let r = procrustes_align(&second, &first)?;
    println!("orthogonality residual {:.2e}", orthogonality_residual(&r));
    println!("det(R) = {:+.3}", r.determinant());
    let before = second.shared_distance(&first);
    let after = second.rotated(&r.values).shared_distance(&first);
    println!("distance to step 0: {before:.3} raw, {after:.3} aligned");
    assert!(after <= before);

    // A series is aligned pairwise, each step onto the already aligned one.
    let series = align_series(&[first, second])?;
    println!("aligned {} steps", series.len());
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

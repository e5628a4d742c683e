// node2vec-style embedding of one static graph: biased walks, then
// skip-gram with negative sampling. Two cliques joined by a bridge end up
// in separate regions of the space.

use std::sync::Arc;

use temporal_embed::embed::{generate_walks, train_skipgram_traced, SkipGramConfig, WalkConfig};
use temporal_embed::graph::{NodeIndex, StaticGraph};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

pub fn run_example() -> temporal_embed::Result<()> {
    let mut pairs = Vec::new();
    for base in [0u32, 5] {
        for a in 0..5 {
            for b in a + 1..5 {
                pairs.push(((base + a, base + b), 1.0));
            }
        }
    }
    pairs.push(((4, 5), 1.0));
    let graph = StaticGraph::from_weighted_pairs(10, false, &pairs);
    let nodes = Arc::new(NodeIndex::from_names((0..10).map(|i| format!("v{i}"))));

    let walks = WalkConfig {
        p: 1.0,
        q: 0.5,
        walks_per_node: 20,
        walk_length: 20,
        seed: 7,
    };
    let corpus = generate_walks(&graph, &walks)?;
    println!("{} walks, {} tokens", corpus.len(), corpus.token_count());

    let cfg = SkipGramConfig {
        dim: 8,
        window: 3,
        seed: 7,
        ..SkipGramConfig::default()
    };
    let out = train_skipgram_traced(&corpus, &cfg, &nodes, 0)?;
    let losses: Vec<String> = out.epoch_loss.iter().map(|l| format!("{l:.3}")).collect();
    println!("loss per epoch: {}", losses.join(" "));

    let m = &out.embedding;
    let same = cosine(m.get(0).unwrap(), m.get(1).unwrap());
    let across = cosine(m.get(0).unwrap(), m.get(9).unwrap());
    println!("cos(v0, v1) = {same:.3}  (same clique)");
    println!("cos(v0, v9) = {across:.3}  (opposite cliques)");

    let mut tsv = Vec::new();
    m.write_tsv(&mut tsv)
        .map_err(|e| temporal_embed::Error::io("<stdout>", e))?;
    print!(
        "{}",
        String::from_utf8_lossy(&tsv)
            .lines()
            .take(3)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!("\n...");
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

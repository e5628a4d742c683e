//! Per-snapshot static node embeddings: second-order biased random walks
//! fed to skip-gram with negative sampling.

mod alias;
mod matrix;
mod skipgram;
mod walk;

pub use alias::AliasTable;
pub use matrix::{EmbeddingMatrix, RawEmbedding};
pub use skipgram::{train_skipgram, train_skipgram_traced, SkipGramConfig, SkipGramOutcome};
pub use walk::{generate_walks, transition_weight, WalkConfig, WalkCorpus, WalkSampler};

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::SnapshotSeries;
use crate::seed;

/// Embeds every snapshot independently. Step `k` uses walk and skip-gram
/// seeds derived from the configured seeds and `k`, so two steps never
/// share a random stream. Nodes absent from a snapshot have no column in
/// its matrix.
pub fn embed_snapshots(
    series: &SnapshotSeries,
    walk: &WalkConfig,
    skipgram: &SkipGramConfig,
) -> Result<Vec<EmbeddingMatrix>> {
    series
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(step, snap)| {
            let wcfg = WalkConfig {
                seed: seed::derive(walk.seed, "embed.walk", step as u64),
                ..*walk
            };
            let scfg = SkipGramConfig {
                seed: seed::derive(skipgram.seed, "embed.skipgram", step as u64),
                ..*skipgram
            };
            let corpus = generate_walks(snap, &wcfg)?;
            train_skipgram(&corpus, &scfg, series.nodes(), step)
        })
        .collect()
}

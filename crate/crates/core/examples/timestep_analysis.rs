// How much history does the model need? Each run keeps the pivot fixed
// and feeds the LSTM an evenly spaced subset of the snapshots, always
// including the most recent one.

use temporal_embed::embed::{SkipGramConfig, WalkConfig};
use temporal_embed::graph::subset_indices;
use temporal_embed::model::TrainConfig;
use temporal_embed::pipeline::{run_pipeline, RunConfig};
use temporal_embed::synth::{DegreeTarget, SynthConfig};

pub fn run_example() -> temporal_embed::Result<()> {
    let base = RunConfig {
        synthetic: Some(SynthConfig {
            n: 50,
            m: 400,
            steps: 12,
            target: DegreeTarget::Linear,
            seed: 0,
        }),
        steps: 10,
        walk: WalkConfig {
            walks_per_node: 4,
            walk_length: 20,
            ..WalkConfig::default()
        },
        skipgram: SkipGramConfig {
            dim: 8,
            window: 3,
            epochs: 1,
            ..SkipGramConfig::default()
        },
        train: TrainConfig {
            epochs: 8,
            batch_size: 64,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        deterministic: true,
        ..RunConfig::default()
    };
    for fraction in [0.2, 0.5, 1.0] {
        let cfg = RunConfig {
            timestep_fraction: fraction,
            ..base.clone()
        };
        let run = run_pipeline(&cfg)?;
        println!(
            "fraction {fraction:.1}: steps {:?}, pivot {}, AUC {:.4}",
            subset_indices(cfg.steps, fraction),
            run.report.metrics["pivot"],
            run.report.metrics["auc"]
        );
    }
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

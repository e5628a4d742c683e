// Same data, same seeds, alignment on and off. Without alignment each
// snapshot's embedding sits in its own arbitrary rotation and the LSTM
// sees that as noise.

use temporal_embed::embed::{SkipGramConfig, WalkConfig};
use temporal_embed::model::TrainConfig;
use temporal_embed::pipeline::{run_pipeline, Alignment, RunConfig};
use temporal_embed::synth::{DegreeTarget, SynthConfig};

fn config(alignment: Alignment, seed: u64) -> RunConfig {
    RunConfig {
        synthetic: Some(SynthConfig {
            n: 50,
            m: 400,
            steps: 10,
            target: DegreeTarget::Logarithmic,
            seed: 0,
        }),
        steps: 8,
        alignment,
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
        seed,
        deterministic: true,
        ..RunConfig::default()
    }
}

pub fn run_example() -> temporal_embed::Result<()> {
    for alignment in [Alignment::On, Alignment::Off] {
        let mut aucs = Vec::new();
        for seed in 0..2 {
            let run = run_pipeline(&config(alignment, seed))?;
            aucs.push(run.report.metrics["auc"]);
        }
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        println!("alignment {alignment:?}: AUC per seed {aucs:.4?}, mean {mean:.4}");
    }
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

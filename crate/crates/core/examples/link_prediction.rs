// Temporal link prediction end to end: snapshots up to the pivot are
// embedded, aligned and fed to an LSTM; the test set is the pairs that
// first connect after the pivot.

use temporal_embed::embed::{SkipGramConfig, WalkConfig};
use temporal_embed::model::TrainConfig;
use temporal_embed::pipeline::{run_pipeline, RunConfig, SplitRecord};
use temporal_embed::synth::{DegreeTarget, SynthConfig};

pub fn config() -> RunConfig {
    RunConfig {
        synthetic: Some(SynthConfig {
            n: 60,
            m: 600,
            steps: 12,
            target: DegreeTarget::Linear,
            seed: 0,
        }),
        steps: 10,
        walk: WalkConfig {
            walks_per_node: 5,
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
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        deterministic: true,
        ..RunConfig::default()
    }
}

pub fn run_example() -> temporal_embed::Result<()> {
    let run = run_pipeline(&config())?;
    if let SplitRecord::Link(split) = &run.split {
        println!(
            "pivot t = {}: {} train pairs, {} test pairs",
            split.pivot,
            split.train_pos.len() + split.train_neg.len(),
            split.test_pos.len() + split.test_neg.len()
        );
    }
    let losses: Vec<String> = run.epoch_loss.iter().map(|l| format!("{l:.3}")).collect();
    println!("training loss: {}", losses.join(" "));
    print!("{}", run.report.to_json());
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

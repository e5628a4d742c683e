// A run writes its report, checkpoint, loss trace, split and embeddings
// to a directory; the test metrics can be recomputed from those files
// alone.

use std::fs;

use temporal_embed::embed::{SkipGramConfig, WalkConfig};
use temporal_embed::model::{read_checkpoint, TrainConfig};
use temporal_embed::pipeline::{evaluate_run_dir, layout, run_pipeline, RunConfig};
use temporal_embed::synth::{DegreeTarget, SynthConfig};
use temporal_embed::Error;

pub fn run_example() -> temporal_embed::Result<()> {
    let dir = std::env::temp_dir().join(format!("temporal-embed-run-{}", std::process::id()));
    let cfg = RunConfig {
        synthetic: Some(SynthConfig {
            n: 40,
            m: 300,
            steps: 8,
            target: DegreeTarget::Sinusoidal,
            seed: 0,
        }),
        steps: 6,
        walk: WalkConfig {
            walks_per_node: 3,
            walk_length: 15,
            ..WalkConfig::default()
        },
        skipgram: SkipGramConfig {
            dim: 4,
            window: 2,
            epochs: 1,
            ..SkipGramConfig::default()
        },
        train: TrainConfig {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        out: Some(dir.clone()),
        deterministic: true,
        ..RunConfig::default()
    };
    let result = (|| {
        let run = run_pipeline(&cfg)?;
        let mut files: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        files.sort();
        println!("wrote {}", files.join(", "));

        let ckpt = read_checkpoint(&dir.join(layout::MODEL))?;
        println!(
            "checkpoint: {:?} combiner, {} parameters, {} steps",
            ckpt.model.combiner.kind(),
            ckpt.model.parameter_count(),
            ckpt.steps
        );
        let again = evaluate_run_dir(&dir)?;
        println!(
            "AUC at training time {:.4}, recomputed from disk {:.4}",
            run.report.metrics["auc"], again.metrics["auc"]
        );
        Ok(())
    })();
    let _ = fs::remove_dir_all(&dir);
    result
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

// Node classification from an edge list and a label file. The temporal
// embedding of every node after the last snapshot goes through a softmax
// head; metrics are micro/macro F1 and one-vs-rest AUC.

use std::fs;

use temporal_embed::embed::{SkipGramConfig, WalkConfig};
use temporal_embed::model::TrainConfig;
use temporal_embed::pipeline::{run_pipeline, DatasetConfig, RunConfig, Task};
use temporal_embed::Error;

/// Three 15-node groups wired mostly inside themselves over 6 timestamps.
fn write_dataset(dir: &std::path::Path) -> temporal_embed::Result<()> {
    let groups = ["physics", "biology", "history"];
    let mut edges = String::new();
    let mut labels = String::new();
    for (g, name) in groups.iter().enumerate() {
        for i in 0..15 {
            labels.push_str(&format!("{name}-{i}\t{name}\n"));
            for j in [1, 3, 4] {
                let t = 1 + (i * j) % 6;
                edges.push_str(&format!("{name}-{i}\t{name}-{}\t{t}\n", (i + j) % 15));
            }
        }
        let other = groups[(g + 1) % 3];
        edges.push_str(&format!("{name}-0\t{other}-7\t3\n"));
    }
    fs::write(dir.join("edges.tsv"), edges).map_err(|e| Error::io(dir, e))?;
    fs::write(dir.join("labels.tsv"), labels).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

pub fn run_example() -> temporal_embed::Result<()> {
    let dir = std::env::temp_dir().join(format!("temporal-embed-nodeclass-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_dataset(&dir)?;

    let cfg = RunConfig {
        task: Task::NodeClass,
        dataset: Some(DatasetConfig {
            edges: dir.join("edges.tsv"),
            labels: Some(dir.join("labels.tsv")),
            directed: false,
            weighted: false,
            collapse: None,
            name: Some("three-groups".into()),
        }),
        steps: 6,
        walk: WalkConfig {
            walks_per_node: 5,
            walk_length: 15,
            ..WalkConfig::default()
        },
        skipgram: SkipGramConfig {
            dim: 8,
            window: 3,
            epochs: 2,
            ..SkipGramConfig::default()
        },
        train: TrainConfig {
            epochs: 40,
            batch_size: 16,
            learning_rate: 2e-2,
            ..TrainConfig::default()
        },
        deterministic: true,
        ..RunConfig::default()
    };
    let run = run_pipeline(&cfg);
    let _ = fs::remove_dir_all(&dir);
    let run = run?;
    for (k, v) in &run.report.metrics {
        println!("{k:>16} {v:.4}");
    }
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}

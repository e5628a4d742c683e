use std::fs;
use std::path::Path;

use temporal_embed::embed::{SkipGramConfig, WalkConfig};
use temporal_embed::eval::Report;
use temporal_embed::graph::{build_snapshots, TemporalEdge, TemporalGraph};
use temporal_embed::model::TrainConfig;
use temporal_embed::pipeline::{
    evaluate_run_dir, layout, link_split, load_dataset, run_pipeline, run_suite, train_link_model,
    DatasetConfig, RunConfig, Suite, SuiteEntry, Task,
};
use temporal_embed::synth::{DegreeTarget, SynthConfig};

fn fast() -> RunConfig {
    RunConfig {
        synthetic: Some(SynthConfig {
            n: 30,
            m: 150,
            steps: 10,
            target: DegreeTarget::Linear,
            seed: 0,
        }),
        steps: 8,
        walk: WalkConfig {
            walks_per_node: 2,
            walk_length: 10,
            ..WalkConfig::default()
        },
        skipgram: SkipGramConfig {
            dim: 4,
            window: 2,
            epochs: 1,
            ..SkipGramConfig::default()
        },
        train: TrainConfig {
            epochs: 2,
            batch_size: 32,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        deterministic: true,
        ..RunConfig::default()
    }
}

#[test]
fn training_never_reads_post_pivot_edges() {
    let cfg = RunConfig {
        pivot: Some(8),
        ..fast()
    };
    let data = load_dataset(&cfg).unwrap();
    let g = &data.graph;
    let split = link_split(g, &cfg).unwrap();

    // Same pre-pivot history, garbage afterwards.
    let mut poisoned: Vec<TemporalEdge> = g
        .edges()
        .iter()
        .filter(|e| e.timestamp <= split.pivot)
        .copied()
        .collect();
    let n = g.node_count() as u32;
    for i in 0..200u32 {
        poisoned.push(TemporalEdge {
            src: i % n,
            dst: (i * 7 + 3) % n,
            timestamp: split.pivot + 1 + i64::from(i % 5),
            weight: 1e6,
        });
    }
    let poisoned = TemporalGraph::new(g.nodes().clone(), poisoned, false, true).unwrap();

    let clean = train_link_model(&g.up_to(split.pivot), &split, &cfg).unwrap();
    let dirty = train_link_model(&poisoned.up_to(split.pivot), &split, &cfg).unwrap();
    assert_eq!(clean.model, dirty.model);
    assert_eq!(clean.table, dirty.table);
    assert_eq!(clean.epoch_loss, dirty.epoch_loss);

    // Handing the trainer the whole graph is refused outright.
    assert!(train_link_model(&poisoned, &split, &cfg).is_err());
    assert!(train_link_model(g, &split, &cfg).is_err());
}

#[test]
fn a_failed_write_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    // A file where the aligned-embedding directory should go.
    fs::write(dir.path().join(layout::ALIGNED_DIR), b"in the way").unwrap();
    let cfg = RunConfig {
        out: Some(dir.path().to_path_buf()),
        ..fast()
    };
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(err.to_string().contains("write"), "{err}");
    let left: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(left, [layout::ALIGNED_DIR]);
}

#[test]
fn run_directory_round_trips_through_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        out: Some(dir.path().to_path_buf()),
        ..fast()
    };
    let run = run_pipeline(&cfg).unwrap();
    for f in [
        layout::REPORT,
        layout::MODEL,
        layout::LOSS,
        layout::SPLIT,
        layout::NODES,
        layout::ROTATIONS,
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let tuned = fs::read_dir(dir.path().join(layout::TUNED_DIR))
        .unwrap()
        .count();
    assert_eq!(tuned, cfg.steps);
    let loss = fs::read_to_string(dir.path().join(layout::LOSS)).unwrap();
    assert_eq!(loss.lines().count(), 1 + cfg.train.epochs);

    let again = evaluate_run_dir(dir.path()).unwrap();
    assert_eq!(again.metrics["auc"], run.report.metrics["auc"]);
    assert_eq!(
        Report::read(&dir.path().join(layout::REPORT)).unwrap(),
        run.report
    );
}

#[test]
fn report_echoes_the_config() {
    let run = run_pipeline(&fast()).unwrap();
    let r = &run.report;
    assert_eq!(r.task, "link");
    assert_eq!(r.dataset, "synthetic-linear");
    assert_eq!(r.seed, 0);
    for key in ["auc", "test_examples", "pivot", "final_train_loss"] {
        assert!(r.metrics.contains_key(key), "missing metric {key}");
    }
    assert!((0.0..=1.0).contains(&r.metrics["auc"]));
    let echoed: RunConfig = serde_json::from_value(r.config.clone()).unwrap();
    assert_eq!(echoed, fast());
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["task", "dataset", "seed", "metrics", "config"] {
        assert!(json.get(key).is_some(), "missing field {key}");
    }
}

#[test]
fn subset_runs_use_fewer_steps_but_keep_the_last() {
    let cfg = RunConfig {
        timestep_fraction: 0.2,
        ..fast()
    };
    let full = run_pipeline(&fast()).unwrap();
    let part = run_pipeline(&cfg).unwrap();
    assert_eq!(full.aligned.len(), 8);
    assert_eq!(part.aligned.len(), 2);
    let data = load_dataset(&cfg).unwrap();
    let split = link_split(&data.graph, &cfg).unwrap();
    let series = build_snapshots(&data.graph.up_to(split.pivot), cfg.steps).unwrap();
    let last = series.last();
    let last_nodes: Vec<u32> = last.present_nodes().collect();
    assert_eq!(part.aligned.last().unwrap().columns(), &last_nodes[..]);
    assert_eq!(part.report.metrics["pivot"], full.report.metrics["pivot"]);
}

#[test]
fn different_seeds_change_the_run_same_seed_repeats() {
    let a = run_pipeline(&fast()).unwrap();
    let b = run_pipeline(&fast()).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    let c = run_pipeline(&RunConfig { seed: 1, ..fast() }).unwrap();
    assert_ne!(a.report.metrics, c.report.metrics);
}

#[test]
fn invalid_configs_fail_before_any_work() {
    let both = RunConfig {
        dataset: Some(DatasetConfig {
            edges: "missing.tsv".into(),
            labels: None,
            directed: false,
            weighted: false,
            collapse: None,
            name: None,
        }),
        ..fast()
    };
    let err = run_pipeline(&both).unwrap_err();
    assert!(err.to_string().contains("config"), "{err}");
    let neither = RunConfig {
        synthetic: None,
        ..fast()
    };
    assert!(run_pipeline(&neither).is_err());
    let frac = RunConfig {
        timestep_fraction: 0.0,
        ..fast()
    };
    assert!(run_pipeline(&frac).is_err());
    assert!(RunConfig::from_toml("task = \"link\"\nbogus = 1\n").is_err());
}

#[test]
fn toml_config_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    write_communities(dir.path());
    let toml = r#"
        task = "nodeclass"
        T = 5
        seed = 3
        deterministic = true

        [dataset]
        edges = "edges.tsv"
        labels = "labels.tsv"

        [walk]
        walks_per_node = 4
        walk_length = 10

        [skipgram]
        dim = 8
        window = 3
        epochs = 2

        [train]
        epochs = 30
        batch_size = 16
        learning_rate = 0.02
    "#;
    let path = dir.path().join("run.toml");
    fs::write(&path, toml).unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.task, Task::NodeClass);
    assert_eq!(cfg.steps, 5);
    assert_eq!(
        cfg.dataset.as_ref().unwrap().edges,
        dir.path().join("edges.tsv")
    );

    let run = run_pipeline(&cfg).unwrap();
    let m = &run.report.metrics;
    assert_eq!(run.report.task, "nodeclass");
    assert_eq!(run.report.notes["auc"], "macro one-vs-rest");
    assert_eq!(m["test_examples"], 8.0);
    for k in ["micro_f1", "macro_f1", "auc"] {
        assert!((0.0..=1.0).contains(&m[k]), "{k} = {}", m[k]);
    }
    // Two well separated communities are easy to tell apart.
    assert!(m["micro_f1"] >= 0.75, "{m:?}");
}

/// Two 20-node communities, dense inside and sparse across, over five
/// timestamps; labels are the community.
fn write_communities(dir: &Path) {
    let mut edges = String::new();
    let mut labels = String::new();
    for c in 0..2 {
        for i in 0..20 {
            labels.push_str(&format!("{c}-{i}\t{}\n", ["red", "blue"][c]));
            for j in [1, 2, 5] {
                let t = 1 + (i + j) % 5;
                edges.push_str(&format!("{c}-{i}\t{c}-{}\t{t}\n", (i + j) % 20));
            }
        }
    }
    for i in 0..3 {
        edges.push_str(&format!("0-{i}\t1-{}\t{}\n", i * 3, i + 1));
    }
    fs::write(dir.join("edges.tsv"), edges).unwrap();
    fs::write(dir.join("labels.tsv"), labels).unwrap();
}

#[test]
fn suite_collects_rows_and_survives_failures() {
    let dir = tempfile::tempdir().unwrap();
    let broken = RunConfig {
        synthetic: Some(SynthConfig {
            n: 4,
            m: 50,
            steps: 2,
            target: DegreeTarget::Linear,
            seed: 0,
        }),
        ..fast()
    };
    let suite = Suite {
        runs: vec![
            SuiteEntry {
                id: "lstm".into(),
                seeds: vec![0, 1, 2],
                config: Some(fast()),
                config_file: None,
            },
            SuiteEntry {
                id: "broken".into(),
                seeds: vec![0],
                config: Some(broken),
                config_file: None,
            },
            SuiteEntry {
                id: "static".into(),
                seeds: vec![0, 1, 2],
                config: Some(RunConfig {
                    combiner: temporal_embed::model::CombinerKind::Static,
                    ..fast()
                }),
                config_file: None,
            },
        ],
    };
    let outcome = run_suite(&suite, Some(dir.path()));
    assert_eq!(outcome.failures.len(), 1);
    assert_eq!(outcome.failures[0].config_id, "broken");
    let auc_rows: Vec<_> = outcome.rows.iter().filter(|r| r.metric == "auc").collect();
    assert_eq!(auc_rows.len(), 6);
    let csv = outcome.to_csv();
    assert!(csv.starts_with("config_id,seed,metric,value\n"));
    assert_eq!(csv.lines().count(), 1 + outcome.rows.len());
    assert!(dir
        .path()
        .join("static/seed-2")
        .join(layout::REPORT)
        .is_file());

    let empty = run_suite(&Suite::default(), None);
    assert_eq!(empty.to_csv(), "config_id,seed,metric,value\n");
}

#[test]
fn suite_file_resolves_config_files() {
    let dir = tempfile::tempdir().unwrap();
    write_communities(dir.path());
    fs::write(
        dir.path().join("run.toml"),
        "T = 3\n[dataset]\nedges = \"edges.tsv\"\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("suite.toml"),
        "[[runs]]\nid = \"a\"\nseeds = [1]\nconfig_file = \"run.toml\"\n",
    )
    .unwrap();
    let suite = Suite::load(&dir.path().join("suite.toml")).unwrap();
    let cfg = suite.runs[0].config.as_ref().unwrap();
    assert_eq!(cfg.steps, 3);
    assert_eq!(
        cfg.dataset.as_ref().unwrap().edges,
        dir.path().join("edges.tsv")
    );
}

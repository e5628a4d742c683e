//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::fs;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use temporal_embed::align::procrustes_align;
use temporal_embed::embed::{EmbeddingMatrix, SkipGramConfig, WalkConfig};
use temporal_embed::eval::{auc, macro_f1, micro_f1};
use temporal_embed::graph::{build_snapshots, clustering_coefficient, NodeIndex};
use temporal_embed::model::{
    batch_loss, build_histories, loss_and_gradients, CombinerKind, Example, HistoryTable,
    TemporalModel, TrainConfig,
};
use temporal_embed::pipeline::{layout, load_dataset, run_pipeline, Alignment, RunConfig};
use temporal_embed::synth::{DegreeTarget, SynthConfig};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() -> ExitCode {
    let mut cache = Runs::default();
    let criteria: Vec<(&str, Duration, Box<dyn FnMut(&mut Runs) -> Outcome>)> = vec![
        (
            "procrustes oracle",
            mins(1),
            Box::new(|_| procrustes_oracle()),
        ),
        (
            "finite-difference gradients",
            mins(1),
            Box::new(|_| gradient_suite()),
        ),
        ("metric oracles", mins(1), Box::new(|_| metric_oracles())),
        (
            "full pipeline beats static baseline",
            mins(10),
            Box::new(full_beats_static),
        ),
        (
            "alignment helps on the sparsest graph",
            mins(10),
            Box::new(alignment_ablation),
        ),
        ("more time steps help", mins(15), Box::new(time_steps_trend)),
        (
            "clustering coefficient exactness",
            mins(1),
            Box::new(|_| clustering_exactness()),
        ),
        (
            "deterministic reports",
            mins(10),
            Box::new(|_| deterministic_reports()),
        ),
    ];
    let mut failed = 0;
    for (i, (name, budget, mut check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut result = check(&mut cache);
        let took = start.elapsed();
        if took > budget {
            result.pass = false;
            result.detail += &format!("; over the {}s budget", budget.as_secs());
        }
        failed += usize::from(!result.pass);
        println!(
            "{} {}. {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn mins(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

// ---------------------------------------------------------------- 1

fn procrustes_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_recovery: f64 = 0.0;
    for inst in 0..50 {
        let d = 1 + inst % 3;
        let n = d + 3 + inst % 4;
        let cols: Vec<u32> = (0..n as u32).collect();
        let prev_vals: Vec<f64> = (0..d * n).map(|_| common::gaussian(&mut rng)).collect();
        let next_vals: Vec<f64> = (0..d * n).map(|_| common::gaussian(&mut rng)).collect();
        let prev = common::matrix(d, cols.clone(), prev_vals.clone());
        let next = common::matrix(d, cols.clone(), next_vals.clone());
        let r = procrustes_align(&next, &prev).unwrap();
        let closed = residual(&r.values, &next_vals, &prev_vals, d);
        let mut best = f64::INFINITY;
        for _ in 0..100_000 {
            let q = common::random_orthogonal(d, &mut rng);
            best = best.min(residual(&q, &next_vals, &prev_vals, d));
        }
        worst_gap = worst_gap.max(closed - best);

        // Planted: next = R0ᵀ·prev, so the answer is R0 itself.
        let r0 = common::random_orthogonal(d, &mut rng);
        let mut planted = vec![0.0; d * n];
        for j in 0..n {
            for i in 0..d {
                planted[j * d + i] = (0..d).map(|k| r0[k * d + i] * prev_vals[j * d + k]).sum();
            }
        }
        let got = procrustes_align(&common::matrix(d, cols, planted), &prev).unwrap();
        let err = got
            .values
            .iter()
            .zip(&r0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_recovery = worst_recovery.max(err);
    }
    outcome(
        worst_gap <= 1e-9 && worst_recovery <= 1e-6,
        format!(
            "closed form minus best of 1e5 candidates <= {worst_gap:.2e}; planted recovery error {worst_recovery:.2e}"
        ),
    )
}

/// `‖R·next − prev‖²_F` for node-contiguous column data.
fn residual(r: &[f64], next: &[f64], prev: &[f64], d: usize) -> f64 {
    let mut total = 0.0;
    for (x, p) in next.chunks(d).zip(prev.chunks(d)) {
        for i in 0..d {
            let y: f64 = (0..d).map(|k| r[i * d + k] * x[k]).sum();
            total += (y - p[i]).powi(2);
        }
    }
    total
}

// ---------------------------------------------------------------- 2

fn gradient_suite() -> Outcome {
    let kinds = [CombinerKind::Lstm, CombinerKind::Rnn, CombinerKind::Static];
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for inst in 0..20u64 {
        let kind = kinds[inst as usize % 3];
        let node_task = inst % 2 == 1;
        let (d, steps) = (2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + inst);
        let nodes = 5;
        let mut table = random_table(nodes, steps, d, &mut rng);
        let (model, batch): (_, Vec<Example>) = if node_task {
            let classes = 3;
            let batch = (0..nodes as u32)
                .map(|node| Example::Node {
                    node,
                    class: rng.gen_range(0..classes),
                })
                .collect();
            (
                TemporalModel::for_node_classes(kind, d, classes, inst).unwrap(),
                batch,
            )
        } else {
            let batch = (0..6)
                .map(|_| {
                    let a = rng.gen_range(0..nodes as u32);
                    let b = (a + rng.gen_range(1..nodes as u32)) % nodes as u32;
                    Example::Link {
                        pair: (a, b),
                        label: rng.gen(),
                    }
                })
                .collect();
            (TemporalModel::for_links(kind, d, inst), batch)
        };
        let (_, grads) = loss_and_gradients(&model, &table, &batch, true).unwrap();
        let h = 1e-6;

        let analytic: Vec<Vec<f64>> = grads.model.tensors().iter().map(|t| t.1.to_vec()).collect();
        let mut probe = model.clone();
        for (ti, g) in analytic.iter().enumerate() {
            for (k, &gk) in g.iter().enumerate() {
                let orig = model.tensors()[ti].1[k];
                probe.tensors_mut()[ti][k] = orig + h;
                let up = batch_loss(&probe, &table, &batch).unwrap();
                probe.tensors_mut()[ti][k] = orig - h;
                let down = batch_loss(&probe, &table, &batch).unwrap();
                probe.tensors_mut()[ti][k] = orig;
                worst = worst.max(rel_err((up - down) / (2.0 * h), gk));
                checked += 1;
            }
        }
        for (v, g) in grads.embeddings.unwrap() {
            for (i, gi) in g.into_iter().enumerate() {
                if !table.mask_of(v)[i / d] {
                    continue;
                }
                let orig = table.rows_of(v)[i];
                table.rows_of_mut(v)[i] = orig + h;
                let up = batch_loss(&model, &table, &batch).unwrap();
                table.rows_of_mut(v)[i] = orig - h;
                let down = batch_loss(&model, &table, &batch).unwrap();
                table.rows_of_mut(v)[i] = orig;
                worst = worst.max(rel_err((up - down) / (2.0 * h), gi));
                checked += 1;
            }
        }
    }
    outcome(
        worst < 1e-4,
        format!("{checked} partial derivatives, worst relative error {worst:.2e}"),
    )
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Random histories where node 0 only appears from step 1 on.
fn random_table(nodes: usize, steps: usize, d: usize, rng: &mut ChaCha8Rng) -> HistoryTable {
    let index = Arc::new(NodeIndex::from_names((0..nodes).map(|v| v.to_string())));
    let series: Vec<EmbeddingMatrix> = (0..steps)
        .map(|t| {
            let cols: Vec<u32> = (0..nodes as u32).filter(|&v| v != 0 || t > 0).collect();
            let vals = (0..cols.len() * d)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            EmbeddingMatrix::new(Arc::clone(&index), t, d, cols, vals).unwrap()
        })
        .collect();
    build_histories(&series).unwrap()
}

// ---------------------------------------------------------------- 3

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut auc_mismatch = 0;
    let mut sets = 0;
    while sets < 100 {
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..20)
            .map(|_| f64::from(rng.gen_range(0..8u8)) / 4.0)
            .collect();
        let labels: Vec<bool> = (0..20).map(|_| rng.gen()).collect();
        if !labels.contains(&true) || !labels.contains(&false) {
            continue;
        }
        sets += 1;
        if auc(&scores, &labels).unwrap() != common::pair_count_auc(&scores, &labels) {
            auc_mismatch += 1;
        }
    }
    let mut f1_mismatch = 0;
    for _ in 0..100 {
        let classes = rng.gen_range(2..5);
        let pred: Vec<usize> = (0..20).map(|_| rng.gen_range(0..classes)).collect();
        let truth: Vec<usize> = (0..20).map(|_| rng.gen_range(0..classes)).collect();
        let (micro, macro_) = common::confusion_f1(&pred, &truth, classes);
        if micro_f1(&pred, &truth, classes).unwrap() != micro
            || macro_f1(&pred, &truth, classes).unwrap() != macro_
        {
            f1_mismatch += 1;
        }
    }
    // Worked by hand: per-class F1 = 2/3, 4/5, 1.
    let pred = [0, 0, 1, 1, 2];
    let truth = [0, 1, 1, 1, 2];
    let hand_ok = micro_f1(&pred, &truth, 3).unwrap() == 0.8
        && (macro_f1(&pred, &truth, 3).unwrap() - (2.0 / 3.0 + 0.8 + 1.0) / 3.0).abs() < 1e-15
        && auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap() == 0.75;
    outcome(
        auc_mismatch == 0 && f1_mismatch == 0 && hand_ok,
        format!(
            "AUC mismatches {auc_mismatch}/100, F1 mismatches {f1_mismatch}/100, hand cases {}",
            if hand_ok { "ok" } else { "wrong" }
        ),
    )
}

// ---------------------------------------------------------------- 4-6, 8

/// Desk-scale run: 100 nodes, 2000 edges over 20 timestamps; the pivot is
/// held at 18 and the 18 visible timestamps become 18 snapshots.
fn desk(target: DegreeTarget, seed: u64) -> RunConfig {
    RunConfig {
        synthetic: Some(SynthConfig {
            n: 100,
            m: 2000,
            steps: 20,
            target,
            seed: 0,
        }),
        steps: 18,
        pivot: Some(18),
        walk: WalkConfig {
            walks_per_node: 10,
            walk_length: 40,
            ..WalkConfig::default()
        },
        skipgram: SkipGramConfig {
            dim: 16,
            window: 5,
            epochs: 2,
            ..SkipGramConfig::default()
        },
        train: TrainConfig {
            epochs: 30,
            batch_size: 64,
            ..TrainConfig::default()
        },
        seed,
        deterministic: true,
        ..RunConfig::default()
    }
}

/// Full linear-target runs are shared between criteria 4 and 6.
#[derive(Default)]
struct Runs {
    full_linear: Option<Vec<f64>>,
}

impl Runs {
    fn full_linear(&mut self) -> Vec<f64> {
        self.full_linear
            .get_or_insert_with(|| mean_auc_runs(|s| desk(DegreeTarget::Linear, s)))
            .clone()
    }
}

fn mean_auc_runs(cfg: impl Fn(u64) -> RunConfig) -> Vec<f64> {
    SEEDS
        .iter()
        .map(|&s| run_pipeline(&cfg(s)).unwrap().report.metrics["auc"])
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn full_beats_static(runs: &mut Runs) -> Outcome {
    let full = runs.full_linear();
    let stat = mean_auc_runs(|s| RunConfig {
        combiner: CombinerKind::Static,
        ..desk(DegreeTarget::Linear, s)
    });
    let gap = mean(&full) - mean(&stat);
    outcome(
        gap >= 0.03,
        format!(
            "mean AUC full {:.4} vs static {:.4}, gap {gap:.4} (need >= 0.03)",
            mean(&full),
            mean(&stat)
        ),
    )
}

fn alignment_ablation(_: &mut Runs) -> Outcome {
    let mut lowest = (f64::INFINITY, DegreeTarget::Linear);
    for target in DegreeTarget::ALL {
        let cc = mean(
            &SEEDS
                .iter()
                .map(|&s| {
                    let g = load_dataset(&desk(target, s)).unwrap().graph;
                    clustering_coefficient(build_snapshots(&g, 1).unwrap().last())
                })
                .collect::<Vec<_>>(),
        );
        if cc < lowest.0 {
            lowest = (cc, target);
        }
    }
    let target = lowest.1;
    let on = mean(&mean_auc_runs(|s| desk(target, s)));
    let off = mean(&mean_auc_runs(|s| RunConfig {
        alignment: Alignment::Off,
        ..desk(target, s)
    }));
    outcome(
        on >= off,
        format!(
            "{} target (clustering {:.4}): aligned {on:.4} vs unaligned {off:.4}",
            target.name(),
            lowest.0
        ),
    )
}

fn time_steps_trend(runs: &mut Runs) -> Outcome {
    let fractions = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut means = Vec::new();
    for &f in &fractions[..4] {
        means.push(mean(&mean_auc_runs(|s| RunConfig {
            timestep_fraction: f,
            ..desk(DegreeTarget::Linear, s)
        })));
    }
    means.push(mean(&runs.full_linear()));
    let rho = common::spearman(&fractions, &means);
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    outcome(
        rho > 0.0,
        format!(
            "mean AUC at fractions 0.2..1.0 = [{}], Spearman {rho:.3}",
            shown.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 7

fn clustering_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mismatches = 0;
    for i in 0..200 {
        let n = rng.gen_range(1..=12usize);
        let density: f64 = rng.gen();
        let mut edges = Vec::new();
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                if a != b && rng.gen::<f64>() < density / 2.0 {
                    edges.push((a, b));
                }
            }
        }
        let g = common::static_graph(n, i % 2 == 0, &edges);
        if clustering_coefficient(&g) != common::brute_force_cc(n, &edges) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches}/200 graphs disagree with triple enumeration"),
    )
}

// ---------------------------------------------------------------- 8

fn deterministic_reports() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let bytes: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let cfg = RunConfig {
                out: Some(d.path().to_path_buf()),
                ..desk(DegreeTarget::Linear, 0)
            };
            run_pipeline(&cfg).unwrap();
            fs::read(d.path().join(layout::REPORT)).unwrap()
        })
        .collect();
    outcome(
        bytes[0] == bytes[1],
        format!(
            "two seeded runs, report.json {} bytes each, identical: {}",
            bytes[0].len(),
            bytes[0] == bytes[1]
        ),
    )
}

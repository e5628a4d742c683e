//! End-to-end runs: temporal graph → snapshots → static embeddings →
//! alignment → temporal model → metrics, and suites of such runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::align::{align_series_with, AlignOptions, RotationMatrix};
use crate::embed::{embed_snapshots, EmbeddingMatrix, SkipGramConfig, WalkConfig};
use crate::error::{Error, Result, StageContext};
use crate::eval::{
    argmax, auc, macro_f1, metrics_csv, micro_f1, multiclass_auc, MetricRow, Report,
};
use crate::graph::{
    build_snapshots, collapse_multi_edges, ingest_edge_list, read_labels, select_pivot,
    split_link_prediction, split_node_classification, Labels, LinkSplit, NodeIndex, NodeSplit,
    TemporalGraph,
};
use crate::model::{
    build_histories, loss_trace_csv, read_checkpoint, train, Checkpoint, CombinerKind, Example,
    HistoryTable, TemporalModel, TrainConfig,
};
use crate::seed;
use crate::synth::{generate_temporal_graph, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Link,
    NodeClass,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Link => "link",
            Task::NodeClass => "nodeclass",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    On,
    Off,
}

/// An edge list on disk, optionally with node labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub edges: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub weighted: bool,
    /// Bucket width used to collapse repeated interactions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthConfig>,
    /// Number of snapshots.
    #[serde(alias = "T")]
    pub steps: usize,
    /// Share of the snapshots fed to the model; the last one is always kept.
    pub timestep_fraction: f64,
    /// Share of edges before the pivot (link) or of labeled nodes used for
    /// training (node classification).
    pub train_fraction: f64,
    /// Explicit pivot timestamp, overriding `train_fraction` for links.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivot: Option<i64>,
    pub alignment: Alignment,
    pub combiner: CombinerKind,
    pub walk: WalkConfig,
    pub skipgram: SkipGramConfig,
    pub train: TrainConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Forbid scheduling-dependent parallel updates.
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Link,
            dataset: None,
            synthetic: None,
            steps: 10,
            timestep_fraction: 1.0,
            train_fraction: 0.8,
            pivot: None,
            alignment: Alignment::On,
            combiner: CombinerKind::Lstm,
            walk: WalkConfig::default(),
            skipgram: SkipGramConfig::default(),
            train: TrainConfig::default(),
            out: None,
            seed: 0,
            deterministic: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    /// Reads a TOML config. Relative dataset paths are resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidInput(m) => Error::invalid(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if let Some(ds) = cfg.dataset.as_mut() {
            ds.edges = base.join(&ds.edges);
            if let Some(l) = ds.labels.as_mut() {
                *l = base.join(&*l);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("config sets both `dataset` and `synthetic`"))
            }
            (None, None) => {
                return Err(Error::invalid(
                    "config needs a `dataset` or a `synthetic` section",
                ))
            }
            _ => {}
        }
        if self.task == Task::NodeClass
            && self
                .dataset
                .as_ref()
                .and_then(|d| d.labels.as_ref())
                .is_none()
        {
            return Err(Error::invalid("node classification needs `dataset.labels`"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("T must be at least 1"));
        }
        if !(self.timestep_fraction > 0.0 && self.timestep_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "timestep_fraction must lie in (0, 1], got {}",
                self.timestep_fraction
            )));
        }
        if let Some(s) = &self.synthetic {
            s.validate()?;
        }
        self.walk.validate()?;
        self.skipgram.validate()?;
        self.train.validate()
    }

    /// Per-stage configs with seeds derived from the run seed. A seed set
    /// inside a section selects a different stream rather than replacing
    /// the run seed.
    pub fn stage_configs(&self) -> (WalkConfig, SkipGramConfig, TrainConfig) {
        let walk = WalkConfig {
            seed: seed::derive(self.seed, "run.walk", self.walk.seed),
            ..self.walk
        };
        let skipgram = SkipGramConfig {
            seed: seed::derive(self.seed, "run.skipgram", self.skipgram.seed),
            parallel: self.skipgram.parallel && !self.deterministic,
            ..self.skipgram
        };
        let train = TrainConfig {
            seed: seed::derive(self.seed, "run.train", self.train.seed),
            ..self.train.clone()
        };
        (walk, skipgram, train)
    }
}

/// A graph ready for a run, plus labels for node classification.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: TemporalGraph,
    pub labels: Option<Labels>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if let Some(s) = &cfg.synthetic {
        let synth = SynthConfig {
            seed: seed::derive(cfg.seed, "run.synth", s.seed),
            ..s.clone()
        };
        let out = generate_temporal_graph(&synth)?;
        return Ok(Dataset {
            name: format!("synthetic-{}", s.target.name()),
            graph: out.graph,
            labels: None,
        });
    }
    let ds = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::invalid("config needs a `dataset` or a `synthetic` section"))?;
    let mut graph = ingest_edge_list(&ds.edges, ds.directed, ds.weighted)?;
    if let Some(g) = ds.collapse {
        graph = collapse_multi_edges(&graph, g)?;
    }
    let labels = match &ds.labels {
        Some(p) => Some(read_labels(p, graph.nodes())?),
        None => None,
    };
    let name = ds.name.clone().unwrap_or_else(|| {
        ds.edges
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
    });
    Ok(Dataset {
        name,
        graph,
        labels,
    })
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub model: TemporalModel,
    /// Aligned (or raw, with alignment off) snapshot embeddings.
    pub aligned: Vec<EmbeddingMatrix>,
    pub rotations: Option<Vec<RotationMatrix>>,
    /// Embedding histories after fine-tuning.
    pub table: HistoryTable,
    pub epoch_loss: Vec<f64>,
    pub split: SplitRecord,
}

#[derive(Debug, Clone)]
pub enum SplitRecord {
    Link(LinkSplit),
    Node(NodeSplit, Vec<String>),
}

/// Model and embeddings learned from the training side of a split.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: TemporalModel,
    pub aligned: Vec<EmbeddingMatrix>,
    pub rotations: Option<Vec<RotationMatrix>>,
    pub table: HistoryTable,
    pub epoch_loss: Vec<f64>,
}

/// Loads the data, runs every stage and, when `cfg.out` is set, writes
/// the outputs. Nothing is written unless the whole run succeeds.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate().stage("config")?;
    let data = load_dataset(cfg).stage("ingest")?;
    let run = run_on_dataset(&data, cfg)?;
    if let Some(out) = &cfg.out {
        write_run(out, &run, data.graph.nodes()).stage("write")?;
    }
    Ok(run)
}

pub fn run_on_dataset(data: &Dataset, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate().stage("config")?;
    match cfg.task {
        Task::Link => run_link(data, cfg),
        Task::NodeClass => run_node_class(data, cfg),
    }
}

pub fn link_split(g: &TemporalGraph, cfg: &RunConfig) -> Result<LinkSplit> {
    let pivot = match cfg.pivot {
        Some(p) => p,
        None => select_pivot(g, cfg.train_fraction)?,
    };
    split_link_prediction(g, pivot, seed::derive(cfg.seed, "run.split", 0))
}

fn run_link(data: &Dataset, cfg: &RunConfig) -> Result<RunOutput> {
    let split = link_split(&data.graph, cfg).stage("split")?;
    let visible = data.graph.up_to(split.pivot);
    let trained = train_link_model(&visible, &split, cfg)?;

    let directed = split.directed;
    let (pairs, labels): (Vec<_>, Vec<bool>) = split.test_examples().into_iter().unzip();
    let scores = trained
        .model
        .score_pairs(&trained.table, &pairs, directed)
        .stage("eval")?;
    let mut metrics = BTreeMap::new();
    metrics.insert("auc".into(), auc(&scores, &labels).stage("eval")?);
    metrics.insert("test_examples".into(), pairs.len() as f64);
    metrics.insert("pivot".into(), split.pivot as f64);
    finish(
        data,
        cfg,
        trained,
        metrics,
        BTreeMap::new(),
        SplitRecord::Link(split),
    )
}

/// Builds everything the link model learns from. Only `visible` (the
/// graph cut at the pivot) and the training half of `split` are read.
pub fn train_link_model(
    visible: &TemporalGraph,
    split: &LinkSplit,
    cfg: &RunConfig,
) -> Result<Trained> {
    if visible.edges().iter().any(|e| e.timestamp > split.pivot) {
        return Err(Error::invalid(
            "training graph contains edges after the pivot",
        ))
        .stage("split");
    }
    let examples: Vec<Example> = split
        .train_examples()
        .into_iter()
        .map(|(pair, label)| Example::Link { pair, label })
        .collect();
    let model = TemporalModel::for_links(
        cfg.combiner,
        cfg.skipgram.dim,
        seed::derive(cfg.seed, "run.model", 0),
    );
    fit(visible, model, &examples, cfg)
}

fn fit(
    graph: &TemporalGraph,
    mut model: TemporalModel,
    examples: &[Example],
    cfg: &RunConfig,
) -> Result<Trained> {
    let (walk, skipgram, train_cfg) = cfg.stage_configs();
    let series = build_snapshots(graph, cfg.steps).stage("snapshot")?;
    let series = if cfg.combiner == CombinerKind::Static {
        // Only the last snapshot is ever read.
        series.subset(1.0 / series.len() as f64)
    } else {
        series.subset(cfg.timestep_fraction)
    }
    .stage("snapshot")?;
    log::info!("embedding {} snapshots", series.len());
    let raw = embed_snapshots(&series, &walk, &skipgram).stage("embed")?;
    let (aligned, rotations) = match cfg.alignment {
        Alignment::On => {
            let a = align_series_with(&raw, &AlignOptions::default()).stage("align")?;
            (a.matrices, Some(a.rotations))
        }
        Alignment::Off => (raw, None),
    };
    let mut table = build_histories(&aligned).stage("train")?;
    let train_cfg = TrainConfig {
        finetune_embeddings: train_cfg.finetune_embeddings && cfg.combiner != CombinerKind::Static,
        ..train_cfg
    };
    let outcome = train(&mut model, &mut table, examples, &train_cfg).stage("train")?;
    Ok(Trained {
        model,
        aligned,
        rotations,
        table,
        epoch_loss: outcome.epoch_loss,
    })
}

fn run_node_class(data: &Dataset, cfg: &RunConfig) -> Result<RunOutput> {
    let (labels, class_names) = data
        .labels
        .clone()
        .ok_or_else(|| Error::invalid("node classification needs labels"))
        .stage("ingest")?;
    let split = split_node_classification(
        &labels,
        cfg.train_fraction,
        seed::derive(cfg.seed, "run.split", 0),
    )
    .stage("split")?;
    let classes = class_names.len().max(split.classes);
    let model = TemporalModel::for_node_classes(
        cfg.combiner,
        cfg.skipgram.dim,
        classes,
        seed::derive(cfg.seed, "run.model", 0),
    )
    .stage("train")?;
    let examples: Vec<Example> = split
        .train_examples()
        .into_iter()
        .map(|(node, class)| Example::Node { node, class })
        .collect();
    let trained = fit(&data.graph, model, &examples, cfg)?;

    let (nodes, truth): (Vec<u32>, Vec<usize>) = split.test_examples().into_iter().unzip();
    let metrics =
        node_metrics(&trained.model, &trained.table, &nodes, &truth, classes).stage("eval")?;
    let notes = BTreeMap::from([("auc".to_string(), "macro one-vs-rest".to_string())]);
    finish(
        data,
        cfg,
        trained,
        metrics,
        notes,
        SplitRecord::Node(split, class_names),
    )
}

fn node_metrics(
    model: &TemporalModel,
    table: &HistoryTable,
    nodes: &[u32],
    truth: &[usize],
    classes: usize,
) -> Result<BTreeMap<String, f64>> {
    let probs = model.class_probabilities(table, nodes)?;
    let predicted: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let mut metrics = BTreeMap::new();
    metrics.insert("micro_f1".into(), micro_f1(&predicted, truth, classes)?);
    metrics.insert("macro_f1".into(), macro_f1(&predicted, truth, classes)?);
    metrics.insert("auc".into(), multiclass_auc(&probs, truth, classes)?);
    metrics.insert("test_examples".into(), nodes.len() as f64);
    Ok(metrics)
}

fn finish(
    data: &Dataset,
    cfg: &RunConfig,
    trained: Trained,
    mut metrics: BTreeMap<String, f64>,
    notes: BTreeMap<String, String>,
    split: SplitRecord,
) -> Result<RunOutput> {
    if let Some(&last) = trained.epoch_loss.last() {
        metrics.insert("final_train_loss".into(), last);
    }
    let mut echo = cfg.clone();
    echo.out = None;
    let report = Report {
        task: cfg.task.name().into(),
        dataset: data.name.clone(),
        seed: cfg.seed,
        metrics,
        notes,
        config: serde_json::to_value(&echo).map_err(|e| Error::Format(e.to_string()))?,
    };
    Ok(RunOutput {
        report,
        model: trained.model,
        aligned: trained.aligned,
        rotations: trained.rotations,
        table: trained.table,
        epoch_loss: trained.epoch_loss,
        split,
    })
}

#[derive(Serialize, Deserialize)]
struct NodeSplitJson {
    classes: Vec<String>,
    train: Vec<(String, String)>,
    test: Vec<(String, String)>,
}

fn node_split_json(split: &NodeSplit, classes: &[String], nodes: &NodeIndex) -> String {
    let named = |list: &[u32]| {
        list.iter()
            .map(|v| (nodes.name(*v).to_owned(), classes[split.labels[v]].clone()))
            .collect()
    };
    let json = NodeSplitJson {
        classes: classes.to_vec(),
        train: named(&split.train_nodes),
        test: named(&split.test_nodes),
    };
    serde_json::to_string_pretty(&json).expect("split serializes") + "\n"
}

/// File names inside a run directory.
pub mod layout {
    pub const REPORT: &str = "report.json";
    pub const MODEL: &str = "model.tckp";
    pub const LOSS: &str = "loss.csv";
    pub const SPLIT: &str = "split.json";
    pub const NODES: &str = "nodes.txt";
    pub const ROTATIONS: &str = "rotations.tsv";
    pub const ALIGNED_DIR: &str = "aligned";
    pub const TUNED_DIR: &str = "tuned";

    pub fn step_file(step: usize) -> String {
        format!("step_{step:03}.temb")
    }
}

/// Writes a run directory. Any file this call created is removed again if
/// a later write fails.
pub fn write_run(out: &Path, run: &RunOutput, nodes: &Arc<NodeIndex>) -> Result<()> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    let mut put = |rel: String, bytes: Vec<u8>| files.push((out.join(rel), bytes));

    put(layout::REPORT.into(), run.report.to_json().into_bytes());
    let checkpoint = Checkpoint {
        model: run.model.clone(),
        steps: run.table.steps(),
        config: run.report.config.to_string(),
    };
    put(layout::MODEL.into(), checkpoint.to_bytes());
    put(
        layout::LOSS.into(),
        loss_trace_csv(&run.epoch_loss).into_bytes(),
    );
    let split = match &run.split {
        SplitRecord::Link(s) => s.to_json(nodes),
        SplitRecord::Node(s, classes) => node_split_json(s, classes, nodes),
    };
    put(layout::SPLIT.into(), split.into_bytes());
    put(layout::NODES.into(), nodes.names().join("\n").into_bytes());
    if let Some(rot) = &run.rotations {
        let mut buf = Vec::new();
        for r in rot {
            r.write_tsv(&mut buf).map_err(|e| Error::io(out, e))?;
        }
        put(layout::ROTATIONS.into(), buf);
    }
    for (k, m) in run.aligned.iter().enumerate() {
        let mut buf = Vec::new();
        m.write_binary(&mut buf).map_err(|e| Error::io(out, e))?;
        put(
            format!("{}/{}", layout::ALIGNED_DIR, layout::step_file(k)),
            buf,
        );
    }
    for k in 0..run.table.steps() {
        let mut buf = Vec::new();
        run.table
            .to_matrix(k)?
            .write_binary(&mut buf)
            .map_err(|e| Error::io(out, e))?;
        put(
            format!("{}/{}", layout::TUNED_DIR, layout::step_file(k)),
            buf,
        );
    }
    write_all_or_nothing(out, &files)
}

/// Writes every file, removing the ones already written (and directories
/// this call created) if any write fails.
pub(crate) fn write_all_or_nothing(out: &Path, files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut written: Vec<&Path> = Vec::new();
    let result = (|| {
        for (path, bytes) in files {
            if let Some(dir) = path.parent() {
                if !dir.exists() {
                    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    created_dirs.push(dir.to_path_buf());
                }
            }
            fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
            written.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for p in written {
            let _ = fs::remove_file(p);
        }
        for d in created_dirs.iter().rev() {
            if d != out {
                let _ = fs::remove_dir(d);
            }
        }
    }
    result
}

fn read_step_dir(dir: &Path, nodes: &Arc<NodeIndex>) -> Result<Vec<EmbeddingMatrix>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "temb"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no .temb files in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
            EmbeddingMatrix::read_binary(std::io::BufReader::new(f), nodes)
        })
        .collect()
}

/// Recomputes the test metrics of a run directory written by
/// [`write_run`] from its checkpoint, tuned embeddings and split.
pub fn evaluate_run_dir(dir: &Path) -> Result<Report> {
    let mut report = Report::read(&dir.join(layout::REPORT)).stage("eval")?;
    let names_path = dir.join(layout::NODES);
    let names = fs::read_to_string(&names_path).map_err(|e| Error::io(&names_path, e))?;
    let nodes = Arc::new(NodeIndex::from_names(names.split('\n')));
    let ckpt = read_checkpoint(&dir.join(layout::MODEL)).stage("eval")?;
    let tuned = read_step_dir(&dir.join(layout::TUNED_DIR), &nodes).stage("eval")?;
    let table = build_histories(&tuned).stage("eval")?;
    let split_path = dir.join(layout::SPLIT);
    let split_text = fs::read_to_string(&split_path).map_err(|e| Error::io(&split_path, e))?;
    let fresh = match report.task.as_str() {
        "link" => {
            let split = LinkSplit::from_json(&split_text, &nodes).stage("eval")?;
            let (pairs, labels): (Vec<_>, Vec<bool>) = split.test_examples().into_iter().unzip();
            let scores = ckpt
                .model
                .score_pairs(&table, &pairs, split.directed)
                .stage("eval")?;
            BTreeMap::from([("auc".to_string(), auc(&scores, &labels).stage("eval")?)])
        }
        "nodeclass" => {
            let json: NodeSplitJson = serde_json::from_str(&split_text)
                .map_err(|e| Error::Format(format!("{}: {e}", split_path.display())))?;
            let mut ids = Vec::new();
            let mut truth = Vec::new();
            for (name, class) in &json.test {
                ids.push(
                    nodes
                        .get(name)
                        .ok_or_else(|| Error::Format(format!("unknown node {name:?}")))?,
                );
                truth.push(
                    json.classes
                        .iter()
                        .position(|c| c == class)
                        .ok_or_else(|| Error::Format(format!("unknown class {class:?}")))?,
                );
            }
            node_metrics(&ckpt.model, &table, &ids, &truth, json.classes.len()).stage("eval")?
        }
        other => return Err(Error::Format(format!("unknown task {other:?} in report"))),
    };
    report.metrics.extend(fresh);
    Ok(report)
}

/// One entry of a suite: a run config evaluated under several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub id: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    /// Path to a run config, relative to the suite file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub runs: Vec<SuiteEntry>,
}

impl Suite {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut suite: Suite = toml::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for entry in &mut suite.runs {
            if let Some(f) = &entry.config_file {
                entry.config = Some(RunConfig::load(&base.join(f))?);
            } else if let Some(ds) = entry.config.as_mut().and_then(|c| c.dataset.as_mut()) {
                ds.edges = base.join(&ds.edges);
                if let Some(l) = ds.labels.as_mut() {
                    *l = base.join(&*l);
                }
            }
        }
        Ok(suite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteFailure {
    pub config_id: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<SuiteFailure>,
}

impl SuiteOutcome {
    pub fn to_csv(&self) -> String {
        metrics_csv(&self.rows)
    }
}

/// Runs every entry under each of its seeds. A failing run is recorded
/// and the suite moves on. With `out`, each run's report is written to
/// `out/<id>/seed-<seed>/`.
pub fn run_suite(suite: &Suite, out: Option<&Path>) -> SuiteOutcome {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for entry in &suite.runs {
        for &s in &entry.seeds {
            let result = entry
                .config
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("suite entry {:?} has no config", entry.id)))
                .and_then(|base| {
                    let cfg = RunConfig {
                        seed: s,
                        out: None,
                        ..base.clone()
                    };
                    let run = run_pipeline(&cfg)?;
                    if let Some(dir) = out {
                        let path = dir.join(&entry.id).join(format!("seed-{s}"));
                        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
                        run.report.write(&path.join(layout::REPORT))?;
                    }
                    Ok(run.report)
                });
            match result {
                Ok(report) => {
                    rows.extend(report.metrics.into_iter().map(|(metric, value)| MetricRow {
                        config_id: entry.id.clone(),
                        seed: s,
                        metric,
                        value,
                    }))
                }
                Err(e) => {
                    log::warn!("suite run {} (seed {s}) failed: {e}", entry.id);
                    failures.push(SuiteFailure {
                        config_id: entry.id.clone(),
                        seed: s,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    SuiteOutcome { rows, failures }
}
